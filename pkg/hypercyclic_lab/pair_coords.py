"""Parsing of `(l,nu)` pair lists as given to `partition --pairs`, e.g.
``"(1,2), (1,1)"``."""
from typing import List

from lark import Lark, Transformer
from lark.exceptions import UnexpectedInput

from hypercyclic_lab.lab_error import LabError, ErrorCode

grammar = '''
    pairs : pair ("," pair)*
    pair : "(" INT "," INT ")"

    %import common.INT
    %import common.WS
    %ignore WS
'''
pairs_parser = Lark(grammar, start='pairs')

_PAIRS_HELP = (
    "Expected one or more pairs of positive integers like '(1,2)', "
    "separated by commas. Example: '(1,1), (1,2)'."
)


class PairTransformer(Transformer):

    def pair(self, items):
        return int(items[0]), int(items[1])

    def pairs(self, items):
        return list(items)


def parse_pairs(raw: str) -> List[tuple]:
    try:
        tree = pairs_parser.parse(raw)
    except UnexpectedInput as e:
        column = getattr(e, "column", None)
        where = f" (at column {column})" if column else ""
        raise LabError(f"Could not parse pairs '{raw}'{where}. {_PAIRS_HELP}",
                       ErrorCode.CONFIG_SYNTAX) from e
    return PairTransformer().transform(tree)
