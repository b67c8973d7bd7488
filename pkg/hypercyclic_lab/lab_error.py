from enum import IntEnum
from typing import List, Tuple


class ErrorCode(IntEnum):
    """Stable error codes for problems surfaced to the user.

    The CLI exits 1 on any of these except INVARIANT_FAILED, which exits 2 so
    a violated certified bound is distinguishable from a bad config.
    """
    CONFIG_SYNTAX = 1
    CONFIG_VALIDATION = 2
    SEMANTIC_VALIDATION = 3
    UNKNOWN_KEY = 4
    SPACE_MISMATCH = 5
    NOT_CERTIFIABLE = 6
    DOMAIN = 7
    INVARIANT_FAILED = 8
    IO = 9


class LabError(Exception):
    def __init__(self, message, error_code: int):
        super().__init__(message)
        self.error_code = int(error_code)


class ProblemAccumulator:
    """Config problems keyed by the entry they concern, raised together once
    every semantic check on a parsed experiment config has run."""

    def __init__(self):
        self._problems: List[Tuple[str, str]] = []

    def add(self, key: str, message: str) -> None:
        self._problems.append((key, message))

    def capture(self, key: str, fn, *, default=None):
        """Run ``fn``; a LabError becomes a problem under ``key`` and ``default``
        is returned. Other exceptions propagate."""
        try:
            return fn()
        except LabError as e:
            self.add(key, str(e))
            return default

    @property
    def problems(self) -> List[str]:
        return [f"{key}: {message}" for key, message in self._problems]

    @property
    def keys(self) -> List[str]:
        return list(dict.fromkeys(key for key, _ in self._problems))

    def raise_if_any(self, source: str = "config", code=ErrorCode.SEMANTIC_VALIDATION) -> None:
        if self._problems:
            body = "\n".join(f"  {i}. {p}" for i, p in enumerate(self.problems, 1))
            raise LabError(f"Found {len(self._problems)} config problem(s) in {source}:\n{body}", code)
