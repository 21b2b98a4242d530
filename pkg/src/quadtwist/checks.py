from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from gmpy2 import mpq

PASS = "pass"
FAIL = "fail"
ASSUMPTION = "assumption"

DEFAULT_SEED = 424242


@dataclass
class CheckResult:
    name: str
    anchor: str
    status: str
    details: dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def __bool__(self) -> bool:
        return self.status != FAIL


def result(name: str, anchor: str, ok: bool, **details: Any) -> CheckResult:
    return CheckResult(name, anchor, PASS if ok else FAIL, details)


def timed(fn: Callable[..., CheckResult], *args: Any, **kwargs: Any) -> CheckResult:
    start = time.perf_counter()
    res = fn(*args, **kwargs)
    res.wall_time = time.perf_counter() - start
    return res


def small_rational(rng: random.Random, bound: int = 99, nonzero: bool = False) -> mpq:
    while True:
        q = mpq(rng.randint(-bound, bound), rng.randint(1, bound))
        if q or not nonzero:
            return q
