from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import RKBSLabError

STATUSES = ("optimal", "max_iters", "infeasible")


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-8
    max_iters: int = 200000
    svd_cutoff_ratio: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if min(self.feas_tol, self.opt_tol, self.svd_cutoff_ratio) <= 0:
            raise RKBSLabError("solver tolerances must be positive")
        if self.max_iters < 1:
            raise RKBSLabError("max_iters must be at least 1")

    def with_(self, **changes) -> "SolverOptions":
        return replace(self, **changes)


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solve.

    ``dual`` holds the recovered equality multipliers (LP) or the final
    certificate (training) when the solver produces one; ``history`` holds
    per-outer-iteration objectives for iterative strategies.
    """

    objective: float
    iterations: int
    primal_residual: float
    status: str
    dual: Optional[np.ndarray] = None
    history: tuple = ()

    def __post_init__(self):
        if self.status not in STATUSES:
            raise RKBSLabError(f"unknown status {self.status!r}")

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"
