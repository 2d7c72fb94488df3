"""Tunable parameters of the curvature computation and the Ricci flow."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

from .errors import DomainError

METHODS = ("exact", "sinkhorn")


@dataclass(frozen=True)
class FlowConfig:
    """All knobs of the pipeline.

    The defaults are those used for community detection: half the mass stays
    at the node, neighbours are discounted by ``exp(-d**2)``, exact optimal
    transport, full step size, normalisation on and no surgery.
    """

    alpha: float = 0.5
    p: float = 2.0
    base: float = math.e
    epsilon: float = 1.0
    delta: float = 1e-4
    max_iterations: int = 100
    ot_method: str = "exact"
    sinkhorn_reg: float = 0.1
    sinkhorn_max_iter: int = 1000
    sinkhorn_tol: float = 1e-6
    surgery_every: Optional[int] = None
    surgery_quantile: float = 0.05
    normalize: bool = True
    weight_floor: float = 1e-8
    workers: int = 1

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.p >= 0.0:
            raise DomainError(f"p must be nonnegative, got {self.p}")
        if not self.base > 1.0:
            raise DomainError(f"base must exceed 1, got {self.base}")
        if not 0.0 < self.epsilon <= 1.0:
            raise DomainError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not self.delta > 0.0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if int(self.max_iterations) < 1:
            raise DomainError("max_iterations must be at least 1")
        if self.ot_method not in METHODS:
            raise DomainError(f"ot_method must be one of {METHODS}, got {self.ot_method!r}")
        if not self.sinkhorn_reg > 0.0:
            raise DomainError("sinkhorn_reg must be positive")
        if self.surgery_every is not None and int(self.surgery_every) < 1:
            raise DomainError("surgery_every must be a positive integer or None")
        if not 0.0 < self.surgery_quantile < 1.0:
            raise DomainError("surgery_quantile must lie in (0, 1)")
        if not self.weight_floor > 0.0:
            raise DomainError("weight_floor must be positive")
        if int(self.workers) < 1:
            raise DomainError("workers must be at least 1")

    def replace(self, **changes) -> "FlowConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)
