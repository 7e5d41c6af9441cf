"""
Geometric cooling schedule.

Training happens at beta_1 * alpha^k for k = 0..K-1 with
alpha = (beta_K / beta_1)^(1/K). The loop multiplies by alpha after each
stage, so beta_K itself is never a training stage; the run finishes with a
stage on the empirical distribution (beta = infinity).
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

from .models import ContractError, InverseTemperature


@dataclass(frozen=True)
class AnnealingSchedule:
    """Cooling parameters and the finite betas they visit."""
    beta_1: float
    beta_K: float
    K: int
    alpha: float
    visited: Tuple[float, ...]

    @property
    def stages(self) -> List[InverseTemperature]:
        """Every training stage in order, ending with INFINITY."""
        return [InverseTemperature.finite(b) for b in self.visited] + [InverseTemperature.infinity()]

    @property
    def final_finite_beta(self) -> float:
        return self.visited[-1]

    def to_dict(self) -> Dict[str, Any]:
        return {"beta1": self.beta_1, "betaK": self.beta_K, "K": self.K}


def make_schedule(beta_1: float, beta_K: float, K: int) -> AnnealingSchedule:
    """
    Compute the geometric schedule for K cooling steps from beta_1 towards beta_K.

    Raises:
        ContractError: unless 0 < beta_1 <= beta_K < infinity and K >= 1
    """
    beta_1 = float(beta_1)
    beta_K = float(beta_K)
    if not isinstance(K, int) or isinstance(K, bool) or K < 1:
        raise ContractError(f"K must be an integer >= 1, got {K!r}")
    if not (math.isfinite(beta_1) and math.isfinite(beta_K)):
        raise ContractError(f"beta_1 and beta_K must be finite, got {beta_1} and {beta_K}")
    if not beta_1 > 0:
        raise ContractError(f"beta_1 must be positive, got {beta_1}")
    if beta_1 > beta_K:
        raise ContractError(f"beta_1 ({beta_1}) must not exceed beta_K ({beta_K})")

    alpha = (beta_K / beta_1) ** (1.0 / K)
    visited = tuple(beta_1 * alpha ** k for k in range(K))
    return AnnealingSchedule(beta_1=beta_1, beta_K=beta_K, K=K, alpha=alpha, visited=visited)


def advance(schedule: AnnealingSchedule, current_index: int) -> InverseTemperature:
    """
    The stage following current_index.

    Index K - 1 (the last finite stage) advances to INFINITY; the INFINITY
    stage at index K has no successor.
    """
    if current_index < 0 or current_index > schedule.K:
        raise ContractError(f"Stage index {current_index} outside [0, {schedule.K}]")
    if current_index == schedule.K:
        raise ContractError("Cannot advance past the final INFINITY stage")
    if current_index + 1 < schedule.K:
        return InverseTemperature.finite(schedule.visited[current_index + 1])
    return InverseTemperature.infinity()
