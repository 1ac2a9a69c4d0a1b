"""Temperature arithmetic of the annealer: acceptance, cooling, specific heat, reheating."""

import math
from typing import Sequence

import numpy as np

import config
from errors import ContractError
from models import LogProb


def acceptance_probability(t: float, logp_new: LogProb, logp_old: LogProb) -> float:
    """min{1, (p_new / p_old)^(1/t - 1)} for a candidate drawn from the untempered conditional."""
    if not t > 0:
        raise ContractError(f"temperature must be positive, got {t}")
    if logp_old == -math.inf:
        return 1.0
    if logp_new == -math.inf:
        return 0.0
    exponent = (1.0 / t - 1.0) * (logp_new - logp_old)
    if exponent >= 0.0:
        return 1.0
    return math.exp(exponent)


def geometric_cool(t: float, alpha: float, t_min: float = config.DEFAULT_T_MIN) -> float:
    if not t > 0:
        raise ContractError(f"temperature must be positive, got {t}")
    return max(alpha * t, t_min)


def specific_heat(costs: Sequence[float], t: float) -> float:
    """Population variance of the costs seen at temperature t, divided by t squared."""
    if len(costs) == 0:
        raise ContractError("specific heat needs at least one cost sample")
    if not t > 0:
        raise ContractError(f"temperature must be positive, got {t}")
    return float(np.var(np.asarray(costs, dtype=np.float64))) / (t * t)


def reheat_temperature(c_b: float, t_at_max_ch: float, k: float, t0: float) -> float:
    for name, value in (("c_b", c_b), ("t_at_max_ch", t_at_max_ch), ("k", k), ("t0", t0)):
        if not (math.isfinite(value) and value >= 0):
            raise ContractError(f"{name} must be finite and nonnegative, got {value}")
    return min(t0, k * c_b + t_at_max_ch)
