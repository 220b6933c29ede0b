"""Chain diagnostics: effective sample size, slot statistics, identity checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from xchmc.integrator import LegSpec, verlet_leg
from xchmc.phase import PhaseState, TargetModel, flip, log_rho
from xchmc.sampler import ChainRecord, sigma_sequence

__all__ = [
    "ZeroVarianceError",
    "ess_initial_monotone",
    "SlotStats",
    "slot_stats",
    "check_main_identity",
    "Observable",
    "coordinate",
    "squared_radius",
    "interval_indicator",
    "make_observable",
    "AverageEstimate",
    "estimate_average",
]


class ZeroVarianceError(ValueError):
    """The series is constant, so autocorrelation-based quantities are undefined."""


def ess_initial_monotone(series) -> float:
    """Effective sample size by the initial monotone sequence estimator.

    Empirical autocovariances gamma_t (mean-centered, divisor n) are grouped
    into pair sums gamma_(2m) + gamma_(2m+1); the sequence is truncated before
    its first non-positive entry and forced non-increasing, yielding the
    asymptotic variance estimate -gamma_0 + 2 * sum of pair sums.  The result
    is clamped to (0, n].  A non-positive variance estimate (possible on
    pathological series) falls back to n with a RuntimeWarning.
    """
    s = np.asarray(series, dtype=float).ravel()
    n = s.size
    if n < 10:
        raise ValueError("need at least 10 points to estimate an ESS")
    if not np.isfinite(s).all():
        raise ValueError("series must be finite")
    centered = s - s.mean()
    gamma0 = float(centered @ centered) / n
    if gamma0 <= 0.0:
        raise ZeroVarianceError("series has zero variance; ESS undefined")

    def gamma(t: int) -> float:
        return float(centered[: n - t] @ centered[t:]) / n

    pair_sums: list[float] = []
    m = 0
    while 2 * m + 1 <= n - 1:
        val = (gamma0 if m == 0 else gamma(2 * m)) + gamma(2 * m + 1)
        if val <= 0.0:
            break
        if pair_sums and val > pair_sums[-1]:
            val = pair_sums[-1]
        pair_sums.append(val)
        m += 1
    var_asym = -gamma0 + 2.0 * math.fsum(pair_sums)
    if var_asym <= 0.0:
        warnings.warn("non-positive asymptotic variance estimate; reporting the chain length",
                      RuntimeWarning, stacklevel=2)
        return float(n)
    return float(min(float(n), n * gamma0 / var_asym))


@dataclass(frozen=True)
class SlotStats:
    """Empirical outcome frequencies of a chain.

    ``acceptance_fractions[k]`` is the fraction of transitions accepted at
    candidate k+1; ``flip_fraction`` is the rest.
    """

    counts: np.ndarray
    acceptance_fractions: np.ndarray
    flip_fraction: float
    transitions: int

    @property
    def total_acceptance(self) -> float:
        return float(self.acceptance_fractions.sum())


def slot_stats(record: ChainRecord) -> SlotStats:
    """Tally the acceptance slots of a chain record."""
    n = record.transitions
    if n == 0:
        raise ValueError("record contains no transitions")
    n_slots = record.extra_chances + 2
    counts = np.bincount(record.slots, minlength=n_slots + 1)[1:]
    fractions = counts / n
    return SlotStats(
        counts=counts,
        acceptance_fractions=fractions[:-1],
        flip_fraction=float(fractions[-1]),
        transitions=n,
    )


def check_main_identity(model: TargetModel, leg: LegSpec, z: PhaseState, k: int) -> float:
    """Relative discrepancy in the stationarity identity for acceptance slot k.

    The flow-weighted slot probability rho(z) p_k(z) must equal its value at
    the flipped end of the k-leg orbit, rho(F I^k z) p_k(F I^k z).  Both sides
    are evaluated through independent slot-distribution computations (one
    started at z, one at F I^k z), with a shared reference energy cancelling
    the unknown normalizer.  Returns |left - right| / max(|left|, |right|),
    and 0 when both sides vanish.  Diverged legs propagate as DivergedLeg so
    the caller can skip the point explicitly.
    """
    if int(k) != k or k < 1:
        raise ValueError("k must be an integer >= 1")
    k = int(k)
    current = z
    for _ in range(k):
        current, _ = verlet_leg(model, leg, current)
    mirror = flip(current)
    p_here = sigma_sequence(model, leg, z, k - 1).p[k - 1]
    p_there = sigma_sequence(model, leg, mirror, k - 1).p[k - 1]
    log_here = log_rho(model, z)
    log_there = log_rho(model, mirror)
    ref = max(log_here, log_there)
    if ref == -math.inf:
        return 0.0
    left = math.exp(log_here - ref) * p_here
    right = math.exp(log_there - ref) * p_there
    if left == right:
        return 0.0
    return abs(left - right) / max(abs(left), abs(right))


@dataclass(frozen=True)
class Observable:
    """A scalar function of the position, used for averages and ESS."""

    name: str
    fn: Callable[[np.ndarray], float]


def coordinate(index: int) -> Observable:
    if index < 0:
        raise ValueError("coordinate index must be non-negative")
    return Observable(f"x{index}", lambda x: float(x[index]))


def squared_radius() -> Observable:
    return Observable("r2", lambda x: float(x @ x))


def interval_indicator(index: int, lo: float, hi: float) -> Observable:
    if index < 0:
        raise ValueError("coordinate index must be non-negative")
    if not lo < hi:
        raise ValueError("need lo < hi")
    return Observable(
        f"ind_x{index}_{lo:g}_{hi:g}",
        lambda x: 1.0 if lo <= float(x[index]) <= hi else 0.0,
    )


def make_observable(spec) -> Observable:
    """Build an observable from its serialized form.

    Strings: ``"x<i>"`` for coordinate i, ``"r2"`` for the squared radius.
    Dicts: ``{"kind": "coordinate", "index": i}``,
    ``{"kind": "squared_radius"}``, or
    ``{"kind": "indicator", "index": i, "lo": a, "hi": b}``.
    """
    if isinstance(spec, Observable):
        return spec
    if isinstance(spec, str):
        if spec == "r2":
            return squared_radius()
        if spec.startswith("x") and spec[1:].isdigit():
            return coordinate(int(spec[1:]))
        raise ValueError(f"unknown observable {spec!r}; use 'x<i>' or 'r2'")
    if isinstance(spec, dict):
        unknown = set(spec) - {"kind", "index", "lo", "hi"}
        if unknown:
            raise ValueError(f"unknown observable keys: {sorted(unknown)}")
        kind = spec.get("kind")
        if kind == "coordinate":
            return coordinate(int(spec["index"]))
        if kind == "squared_radius":
            return squared_radius()
        if kind == "indicator":
            return interval_indicator(int(spec["index"]), float(spec["lo"]), float(spec["hi"]))
        raise ValueError(f"unknown observable kind {kind!r}")
    raise ValueError(f"cannot interpret observable spec of type {type(spec).__name__}")


class AverageEstimate(NamedTuple):
    mean: float
    ess: float
    stderr: float


def estimate_average(record: ChainRecord, observable: Observable) -> AverageEstimate:
    """Trajectory average of an observable with ESS-adjusted standard error.

    The standard error is sample std * sqrt(1 / ESS).  For a zero-variance
    observable the mean is still returned; ESS and standard error are NaN and
    a RuntimeWarning signals that the ESS is undefined.
    """
    values = np.array([observable.fn(x) for x in record.positions])
    mean = float(values.mean())
    try:
        ess = ess_initial_monotone(values)
    except ZeroVarianceError:
        warnings.warn(f"observable {observable.name!r} has zero variance; ESS undefined",
                      RuntimeWarning, stacklevel=2)
        return AverageEstimate(mean, math.nan, math.nan)
    stderr = float(values.std(ddof=1) * math.sqrt(1.0 / ess))
    return AverageEstimate(mean, float(ess), stderr)
