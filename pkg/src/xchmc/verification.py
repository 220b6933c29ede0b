"""Verification suites: randomized batteries for the sampler's exact identities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from xchmc.diagnostics import check_main_identity
from xchmc.integrator import (DivergedLeg, LegSpec, check_reversibility,
                              check_volume_preservation)
from xchmc.phase import PhaseState, TargetModel, builtin_target
from xchmc.rng import ScriptedRng, chain_rng
from xchmc.sampler import (SamplerConfig, couple_noise, lahmc_probabilities,
                           run_chain, run_palindromic_chain, sigma_sequence, Budget)

__all__ = [
    "CheckOutcome",
    "VerificationReport",
    "SUITES",
    "verify",
    "verify_reversibility",
    "verify_volume",
    "verify_main_identity",
    "verify_lahmc_equivalence",
    "verify_palindromic_coupling",
]

DEFAULT_SEED = 20240817


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    worst: float
    tolerance: float
    checks: int
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return (f"[{status}] {self.name}: worst={self.worst:.3e} "
                f"tol={self.tolerance:.1e} checks={self.checks}{extra}")


@dataclass(frozen=True)
class VerificationReport:
    outcomes: tuple[CheckOutcome, ...]

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    def lines(self) -> list[str]:
        return [o.line() for o in self.outcomes]


def _battery_targets() -> list[tuple[TargetModel, float]]:
    """Targets exercised by every suite, with a per-target stable step size."""
    return [
        (builtin_target("gaussian", 2, variances=[1.0, 4.0]), 0.2),
        (builtin_target("double_well", 2), 0.12),
        (builtin_target("banana", 2, curvature=0.5), 0.15),
    ]


def _random_state(rng, dim: int) -> PhaseState:
    return PhaseState(rng.standard_normal(dim), rng.standard_normal(dim))


def verify_reversibility(points_per_target: int = 100, seed: int = DEFAULT_SEED,
                         tolerance: float = 1e-10) -> CheckOutcome:
    """Integrate forward, flip, integrate back, flip: must restore the state."""
    rng = chain_rng(seed, 1)
    worst = 0.0
    checks = 0
    for model, dt in _battery_targets():
        leg = LegSpec(dt=dt, steps=5)
        for _ in range(points_per_target):
            worst = max(worst, check_reversibility(model, leg, _random_state(rng, model.dim)))
            checks += 1
    return CheckOutcome("reversibility", worst <= tolerance, worst, tolerance, checks)


def verify_volume(points_per_target: int = 100, seed: int = DEFAULT_SEED,
                  tolerance: float = 1e-5) -> CheckOutcome:
    """|det J - 1| of the leg map, via central-difference Jacobians."""
    rng = chain_rng(seed, 2)
    worst = 0.0
    checks = 0
    for model, dt in _battery_targets():
        leg = LegSpec(dt=dt, steps=5)
        for _ in range(points_per_target):
            worst = max(worst, check_volume_preservation(model, leg, _random_state(rng, model.dim)))
            checks += 1
    return CheckOutcome("volume_preservation", worst <= tolerance, worst, tolerance, checks)


def verify_main_identity(triples: int = 1000, seed: int = DEFAULT_SEED,
                         tolerance: float = 1e-8) -> CheckOutcome:
    """rho * p_k must agree between each point and the flipped end of its orbit."""
    rng = chain_rng(seed, 3)
    targets = _battery_targets()
    worst = 0.0
    checks = 0
    skipped = 0
    for i in range(triples):
        model, dt = targets[i % len(targets)]
        leg = LegSpec(dt=dt, steps=5)
        k = 1 + i % 4
        discrepancy = None
        for _ in range(5):  # diverged orbits are skipped explicitly: resample
            try:
                discrepancy = check_main_identity(model, leg, _random_state(rng, model.dim), k)
                break
            except DivergedLeg:
                skipped += 1
        if discrepancy is None:
            continue
        worst = max(worst, discrepancy)
        checks += 1
    detail = f"skipped={skipped}" if skipped else ""
    return CheckOutcome("main_identity", worst <= tolerance and checks >= triples // 2,
                        worst, tolerance, checks, detail)


def verify_lahmc_equivalence(triples: int = 1000, seed: int = DEFAULT_SEED,
                             tolerance: float = 1e-12) -> CheckOutcome:
    """Cumulative look-ahead probabilities must equal the slot thresholds."""
    rng = chain_rng(seed, 4)
    targets = _battery_targets()
    chance_counts = (1, 2, 3, 5)
    worst = 0.0
    checks = 0
    for i in range(triples):
        model, dt = targets[i % len(targets)]
        leg = LegSpec(dt=dt, steps=3)
        extra = chance_counts[i % len(chance_counts)]
        z = _random_state(rng, model.dim)
        sigma = sigma_sequence(model, leg, z, extra).sigma
        _, cumulative = lahmc_probabilities(model, leg, z, extra)
        worst = max(worst, float(np.max(np.abs(sigma - cumulative))))
        checks += 1
    return CheckOutcome("lahmc_equivalence", worst <= tolerance, worst, tolerance, checks)


def _coupling_discrepancy(sin_psi: float, transitions: int, seed: int) -> float:
    """Worst position gap between the palindromic chain and its coupled twin."""
    model = builtin_target("gaussian", 2, variances=[1.0, 2.0])
    psi = math.asin(sin_psi)
    config = SamplerConfig(leg=LegSpec(dt=0.25, steps=5), psi=psi,
                           extra_chances=2, jitter_fraction=0.0)
    rng = chain_rng(seed, 5)
    d = model.dim
    pre = rng.standard_normal((transitions, d))
    post = rng.standard_normal((transitions, d))
    us = rng.uniform(size=transitions)
    x0 = rng.standard_normal(d)
    y_init = rng.standard_normal(d)

    normals_palindromic = np.empty((transitions, 2 * d))
    normals_palindromic[:, :d] = pre
    normals_palindromic[:, d:] = post
    palindromic = run_palindromic_chain(
        model, config, PhaseState(x0, y_init), transitions,
        rng=ScriptedRng(normals=normals_palindromic.ravel(), uniforms=us))

    y0, zetas = couple_noise(psi, y_init, pre, post)
    single = run_chain(
        model, config, PhaseState(x0, y0), Budget(transitions=transitions),
        rng=ScriptedRng(normals=zetas.ravel(), uniforms=us))

    gaps = np.abs(palindromic.positions - single.positions)
    scale = max(1.0, float(np.abs(palindromic.positions).max()))
    return float(gaps.max()) / scale


def verify_palindromic_coupling(transitions: int = 100, seed: int = DEFAULT_SEED,
                                tolerance: float = 1e-12) -> CheckOutcome:
    """The coupled palindromic and single-refresh chains must share positions."""
    worst = 0.0
    checks = 0
    for sin_psi in (0.25, 0.5, 1.0):
        worst = max(worst, _coupling_discrepancy(sin_psi, transitions, seed))
        checks += 1
    return CheckOutcome("palindromic_coupling", worst <= tolerance, worst, tolerance,
                        checks, detail=f"{transitions} transitions per angle")


SUITES = {
    "reversibility": verify_reversibility,
    "volume": verify_volume,
    "main_identity": verify_main_identity,
    "lahmc_equivalence": verify_lahmc_equivalence,
    "palindromic_coupling": verify_palindromic_coupling,
}


def verify(suite: str = "all") -> VerificationReport:
    """Run one named suite, or all of them."""
    if suite == "all":
        return VerificationReport(tuple(fn() for fn in SUITES.values()))
    if suite not in SUITES:
        known = ", ".join(list(SUITES) + ["all"])
        raise ValueError(f"unknown suite {suite!r}; choose one of: {known}")
    return VerificationReport((SUITES[suite](),))
