"""Velocity Verlet legs, time-step jitter, and numerical map checkers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from xchmc.phase import PhaseState, TargetModel, flip

__all__ = [
    "LegSpec",
    "DivergedLeg",
    "verlet_leg",
    "jitter_dt",
    "check_reversibility",
    "check_volume_preservation",
]


@dataclass(frozen=True)
class LegSpec:
    """One integration leg: ``steps`` velocity Verlet steps of size ``dt``."""

    dt: float
    steps: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive and finite")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be an integer >= 1")
        object.__setattr__(self, "steps", int(self.steps))


class DivergedLeg(RuntimeError):
    """An integration leg left the finite domain.

    Attributes
    ----------
    step_index:
        0-based index of the step whose update first produced a non-finite
        gradient or state (``steps`` for the closing half kick).
    force_evals:
        Gradient evaluations actually performed before the leg was abandoned,
        so budget accounting stays exact.
    """

    def __init__(self, step_index: int, force_evals: int):
        super().__init__(f"integration diverged at step {step_index}")
        self.step_index = step_index
        self.force_evals = force_evals


def verlet_leg(model: TargetModel, spec: LegSpec, z: PhaseState) -> tuple[PhaseState, int]:
    """Integrate one velocity Verlet leg; returns (end state, gradient evaluations).

    The leg is the half-kick / (drift, kick) x (steps-1) / drift / half-kick
    composition: it is volume preserving and reversible up to a momentum flip.
    A complete leg always costs exactly ``steps + 1`` gradient evaluations.
    Divergence raises :class:`DivergedLeg` with the partial evaluation count.
    """
    if z.dim != model.dim:
        raise ValueError(f"state dimension {z.dim} does not match target dimension {model.dim}")
    dt = spec.dt
    mass = model.mass
    evals = 0
    x = z.x
    y = z.y
    with np.errstate(over="ignore", invalid="ignore"):
        g = np.asarray(model.gradient(x), dtype=float)
        evals += 1
        if not np.isfinite(g).all():
            raise DivergedLeg(0, evals)
        y = y - (0.5 * dt) * g
        for step in range(1, spec.steps):
            x = x + dt * mass.apply_inverse(y)
            g = np.asarray(model.gradient(x), dtype=float)
            evals += 1
            if not np.isfinite(g).all():
                raise DivergedLeg(step, evals)
            y = y - dt * g
        x = x + dt * mass.apply_inverse(y)
        g = np.asarray(model.gradient(x), dtype=float)
        evals += 1
        if not np.isfinite(g).all():
            raise DivergedLeg(spec.steps, evals)
        y = y - (0.5 * dt) * g
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DivergedLeg(spec.steps, evals)
    return PhaseState(x, y), evals


def jitter_dt(base_dt: float, fraction: float, rng) -> float:
    """Draw a uniformly jittered step size ``base_dt * (1 + u)``, u ~ U(-fraction, fraction).

    Always consumes exactly one uniform draw so the stream layout does not
    depend on ``fraction``; at fraction 0 the result is exactly ``base_dt``.
    """
    if not (math.isfinite(base_dt) and base_dt > 0):
        raise ValueError("base_dt must be positive and finite")
    if not (0.0 <= fraction < 1.0):
        raise ValueError("jitter fraction must lie in [0, 1)")
    u = float(rng.uniform(-fraction, fraction))
    return base_dt * (1.0 + u)


def check_reversibility(model: TargetModel, spec: LegSpec, z: PhaseState) -> float:
    """Relative size of F(I(F(I(z)))) - z, which is zero for an exactly reversible leg."""
    forward, _ = verlet_leg(model, spec, z)
    back, _ = verlet_leg(model, spec, flip(forward))
    back = flip(back)
    diff = math.hypot(
        float(np.linalg.norm(back.x - z.x)), float(np.linalg.norm(back.y - z.y))
    )
    scale = math.hypot(float(np.linalg.norm(z.x)), float(np.linalg.norm(z.y)))
    return diff / max(scale, 1.0)


def check_volume_preservation(model: TargetModel, spec: LegSpec, z: PhaseState,
                              step: float = 1e-5) -> float:
    """|det J - 1| for the leg's Jacobian, estimated by central differences.

    The Jacobian of the full phase-space map (x, y) -> I(x, y) is formed column
    by column with perturbation ``step`` per coordinate.
    """
    d = z.dim
    base = np.concatenate([z.x, z.y])

    def advance(w):
        out, _ = verlet_leg(model, spec, PhaseState(w[:d], w[d:]))
        return np.concatenate([out.x, out.y])

    jac = np.empty((2 * d, 2 * d))
    for j in range(2 * d):
        wp = base.copy()
        wp[j] += step
        wm = base.copy()
        wm[j] -= step
        jac[:, j] = (advance(wp) - advance(wm)) / (2.0 * step)
    return abs(float(np.linalg.det(jac)) - 1.0)
