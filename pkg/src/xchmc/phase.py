"""Phase-space primitives: states, mass matrices, target models, built-in targets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "PhaseState",
    "MassMatrix",
    "TargetModel",
    "flip",
    "hamiltonian",
    "log_rho",
    "builtin_target",
    "gradient_fd_error",
]


@dataclass(frozen=True)
class PhaseState:
    """A phase-space point: positions ``x`` and conjugate momenta ``y``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.ndim != 1 or y.ndim != 1:
            raise ValueError("positions and momenta must be flat vectors")
        if x.shape != y.shape:
            raise ValueError(
                f"dimension mismatch: {x.shape[0]} positions vs {y.shape[0]} momenta"
            )
        if x.size == 0:
            raise ValueError("phase state needs at least one coordinate")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("phase-space components must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def dim(self) -> int:
        return self.x.shape[0]


def flip(z: PhaseState) -> PhaseState:
    """Momentum flip (x, y) -> (x, -y): an involution that preserves the energy."""
    return PhaseState(z.x, -z.y)


class MassMatrix:
    """Symmetric positive-definite mass matrix in identity, diagonal, or dense form.

    Supplies the three products the sampler needs: ``M v`` (kick scaling checks),
    ``M^-1 v`` (drifts and kinetic energy) and ``M^1/2 v`` (drawing momenta
    distributed as N(0, M) from standard normals).  The identity form is
    dimension-free; diagonal and dense forms fix the dimension.
    """

    def __init__(self, diag=None, dense=None):
        if diag is not None and dense is not None:
            raise ValueError("give at most one of diag and dense")
        self._diag = None
        self._sqrt_diag = None
        self._dense = None
        self._chol = None
        self._inv = None
        if dense is not None:
            m = np.asarray(dense, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
                raise ValueError("dense mass matrix must be square and non-empty")
            if not np.isfinite(m).all():
                raise ValueError("dense mass matrix must be finite")
            scale = max(1.0, float(np.abs(m).max()))
            if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * scale):
                raise ValueError("dense mass matrix must be symmetric")
            m = 0.5 * (m + m.T)
            try:
                chol = np.linalg.cholesky(m)
            except np.linalg.LinAlgError as exc:
                raise ValueError("dense mass matrix is not positive definite") from exc
            self.kind = "dense"
            self._dense = m
            self._chol = chol
            self._inv = np.linalg.inv(m)
        elif diag is not None:
            d = np.atleast_1d(np.asarray(diag, dtype=float))
            if d.ndim != 1 or d.size == 0:
                raise ValueError("diagonal mass entries must form a non-empty vector")
            if not np.isfinite(d).all() or (d <= 0).any():
                raise ValueError("diagonal mass entries must be positive and finite")
            self.kind = "diagonal"
            self._diag = d
            self._sqrt_diag = np.sqrt(d)
        else:
            self.kind = "identity"

    @classmethod
    def identity(cls) -> "MassMatrix":
        return cls()

    @classmethod
    def diagonal(cls, entries) -> "MassMatrix":
        return cls(diag=entries)

    @classmethod
    def dense(cls, matrix) -> "MassMatrix":
        return cls(dense=matrix)

    @property
    def dim(self) -> int | None:
        """Fixed dimension, or None for the dimension-free identity."""
        if self.kind == "diagonal":
            return self._diag.size
        if self.kind == "dense":
            return self._dense.shape[0]
        return None

    def _checked(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.dim is not None and v.shape != (self.dim,):
            raise ValueError(f"vector of shape {v.shape} does not match mass dimension {self.dim}")
        return v

    def apply(self, v) -> np.ndarray:
        """Return M v."""
        v = self._checked(v)
        if self.kind == "diagonal":
            return self._diag * v
        if self.kind == "dense":
            return self._dense @ v
        return v

    def apply_inverse(self, v) -> np.ndarray:
        """Return M^-1 v."""
        v = self._checked(v)
        if self.kind == "diagonal":
            return v / self._diag
        if self.kind == "dense":
            return self._inv @ v
        return v

    def sqrt_apply(self, v) -> np.ndarray:
        """Return M^1/2 v (triangular factor for the dense form)."""
        v = self._checked(v)
        if self.kind == "diagonal":
            return self._sqrt_diag * v
        if self.kind == "dense":
            return self._chol @ v
        return v

    def kinetic(self, y) -> float:
        """Kinetic energy 0.5 * y' M^-1 y."""
        y = self._checked(y)
        return 0.5 * float(y @ self.apply_inverse(y))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"MassMatrix(kind={self.kind!r}, dim={self.dim})"


@dataclass(frozen=True)
class TargetModel:
    """Unnormalized target exp(-beta V(x)) together with its kinetic metric.

    ``potential`` and ``gradient`` must be pure functions of the position:
    independent chains call them concurrently and nothing may be cached
    between calls.
    """

    dim: int
    potential: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    beta: float = 1.0
    mass: MassMatrix = field(default_factory=MassMatrix.identity)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("target dimension must be at least 1")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError("beta must be positive and finite")
        if self.mass.dim is not None and self.mass.dim != self.dim:
            raise ValueError(
                f"mass dimension {self.mass.dim} does not match target dimension {self.dim}"
            )


def _check_dim(model: TargetModel, z: PhaseState) -> None:
    if z.dim != model.dim:
        raise ValueError(f"state dimension {z.dim} does not match target dimension {model.dim}")


def hamiltonian(model: TargetModel, z: PhaseState) -> float:
    """Total energy 0.5 y' M^-1 y + V(x); +inf when either term is not finite."""
    _check_dim(model, z)
    with np.errstate(over="ignore", invalid="ignore"):
        v = float(model.potential(z.x))
        if not math.isfinite(v):
            return math.inf
        total = model.mass.kinetic(z.y) + v
    return total if math.isfinite(total) else math.inf


def log_rho(model: TargetModel, z: PhaseState) -> float:
    """Unnormalized log density -beta H(z); -inf wherever the potential is not finite."""
    h = hamiltonian(model, z)
    if h == math.inf:
        return -math.inf
    return -model.beta * h


def _gaussian(dims: int, params: dict) -> tuple[Callable, Callable]:
    variances = params.pop("variances", 1.0)
    var = np.broadcast_to(np.asarray(variances, dtype=float), (dims,)).copy()
    if not np.isfinite(var).all() or (var <= 0).any():
        raise ValueError("gaussian variances must be positive and finite")

    def potential(x):
        return 0.5 * float(np.sum(x * x / var))

    def gradient(x):
        return x / var

    return potential, gradient


def _double_well(dims: int, params: dict) -> tuple[Callable, Callable]:
    def potential(x):
        q = x * x - 1.0
        return float(np.sum(q * q))

    def gradient(x):
        return 4.0 * x * (x * x - 1.0)

    return potential, gradient


def _banana(dims: int, params: dict) -> tuple[Callable, Callable]:
    if dims < 2:
        raise ValueError("banana target needs at least 2 dimensions")
    b = float(params.pop("curvature", 0.5))
    s2 = float(params.pop("first_variance", 1.0))
    if not math.isfinite(b):
        raise ValueError("banana curvature must be finite")
    if not (math.isfinite(s2) and s2 > 0):
        raise ValueError("banana first_variance must be positive and finite")

    # Curved Gaussian ridge: the second coordinate tracks b*(x0^2 - s2), the
    # remaining coordinates are standard normal.
    def potential(x):
        bend = x[1] + b * (x[0] * x[0] - s2)
        rest = x[2:]
        return float(0.5 * x[0] * x[0] / s2 + 0.5 * bend * bend + 0.5 * np.sum(rest * rest))

    def gradient(x):
        g = np.array(x, dtype=float)
        bend = x[1] + b * (x[0] * x[0] - s2)
        g[0] = x[0] / s2 + 2.0 * b * x[0] * bend
        g[1] = bend
        return g

    return potential, gradient


_BUILTINS = {
    "gaussian": _gaussian,
    "double_well": _double_well,
    "banana": _banana,
}


def builtin_target(name: str, dims: int, *, beta: float = 1.0, mass=None,
                   **params) -> TargetModel:
    """Construct one of the built-in analytic targets.

    Parameters
    ----------
    name:
        ``gaussian`` (independent zero-mean coordinates,
        ``V = sum_i x_i^2 / (2 s_i^2)``; parameter ``variances`` is a scalar or
        per-coordinate vector), ``double_well`` (separable quartic
        ``V = sum_i (x_i^2 - 1)^2``), or ``banana`` (curved Gaussian ridge,
        parameters ``curvature`` and ``first_variance``).
    dims:
        Number of position coordinates.
    beta, mass:
        Inverse temperature and kinetic metric; defaults 1 and identity.
        ``mass`` accepts a :class:`MassMatrix` or a per-coordinate sequence of
        diagonal masses (the JSON-friendly spelling for sweep specs).
    """
    if name not in _BUILTINS:
        known = ", ".join(sorted(_BUILTINS))
        raise ValueError(f"unknown target {name!r}; choose one of: {known}")
    if dims < 1:
        raise ValueError("dims must be at least 1")
    if mass is None:
        mass = MassMatrix.identity()
    elif not isinstance(mass, MassMatrix):
        mass = MassMatrix.diagonal(mass)
    remaining = dict(params)
    potential, gradient = _BUILTINS[name](dims, remaining)
    if remaining:
        raise ValueError(f"unexpected parameters for {name!r}: {sorted(remaining)}")
    return TargetModel(
        dim=dims,
        potential=potential,
        gradient=gradient,
        beta=beta,
        mass=mass,
    )


def gradient_fd_error(model: TargetModel, x, relative_step: float = 1e-5) -> float:
    """Worst coordinatewise gap between the analytic gradient and central differences.

    Step for coordinate i is ``relative_step * max(1, |x_i|)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = np.asarray(model.gradient(x), dtype=float)
    worst = 0.0
    for i in range(x.size):
        h = relative_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        fd = (model.potential(xp) - model.potential(xm)) / (2.0 * h)
        worst = max(worst, abs(float(g[i]) - fd))
    return worst
