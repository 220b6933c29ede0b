"""Extra-chance generalized hybrid Monte Carlo.

The outer chain alternates a partial momentum refresh with a delayed-rejection
dynamics map: on rejection of the first integration leg, up to
``extra_chances`` further legs are offered to the same acceptance draw before
falling back to a momentum flip.  ``extra_chances = 0`` is plain generalized
HMC; additionally taking ``psi = pi/2`` (full refresh) gives plain HMC.

Randomness contract: each transition consumes, in order, ``dim`` standard
normals (refresh noise), one uniform (acceptance draw ``u``), one jitter
perturbation.  The jitter is drawn once per transition and shared by all
extra-chance legs of that transition, so the composed leg map stays reversible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from xchmc.integrator import DivergedLeg, LegSpec, jitter_dt, verlet_leg
from xchmc.phase import PhaseState, TargetModel, flip, log_rho
from xchmc.rng import chain_rng

__all__ = [
    "SamplerConfig",
    "SlotDistribution",
    "TransitionOutcome",
    "Budget",
    "ChainRecord",
    "refresh_momentum",
    "slot_distribution",
    "sigma_sequence",
    "extra_chance_step",
    "run_chain",
    "lahmc_probabilities",
    "lahmc_from_log_ratios",
    "palindromic_refresh_angle",
    "run_palindromic_chain",
    "couple_noise",
]

_HALF_PI = math.pi / 2.0


def _cos_sin(angle: float) -> tuple[float, float]:
    # Exact coefficients at the full-refresh endpoint, so the old momentum
    # drops out bit for bit instead of surviving at the 1e-16 level.
    if angle == _HALF_PI:
        return 0.0, 1.0
    return math.cos(angle), math.sin(angle)


@dataclass(frozen=True)
class SamplerConfig:
    """Static parameters of one chain."""

    leg: LegSpec
    psi: float
    extra_chances: int = 0
    jitter_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.psi <= _HALF_PI):
            raise ValueError("psi must lie in (0, pi/2]")
        if int(self.extra_chances) != self.extra_chances or self.extra_chances < 0:
            raise ValueError("extra_chances must be an integer >= 0")
        object.__setattr__(self, "extra_chances", int(self.extra_chances))
        if not (0.0 <= self.jitter_fraction < 1.0):
            raise ValueError("jitter_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class SlotDistribution:
    """Running acceptance thresholds and the induced outcome probabilities.

    ``sigma[k-1]`` is the cumulative acceptance threshold after k candidate
    legs; ``p[k-1]`` is the probability of landing in acceptance slot k, with
    the final entry the momentum-flip probability.  ``log_sigma`` carries the
    thresholds in log space, which is what the transition actually compares
    against (guards against underflow in high dimension).
    """

    sigma: np.ndarray
    p: np.ndarray
    log_sigma: np.ndarray

    @property
    def flip_probability(self) -> float:
        return float(self.p[-1])


def slot_distribution(log_ratios) -> SlotDistribution:
    """Build the acceptance-slot partition from forward log density ratios.

    ``log_ratios[j]`` is log rho(I^(j+1) z) - log rho(z) for candidate j+1.
    The threshold after k candidates is the capped running maximum
    max_(j<=k) min(1, ratio_j); slot probabilities are its increments, and
    whatever is left above the last threshold is the flip probability.
    """
    lr = np.atleast_1d(np.asarray(log_ratios, dtype=float))
    if lr.ndim != 1 or lr.size == 0:
        raise ValueError("log_ratios must be a non-empty vector")
    log_sigma = np.empty(lr.size)
    running = -math.inf
    for j, delta in enumerate(lr):
        if math.isnan(delta):
            delta = -math.inf  # 0/0 density ratio: such a candidate is never accepted
        running = max(running, min(0.0, float(delta)))
        log_sigma[j] = running
    sigma = np.exp(log_sigma)
    p = np.empty(lr.size + 1)
    p[0] = sigma[0]
    p[1:-1] = np.diff(sigma)
    p[-1] = 1.0 - sigma[-1]
    return SlotDistribution(sigma=sigma, p=p, log_sigma=log_sigma)


def _forward_log_ratios(model: TargetModel, leg: LegSpec, z: PhaseState, count: int) -> np.ndarray:
    """log rho(I^j z) - log rho(z) for j = 1..count; -inf from the first diverged leg on."""
    ref = log_rho(model, z)
    out = np.full(count, -math.inf)
    current = z
    for j in range(count):
        try:
            current, _ = verlet_leg(model, leg, current)
        except DivergedLeg:
            break
        lj = log_rho(model, current)
        if ref == -math.inf:
            out[j] = math.inf if lj > -math.inf else -math.inf
        else:
            out[j] = lj - ref
    return out


def sigma_sequence(model: TargetModel, leg: LegSpec, z: PhaseState,
                   extra_chances: int) -> SlotDistribution:
    """Eager analysis of one transition: integrates all extra_chances + 1 legs.

    Unlike :func:`extra_chance_step`, which stops at the accepting candidate,
    this always computes the full slot distribution, at the cost of the full
    orbit.  Diverged candidates contribute density zero.
    """
    if int(extra_chances) != extra_chances or extra_chances < 0:
        raise ValueError("extra_chances must be an integer >= 0")
    return slot_distribution(_forward_log_ratios(model, leg, z, int(extra_chances) + 1))


def refresh_momentum(model: TargetModel, z: PhaseState, psi: float, rng) -> PhaseState:
    """Partial momentum refresh (x, y) -> (x, cos(psi) y + sin(psi) zeta), zeta ~ N(0, M).

    psi = pi/2 replaces the momentum completely.  The position block is passed
    through untouched.
    """
    if not (0.0 < psi <= _HALF_PI):
        raise ValueError("psi must lie in (0, pi/2]")
    if z.dim != model.dim:
        raise ValueError(f"state dimension {z.dim} does not match target dimension {model.dim}")
    noise = model.mass.sqrt_apply(np.asarray(rng.standard_normal(z.dim), dtype=float))
    c, s = _cos_sin(psi)
    return PhaseState(z.x, c * z.y + s * noise)


@dataclass(frozen=True)
class TransitionOutcome:
    """Result of one application of the delayed-rejection dynamics map."""

    next_state: PhaseState
    slot: int                 # 1..extra_chances+1 = accepted candidate, extra_chances+2 = flip
    candidates_computed: int
    force_evals: int
    u: float
    dt: float                 # jittered step size shared by every leg of this transition


def extra_chance_step(model: TargetModel, config: SamplerConfig, z: PhaseState,
                      rng) -> TransitionOutcome:
    """Apply the delayed-rejection dynamics map to ``z``.

    A single acceptance draw ``u`` is shared by all candidates: candidate legs
    are integrated lazily until the running threshold reaches ``u`` (inclusive
    comparison, done in log space), and the momentum flip of the input is
    returned if none of the ``extra_chances + 1`` candidates does.  Diverged
    candidates count as density zero and are never accepted.
    """
    u = float(rng.uniform())
    dt = jitter_dt(config.leg.dt, config.jitter_fraction, rng)
    leg = LegSpec(dt=dt, steps=config.leg.steps)
    log_u = math.log(u) if u > 0.0 else -math.inf
    log_ref = log_rho(model, z)
    chances = config.extra_chances + 1
    log_running = -math.inf
    evals = 0
    candidates = 0
    current = z
    diverged = False
    for k in range(1, chances + 1):
        candidates = k
        log_ratio = -math.inf
        if not diverged:
            try:
                current, n = verlet_leg(model, leg, current)
                evals += n
                lk = log_rho(model, current)
                if log_ref == -math.inf:
                    log_ratio = math.inf if lk > -math.inf else -math.inf
                else:
                    log_ratio = lk - log_ref
            except DivergedLeg as err:
                evals += err.force_evals
                diverged = True
        log_running = max(log_running, min(0.0, log_ratio))
        if not diverged and log_ratio > -math.inf and log_u <= log_running:
            return TransitionOutcome(current, k, candidates, evals, u, dt)
    return TransitionOutcome(flip(z), chances + 1, candidates, evals, u, dt)


@dataclass(frozen=True)
class Budget:
    """Chain length control: exactly one of ``transitions`` or ``force_evals``.

    ``burn_in`` transitions are run and discarded first; they do not count
    against the force-evaluation cap.  A force-evaluation budget stops the
    chain at the first transition whose completion meets or exceeds the cap.
    """

    transitions: int | None = None
    force_evals: int | None = None
    burn_in: int = 0

    def __post_init__(self) -> None:
        if (self.transitions is None) == (self.force_evals is None):
            raise ValueError("set exactly one of transitions and force_evals")
        for name in ("transitions", "force_evals", "burn_in"):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < 0):
                raise ValueError(f"{name} must be a non-negative integer")


@dataclass(frozen=True)
class ChainRecord:
    """Recorded trajectory plus per-transition metadata.

    ``positions``/``momenta`` have ``transitions + 1`` rows; row 0 is the
    state the production run started from (after any burn-in).
    """

    positions: np.ndarray
    momenta: np.ndarray
    slots: np.ndarray
    candidates: np.ndarray
    force_evals: np.ndarray
    dt_used: np.ndarray
    extra_chances: int
    burn_in: int

    @property
    def transitions(self) -> int:
        return self.slots.size

    @property
    def total_force_evals(self) -> int:
        return int(self.force_evals.sum())

    def state(self, n: int) -> PhaseState:
        return PhaseState(self.positions[n], self.momenta[n])


class _Recorder:
    def __init__(self, z0: PhaseState):
        self.xs = [z0.x]
        self.ys = [z0.y]
        self.slots: list[int] = []
        self.candidates: list[int] = []
        self.evals: list[int] = []
        self.dts: list[float] = []

    def add(self, out: TransitionOutcome) -> None:
        self.xs.append(out.next_state.x)
        self.ys.append(out.next_state.y)
        self.slots.append(out.slot)
        self.candidates.append(out.candidates_computed)
        self.evals.append(out.force_evals)
        self.dts.append(out.dt)

    def finish(self, extra_chances: int, burn_in: int) -> ChainRecord:
        return ChainRecord(
            positions=np.array(self.xs),
            momenta=np.array(self.ys),
            slots=np.array(self.slots, dtype=int),
            candidates=np.array(self.candidates, dtype=int),
            force_evals=np.array(self.evals, dtype=int),
            dt_used=np.array(self.dts),
            extra_chances=extra_chances,
            burn_in=burn_in,
        )


def run_chain(model: TargetModel, config: SamplerConfig, z0: PhaseState, budget: Budget,
              rng=None, chain_index: int = 0) -> ChainRecord:
    """Run one chain: alternate momentum refresh and the delayed-rejection map.

    With no explicit ``rng`` the stream is ``chain_rng(config.seed,
    chain_index)``, making records bit-identical across runs with the same
    seed and configuration.
    """
    if z0.dim != model.dim:
        raise ValueError(f"start dimension {z0.dim} does not match target dimension {model.dim}")
    if rng is None:
        rng = chain_rng(config.seed, chain_index)

    def transition(z: PhaseState) -> TransitionOutcome:
        zbar = refresh_momentum(model, z, config.psi, rng)
        return extra_chance_step(model, config, zbar, rng)

    z = z0
    for _ in range(budget.burn_in):
        z = transition(z).next_state
    rec = _Recorder(z)
    if budget.transitions is not None:
        for _ in range(budget.transitions):
            out = transition(z)
            rec.add(out)
            z = out.next_state
    else:
        spent = 0
        while spent < budget.force_evals:
            out = transition(z)
            rec.add(out)
            z = out.next_state
            spent += out.force_evals
    return rec.finish(config.extra_chances, budget.burn_in)


# ---------------------------------------------------------------------------
# Look-ahead cross-check
# ---------------------------------------------------------------------------

def lahmc_from_log_ratios(log_ratios) -> tuple[np.ndarray, np.ndarray]:
    """Look-ahead transition probabilities computed from forward log ratios.

    The look-ahead scheme assigns candidate k the probability

        pi_k(z) = min(1 - sum_(j<k) pi_j(z),
                      (rho(F I^k z) / rho(z)) (1 - sum_(j<k) pi_j(F I^k z)))

    and is evaluated here by literal recursion over phase points of the form
    F^a I^m z, using only that the leg map is reversible (I^-1 = F I F) and
    that rho is flip-invariant, so every density it touches reduces to one of
    the forward values rho(I^m z).  This is an independent route to the slot
    probabilities: its cumulative sums must reproduce ``sigma`` from
    :func:`slot_distribution`.

    Returns ``(pi, cumulative)`` for candidates 1..len(log_ratios).
    """
    lr = np.atleast_1d(np.asarray(log_ratios, dtype=float))
    if lr.ndim != 1 or lr.size == 0:
        raise ValueError("log_ratios must be a non-empty vector")
    kmax = lr.size
    # Log density at orbit points I^m z relative to rho(z), m = 0..kmax.
    fwd = np.concatenate([[0.0], lr])
    fwd[np.isnan(fwd)] = -math.inf
    memo: dict[tuple[int, int, bool], float] = {}

    def pi(k: int, m: int, flipped: bool) -> float:
        # Probability that the point w = F^flipped I^m z hands the chain to its
        # k-th forward candidate.
        key = (k, m, flipped)
        if key in memo:
            return memo[key]
        # Target point F(I^k w), reduced back to the forward orbit.
        tm = m - k if flipped else m + k
        tflip = not flipped
        if not 0 <= tm <= kmax:
            raise RuntimeError("orbit index out of range; inconsistent recursion")
        rem_w = 1.0 - sum(pi(j, m, flipped) for j in range(1, k))
        rem_t = 1.0 - sum(pi(j, tm, tflip) for j in range(1, k))
        rem_w = max(0.0, rem_w)
        rem_t = max(0.0, rem_t)
        log_num = fwd[tm]
        log_den = fwd[m]
        if rem_t == 0.0 or log_num == -math.inf:
            second = 0.0
        elif log_den == -math.inf:
            second = math.inf
        else:
            second = math.exp(min(700.0, log_num - log_den)) * rem_t
        val = min(rem_w, second)
        memo[key] = val
        return val

    probs = np.array([pi(k, 0, False) for k in range(1, kmax + 1)])
    return probs, np.cumsum(probs)


def lahmc_probabilities(model: TargetModel, leg: LegSpec, z: PhaseState,
                        extra_chances: int) -> tuple[np.ndarray, np.ndarray]:
    """Look-ahead probabilities for the orbit of ``z``; see :func:`lahmc_from_log_ratios`."""
    if int(extra_chances) != extra_chances or extra_chances < 0:
        raise ValueError("extra_chances must be an integer >= 0")
    lr = _forward_log_ratios(model, leg, z, int(extra_chances) + 1)
    return lahmc_from_log_ratios(lr)


# ---------------------------------------------------------------------------
# Palindromic (refresh, dynamics, refresh) formulation
# ---------------------------------------------------------------------------

def palindromic_refresh_angle(psi: float) -> float:
    """Half-step refresh angle: the PSI in (0, pi/2] with cos(PSI)^2 = cos(psi)."""
    if not (0.0 < psi <= _HALF_PI):
        raise ValueError("psi must lie in (0, pi/2]")
    if psi == _HALF_PI:
        return _HALF_PI
    return math.acos(math.sqrt(math.cos(psi)))


def run_palindromic_chain(model: TargetModel, config: SamplerConfig, z0: PhaseState,
                          transitions: int, rng=None, chain_index: int = 0) -> ChainRecord:
    """Run the symmetric refresh/dynamics/refresh chain.

    Each transition refreshes with the half-step angle, applies the
    delayed-rejection map, and refreshes again, consuming per transition:
    ``dim`` normals, one uniform, one jitter draw, ``dim`` normals.  Shares
    every invariant with :func:`run_chain`; the two chains visit identically
    distributed position marginals.
    """
    if int(transitions) != transitions or transitions < 0:
        raise ValueError("transitions must be a non-negative integer")
    if z0.dim != model.dim:
        raise ValueError(f"start dimension {z0.dim} does not match target dimension {model.dim}")
    if rng is None:
        rng = chain_rng(config.seed, chain_index)
    half = palindromic_refresh_angle(config.psi)
    rec = _Recorder(z0)
    z = z0
    for _ in range(int(transitions)):
        zbar = refresh_momentum(model, z, half, rng)
        out = extra_chance_step(model, config, zbar, rng)
        z = refresh_momentum(model, out.next_state, half, rng)
        rec.add(TransitionOutcome(z, out.slot, out.candidates_computed,
                                  out.force_evals, out.u, out.dt))
    return rec.finish(config.extra_chances, 0)


def couple_noise(psi: float, initial_momentum, pre_refresh_noise, post_refresh_noise
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Map a palindromic chain's noise realization onto the single-refresh chain.

    Given the palindromic chain's initial momentum and its two refresh-noise
    streams (``pre_refresh_noise[n]`` before, ``post_refresh_noise[n]`` after
    the dynamics of transition n), returns ``(y0, zeta_stream)`` such that the
    single-refresh chain started from the same position with momentum ``y0``,
    refresh noise ``zeta_stream`` and the same acceptance draws (no jitter)
    visits exactly the same positions.  The construction is the orthogonal
    rotation

        y0     = cos(psi - PSI) Y0 - sin(psi - PSI) pre_1
        zeta_1 = sin(psi - PSI) Y0 + cos(psi - PSI) pre_1
        zeta_(n+1) = (cos(PSI) sin(PSI) post_n + sin(PSI) pre_(n+1)) / sin(psi)

    with PSI the half-step angle, so i.i.d. N(0, M) streams map to i.i.d.
    N(0, M) streams.
    """
    if not (0.0 < psi <= _HALF_PI):
        raise ValueError("psi must lie in (0, pi/2]")
    y_init = np.atleast_1d(np.asarray(initial_momentum, dtype=float))
    pre = np.atleast_2d(np.asarray(pre_refresh_noise, dtype=float))
    post = np.atleast_2d(np.asarray(post_refresh_noise, dtype=float))
    n_trans = pre.shape[0]
    if n_trans == 0:
        raise ValueError("need at least one pre-refresh noise vector")
    if post.shape[0] < n_trans - 1:
        raise ValueError("post-refresh noise stream too short")
    half = palindromic_refresh_angle(psi)
    delta = psi - half
    c_delta, s_delta = (1.0, 0.0) if delta == 0.0 else (math.cos(delta), math.sin(delta))
    ch, sh = _cos_sin(half)
    _, s_psi = _cos_sin(psi)
    y0 = c_delta * y_init - s_delta * pre[0]
    zetas = np.empty_like(pre)
    zetas[0] = s_delta * y_init + c_delta * pre[0]
    for n in range(1, n_trans):
        zetas[n] = (ch * sh * post[n - 1] + sh * pre[n]) / s_psi
    return y0, zetas
