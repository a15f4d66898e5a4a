"""Sequential track-and-stop agent over mediators.

One engine covers four algorithms: tracking with known policies, tracking
with policies estimated on the fly, the uniform-sampling baseline, and
classical track-and-stop (the same engine run on Dirac mediators).  Sampling
follows cumulative tracking of the solved querying proportions with a
decaying forced-exploration floor; stopping compares a generalized
likelihood-ratio statistic against a log threshold; the recommendation is
the arm with the highest empirical mean.

The hot loop lives in compiled code (`_kernels._trial_steps`); the functions
here are the same operations exposed one call at a time for inspection and
testing.  Random draws come from two substreams of the trial's RngStream
(substream 0: uniforms, substream 1: standard normals), consumed in fixed
per-step order: [mediator draw, uniform baseline only], arm draw, then the
reward draw (one normal, or one uniform for Bernoulli rewards).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .bandits import BanditModel, DistributionFamily, MediatorSet, RngStream
from .characteristic_time import family_code

STEPS_PER_CHUNK = 16384
DUPLICATE_ROW_TOL = 1e-12


class Mode(enum.Enum):
    KNOWN_POLICIES = "known"
    UNKNOWN_POLICIES = "unknown"
    UNIFORM_BASELINE = "uniform"


@dataclass(frozen=True)
class StoppingConfig:
    """Risk delta plus the threshold constants of log(c * t^alpha / delta)."""

    delta: float
    beta_alpha: float = 1.2
    beta_c: float | None = None  # None: resolved to K - 1 for the model at hand

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if not self.beta_alpha > 1.0:
            raise ValueError(f"beta_alpha must be > 1, got {self.beta_alpha}")
        if self.beta_c is not None and not self.beta_c > 0.0:
            raise ValueError(f"beta_c must be positive, got {self.beta_c}")

    def resolve(self, n_arms: int) -> "StoppingConfig":
        if self.beta_c is not None:
            return self
        return replace(self, beta_c=float(n_arms - 1))


@dataclass(frozen=True)
class EngineConfig:
    mode: Mode = Mode.KNOWN_POLICIES
    solver_budget: int = 5000
    solver_tol: float = 1e-6
    warm_budget: int = 50
    prune_duplicates: bool = False
    trial_cap: int = 10_000_000
    check_tracking_bounds: bool = False
    pin_policy_estimates: bool = False  # test hook: unknown mode solves with the true policies

    def __post_init__(self):
        if self.prune_duplicates and self.mode is not Mode.KNOWN_POLICIES:
            raise ValueError("duplicate pruning requires known policies")


@dataclass
class TrackingState:
    """Counts and estimates accumulated by one trial."""

    t: int
    N_e: np.ndarray
    N_a: np.ndarray
    N_ea: np.ndarray
    reward_sums: np.ndarray
    cum_weights: np.ndarray
    mu_hat: np.ndarray
    pi_hat: np.ndarray | None = None
    floor_slack_min: float | None = None
    deviation_excess_max: float | None = None

    @property
    def n_mediators(self) -> int:
        return self.N_e.size

    @property
    def n_arms(self) -> int:
        return self.N_a.size


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one trial."""

    tau: int
    recommended_arm: int
    correct: bool
    seed: int
    stream_id: int
    stopped: bool
    aborted: bool


def epsilon_t(n_mediators: int, t: int) -> float:
    """Forced-exploration floor (E^2 + t)^(-1/2) / 2; equals 1/(2E) at t = 0."""
    if n_mediators < 1:
        raise ValueError("need at least one mediator")
    if t < 0:
        raise ValueError("t must be nonnegative")
    return 0.5 / math.sqrt(n_mediators * n_mediators + t)


def project_weights(omega: np.ndarray, eps: float) -> np.ndarray:
    """L-inf projection of simplex weights onto the eps-floored simplex.

    Coordinates below the floor rise exactly to it; the added mass is removed
    from the others by waterfilling (equal removal capped at each slack),
    which minimizes the largest single displacement.
    """
    omega = np.asarray(omega, dtype=np.float64)
    E = omega.size
    if abs(omega.sum() - 1.0) > 1e-9 or np.any(omega < -1e-9):
        raise ValueError("omega must lie on the probability simplex")
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    if eps > 1.0 / E + 1e-12:
        raise ValueError(f"eps = {eps} leaves an empty floored simplex for E = {E}")
    out = np.empty(E)
    K._project_floor(omega, eps, out)
    return out


def select_mediator(state: TrackingState, projected_omega: np.ndarray) -> int:
    """Add the projected weights to the cumulative target, then pick the
    mediator whose pull count lags the target most (ties: lowest index)."""
    projected_omega = np.asarray(projected_omega, dtype=np.float64)
    if projected_omega.shape != state.cum_weights.shape:
        raise ValueError("projected weights shape mismatch")
    state.cum_weights += projected_omega
    return int(np.argmax(state.cum_weights - state.N_e))


def glr_statistic(state: TrackingState, model_family: DistributionFamily) -> float:
    """Generalized likelihood-ratio statistic Z(t) for the empirical best arm.

    Z(t) = t * g(mu_hat, N_a / t): t times the closed-form infimum evaluated
    at the empirical means and arm frequencies.  Zero when the empirical best
    arm is tied; undefined before every arm has been observed once.
    """
    if state.t <= 0 or np.any(state.N_a == 0):
        raise ValueError("the statistic is undefined before every arm is observed")
    w = state.N_a.astype(np.float64) / state.t
    per_arm = np.empty(state.n_arms)
    value, _ = K._g_proportions(
        family_code(model_family), state.mu_hat, w, per_arm
    )
    return float(state.t * value)


def beta_threshold(cfg: StoppingConfig, t: int) -> float:
    """Stopping threshold log(beta_c * t^beta_alpha / delta)."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if cfg.beta_c is None:
        raise ValueError("beta_c is unresolved; call StoppingConfig.resolve(n_arms) first")
    return math.log(cfg.beta_c) + cfg.beta_alpha * math.log(t) - math.log(cfg.delta)


def update_policy_estimates(state: TrackingState) -> np.ndarray:
    """Empirical policy matrix: row e is N_ea[e] / N_e[e], uniform while unvisited."""
    return update_policy_estimates_from_counts(state.N_ea, state.N_e)


def prune_duplicate_policies(mediators: MediatorSet) -> tuple[MediatorSet, np.ndarray]:
    """Drop exact duplicate policy rows (L-inf within 1e-12), keeping first
    occurrences.  Returns the reduced set and the kept->original index map."""
    pol = mediators.policies
    kept: list[int] = []
    for e in range(pol.shape[0]):
        duplicate = False
        for k in kept:
            if np.max(np.abs(pol[e] - pol[k])) <= DUPLICATE_ROW_TOL:
                duplicate = True
                break
        if not duplicate:
            kept.append(e)
    index_map = np.asarray(kept, dtype=np.int64)
    return MediatorSet(pol[index_map]), index_map


_MODE_CODE = {
    Mode.KNOWN_POLICIES: K.MODE_KNOWN,
    Mode.UNKNOWN_POLICIES: K.MODE_UNKNOWN,
    Mode.UNIFORM_BASELINE: K.MODE_UNIFORM,
}


def run_trial(
    model: BanditModel,
    mediators: MediatorSet,
    engine_cfg: EngineConfig,
    stopping_cfg: StoppingConfig,
    rng: RngStream,
    *,
    return_state: bool = False,
    horizon: int | None = None,
):
    """Run one trial to its stopping time (or the step cap).

    With `horizon` set, stopping is disabled and the trial runs exactly that
    many steps; used for tracking diagnostics.  Returns a RunRecord, or
    (RunRecord, TrackingState) when `return_state` is true.  Identical
    (seed, stream_id) pairs replay identical trials.
    """
    if model.n_arms != mediators.n_arms:
        raise ValueError("model and mediator set disagree on the number of arms")
    if engine_cfg.prune_duplicates:
        mediators, _ = prune_duplicate_policies(mediators)
    stopping = stopping_cfg.resolve(model.n_arms)
    E, n_arms = mediators.n_mediators, mediators.n_arms
    fam = family_code(model.family)
    pi = np.ascontiguousarray(mediators.policies)
    pi_cdf = np.cumsum(pi, axis=1)

    istate = np.zeros(2, dtype=np.int64)
    N_e = np.zeros(E, dtype=np.int64)
    N_a = np.zeros(n_arms, dtype=np.int64)
    N_ea = np.zeros((E, n_arms), dtype=np.int64)
    reward_sums = np.zeros(n_arms)
    mu_hat = np.zeros(n_arms)
    cum_w = np.zeros(E)
    omega = np.full(E, 1.0 / E)
    pi_hat = np.full((E, n_arms), 1.0 / n_arms)
    inv_stats = np.array([np.inf, -np.inf])
    bpos = np.zeros(2, dtype=np.int64)

    gaussian = model.family is DistributionFamily.GAUSSIAN_UNIT_VARIANCE
    ugen = rng.substream(0)
    zgen = rng.substream(1)
    u_buf = ugen.random(3 * STEPS_PER_CHUNK)
    z_buf = zgen.standard_normal(STEPS_PER_CHUNK) if gaussian else np.zeros(4)

    stop_enabled = horizon is None
    cap = engine_cfg.trial_cap if horizon is None else horizon

    while True:
        status = K._trial_steps(
            fam,
            model.means,
            pi,
            pi_cdf,
            _MODE_CODE[engine_cfg.mode],
            engine_cfg.pin_policy_estimates,
            stopping.delta,
            stopping.beta_alpha,
            stopping.beta_c,
            engine_cfg.solver_budget,
            engine_cfg.warm_budget,
            engine_cfg.solver_tol,
            stop_enabled,
            cap,
            engine_cfg.check_tracking_bounds,
            istate,
            N_e,
            N_a,
            N_ea,
            reward_sums,
            mu_hat,
            cum_w,
            omega,
            pi_hat,
            inv_stats,
            u_buf,
            z_buf,
            bpos,
        )
        if status != K.STATUS_NEED_REFILL:
            break
        if bpos[0] + 3 > u_buf.size:
            u_buf = ugen.random(3 * STEPS_PER_CHUNK)
            bpos[0] = 0
        if gaussian and bpos[1] + 1 > z_buf.size:
            z_buf = zgen.standard_normal(STEPS_PER_CHUNK)
            bpos[1] = 0

    t = int(istate[0])
    stopped = status == K.STATUS_STOPPED
    aborted = status == K.STATUS_CAPPED and horizon is None
    recommended = int(np.argmax(mu_hat))
    record = RunRecord(
        tau=t,
        recommended_arm=recommended,
        correct=recommended == model.best_arm,
        seed=rng.seed,
        stream_id=rng.stream_id,
        stopped=stopped,
        aborted=aborted,
    )
    if not return_state:
        return record
    state = TrackingState(
        t=t,
        N_e=N_e,
        N_a=N_a,
        N_ea=N_ea,
        reward_sums=reward_sums,
        cum_weights=cum_w,
        mu_hat=mu_hat,
        pi_hat=(
            update_policy_estimates_from_counts(N_ea, N_e)
            if engine_cfg.mode is Mode.UNKNOWN_POLICIES
            else None
        ),
        floor_slack_min=float(inv_stats[0]) if engine_cfg.check_tracking_bounds else None,
        deviation_excess_max=float(inv_stats[1]) if engine_cfg.check_tracking_bounds else None,
    )
    return record, state


def update_policy_estimates_from_counts(N_ea: np.ndarray, N_e: np.ndarray) -> np.ndarray:
    E, n_arms = N_ea.shape
    out = np.empty((E, n_arms))
    for e in range(E):
        if N_e[e] > 0:
            out[e] = N_ea[e] / N_e[e]
        else:
            out[e] = 1.0 / n_arms
    return out
