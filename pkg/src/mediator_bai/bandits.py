"""Bandit instances, mediator policy sets, divergences, and seeded sampling.

Everything downstream (characteristic times, the track-and-stop engine, the
experiment harness) works in terms of the types defined here.  A bandit model
is a vector of means from a one-parameter family (unit-variance Gaussian or
Bernoulli); a mediator set is a row-stochastic matrix whose row e is the arm
policy of mediator e.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-9


class DistributionFamily(enum.Enum):
    GAUSSIAN_UNIT_VARIANCE = "gaussian"
    BERNOULLI = "bernoulli"


def _as_family(family) -> DistributionFamily:
    if isinstance(family, DistributionFamily):
        return family
    return DistributionFamily(str(family).lower())


def _check_mean(family: DistributionFamily, x: float, name: str = "mean") -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    if family is DistributionFamily.BERNOULLI and not 0.0 < x < 1.0:
        raise ValueError(f"Bernoulli {name} must lie in the open interval (0, 1), got {x}")
    return x


def kl_divergence(family, p: float, q: float) -> float:
    """KL divergence d(p, q) between two family members given by their means.

    Gaussian with unit variance: (p - q)^2 / 2.  Bernoulli: the usual binary
    relative entropy.  Nonnegative, zero iff p == q.
    """
    family = _as_family(family)
    p = _check_mean(family, p, "p")
    q = _check_mean(family, q, "q")
    if family is DistributionFamily.GAUSSIAN_UNIT_VARIANCE:
        return 0.5 * (p - q) ** 2
    return p * math.log(p / q) + (1.0 - p) * math.log((1.0 - p) / (1.0 - q))


def binary_kl(x: float, y: float) -> float:
    """Bernoulli relative entropy kl(x, y) for x, y strictly inside (0, 1).

    kl(delta, 1 - delta) is the constant appearing in sample-complexity
    lower bounds.
    """
    x, y = float(x), float(y)
    for name, v in (("x", x), ("y", y)):
        if not 0.0 < v < 1.0:
            raise ValueError(f"binary_kl: {name} must be in (0, 1), got {v}")
    return x * math.log(x / y) + (1.0 - x) * math.log((1.0 - x) / (1.0 - y))


def generalized_js(family, alpha: float, mu1: float, mu2: float) -> float:
    """Generalized Jensen-Shannon divergence I_alpha(mu1, mu2).

    I_alpha = alpha * d(mu1, m) + (1 - alpha) * d(mu2, m) with the mixture
    mean m = alpha * mu1 + (1 - alpha) * mu2.  Vanishes iff mu1 == mu2 or
    alpha is 0 or 1.
    """
    family = _as_family(family)
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    mu1 = _check_mean(family, mu1, "mu1")
    mu2 = _check_mean(family, mu2, "mu2")
    if alpha == 0.0 or alpha == 1.0:
        return 0.0
    m = alpha * mu1 + (1.0 - alpha) * mu2
    return alpha * kl_divergence(family, mu1, m) + (1.0 - alpha) * kl_divergence(family, mu2, m)


@dataclass(frozen=True)
class BanditModel:
    """K-armed bandit given by a distribution family and its mean vector."""

    family: DistributionFamily
    means: np.ndarray

    def __post_init__(self):
        family = _as_family(self.family)
        means = np.asarray(self.means, dtype=np.float64).copy()
        means.setflags(write=False)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "means", means)
        if means.ndim != 1 or means.size < 2:
            raise ValueError("a bandit model needs a 1-D mean vector with K >= 2 arms")
        for x in means:
            _check_mean(family, x)
        top = means.max()
        if int((means == top).sum()) != 1:
            raise ValueError("the optimal arm must be unique (tied maximal means)")

    @property
    def n_arms(self) -> int:
        return self.means.size

    @property
    def best_arm(self) -> int:
        return int(np.argmax(self.means))

    def gaps(self) -> np.ndarray:
        """Suboptimality gaps max(means) - means (zero at the best arm)."""
        return self.means.max() - self.means


@dataclass(frozen=True)
class MediatorSet:
    """E mediator policies over K arms, stored as an E x K row-stochastic matrix.

    Every row must sum to one and every arm must be reachable through at least
    one mediator (action covering); matrices violating either are rejected
    outright rather than renormalized.
    """

    policies: np.ndarray

    def __post_init__(self):
        pol = np.asarray(self.policies, dtype=np.float64).copy()
        pol.setflags(write=False)
        object.__setattr__(self, "policies", pol)
        if pol.ndim != 2:
            raise ValueError("mediator policies must form a 2-D (E x K) matrix")
        if np.any(~np.isfinite(pol)) or np.any(pol < 0.0) or np.any(pol > 1.0):
            raise ValueError("policy entries must be probabilities in [0, 1]")
        sums = pol.sum(axis=1)
        bad = np.where(np.abs(sums - 1.0) > ROW_SUM_TOL)[0]
        if bad.size:
            raise ValueError(
                f"policy row {bad[0]} sums to {sums[bad[0]]:.12g}, not 1 (tolerance {ROW_SUM_TOL:g})"
            )
        covered = (pol > 0.0).any(axis=0)
        if not covered.all():
            uncovered = int(np.argmin(covered))
            raise ValueError(
                f"action covering violated: arm {uncovered} has zero probability under every mediator"
            )

    @property
    def n_mediators(self) -> int:
        return self.policies.shape[0]

    @property
    def n_arms(self) -> int:
        return self.policies.shape[1]

    def induced_arm_proportions(self, weights: np.ndarray) -> np.ndarray:
        """Arm-pull distribution obtained by mixing the rows with `weights`."""
        weights = np.asarray(weights, dtype=np.float64)
        return weights @ self.policies


def dirac_mediators(n_arms: int) -> MediatorSet:
    """One Dirac mediator per arm (the identity matrix), recovering direct arm access."""
    if n_arms < 2:
        raise ValueError("need at least 2 arms")
    return MediatorSet(np.eye(n_arms))


@dataclass(frozen=True)
class MediatorSample:
    """One interaction round: which mediator was queried, the arm it pulled, the reward."""

    mediator: int
    arm: int
    reward: float


@dataclass
class RngStream:
    """Counter-based random stream addressed by (seed, stream_id).

    Identical (seed, stream_id) pairs reproduce identical draws on any host
    and under any parallel schedule; distinct stream ids are statistically
    independent.  The engine derives sub-streams for separate purposes via
    `substream`.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    def generator(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = self._make()
        return self._gen

    def _make(self, *subkey: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, *subkey))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, *subkey: int) -> np.random.Generator:
        """Fresh generator keyed by (seed, stream_id, *subkey); independent of `generator()`."""
        return self._make(*subkey)


def sample_step(model: BanditModel, mediators: MediatorSet, e: int, rng: RngStream) -> MediatorSample:
    """Query mediator e once: it draws an arm from its policy, then a reward from that arm."""
    if model.n_arms != mediators.n_arms:
        raise ValueError("model and mediator set disagree on the number of arms")
    if not 0 <= e < mediators.n_mediators:
        raise IndexError(f"mediator index {e} out of range [0, {mediators.n_mediators})")
    gen = rng.generator()
    row = mediators.policies[e]
    cdf = np.cumsum(row)
    arm = int(np.searchsorted(cdf, gen.random(), side="right"))
    if arm >= model.n_arms:  # guard against cdf rounding at 1.0
        arm = model.n_arms - 1
    mu = model.means[arm]
    if model.family is DistributionFamily.GAUSSIAN_UNIT_VARIANCE:
        reward = mu + gen.standard_normal()
    else:
        reward = 1.0 if gen.random() < mu else 0.0
    return MediatorSample(mediator=e, arm=arm, reward=float(reward))
