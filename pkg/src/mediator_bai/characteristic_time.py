"""Characteristic times and oracle mediator weights.

The sample-complexity constant of a mediator-feedback instance is the value
of a max-min game: the learner picks querying proportions over mediators, an
adversary picks the easiest-to-confuse alternative instance with a different
best arm.  The inner infimum has a closed form as a minimum over suboptimal
arms of a weighted two-point divergence; the outer maximization is a concave
problem on the mediator simplex solved by entropic mirror ascent with a
pattern-search polish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from . import _kernels as K
from .bandits import BanditModel, DistributionFamily, MediatorSet, binary_kl, dirac_mediators

SIMPLEX_TOL = 1e-9

_FAMILY_CODE = {
    DistributionFamily.GAUSSIAN_UNIT_VARIANCE: K.GAUSSIAN,
    DistributionFamily.BERNOULLI: K.BERNOULLI,
}


def family_code(family: DistributionFamily) -> int:
    return _FAMILY_CODE[family]


def _check_simplex(w: np.ndarray, size: int, what: str) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (size,):
        raise ValueError(f"{what} must have shape ({size},), got {w.shape}")
    if np.any(w < -SIMPLEX_TOL) or abs(w.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"{what} must lie on the probability simplex")
    return np.maximum(w, 0.0)


@dataclass(frozen=True)
class AltInfimumBreakdown:
    """Candidate infimum value per suboptimal arm (inf at the best arm itself)."""

    per_arm_values: np.ndarray
    argmin_arm: int
    value: float


def alt_infimum(model: BanditModel, arm_weights: np.ndarray) -> AltInfimumBreakdown:
    """Infimum over alternative instances of the weighted divergence sum.

    For arm weights w the infimum over instances with a different best arm
    equals  min_{a != a*} (w[a*] + w[a]) * I_alpha(mu[a*], mu[a])  with
    alpha = w[a*] / (w[a*] + w[a]); the 0/0 case (both weights zero) counts
    as 0, the continuity limit.  Ties in the argmin go to the lowest index.
    """
    w = _check_simplex(arm_weights, model.n_arms, "arm_weights")
    per_arm = np.empty(model.n_arms)
    value, argmin = K._g_proportions(family_code(model.family), model.means, w, per_arm)
    return AltInfimumBreakdown(per_arm_values=per_arm, argmin_arm=int(argmin), value=float(value))


def g_value(model: BanditModel, arm_proportions: np.ndarray) -> float:
    """Value of the inner infimum at the given arm-pull proportions."""
    return alt_infimum(model, arm_proportions).value


def single_mediator_closed_form(model: BanditModel, policy: np.ndarray) -> float:
    """Single-mediator Gaussian value: min_a 0.5 * p1*pa/(p1+pa) * gap_a^2.

    A cross-check oracle for `g_value`; only defined for the unit-variance
    Gaussian family.
    """
    if model.family is not DistributionFamily.GAUSSIAN_UNIT_VARIANCE:
        raise ValueError("closed form only available for the unit-variance Gaussian family")
    p = _check_simplex(policy, model.n_arms, "policy")
    astar = model.best_arm
    best = np.inf
    for a in range(model.n_arms):
        if a == astar:
            continue
        s = p[astar] + p[a]
        if s <= 0.0:
            cand = 0.0
        else:
            gap = model.means[astar] - model.means[a]
            cand = 0.5 * p[astar] * p[a] / s * gap * gap
        best = min(best, cand)
    return float(best)


@dataclass(frozen=True)
class OracleSolution:
    """One maximizer of the mediator game plus its attained value.

    The maximizer set can be a face of the simplex (linearly dependent
    policies); equality of attained values, not of weight vectors, is the
    meaningful contract.  `solver_gap` is a local certificate: the best
    improvement a single pairwise move of size `tol` could still find.
    """

    weights: np.ndarray
    induced_arm_proportions: np.ndarray
    value: float
    solver_gap: float
    tol: float

    @property
    def converged(self) -> bool:
        return self.solver_gap <= self.tol

    @property
    def characteristic_time(self) -> float:
        return 1.0 / self.value


def solve_characteristic_time(
    model: BanditModel,
    mediators: MediatorSet,
    budget: int = 5000,
    tol: float = 1e-6,
) -> OracleSolution:
    """Maximize the inner infimum over mediator-querying proportions.

    Entropic mirror ascent from the uniform weights with step c/sqrt(k).
    (c set from the first supergradient), interleaved with pattern-search
    polish rounds; the best iterate is returned together with a perturbation
    certificate in `solver_gap`.  Assumption coverage plus a unique best arm
    guarantee a strictly positive value.
    """
    if model.n_arms != mediators.n_arms:
        raise ValueError("model and mediator set disagree on the number of arms")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    E = mediators.n_mediators
    fam = family_code(model.family)
    pi = np.ascontiguousarray(mediators.policies)
    omega = np.full(E, 1.0 / E)
    value = K._solve_omega(fam, model.means, pi, omega, budget, tol)
    alt = _arm_space_seed(fam, model, pi, budget, tol)
    if alt is not None:
        alt_omega, alt_value = alt
        if alt_value > value:
            omega, value = alt_omega, alt_value
    tl = np.empty(model.n_arms)
    per_arm = np.empty(model.n_arms)
    cand = np.empty(E)
    gap = K._polish_certificate(fam, model.means, pi, omega, tol, tl, per_arm, cand)
    return OracleSolution(
        weights=omega,
        induced_arm_proportions=omega @ pi,
        value=float(value),
        solver_gap=float(gap),
        tol=float(tol),
    )


def _arm_space_seed(fam: int, model: BanditModel, pi: np.ndarray, budget: int, tol: float):
    """Candidate weights realizing the unrestricted arm-space optimum.

    Solves the game over raw arm proportions, expresses that solution through
    the mediator rows by nonnegative least squares (with the sum-to-one
    constraint as an extra equation), and polishes the result.  Whenever the
    unrestricted optimum is representable (e.g. the rows contain every Dirac
    policy), this hits the global maximum of the restricted game exactly.
    """
    E, n_arms = pi.shape
    if E == 1 or budget < K.MIN_POLISH_BUDGET:
        return None
    identity = E == n_arms and np.array_equal(pi, np.eye(n_arms))
    if identity:
        return None
    w_star = np.full(n_arms, 1.0 / n_arms)
    K._solve_omega(fam, model.means, np.eye(n_arms), w_star, budget, tol)
    a_mat = np.vstack([pi.T, np.ones((1, E))])
    b_vec = np.append(w_star, 1.0)
    omega0, _ = nnls(a_mat, b_vec)
    total = omega0.sum()
    if total <= 0.0:
        return None
    omega0 = np.ascontiguousarray(omega0 / total)
    value0 = K._polish_start(fam, model.means, pi, omega0, max(budget // 10, 200), tol)
    return omega0, value0


def lower_bound(
    model: BanditModel,
    mediators: MediatorSet,
    delta: float,
    budget: int = 5000,
    tol: float = 1e-6,
) -> float:
    """Expected-sample-complexity lower bound kl(delta, 1-delta) * T*."""
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    sol = solve_characteristic_time(model, mediators, budget=budget, tol=tol)
    return binary_kl(delta, 1.0 - delta) / sol.value


@dataclass(frozen=True)
class ClassicalComparison:
    t_star_inv_mediators: float
    t_star_inv_classical: float
    strictly_harder: bool


def compare_with_classical(
    model: BanditModel,
    mediators: MediatorSet,
    budget: int = 5000,
    tol: float = 1e-6,
) -> ClassicalComparison:
    """Game values with the given mediators vs. direct (Dirac) arm access.

    Mixing mediator policies only restricts the achievable arm proportions,
    so the mediator value never exceeds the classical one; `strictly_harder`
    flags a gap beyond 10x the solver tolerance.
    """
    med = solve_characteristic_time(model, mediators, budget=budget, tol=tol)
    cla = solve_characteristic_time(model, dirac_mediators(model.n_arms), budget=budget, tol=tol)
    cla_value = cla.value
    # the mediator solution induces a feasible classical point; never report
    # the restricted game above the unrestricted one due to solver slack
    induced = g_value(model, med.induced_arm_proportions)
    if induced > cla_value:
        cla_value = induced
    return ClassicalComparison(
        t_star_inv_mediators=float(med.value),
        t_star_inv_classical=float(cla_value),
        strictly_harder=bool(cla_value - med.value > 10.0 * tol),
    )
