"""Numba-compiled numerical core shared by the solver and the trial engine.

The public modules wrap these functions with validation and dataclasses; the
trial loop calls them directly so a full Monte-Carlo run stays in compiled
code.  Families are encoded as integers (0 = unit-variance Gaussian,
1 = Bernoulli) and mean vectors here may sit on the closed interval [0, 1]
for Bernoulli: empirical means do, and the x*log(x) -> 0 convention keeps
every quantity finite as long as the mixture mean stays interior.
"""

import math

import numpy as np
from numba import njit

GAUSSIAN = 0
BERNOULLI = 1

MODE_KNOWN = 0
MODE_UNKNOWN = 1
MODE_UNIFORM = 2

STATUS_NEED_REFILL = 0
STATUS_STOPPED = 1
STATUS_CAPPED = 2

# minimum full-solve budget below which the polish stages are skipped and a
# single gradient pass runs; keeps tiny budgets honestly unconverged
MIN_POLISH_BUDGET = 100


@njit(cache=True, nogil=True, inline="always")
def _kl(family, p, q):
    if family == GAUSSIAN:
        d = p - q
        return 0.5 * d * d
    v = 0.0
    if p > 0.0:
        v += p * math.log(p / q)
    if p < 1.0:
        v += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return v


@njit(cache=True, nogil=True)
def _g_proportions(family, means, w, per_arm):
    """min over a != a* of (w[a*]+w[a]) * I_alpha(means[a*], means[a]).

    Fills per_arm with the candidate values (inf at a*).  Returns
    (value, argmin_arm); a tied empirical best arm yields (0.0, -1) since the
    alternative set then touches the instance itself.
    """
    K = means.size
    astar = 0
    for a in range(1, K):
        if means[a] > means[astar]:
            astar = a
    for a in range(K):
        per_arm[a] = np.inf
    for a in range(K):
        if a != astar and means[a] == means[astar]:
            return 0.0, -1
    best = np.inf
    barg = -1
    for a in range(K):
        if a == astar:
            continue
        s = w[astar] + w[a]
        if s <= 0.0:
            cand = 0.0
        else:
            alpha = w[astar] / s
            m = alpha * means[astar] + (1.0 - alpha) * means[a]
            cand = 0.0
            if alpha > 0.0:
                cand += alpha * _kl(family, means[astar], m)
            if alpha < 1.0:
                cand += (1.0 - alpha) * _kl(family, means[a], m)
            cand *= s
        per_arm[a] = cand
        if cand < best:
            best = cand
            barg = a
    return best, barg


@njit(cache=True, nogil=True)
def _eval_omega(family, means, pi, omega, tl, per_arm):
    """Objective of the mediator game at weights `omega` (arm mix in `tl`)."""
    E, K = pi.shape
    for a in range(K):
        acc = 0.0
        for e in range(E):
            acc += omega[e] * pi[e, a]
        tl[a] = acc
    v, _ = _g_proportions(family, means, tl, per_arm)
    return v


@njit(cache=True, nogil=True)
def _supergrad_omega(family, means, pi, omega, tl, per_arm, grad):
    """Value and one supergradient of the concave objective at `omega`.

    The objective is a minimum of concave terms; gradients of all terms
    within 1e-12 of the active minimum are averaged.
    """
    E, K = pi.shape
    for a in range(K):
        acc = 0.0
        for e in range(E):
            acc += omega[e] * pi[e, a]
        tl[a] = acc
    value, argmin = _g_proportions(family, means, tl, per_arm)
    for e in range(E):
        grad[e] = 0.0
    if argmin < 0:
        return value
    astar = 0
    for a in range(1, K):
        if means[a] > means[astar]:
            astar = a
    nactive = 0
    for a in range(K):
        if a == astar:
            continue
        if per_arm[a] <= value + 1e-12:
            s = tl[astar] + tl[a]
            if s <= 0.0:
                continue
            alpha = tl[astar] / s
            m = alpha * means[astar] + (1.0 - alpha) * means[a]
            if family == BERNOULLI:
                if m < 1e-12:
                    m = 1e-12
                elif m > 1.0 - 1e-12:
                    m = 1.0 - 1e-12
            da = _kl(family, means[astar], m)
            db = _kl(family, means[a], m)
            for e in range(E):
                grad[e] += pi[e, astar] * da + pi[e, a] * db
            nactive += 1
    if nactive > 1:
        for e in range(E):
            grad[e] /= nactive
    return value


@njit(cache=True, nogil=True)
def _mirror_ascent_from(family, means, pi, omega, iters, k0, c_in, tl, per_arm, grad, best):
    """Entropic mirror ascent continuing a global step schedule c/sqrt(k0+k).

    `omega` is both the warm start and, on return, the best iterate seen
    (the warm start included).  c_in <= 0 means "set c from the first
    supergradient".  Returns (best value, c) so callers can resume the
    schedule across polish rounds.
    """
    E = omega.size
    best_v = _eval_omega(family, means, pi, omega, tl, per_arm)
    for e in range(E):
        best[e] = omega[e]
    c = c_in
    for k in range(1, iters + 1):
        v = _supergrad_omega(family, means, pi, omega, tl, per_arm, grad)
        if v > best_v:
            best_v = v
            for e in range(E):
                best[e] = omega[e]
        gmax = 0.0
        for e in range(E):
            a = abs(grad[e])
            if a > gmax:
                gmax = a
        if gmax == 0.0 or not math.isfinite(gmax):
            break
        if c <= 0.0:
            c = 1.0 / gmax
        eta = c / math.sqrt(k0 + k)
        hi = -np.inf
        for e in range(E):
            grad[e] *= eta
            if grad[e] > hi:
                hi = grad[e]
        z = 0.0
        for e in range(E):
            # clamp the exponent so a near-stationary warm start (tiny first
            # gradient, huge c) cannot underflow every coordinate to zero
            x = grad[e] - hi
            if x < -60.0:
                x = -60.0
            omega[e] *= math.exp(x)
            z += omega[e]
        for e in range(E):
            omega[e] /= z
    for e in range(E):
        omega[e] = best[e]
    return best_v, c


@njit(cache=True, nogil=True)
def _mirror_ascent(family, means, pi, omega, iters, tl, per_arm, grad, best):
    """One fresh-schedule mirror-ascent pass (step c/sqrt(k)); returns the best value."""
    v, _ = _mirror_ascent_from(family, means, pi, omega, iters, 0, -1.0, tl, per_arm, grad, best)
    return v


@njit(cache=True, nogil=True)
def _pattern_polish(family, means, pi, omega, value, h0, hmin, tl, per_arm, cand):
    """Greedy pairwise mass moves with a halving step; local max refinement."""
    E = omega.size
    h = h0
    v = value
    while h >= hmin:
        improved = False
        for i in range(E):
            for j in range(E):
                if i == j or omega[j] < h:
                    continue
                for e in range(E):
                    cand[e] = omega[e]
                cand[i] += h
                cand[j] -= h
                cv = _eval_omega(family, means, pi, cand, tl, per_arm)
                if cv > v:
                    v = cv
                    for e in range(E):
                        omega[e] = cand[e]
                    improved = True
        if not improved:
            h *= 0.5
    return v


@njit(cache=True, nogil=True)
def _polish_certificate(family, means, pi, omega, tol, tl, per_arm, cand):
    """Best improvement reachable by a single pairwise move of size `tol`."""
    E = omega.size
    v0 = _eval_omega(family, means, pi, omega, tl, per_arm)
    best = v0
    for i in range(E):
        for j in range(E):
            if i == j or omega[j] < tol:
                continue
            for e in range(E):
                cand[e] = omega[e]
            cand[i] += tol
            cand[j] -= tol
            cv = _eval_omega(family, means, pi, cand, tl, per_arm)
            if cv > best:
                best = cv
    gap = best - v0
    if gap < 0.0:
        gap = 0.0
    return gap


@njit(cache=True, nogil=True)
def _solve_omega(family, means, pi, omega, budget, tol):
    """Full solve: mirror ascent on one continuing step schedule, interleaved
    with pattern-polish rounds.

    Mutates `omega` (uniform or warm start) into the solution; returns the
    attained value.  Budgets below MIN_POLISH_BUDGET run a bare gradient pass.
    """
    E, K = pi.shape
    tl = np.empty(K)
    per_arm = np.empty(K)
    grad = np.empty(E)
    scratch = np.empty(E)
    if E == 1:
        omega[0] = 1.0
        return _eval_omega(family, means, pi, omega, tl, per_arm)
    if budget < MIN_POLISH_BUDGET:
        return _mirror_ascent(family, means, pi, omega, budget, tl, per_arm, grad, scratch)
    hmin = tol * 1e-4
    if hmin < 1e-12:
        hmin = 1e-12
    rounds = 6
    per_round = budget // rounds
    if per_round < 50:
        per_round = 50
    v = -np.inf
    k0 = 0
    c = -1.0
    for r in range(rounds):
        v, c = _mirror_ascent_from(
            family, means, pi, omega, per_round, k0, c, tl, per_arm, grad, scratch
        )
        k0 += per_round
        h0 = 2.0 ** (-2 - r)
        v = _pattern_polish(family, means, pi, omega, v, h0, hmin, tl, per_arm, scratch)
    return v


@njit(cache=True, nogil=True)
def _polish_start(family, means, pi, omega, iters, tol):
    """Polish an externally supplied candidate in place; returns its value."""
    E, K = pi.shape
    tl = np.empty(K)
    per_arm = np.empty(K)
    grad = np.empty(E)
    scratch = np.empty(E)
    hmin = tol * 1e-4
    if hmin < 1e-12:
        hmin = 1e-12
    v = _eval_omega(family, means, pi, omega, tl, per_arm)
    v = _pattern_polish(family, means, pi, omega, v, 0.25, hmin, tl, per_arm, scratch)
    v = _mirror_ascent(family, means, pi, omega, iters, tl, per_arm, grad, scratch)
    v = _pattern_polish(family, means, pi, omega, v, 2.0 ** (-8), hmin, tl, per_arm, scratch)
    return v


@njit(cache=True, nogil=True)
def _project_floor(omega, eps, out):
    """L-inf projection onto the simplex with coordinates >= eps.

    Deficient coordinates rise exactly to the floor; the added mass is removed
    from the remaining coordinates by waterfilling (equal removal capped at
    each coordinate's slack), which minimizes the largest displacement.
    """
    E = omega.size
    deficit = 0.0
    for i in range(E):
        v = omega[i]
        if v < eps:
            deficit += eps - v
            out[i] = eps
        else:
            out[i] = v
    if deficit <= 0.0:
        return
    slack = np.empty(E)
    ns = 0
    for i in range(E):
        s = out[i] - eps
        if s > 0.0:
            slack[ns] = s
            ns += 1
    if ns == 0:  # unreachable for eps <= 1/E, kept as a guard
        return
    sl = np.sort(slack[:ns])
    cum = 0.0
    theta = sl[ns - 1]
    for i in range(ns):
        remaining = ns - i
        if cum + remaining * sl[i] >= deficit:
            theta = (deficit - cum) / remaining
            break
        cum += sl[i]
    for i in range(E):
        s = out[i] - eps
        if s > 0.0:
            r = theta if theta < s else s
            out[i] -= r


@njit(cache=True, nogil=True)
def _trial_steps(
    family,
    mu_env,
    pi_env,
    pi_cdf,
    mode,
    pin_policies,
    delta,
    beta_alpha,
    beta_c,
    full_budget,
    warm_budget,
    tol,
    stop_enabled,
    cap,
    check_bounds,
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
):
    """Advance one trial until it stops, hits the cap, or drains its buffers.

    istate = [t, solved_once]; bpos = [uniform position, normal position];
    inv_stats = [min slack of the sqrt floor bound, max excess of the
    tracking deviation bound], updated each step when check_bounds is set.
    All count/state arrays are mutated in place so the caller can resume
    after refilling the random buffers.
    """
    E, K = pi_env.shape
    tl = np.empty(K)
    per_arm = np.empty(K)
    grad = np.empty(E)
    scratch = np.empty(E)
    om_bar = np.empty(E)
    w_arm = np.empty(K)
    un = u_buf.size
    zn = z_buf.size
    log_bc = math.log(beta_c)
    log_delta = math.log(delta)

    while True:
        t = istate[0]
        if t >= cap:
            return STATUS_CAPPED
        upos = bpos[0]
        zpos = bpos[1]
        if upos + 3 > un or zpos + 1 > zn:
            return STATUS_NEED_REFILL

        covered = True
        for a in range(K):
            if N_a[a] == 0:
                covered = False
                break

        if mode == MODE_UNIFORM:
            u = u_buf[upos]
            upos += 1
            e = int(u * E)
            if e >= E:
                e = E - 1
            for i in range(E):
                cum_w[i] += 1.0 / E
        else:
            if covered:
                if mode == MODE_UNKNOWN and not pin_policies:
                    for ee in range(E):
                        ne = N_e[ee]
                        if ne > 0:
                            for a in range(K):
                                pi_hat[ee, a] = N_ea[ee, a] / ne
                        else:
                            for a in range(K):
                                pi_hat[ee, a] = 1.0 / K
                    P = pi_hat
                else:
                    P = pi_env
                if istate[1] == 0:
                    _solve_omega(family, mu_hat, P, omega, full_budget, tol)
                    istate[1] = 1
                else:
                    # keep the warm start interior so the multiplicative update
                    # can regrow coordinates the polish parked at exactly zero
                    lo = 1e-12 / E
                    zs = 0.0
                    for i in range(E):
                        if omega[i] < lo:
                            omega[i] = lo
                        zs += omega[i]
                    for i in range(E):
                        omega[i] /= zs
                    _mirror_ascent(family, mu_hat, P, omega, warm_budget, tl, per_arm, grad, scratch)
            else:
                for i in range(E):
                    omega[i] = 1.0 / E
            eps = 0.5 / math.sqrt(E * E + t)
            _project_floor(omega, eps, om_bar)
            for i in range(E):
                cum_w[i] += om_bar[i]
            e = 0
            bestd = cum_w[0] - N_e[0]
            for i in range(1, E):
                d = cum_w[i] - N_e[i]
                if d > bestd:
                    bestd = d
                    e = i
        # arm drawn from the chosen mediator's policy
        u = u_buf[upos]
        upos += 1
        a = K - 1
        for j in range(K):
            if u < pi_cdf[e, j]:
                a = j
                break
        # reward from the pulled arm
        if family == GAUSSIAN:
            x = mu_env[a] + z_buf[zpos]
            zpos += 1
        else:
            ur = u_buf[upos]
            upos += 1
            x = 1.0 if ur < mu_env[a] else 0.0
        bpos[0] = upos
        bpos[1] = zpos

        N_e[e] += 1
        N_a[a] += 1
        N_ea[e, a] += 1
        reward_sums[a] += x
        mu_hat[a] = reward_sums[a] / N_a[a]
        t += 1
        istate[0] = t

        if check_bounds and mode != MODE_UNIFORM:
            floor = math.sqrt(t + E * E) - 2.0 * E
            lim = E * (1.0 + math.sqrt(t))
            dev = 0.0
            for i in range(E):
                slack = N_e[i] - floor
                if slack < inv_stats[0]:
                    inv_stats[0] = slack
                dv = abs(cum_w[i] - N_e[i])
                if dv > dev:
                    dev = dv
            if dev - lim > inv_stats[1]:
                inv_stats[1] = dev - lim

        if stop_enabled:
            covered = True
            for a0 in range(K):
                if N_a[a0] == 0:
                    covered = False
                    break
            if covered:
                for a0 in range(K):
                    w_arm[a0] = N_a[a0] / t
                gval, _ = _g_proportions(family, mu_hat, w_arm, per_arm)
                z_stat = t * gval
                threshold = log_bc + beta_alpha * math.log(t) - log_delta
                if z_stat >= threshold:
                    return STATUS_STOPPED
