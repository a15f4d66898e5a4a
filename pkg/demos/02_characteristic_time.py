"""Characteristic times and oracle weights.

The sample complexity of identifying the best arm is governed by a max-min
game: pick mediator-querying proportions, an adversary picks the hardest
alternative instance with a different best arm.  The game value is T*^-1;
kl(delta, 1-delta) * T* lower-bounds the expected stopping time of every
delta-correct strategy.
"""

import numpy as np

from mediator_bai import (
    BanditModel,
    MediatorSet,
    alt_infimum,
    compare_with_classical,
    dirac_mediators,
    g_value,
    lower_bound,
    solve_characteristic_time,
)

model = BanditModel("gaussian", [1.5, 1.0, 0.7, 0.5])
mediators = MediatorSet(
    [
        [0.1, 0.8, 0.1, 0.0],
        [0.0, 0.1, 0.8, 0.1],
        [0.0, 0.1, 0.1, 0.8],
        [0.2, 0.0, 0.4, 0.4],
    ]
)

# The inner infimum has a closed form: a minimum over suboptimal arms of a
# weighted two-point divergence between the best arm and that arm.
w = np.full(4, 0.25)
b = alt_infimum(model, w)
print("uniform arm proportions:")
print("  per-arm candidates:", np.round(b.per_arm_values, 6))
print("  hardest alternative swaps arm", b.argmin_arm, "-> value", b.value)

# Maximizing over achievable arm proportions gives the oracle weights.
sol = solve_characteristic_time(model, mediators)
print("\nwith the mediators above:")
print("  oracle mediator weights :", np.round(sol.weights, 4))
print("  induced arm proportions :", np.round(sol.induced_arm_proportions, 4))
print("  T*^-1 =", round(sol.value, 6), "  T* =", round(sol.characteristic_time, 2))
print("  solver gap certificate  :", sol.solver_gap)

# Mediators only restrict what proportions are playable, so the problem is
# at least as hard as classical best-arm identification on the same means.
comp = compare_with_classical(model, mediators)
print("\nclassical (direct arm access) T* =", round(1 / comp.t_star_inv_classical, 2))
print("mediator feedback          T* =", round(1 / comp.t_star_inv_mediators, 2))
print("strictly harder:", comp.strictly_harder)

sol_dirac = solve_characteristic_time(model, dirac_mediators(4))
print("\nsanity: solving on Dirac mediators recovers the classical value:",
      round(sol_dirac.value, 9), "=", round(comp.t_star_inv_classical, 9))
print("classical oracle arm weights:", np.round(sol_dirac.weights, 4))

# The mediator optimum leans on mediators 0 and 3 only; mixing all four rows
# cannot reproduce the classical oracle weights, hence the gap.
print("\ngame value at a few feasible mixes (never above the solved value):")
for om in ([1, 0, 0, 0], [0.25, 0.25, 0.25, 0.25], [0.5, 0, 0, 0.5]):
    om = np.array(om, dtype=float)
    print(f"  omega={om}: {g_value(model, om @ mediators.policies):.6f}")

print("\nsample-complexity lower bounds kl(d, 1-d) * T*:")
for delta in (0.4, 0.1, 0.01, 0.001):
    print(f"  delta={delta:<6}: {lower_bound(model, mediators, delta):8.2f}")
