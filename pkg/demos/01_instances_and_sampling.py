"""Walk through the basic objects: bandit models, mediator sets, divergences,
and the seeded sampling loop.

The learner never pulls arms directly.  It queries a mediator; the mediator
draws an arm from its own fixed policy, pulls it, and reports back both the
arm and the reward.
"""

import numpy as np

from mediator_bai import (
    BanditModel,
    MediatorSet,
    RngStream,
    binary_kl,
    dirac_mediators,
    generalized_js,
    kl_divergence,
    sample_step,
)

# Four Gaussian arms; arm 0 is best.
model = BanditModel("gaussian", [1.5, 1.0, 0.7, 0.5])
print("model:", model.family.value, "means", model.means)
print("best arm:", model.best_arm, " gaps:", model.gaps())

# Four mediators with overlapping supports.  Rows are arm policies.
mediators = MediatorSet(
    [
        [0.1, 0.8, 0.1, 0.0],
        [0.0, 0.1, 0.8, 0.1],
        [0.0, 0.1, 0.1, 0.8],
        [0.2, 0.0, 0.4, 0.4],
    ]
)
print("\nmediators (E x K):")
print(mediators.policies)
print("querying them uniformly plays arms with proportions",
      mediators.induced_arm_proportions(np.full(4, 0.25)))

# Direct arm access is the special case of one Dirac mediator per arm.
print("\ndirac_mediators(4) is the identity matrix:")
print(dirac_mediators(4).policies)

# The divergences everything else is built from.
print("\nkl gaussian d(5, 1)      =", kl_divergence("gaussian", 5.0, 1.0))
print("kl bernoulli d(0.1, 0.9) =", kl_divergence("bernoulli", 0.1, 0.9))
print("binary kl kl(0.1, 0.9)   =", binary_kl(0.1, 0.9))
print("jensen-shannon I_0.5(2,0) =", generalized_js("gaussian", 0.5, 2.0, 0.0))

# One seeded interaction round at a time.  Identical (seed, stream) pairs
# replay identical histories on any machine.
rng = RngStream(seed=42, stream_id=0)
print("\nfive rounds with mediator 3:")
for t in range(5):
    s = sample_step(model, mediators, 3, rng)
    print(f"  t={t}: mediator {s.mediator} pulled arm {s.arm}, reward {s.reward:+.3f}")

rng2 = RngStream(seed=42, stream_id=0)
replay = [sample_step(model, mediators, 3, rng2).reward for _ in range(5)]
print("replay with the same stream give the same rewards:", np.round(replay, 3))
