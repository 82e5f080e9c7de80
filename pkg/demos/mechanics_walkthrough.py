"""Walk through the core objects on a small hand-checkable market.

Three agents, three items.  Agent values are unit-range: every row has a
best item worth 1 and a worst item worth 0.
"""

import itertools

import numpy as np

from rpmatch import (
    max_weight_matching,
    random_priority_exact,
    serial_dictatorship,
    social_welfare,
    validate_unit_range,
)

profile = validate_unit_range(
    [
        [1.0, 0.6, 0.0],  # agent 0: wants item 0, tolerates item 1
        [1.0, 0.2, 0.0],  # agent 1: wants item 0
        [0.5, 1.0, 0.0],  # agent 2: wants item 1
    ]
)
print("valuation matrix:")
print(profile.values)

print("\nserial dictatorship, one run per ordering:")
for order in itertools.permutations(range(3)):
    m = serial_dictatorship(profile, order)
    print(f"  order {order} -> items {m.assignment.tolist()}  welfare {m.welfare(profile):.1f}")

# random priority averages those six runs; agents 0 and 1 race for item 0
alloc, sw_rp = random_priority_exact(profile)
print("\nexact random-priority allocation (rows = agents):")
print(alloc.probs)
print(f"expected welfare: {sw_rp:.4f}  (= mean of the six welfares above)")
print(f"cross-check via allocation: {social_welfare(profile, alloc):.4f}")

matching, sw_opt = max_weight_matching(profile)
print(f"\noptimal matching: items {matching.assignment.tolist()}  welfare {sw_opt:.1f}")
print(f"per-instance approximation ratio: {sw_opt / sw_rp:.4f}")

print("\nrow/column sums of the allocation (doubly stochastic):")
print(alloc.probs.sum(axis=1), alloc.probs.sum(axis=0))

print("\nagent 0 sorted by value, partial allocation sums vs uniform lottery:")
order = np.argsort(-profile.values[0])
partial = np.cumsum(alloc.probs[0][order])
for k, (item, ps) in enumerate(zip(order, partial), start=1):
    print(f"  top-{k} items: {ps:.3f} >= {k}/3 = {k / 3:.3f}")
