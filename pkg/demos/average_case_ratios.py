"""Average-case behavior of random priority under i.i.d. uniform values.

Estimates the mean per-instance OPT/RP ratio at several sizes, contrasts it
with the ratio-of-expectations metric computed from the same instances, and
checks the analytic welfare bounds that explain why the ratio stays small.
"""

import numpy as np

from rpmatch import (
    RpMode,
    average_ratio_bound,
    default_tail_exponent,
    estimate_average_ratio,
    estimate_bayesian_ratio,
    half_welfare_check,
    random_priority_sampled,
    rp_exact_welfare,
    sample_uniform_profile,
    substream,
    welfare_tail_bound,
)

SEED = 11
INSTANCES = 2000

print(f"ceiling on the expected ratio: 1 + e = {average_ratio_bound():.5f}\n")

print("size   mean ratio   ratio of means   rp mode")
for n, mode_text in [(4, "exact"), (8, "exact"), (16, "sampled:1000"), (32, "sampled:1000")]:
    mode = RpMode.parse(mode_text)
    avg = estimate_average_ratio(n, INSTANCES, mode, seed=SEED)
    bay = estimate_bayesian_ratio(n, INSTANCES, mode, seed=SEED)
    print(
        f"n={n:<4} {avg.mean:.4f} ± {avg.stderr:.4f}   "
        f"{bay.ratio:.4f}           {mode}"
    )
print("\nBoth metrics sit far below the ceiling; the mean-of-ratios metric is")
print("the stricter one because it compares the mechanisms instance by instance.")

print("\n--- why: welfare concentrates ---")
n = 16
welfare = np.empty(3000)
for k in range(welfare.size):
    p = sample_uniform_profile(n, substream(SEED, "demo-welfare", k))
    welfare[k], _ = random_priority_sampled(p, 500, substream(SEED, "demo-welfare-rp", k))
half = half_welfare_check(welfare, n)
print(f"P(RP welfare >= n/2) = {half.empirical_prob:.4f}  (guaranteed >= 1/2)")

c = default_tail_exponent(n)
tail = welfare_tail_bound(n, c)
emp = float((welfare <= n**c).mean())
print(
    f"P(RP welfare <= n^{c:.3f} = {n**c:.2f}) = {emp:.4f}, "
    f"analytic bound {tail.value:.4f} (valid={tail.valid})"
)

print("\nexact RP welfare always clears the mean-value floor:")
p = sample_uniform_profile(8, substream(SEED, "demo-floor", 0))
print(f"  welfare {rp_exact_welfare(p):.4f} >= sum(a)/n = {p.values.sum() / 8:.4f}")
