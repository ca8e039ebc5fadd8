"""
Finite-size penalties
=====================

With N = 1e8 signals half are sacrificed for estimation. The channel
parameters are then only known up to confidence intervals, and privacy
amplification costs Delta(n) bits.
"""

import math

from twoway_cvqkd import finite_size as fs

budget = fs.EstimationBudget.split(10 ** 8)
print(budget, "key signals n =", budget.n)

# The two-sided Gaussian quantile behind both confidence bounds.
for eps in (0.0455, 1e-3, 1e-10):
    print(f"eps = {eps:g}: z = {fs.gaussian_tail_quantile(eps):.6f}")

# Worst-case channel at 25 km of fibre (0.2 dB/km) with excess noise 0.1.
t = 10 ** (-0.2 * 25 / 10)
wc = fs.worst_case_channel(t, 0.1, v_mod=19.0, m=budget.m, eps_pe=budget.eps_pe)
print(f"T = {t:.6f} -> T_min = {wc.transmittance_min:.6f}")
print(f"sigma^2 = {1 + 0.1 * t:.6f} -> sigma^2_max = {wc.sigma2_max:.6f}")

# The penalty shrinks as 1/sqrt(m).
est = fs.ChannelEstimate(math.sqrt(t), 1 + 0.1 * t, 19.0)
for m in (1e6, 4e6, 1.6e7):
    print(f"m = {m:.1e}: t_hat - t_min = {est.t_hat - fs.t_min_bound(est, m, 1e-10):.3e}")

print(f"Delta(n = 5e7) = {fs.delta_n(5e7):.6e} bits")
print("K for I_AB = 1, S_BE = 0.5:", fs.finite_key_rate(1.0, 0.5, budget, 0.95))

# Do the bounds really hold with the promised probability? Simulate the
# estimation step many times and count.
cov = fs.monte_carlo_coverage(math.sqrt(0.5), 1.05, 19.0, m=10_000, eps_pe=0.05, trials=4000, seed=0)
print(f"empirical coverage {cov:.4f} for a nominal 0.95")
