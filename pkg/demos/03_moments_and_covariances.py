"""Moment formulas: partition sums, exact identities, limit constants.

Mixed moments of interaction counts expand over partitions whose
blocks meet each factor at most once.  Constant integrands make the
Monte Carlo layer exact, which pins several Poisson identities to
machine precision; the same machinery feeds the standardized
covariance matrix and the scaling constants.
"""

from facetproc import (ModelParams, MomentSpec, asymptotic_covariance,
                       enumerate_partitions, i_k_integrals,
                       interaction_kernel, measure_kernel, mixed_moment,
                       scaling_limit_constants, unit_kernel)

for sizes in ((1, 1), (2, 2), (3, 2)):
    print(f"partitions of factor sizes {sizes}: "
          f"{len(enumerate_partitions(sizes))}")

p = ModelParams.special(2, (0.0, 0.0), a=3.0)
t = p.a * p.total_intensity

# exact Poisson identities (se comes back 0.0 for constant kernels)
mean_n, _ = mixed_moment(MomentSpec(factors=((1, unit_kernel),)), p)
fact2, _ = mixed_moment(
    MomentSpec(factors=((1, unit_kernel), (1, unit_kernel))), p)
print(f"\nE N           = {mean_n:.6f}   (aT = {t})")
print(f"E N(N-1)      = {fact2 - mean_n:.6f}   ((aT)^2 = {t * t})")

second, _ = mixed_moment(
    MomentSpec(factors=((1, measure_kernel), (1, measure_kernel))), p)
first, _ = mixed_moment(MomentSpec(factors=((1, measure_kernel),)), p)
print(f"Var G_1       = {second - first ** 2:.6f}   (aT(2b)^2 = {4 * t})")

pair_mean, _ = mixed_moment(
    MomentSpec(factors=((2, interaction_kernel(2)),)), p)
print(f"E G_2         = {pair_mean:.6f}   (a^2T^2/4 = {t * t / 4})")

# asymptotic covariance of the standardized vector (d=2: exact)
print("\nstandardized covariance targets")
for i, j in ((1, 1), (1, 2), (2, 2)):
    val, se = asymptotic_covariance(i, j, ModelParams.special(2, (0.0, 0.0)))
    print(f"  C_{i}{j} = {val:.4f} (se {se:.1e})")

# geometric integrals and the dilation limit constants
print("\nscaling constants, d=3")
for k in (1, 2):
    ik, ipk = i_k_integrals(3, k)
    lim = scaling_limit_constants(3, k, ik, ipk)
    print(f"  k={k}: I_k = {ik:.6f}, I'_k = {ipk:.6f}, "
          f"mean {lim.mean:.6f}, variance {lim.variance:.6f}")
