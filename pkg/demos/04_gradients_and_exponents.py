"""Derivative bounds, a Li-Yau constant, and exponent bookkeeping."""

from hypkernel.bounds_verifier import STANDARD_GRID
from hypkernel.gradient_riesz import (GradientKind, gradient_bound_scan, gradient_norm_bound,
                                      kunze_stein_q_range, li_yau_check, riesz_range)

for kind in GradientKind:
    rep = gradient_bound_scan(2, kind, STANDARD_GRID)
    print(f"{kind.value:>16}: smallest constant {rep.minimal_constant:.6g} at {rep.arg_max}")

ly = li_yau_check(2, 1.5, STANDARD_GRID)
print(f"Li-Yau constant (alpha = 3/2): {ly.minimal_constant:.6f}, refined {ly.refined_constant:.6f}")

for lam in (1, 2):
    rr = riesz_range(4, lam)
    print(f"Riesz exponents on H^5, lambda = {lam}: ({rr.p_lo}, {rr.p_hi})")
ks = kunze_stein_q_range(4)
print(f"q range for p0 = 4: [{ks.q_lo}, {ks.q_hi})")

for q in (1.0, 1.2, 4 / 3):
    est = gradient_norm_bound(2, q)
    print(f"q = {q:.4f}: fitted decay {est.alpha_fit:.4f} vs n^2(q-1)/q^2 = {est.rate:.4f}")
