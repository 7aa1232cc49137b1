"""Exact heat kernels in odd dimensions, built by repeated descent.

Prints the rational coefficient table of the heat kernel on H^3, H^5 and
H^7, then evaluates each far into the Gaussian tail, where the values
only exist as logarithms.
"""

from hypkernel import heat_kernel
from hypkernel.kernel_algebra import heat_closed_form

for n in (2, 4, 6):
    form = heat_closed_form(n)
    print(f"H^{n + 1}: exp(-{form.gap} t - r^2/4t) pi^({form.pi_power}) x")
    for m in form.terms:
        print(f"    {str(m.coeff):>8}  r^{m.r_pow} t^(-{m.t_half_pow}/2) "
              f"cosh^{m.cosh_pow} / sinh^{m.sinh_pow}")

print("\nlog H far out (r = 300, t = 0.5):")
for n in (2, 4, 6):
    lv = heat_kernel(n, 300.0, 0.5)
    print(f"    n = {n}: log H = {float(lv.log_magnitude):.6f}")
