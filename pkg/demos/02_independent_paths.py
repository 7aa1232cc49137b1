"""Three independent routes to the same kernel.

The closed form, a contour integral shifted into the lower half plane and
a quadrature of the spectral measure are compared at a few points; the
two-dimensional kernel uses a numerically computed resolvent instead of a
closed form.
"""

from hypkernel import heat_kernel
from hypkernel.contour_quadrature import shifted_contour_heat
from hypkernel.model_kernels import heat_kernel_via_spectral_measure

points = [(0.5, 0.2), (3.0, 1.0), (10.0, 4.0)]
print(f"{'n':>2} {'r':>5} {'t':>5} {'closed/series':>16} {'contour':>16} {'spectral':>16}")
for n in (1, 2, 4):
    for r, t in points:
        a = float(heat_kernel(n, r, t).log_magnitude)
        b = float(shifted_contour_heat(n, r, t).log_magnitude)
        c = float(heat_kernel_via_spectral_measure(n, r, t).log_magnitude)
        print(f"{n:>2} {r:>5} {t:>5} {a:>16.10f} {b:>16.10f} {c:>16.10f}")
