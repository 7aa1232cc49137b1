"""Heat kernels, resolvents and spectral measures on real hyperbolic space H^{n+1}."""

__version__ = "0.1.0"

from .contour_quadrature import (QuadratureConfig, QuadratureError, fexp_leading,
                                 fexp_second_order, gauss_weighted_integrate,
                                 shifted_contour_heat)
from .kernel_algebra import (contour_to_heat, descend, differentiate_heat, gaussian_moment,
                             resolvent_odd_dim)
from .logdomain import LogValue
from .model_kernels import (EvalPoint, dm_quantity, euclidean_heat_kernel, heat_kernel,
                            heat_kernel_via_spectral_measure, resolvent_kernel,
                            spectral_measure_kernel, volume_density)

__all__ = [
    "QuadratureConfig", "QuadratureError", "fexp_leading", "fexp_second_order",
    "gauss_weighted_integrate", "shifted_contour_heat", "contour_to_heat", "descend",
    "differentiate_heat", "gaussian_moment", "resolvent_odd_dim", "LogValue", "EvalPoint",
    "dm_quantity", "euclidean_heat_kernel", "heat_kernel", "heat_kernel_via_spectral_measure",
    "resolvent_kernel", "spectral_measure_kernel", "volume_density",
]
