"""Arithmetic substrate: exact q-series, precision control, Laurent data, quadrature, extrapolation."""

from .contour import (Contour, GaussianDecay, QuadratureError, Ray, Segment, contour_integrate,
                      line)
from .extrapolate import Extrapolation, extrapolate
from .precision import (DEFAULT_PRECISION_BITS, HPComplex, default_tolerance, expjpi_rational,
                        format_complex, hp, parse_complex, working_precision)
from .qseries import (EnvelopeCertificate, LatticeMismatch, MissingCertificate, QSeries,
                      qs_combine, qs_eval, rescale)
from .series import LaurentPart, TwoPiIM, laurent_principal, laurent_series

__all__ = [
    "Contour", "GaussianDecay", "QuadratureError", "Ray", "Segment", "contour_integrate", "line",
    "Extrapolation", "extrapolate",
    "DEFAULT_PRECISION_BITS", "HPComplex", "default_tolerance", "expjpi_rational",
    "format_complex", "hp", "parse_complex", "working_precision",
    "EnvelopeCertificate", "LatticeMismatch", "MissingCertificate", "QSeries", "qs_combine",
    "qs_eval", "rescale",
    "LaurentPart", "TwoPiIM", "laurent_principal", "laurent_series",
]
