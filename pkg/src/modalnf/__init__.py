"""Order-by-order normal forms and invariant-manifold checks for modal ODEs ``x' = A x + f(t, x)``."""

__version__ = "0.1.0"

from .algebra import (
    ModalSeries,
    MultiIndex,
    TimePoly,
    compose,
    directional_derivative,
    homogeneous_part,
    identity_series,
    mono_eval,
    series_combine,
    series_eval,
    time_derivative,
)
from .engine import (
    NormalFormResult,
    QuadraticConvolution,
    direct_oracle_xi3,
    extract_a,
    residual,
    run,
    solve_update,
    step,
    verify_separation,
)
from .scalars import CRational, Fraction
from .spectral import INF, GapParams, SpectralModel

__all__ = [
    "CRational",
    "Fraction",
    "GapParams",
    "INF",
    "ModalSeries",
    "MultiIndex",
    "NormalFormResult",
    "QuadraticConvolution",
    "SpectralModel",
    "TimePoly",
    "compose",
    "direct_oracle_xi3",
    "directional_derivative",
    "extract_a",
    "homogeneous_part",
    "identity_series",
    "mono_eval",
    "residual",
    "run",
    "series_combine",
    "series_eval",
    "solve_update",
    "step",
    "time_derivative",
    "verify_separation",
]
