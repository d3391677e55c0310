"""curvcheck: curvature identity verification on 4-manifolds with boundary."""

__version__ = "0.1.0"

from ._backend import backend_name
from .jets import Jet, jet_space, jet_variable, jet_arith, jet_elementary, jet_partial

__all__ = [
    "__version__",
    "backend_name",
    "Jet",
    "jet_space",
    "jet_variable",
    "jet_arith",
    "jet_elementary",
    "jet_partial",
]
