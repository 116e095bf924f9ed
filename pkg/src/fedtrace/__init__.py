"""Exact Fedosov star products, trace densities and S^1-invariant Kaehler
invariants on flat space, the torus and S^2."""

from .coeffring import JetRing, ProfileRing, TrigRing
from .fedosov import FedosovConnection, build_r, quantize, star
from .geometry import admissible_profile, build_flat, build_s2, build_torus, load_model
from .scalar import Scalar
from .trace import trace, trace_density, variation_check, verify_trace_property
from .weyl import FiberMetric, WeylSection

__version__ = "0.1.0"

__all__ = [
    "FedosovConnection",
    "FiberMetric",
    "JetRing",
    "ProfileRing",
    "Scalar",
    "TrigRing",
    "WeylSection",
    "admissible_profile",
    "build_flat",
    "build_r",
    "build_s2",
    "build_torus",
    "load_model",
    "quantize",
    "star",
    "trace",
    "trace_density",
    "variation_check",
    "verify_trace_property",
]
