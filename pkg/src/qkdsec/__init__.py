"""Exact desk-scale simulator and verification suite for composable QKD security.

The package models the real and ideal systems of key-distribution style
protocols as finite classical-quantum objects, computes distinguishing
advantages as trace distances without any sampling, and certifies the
security, composition, and distance bounds by direct computation.
"""

from . import acframework, harness, linalg, metrics, protocols, qstate, tolerances

__all__ = ["acframework", "harness", "linalg", "metrics", "protocols",
           "qstate", "tolerances"]
__version__ = "0.1.0"
