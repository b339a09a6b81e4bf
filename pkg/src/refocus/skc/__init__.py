"""Gate compilation: nets of short words, Solovay-Kitaev, and inverse-free substitution."""
from .gates import GATESETS, TARGET, GateSet, GateWord, standard_gateset, weyl_gateset, word_product
from .inverse import (
    InverseApproxError,
    audit_shrinking_landing,
    inverse_approx,
    inverse_free_compile,
)
from .net import (
    EmptyNetError,
    EpsilonNet,
    NetBuildError,
    build_net,
    get_net,
    load_net,
    nearest,
    nearest_distances,
    save_net,
)
from .sk import SKConvergenceError, group_commutator, sk_compile

__all__ = [
    "GATESETS",
    "TARGET",
    "EmptyNetError",
    "EpsilonNet",
    "GateSet",
    "GateWord",
    "InverseApproxError",
    "NetBuildError",
    "SKConvergenceError",
    "audit_shrinking_landing",
    "build_net",
    "get_net",
    "group_commutator",
    "inverse_approx",
    "inverse_free_compile",
    "load_net",
    "nearest",
    "nearest_distances",
    "save_net",
    "sk_compile",
    "standard_gateset",
    "weyl_gateset",
    "word_product",
]
