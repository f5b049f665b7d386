"""Conic inner/outer approximations of quantum testing regions."""

__version__ = "0.1.0"

from .config import Tolerances
from .ensembles import Ensemble, Kind, builtin, gram, make_mub, make_sic, validate
from .regions import (
    DConeApprox,
    EllipsoidApprox,
    MembershipReport,
    Verdict,
    approx_measurement,
    approx_states,
    dcone_membership,
    dcone_support,
    membership,
    reconstruct_effect,
    reconstruct_state,
    slice_membership,
    support,
)
from .simulability import ProbabilityCloud, dcone_in_hull, ellipsoid_in_hull, hull_facets

__all__ = [
    "DConeApprox",
    "EllipsoidApprox",
    "Ensemble",
    "Kind",
    "MembershipReport",
    "ProbabilityCloud",
    "Tolerances",
    "Verdict",
    "approx_measurement",
    "approx_states",
    "builtin",
    "dcone_in_hull",
    "dcone_membership",
    "dcone_support",
    "ellipsoid_in_hull",
    "gram",
    "hull_facets",
    "make_mub",
    "make_sic",
    "membership",
    "reconstruct_effect",
    "reconstruct_state",
    "slice_membership",
    "support",
    "validate",
]
