"""Numerical tolerances shared by every module.

Each field can be overridden through an environment variable named
``QREGION_TOL_<FIELD>`` (e.g. ``QREGION_TOL_RANGE=1e-7``); explicit keyword
arguments win over the environment.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

ENV_PREFIX = "QREGION_TOL_"


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10
    psd: float = 1e-10
    recon: float = 1e-9
    penrose: float = 1e-9
    range: float = 1e-8
    member: float = 1e-7
    # relative eigenvalue cutoff for pseudo-inverses; None -> default_rel_tol
    rel: float | None = None

    @classmethod
    def from_env(cls, environ=None, **overrides) -> "Tolerances":
        environ = os.environ if environ is None else environ
        values = {}
        for f in fields(cls):
            raw = environ.get(ENV_PREFIX + f.name.upper())
            if raw is not None and raw != "":
                values[f.name] = float(raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def with_(self, **changes) -> "Tolerances":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT = Tolerances()


def default_rel_tol(n: int, d: int = 1) -> float:
    """Scale-relative rank cutoff ``64 * eps * max(n, d**2)``."""
    return 64.0 * np.finfo(float).eps * max(n, d * d)
