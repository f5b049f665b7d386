"""Containment of an outer approximation inside the hull of observed data.

If the outer ellipsoid of a reference measurement (or the outer d-cone of a
reference state family) lies inside the convex hull of probability vectors
produced by an unknown device of the same outcome count, the device can be
mapped onto the reference by a map that is positive on the reference support.

Containment of a smooth body in a V-polytope is decided exactly through the
polytope's facets, which we enumerate only up to affine dimension 4.  Beyond
that, random directions can falsify containment but never certify it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.spatial import ConvexHull

from .regions import DConeApprox, EllipsoidApprox, dcone_support, support
from .sampling import rng_from

FACET_DIM_LIMIT = 4
# absolute floor on violation margins; keeps exact round-off from reading as a witness
GEOM_EPS = 1e-9

MEASUREMENT_CONCLUSION = (
    "outer ellipsoid of the reference lies in conv(cloud): a trace-preserving map, "
    "positive on the reference support, carries the observed measurement onto the reference"
)
STATES_CONCLUSION = (
    "outer d-cone of the reference lies in conv(cloud): a map positive on the reference "
    "support (not necessarily trace preserving) carries the observed family onto the reference"
)


class FacetLimitError(ValueError):
    """Raised when a cloud's affine dimension exceeds the facet enumeration limit."""


class Containment(str, Enum):
    CONTAINED = "contained"
    VIOLATED = "violated"
    INCONCLUSIVE_PASS = "inconclusive-pass"


@dataclass(frozen=True, eq=False)
class ProbabilityCloud:
    points: np.ndarray
    normalized: bool = False
    tol: float = 1e-8

    def __post_init__(self):
        pts = np.atleast_2d(np.array(self.points, dtype=float))
        if pts.size == 0:
            raise ValueError("a cloud needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("cloud coordinates must be finite")
        if np.any(pts < -self.tol) or np.any(pts > 1 + self.tol):
            raise ValueError("cloud coordinates must lie in [0, 1]")
        if self.normalized and np.any(np.abs(pts.sum(axis=1) - 1) > self.tol):
            raise ValueError("normalized cloud points must sum to 1")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class HullFacets:
    """H-representation ``A x <= b`` within the affine hull ``C x = e``."""

    normals: np.ndarray
    offsets: np.ndarray
    eq_normals: np.ndarray
    eq_offsets: np.ndarray
    affine_dim: int

    def contains(self, x, tol: float = 1e-9) -> np.ndarray:
        x = np.atleast_2d(x)
        ok = np.all(x @ self.normals.T <= self.offsets + tol, axis=1)
        if self.eq_normals.size:
            ok &= np.all(np.abs(x @ self.eq_normals.T - self.eq_offsets) <= tol, axis=1)
        return ok


def affine_frame(points, rel_tol: float = 1e-9):
    """Centroid, orthonormal basis of the affine hull, and of its complement."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    centroid = pts.mean(axis=0)
    x = pts - centroid
    if x.shape[0] < x.shape[1]:
        # zero rows leave the spread unchanged and make vt square
        x = np.vstack([x, np.zeros((x.shape[1] - x.shape[0], x.shape[1]))])
    # economy SVD: squaring into x^T x would lift zero singular values to ~sqrt(eps)
    _, s, vt = np.linalg.svd(x, full_matrices=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rel_tol * max(smax, 1.0))) if smax > 0 else 0
    return centroid, vt[:rank].T, vt[rank:].T


def hull_facets(cloud, dim_limit: int = FACET_DIM_LIMIT) -> HullFacets:
    pts = cloud.points if isinstance(cloud, ProbabilityCloud) else np.atleast_2d(cloud)
    centroid, basis, comp = affine_frame(pts)
    m = basis.shape[1]
    if m > dim_limit:
        raise FacetLimitError(f"cloud spans an affine dimension of {m} > {dim_limit}; "
                              "use sampled-directions mode")
    eq_normals = comp.T
    eq_offsets = eq_normals @ centroid
    y = (pts - centroid) @ basis
    if m == 0:
        normals = np.zeros((0, pts.shape[1]))
        offsets = np.zeros(0)
    elif m == 1:
        normals = np.array([basis[:, 0], -basis[:, 0]])
        offsets = np.array([y.max(), -y.min()]) + normals @ centroid
    else:
        hull = ConvexHull(y)
        eqs = hull.equations
        # merge coplanar simplices (Qhull triangulates facets)
        key = np.round(eqs / 1e-9).astype(np.int64)
        _, idx = np.unique(key, axis=0, return_index=True)
        eqs = eqs[np.sort(idx)]
        normals = eqs[:, :m] @ basis.T
        offsets = -eqs[:, m] + normals @ centroid
    return HullFacets(normals, offsets, eq_normals, eq_offsets, m)


@dataclass(frozen=True)
class Witness:
    direction: np.ndarray
    hull_support: float
    body_support: float

    @property
    def margin(self) -> float:
        return self.body_support - self.hull_support

    def to_dict(self) -> dict:
        return {"direction": self.direction.tolist(), "hull_support": self.hull_support,
                "body_support": self.body_support, "margin": self.margin}


@dataclass
class ContainmentCertificate:
    verdict: Containment
    method: str
    slack: float
    witnesses: list[Witness] = field(default_factory=list)
    checked: int = 0
    conclusion: str = ""

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "method": self.method,
            "slack": self.slack,
            "checked": self.checked,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "conclusion": self.conclusion,
        }


def _certify(body_support: Callable, n: int, cloud: ProbabilityCloud, slack: float,
             mode: str, n_directions: int, seed, dim_limit: int, conclusion: str,
             max_witnesses: int = 10) -> ContainmentCertificate:
    if cloud.n != n:
        raise ValueError(f"cloud has {cloud.n} components, body has {n}")
    if slack < 0:
        raise ValueError("slack must be nonnegative")
    if mode not in ("auto", "facets", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")

    facets = None
    if mode in ("auto", "facets"):
        try:
            facets = hull_facets(cloud, dim_limit)
        except FacetLimitError:
            if mode == "facets":
                raise

    if facets is not None:
        dirs = np.vstack([facets.normals, facets.eq_normals, -facets.eq_normals])
        bounds = np.concatenate([facets.offsets, facets.eq_offsets, -facets.eq_offsets])
        method = "facets"
    else:
        rng = rng_from(seed)
        g = rng.standard_normal((n_directions, n))
        pts = cloud.points
        if len(pts) > 1:
            i, j = rng.integers(0, len(pts), size=(2, n_directions // 4))
            diff = pts[i] - pts[j]
            g = np.vstack([g, diff[np.linalg.norm(diff, axis=1) > 0]])
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
        bounds = np.concatenate([(chunk @ pts.T).max(axis=1)
                                 for chunk in np.array_split(dirs, max(1, len(dirs) // 512))])
        method = "sampled-directions"

    if len(dirs):
        body = np.atleast_1d(body_support(dirs))
    else:
        body = np.zeros(0)
    margins = body - bounds
    bad = np.flatnonzero(margins > slack + GEOM_EPS)
    order = bad[np.argsort(-margins[bad])][:max_witnesses]
    witnesses = [Witness(dirs[i].copy(), float(bounds[i]), float(body[i])) for i in order]
    if witnesses:
        verdict = Containment.VIOLATED
        text = "premise fails: no conclusion"
    elif method == "facets":
        verdict = Containment.CONTAINED
        text = conclusion
    else:
        verdict = Containment.INCONCLUSIVE_PASS
        text = "no violating direction found; containment not certified"
    return ContainmentCertificate(verdict, method, float(slack), witnesses, len(dirs), text)


def ellipsoid_in_hull(a: EllipsoidApprox, cloud: ProbabilityCloud, slack: float = 0.0, *,
                      mode: str = "auto", n_directions: int = 10_000, seed=0,
                      dim_limit: int = FACET_DIM_LIMIT) -> ContainmentCertificate:
    return _certify(lambda x: support(a, x), a.n, cloud, slack, mode, n_directions, seed,
                    dim_limit, MEASUREMENT_CONCLUSION)


def dcone_in_hull(c: DConeApprox, cloud: ProbabilityCloud, slack: float = 0.0, *,
                  mode: str = "auto", n_directions: int = 10_000, seed=0,
                  dim_limit: int = FACET_DIM_LIMIT) -> ContainmentCertificate:
    return _certify(lambda x: dcone_support(c, x), c.n, cloud, slack, mode, n_directions, seed,
                    dim_limit, STATES_CONCLUSION)
