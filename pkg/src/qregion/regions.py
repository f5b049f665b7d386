"""Ellipsoidal and elliptical d-cone approximations of testing regions.

Measurement side
    For an ``n``-outcome measurement on ``C^d`` the set of outcome
    distributions ``p_i = Tr[pi_i rho]`` is approximated by

        E_r = { p in t + range(Q) : (p - t)^T Q^+ (p - t) <= 1 / r^2 },

    with ``t_i = Tr[pi_i] / d`` and
    ``Q_ij = (d-1)/d * (Tr[pi_i pi_j] - Tr[pi_i] Tr[pi_j] / d)``.
    ``E_1`` is the image of the ball ``{Tr rho = 1, Tr rho^2 <= 1}`` and so
    encloses the image of all states; ``E_{d-1}`` is enclosed by it.

State side
    For a family of ``n`` states the image of the effect set is approximated
    by the convex hull over ``k = 0..d`` of the slices

        E_r^k = { q in (k/d) u + range(G) : (q - k u/d)^T G^+ (q - k u/d) <= c_k / r^2 },

    where ``G_ij = Tr[rho_i rho_j] - 1/d``, ``c_k = k - k^2/d`` and ``u`` is
    the all-ones vector.  Since every slice shares the shape matrix ``G``,
    membership in the hull reduces to a one-dimensional problem along the axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import DEFAULT, Tolerances
from .ensembles import Ensemble, Kind, centered_gram, gram, validate
from .linalg import PinvFactorization, pinv_gram


class InvalidEnsembleError(ValueError):
    pass


class OffRangeError(ValueError):
    pass


class Verdict(str, Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"
    OFF_RANGE = "off-range"


def classify(form: float, residual: float, r: float, tol: Tolerances = DEFAULT) -> Verdict:
    if residual > tol.range:
        return Verdict.OFF_RANGE
    bound = 1.0 / r ** 2
    if abs(form - bound) <= tol.member:
        return Verdict.BOUNDARY
    return Verdict.INSIDE if form < bound else Verdict.OUTSIDE


@dataclass(frozen=True)
class MembershipReport:
    form: float
    residual: float
    verdict: Verdict
    kappa: float | None = None

    @property
    def member(self) -> bool:
        return self.verdict in (Verdict.INSIDE, Verdict.BOUNDARY)

    def to_dict(self) -> dict:
        out = {"form": self.form, "residual": self.residual, "verdict": self.verdict.value,
               "member": self.member}
        if self.kappa is not None:
            out["kappa"] = self.kappa
        return out


def _require_valid(e: Ensemble, tol: Tolerances):
    report = validate(e, tol)
    if not report.valid:
        raise InvalidEnsembleError("; ".join(report.violations))
    return report


# ---------------------------------------------------------------- measurements


@dataclass(frozen=True, eq=False)
class EllipsoidApprox:
    ensemble: Ensemble
    center: np.ndarray
    covariance: np.ndarray
    pinv: PinvFactorization
    scale: float
    informationally_complete: bool

    @property
    def n(self) -> int:
        return self.center.size

    @property
    def dim(self) -> int:
        return self.ensemble.dim

    @property
    def rank(self) -> int:
        return self.pinv.rank

    @property
    def range_projector(self) -> np.ndarray:
        return self.pinv.projector

    @property
    def extremal(self) -> bool:
        """False when the volume-optimality guarantee does not apply (non-IC input)."""
        return self.informationally_complete

    def rescaled(self, r: float) -> "EllipsoidApprox":
        if r <= 0:
            raise ValueError("scale r must be positive")
        return EllipsoidApprox(self.ensemble, self.center, self.covariance, self.pinv,
                               float(r), self.informationally_complete)


def approx_measurement(e: Ensemble, r: float = 1.0, tol: Tolerances = DEFAULT, *,
                       check: bool = True) -> EllipsoidApprox:
    if r <= 0:
        raise ValueError("scale r must be positive")
    if e.kind is not Kind.MEASUREMENT:
        raise InvalidEnsembleError(f"expected a measurement ensemble, got {e.kind.value}")
    if check:
        _require_valid(e, tol)
    d = e.dim
    q = (d - 1) / d * centered_gram(e)
    q = 0.5 * (q + q.T)
    t = e.traces() / d
    pinv = pinv_gram(q, tol.rel, dim=d, tol_herm=tol.herm)
    return EllipsoidApprox(e, t, q, pinv, float(r), pinv.rank == d * d - 1)


def quadratic_forms(a: EllipsoidApprox, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``(form, range residual)`` for points of shape ``(..., n)``."""
    v = np.asarray(points, dtype=float) - a.center
    form = np.einsum("...i,ij,...j->...", v, a.pinv.pinv, v)
    off = v - v @ a.pinv.projector
    return form, np.linalg.norm(off, axis=-1)


def membership(a: EllipsoidApprox, p, tol: Tolerances = DEFAULT) -> MembershipReport:
    p = np.asarray(p, dtype=float)
    if p.shape != (a.n,):
        raise ValueError(f"expected a vector of length {a.n}, got shape {p.shape}")
    form, res = quadratic_forms(a, p)
    return MembershipReport(float(form), float(res), classify(float(form), float(res), a.scale, tol))


def support(a: EllipsoidApprox, direction) -> np.ndarray | float:
    """Support function ``a.t + sqrt(a^T Q a) / r``; accepts a stack of directions."""
    x = np.asarray(direction, dtype=float)
    quad = np.clip(np.einsum("...i,ij,...j->...", x, a.covariance, x), 0.0, None)
    h = x @ a.center + np.sqrt(quad) / a.scale
    return float(h) if np.ndim(h) == 0 else h


def reconstruct_state(a, p, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Minimal-norm unit-trace operator whose image is ``p``.

    ``a`` is an :class:`EllipsoidApprox` or a measurement ensemble.
    """
    if isinstance(a, Ensemble):
        a = approx_measurement(a, 1.0, tol)
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != a.n:
        raise ValueError(f"expected vectors of length {a.n}")
    v = p - a.center
    res = np.linalg.norm(v - v @ a.pinv.projector, axis=-1)
    if np.any(res > tol.range):
        raise OffRangeError(f"point is off the affine range (residual {np.max(res):.3g})")
    d = a.dim
    # (pi - tau)^+ = (pi - tau)^dagger M^+ with M = d/(d-1) Q
    y = v @ a.pinv.pinv * ((d - 1) / d)
    centered = a.ensemble.elements - (a.ensemble.traces() / d)[:, None, None] * np.eye(d)
    return np.einsum("...i,iab->...ab", y, centered) + np.eye(d) / d


# --------------------------------------------------------------- state families


def slice_coefficients(d: int) -> np.ndarray:
    k = np.arange(d + 1, dtype=float)
    return k - k * k / d


@dataclass(frozen=True, eq=False)
class DConeApprox:
    ensemble: Ensemble
    shape: np.ndarray
    pinv: PinvFactorization
    coefficients: np.ndarray
    scale: float
    informationally_complete: bool

    @property
    def n(self) -> int:
        return self.shape.shape[0]

    @property
    def dim(self) -> int:
        return self.ensemble.dim

    @property
    def axis(self) -> np.ndarray:
        return np.ones(self.n)

    @property
    def rank(self) -> int:
        return self.pinv.rank

    @property
    def extremal(self) -> bool:
        return self.informationally_complete

    def slice_covariance(self, k: int) -> np.ndarray:
        return self.coefficients[k] * self.shape

    def slice_center(self, k: float) -> np.ndarray:
        return (k / self.dim) * self.axis

    def envelope(self, kappa) -> np.ndarray | float:
        """Radial reach ``R_env(kappa)`` in the ``G^+`` metric at this scale."""
        radii = np.sqrt(self.coefficients) / self.scale
        out = np.interp(kappa, np.arange(self.dim + 1), radii)
        return float(out) if np.ndim(out) == 0 else out

    def rescaled(self, r: float) -> "DConeApprox":
        if r <= 0:
            raise ValueError("scale r must be positive")
        return DConeApprox(self.ensemble, self.shape, self.pinv, self.coefficients,
                           float(r), self.informationally_complete)


def approx_states(e: Ensemble, r: float = 1.0, tol: Tolerances = DEFAULT, *,
                  check: bool = True) -> DConeApprox:
    if r <= 0:
        raise ValueError("scale r must be positive")
    if e.kind is not Kind.STATES:
        raise InvalidEnsembleError(f"expected a state family, got {e.kind.value}")
    if check:
        _require_valid(e, tol)
    d = e.dim
    g = gram(e).matrix - 1.0 / d
    g = 0.5 * (g + g.T)
    pinv = pinv_gram(g, tol.rel, dim=d, tol_herm=tol.herm)
    return DConeApprox(e, g, pinv, slice_coefficients(d), float(r), pinv.rank == d * d - 1)


def slice_membership(c: DConeApprox, q, k: int, tol: Tolerances = DEFAULT) -> MembershipReport:
    """Membership of ``q`` in the trace-``k`` slice ellipsoid.

    The end slices ``k = 0`` and ``k = d`` are single points; for them the
    report is a point-equality check with form 0.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (c.n,):
        raise ValueError(f"expected a vector of length {c.n}, got shape {q.shape}")
    if not 0 <= k <= c.dim:
        raise ValueError(f"slice index must lie in [0, {c.dim}]")
    v = q - c.slice_center(k)
    if k in (0, c.dim):
        res = float(np.linalg.norm(v))
        verdict = Verdict.INSIDE if res <= tol.range else Verdict.OUTSIDE
        return MembershipReport(0.0 if res <= tol.range else float("inf"), res, verdict, float(k))
    res = float(np.linalg.norm(v - c.pinv.projector @ v))
    form = float(v @ c.pinv.pinv @ v) / float(c.coefficients[k])
    return MembershipReport(form, res, classify(form, res, c.scale, tol), float(k))


def dcone_forms(c: DConeApprox, points, tol: Tolerances = DEFAULT):
    """Vectorized d-cone test for points of shape ``(m, n)``.

    A point of the hull at axial position ``kappa`` (its mixed trace) reaches
    a ``G``-radius of at most ``R(kappa)``, the linear interpolation of
    ``sqrt(c_k)``; that interpolation is concave, so it is its own envelope.
    The form of ``q`` is ``min_kappa f(kappa) / R(kappa)^2`` where
    ``f(kappa) = |q - kappa u/d|^2`` in the ``G^+`` metric, hence the boundary
    sits at ``1/r^2`` exactly as for ellipsoids.  On each unit segment the
    derivative of ``f / R^2`` has a linear numerator (the quadratic terms
    cancel), so the minimum is found in closed form.  When ``u`` leaves
    ``range(G)`` the off-range part of ``q`` pins ``kappa``.

    Returns ``(form, residual, kappa)`` arrays.
    """
    q = np.atleast_2d(np.asarray(points, dtype=float))
    if q.shape[1] != c.n:
        raise ValueError(f"expected vectors of length {c.n}, got shape {q.shape}")
    d = c.dim
    u = c.axis
    proj = c.pinv.projector
    gp = c.pinv.pinv
    radii = np.sqrt(c.coefficients)
    u_perp = u - proj @ u
    q_perp = q - q @ proj
    nu = float(np.linalg.norm(u_perp))

    def ratio_at(kappa):
        v = q - kappa[:, None] * u / d
        num = np.clip(np.einsum("mi,ij,mj->m", v, gp, v), 0.0, None)
        rad = np.interp(kappa, np.arange(d + 1), radii)
        # on the axis (apexes included) the point is a slice centre
        on_axis = np.linalg.norm(v, axis=1) <= tol.range
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(rad > 0, num / rad ** 2, np.inf)
        return np.where(on_axis, 0.0, out)

    if nu > tol.range:
        kappa = d * (q_perp @ u_perp) / nu ** 2
        res = np.linalg.norm(q_perp - kappa[:, None] * u_perp / d, axis=1)
        slack = 1e-12 * d
        ok = (kappa >= -slack) & (kappa <= d + slack)
        kappa = np.clip(kappa, 0.0, d)
        form = np.where(ok, ratio_at(kappa), np.inf)
        return form, res, kappa

    res = np.linalg.norm(q_perp, axis=1)
    w = u / d
    gw = gp @ w
    n2 = float(w @ gw)
    ks = np.arange(d)
    v0 = q[:, None, :] - ks[None, :, None] * w                # (m, d, n)
    n0 = np.einsum("mki,ij,mkj->mk", v0, gp, v0)
    n1 = -2.0 * (v0 @ gw)
    a = radii[:-1]
    b = radii[1:] - radii[:-1]
    den = 2 * n2 * a - b * n1
    with np.errstate(divide="ignore", invalid="ignore"):
        s_star = np.where(den != 0, (2 * b * n0 - n1 * a) / den, 0.0)
    s_star = np.where((s_star > 0) & (s_star < 1), s_star, 0.0)
    cands = np.stack([np.zeros_like(n0), np.ones_like(n0), s_star], axis=-1)  # (m, d, 3)
    num = np.clip(n0[..., None] + n1[..., None] * cands + n2 * cands ** 2, 0.0, None)
    dd = a[None, :, None] + b[None, :, None] * cands
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(dd > 0, num / dd ** 2, np.inf)
    kap = ks[None, :, None] + cands
    vals = vals.reshape(len(q), -1)
    kap = kap.reshape(len(q), -1)
    # apexes, where the radial reach vanishes
    apex_k = np.tile([0.0, float(d)], (len(q), 1))
    apex_v = np.stack([ratio_at(np.zeros(len(q))), ratio_at(np.full(len(q), float(d)))], axis=1)
    vals = np.concatenate([apex_v, vals], axis=1)
    kap = np.concatenate([apex_k, kap], axis=1)
    best = np.argmin(vals, axis=1)
    rows = np.arange(len(q))
    kappa = kap[rows, best]
    form = vals[rows, best]
    # re-evaluate at the optimum from vectors rather than expanded coefficients
    finite = np.isfinite(form)
    form = np.where(finite, np.minimum(form, ratio_at(kappa)), form)
    return form, res, kappa


def classify_many(form, residual, r: float, tol: Tolerances = DEFAULT) -> list[Verdict]:
    return [classify(float(f), float(s), r, tol) for f, s in zip(form, residual)]


def dcone_membership(c: DConeApprox, q, tol: Tolerances = DEFAULT) -> MembershipReport:
    """Membership of ``q`` in the convex hull of all slice ellipsoids (see :func:`dcone_forms`)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (c.n,):
        raise ValueError(f"expected a vector of length {c.n}, got shape {q.shape}")
    form, res, kappa = dcone_forms(c, q[None, :], tol)
    f, s = float(form[0]), float(res[0])
    return MembershipReport(f, s, classify(f, s, c.scale, tol), float(kappa[0]))


def dcone_support(c: DConeApprox, direction) -> np.ndarray | float:
    """``max_k [(k/d) a.u + sqrt(c_k) sqrt(a^T G a) / r]``; accepts a stack of directions."""
    x = np.asarray(direction, dtype=float)
    au = x.sum(axis=-1)
    rad = np.sqrt(np.clip(np.einsum("...i,ij,...j->...", x, c.shape, x), 0.0, None))
    k = np.arange(c.dim + 1)
    vals = (k / c.dim) * au[..., None] + (np.sqrt(c.coefficients) / c.scale) * rad[..., None]
    h = vals.max(axis=-1)
    return float(h) if np.ndim(h) == 0 else h


def reconstruct_effect(c, q, k: int, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Minimal-norm trace-``k`` operator whose image through the family is ``q``.

    ``c`` is a :class:`DConeApprox` or a state-family ensemble.
    """
    if isinstance(c, Ensemble):
        c = approx_states(c, 1.0, tol)
    q = np.asarray(q, dtype=float)
    d = c.dim
    v = q - c.slice_center(k)
    res = np.linalg.norm(v - v @ c.pinv.projector, axis=-1)
    if np.any(res > tol.range):
        raise OffRangeError(f"point is off the slice-{k} affine range (residual {np.max(res):.3g})")
    y = v @ c.pinv.pinv
    centered = c.ensemble.elements - np.eye(d) / d
    return np.einsum("...i,iab->...ab", y, centered) + (k / d) * np.eye(d)
