"""Monte Carlo checks of the inclusion and tightness properties.

Each ``verify_*`` function samples operators, pushes them through an ensemble
and tallies how the images sit relative to the conic approximations.  All
results are deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .ensembles import Ensemble
from .linalg import sqrt_psd
from .regions import (
    DConeApprox,
    EllipsoidApprox,
    approx_measurement,
    approx_states,
    dcone_forms,
    dcone_support,
    quadratic_forms,
    reconstruct_state,
)
from .sampling import (
    haar_pure_batch,
    mixed_batch,
    projector_batch,
    random_effect_batch,
    rng_from,
    split_seed,
)

VIOLATION_TOL = 1e-8


@dataclass
class VerificationStats:
    check: str
    samples: int
    seed: int | None
    violations: int = 0
    informationally_complete: bool | None = None
    skipped: bool = False
    pure_form_max: float | None = None
    pure_form_min: float | None = None
    pure_form_mean: float | None = None
    mixed_form_max: float | None = None
    mixed_form_min: float | None = None
    mixed_form_mean: float | None = None
    identity_residual_max: float | None = None
    min_eigenvalue: float | None = None
    trace_residual_max: float | None = None
    forward_residual_max: float | None = None
    purity_min: float | None = None
    purity_max: float | None = None
    tightness_failures: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and not self.tightness_failures

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def _summary(values):
    if len(values) == 0:
        return None, None, None
    return float(np.max(values)), float(np.min(values)), float(np.mean(values))


def purity(ops) -> np.ndarray:
    ops = np.asarray(ops)
    return np.real(np.einsum("...ab,...ba->...", ops, ops))


def verify_outer_measurement(e: Ensemble, samples: int, seed=0,
                             tol: Tolerances = DEFAULT) -> VerificationStats:
    """Outer inclusion: every state image has form <= 1 against ``E_1``.

    Half the samples are Haar-pure states, half mixed states with a rank drawn
    uniformly from ``2..d``.  For informationally complete measurements the
    mixed-state forms are also compared with ``d/(d-1) (Tr rho^2 - 1/d)``.
    """
    a = approx_measurement(e, 1.0, tol)
    d = e.dim
    stats = VerificationStats("outer-measurement", samples, _seed_repr(seed),
                              informationally_complete=a.informationally_complete)
    if samples <= 0:
        return stats
    pure_rng, rank_rng, mixed_rng = split_seed(seed, 3)
    n_pure = (samples + 1) // 2
    n_mixed = samples - n_pure
    pure = haar_pure_batch(d, n_pure, pure_rng)
    ranks = rank_rng.integers(min(2, d), d + 1, size=n_mixed)
    mixed = np.empty((n_mixed, d, d), dtype=complex)
    for rk in np.unique(ranks):
        idx = np.flatnonzero(ranks == rk)
        mixed[idx] = mixed_batch(d, int(rk), idx.size, mixed_rng)

    fp, rp = quadratic_forms(a, e.image(pure))
    fm, rm = quadratic_forms(a, e.image(mixed))
    stats.pure_form_max, stats.pure_form_min, stats.pure_form_mean = _summary(fp)
    stats.mixed_form_max, stats.mixed_form_min, stats.mixed_form_mean = _summary(fm)
    forms = np.concatenate([fp, fm])
    res = np.concatenate([rp, rm])
    stats.violations = int(np.sum((forms > 1 + VIOLATION_TOL) | (res > tol.range)))
    if a.informationally_complete and n_mixed:
        expected = d / (d - 1) * (purity(mixed) - 1 / d)
        stats.identity_residual_max = float(np.max(np.abs(fm - expected)))
    return stats


def boundary_probes(a: EllipsoidApprox, count: int, form: float, seed=0) -> np.ndarray:
    """Points uniform on ``{(p - t)^T Q^+ (p - t) = form}`` inside the affine range.

    A standard Gaussian in range coordinates, normalized to the unit sphere
    and mapped through ``sqrt(Q)``, is uniform on the boundary in the natural
    metric of the ellipsoid.
    """
    rng = rng_from(seed)
    basis, lam = a.pinv.basis, a.pinv.eigenvalues
    z = rng.standard_normal((count, basis.shape[1]))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return a.center + np.sqrt(form) * (z * np.sqrt(lam)) @ basis.T


def verify_inner_measurement(e: Ensemble, probes: int, seed=0, *, scale: float | None = None,
                             tol: Tolerances = DEFAULT) -> VerificationStats:
    """Inner inclusion: points on the boundary of ``E_{d-1}`` come from states.

    Each probe is reconstructed with the minimal-norm unit-trace preimage and
    its smallest eigenvalue recorded.  ``scale`` overrides ``d - 1``.
    """
    a = approx_measurement(e, 1.0, tol)
    d = e.dim
    r = float(d - 1) if scale is None else float(scale)
    stats = VerificationStats("inner-measurement", probes, _seed_repr(seed),
                              informationally_complete=a.informationally_complete)
    if not a.informationally_complete:
        stats.skipped = True
        stats.notes.append("measurement is not informationally complete; inner claim not exercised")
        return stats
    if probes <= 0:
        return stats
    pts = boundary_probes(a, probes, 1.0 / r ** 2, seed)
    rhos = reconstruct_state(a, pts, tol)
    eig = np.linalg.eigvalsh(rhos)
    tr = np.real(np.trace(rhos, axis1=1, axis2=2))
    fwd = np.linalg.norm(e.image(rhos) - pts, axis=1)
    pur = purity(rhos)
    stats.min_eigenvalue = float(eig[:, 0].min())
    stats.trace_residual_max = float(np.max(np.abs(tr - 1)))
    stats.forward_residual_max = float(fwd.max())
    stats.purity_min, stats.purity_max = float(pur.min()), float(pur.max())
    stats.violations = int(np.sum(eig[:, 0] < -VIOLATION_TOL))
    return stats


def verify_states_cone(e: Ensemble, samples: int, seed=0, *, projectors_per_trace: int | None = None,
                       tol: Tolerances = DEFAULT) -> VerificationStats:
    """Outer d-cone inclusion for random effects plus slice tightness for projectors."""
    c = approx_states(e, 1.0, tol)
    d = e.dim
    stats = VerificationStats("states-cone", samples, _seed_repr(seed),
                              informationally_complete=c.informationally_complete)
    if samples <= 0:
        return stats
    if projectors_per_trace is None:
        projectors_per_trace = max(1, samples // 10)
    eff_rng, *proj_rngs = split_seed(seed, d + 2)
    effects = random_effect_batch(d, samples, eff_rng)
    form, res, _ = dcone_forms(c, e.image(effects), tol)
    viol = int(np.sum((form > 1 + VIOLATION_TOL) | (res > tol.range)))

    tight_fail = 0
    proj_forms = []
    for k in range(d + 1):
        projs = projector_batch(d, k, projectors_per_trace, proj_rngs[k])
        img = e.image(projs)
        f, s, _ = dcone_forms(c, img, tol)
        viol += int(np.sum((f > 1 + VIOLATION_TOL) | (s > tol.range)))
        if 0 < k < d:
            v = img - (k / d)
            sf = np.einsum("mi,ij,mj->m", v, c.pinv.pinv, v) / c.coefficients[k]
            proj_forms.append(sf)
            if c.informationally_complete:
                tight_fail += int(np.sum(np.abs(sf - 1) > VIOLATION_TOL))
    stats.violations = viol
    stats.mixed_form_max, stats.mixed_form_min, stats.mixed_form_mean = _summary(form)
    if proj_forms:
        stats.pure_form_max, stats.pure_form_min, stats.pure_form_mean = _summary(np.concatenate(proj_forms))
    stats.tightness_failures = tight_fail
    stats.notes.append("pure_form_* summarize slice forms of rank-k projectors, 0 < k < d; "
                       "mixed_form_* summarize d-cone forms of random effects")
    return stats


def _seed_repr(seed):
    return seed if isinstance(seed, (int, np.integer)) else None


# ------------------------------------------------------------------ oracle


@dataclass
class OracleResult:
    status: str  # "member", "nonmember-evidence" or "inconclusive"
    weights: list[tuple[int, float]] = field(default_factory=list)
    points: np.ndarray | None = None
    direction: np.ndarray | None = None
    margin: float | None = None


class DConeOracle:
    """Brute-force decision procedure used to cross-check :func:`dcone_forms`.

    Membership is certified by an explicit convex combination of two slice
    points (found by random and grid search over slice pairs and weights),
    each point re-checked against its own slice inequality.  Non-membership is
    certified by a direction ``a`` with ``a.q > h(a) + 1e-8``, searched first
    among random directions and then by solving the separation problem
    ``max_{|a| <= 1} a.q - h(a)`` as a second-order cone program.
    """

    def __init__(self, c: DConeApprox, trials: int = 2000, seed=0, grid: int = 4001,
                 tol: float = 1e-9):
        self.c = c
        self.trials = trials
        self.rng = rng_from(seed)
        self.grid = grid
        self.tol = tol
        self._socp = None

    # ---- membership by construction
    def _try_member(self, q):
        c = self.c
        d, u, gp, proj = c.dim, c.axis, c.pinv.pinv, c.pinv.projector
        radii = np.sqrt(c.coefficients) / c.scale
        u_perp = u - proj @ u
        q_perp = q - proj @ q
        forced = np.linalg.norm(u_perp) > 1e-9
        for k1 in range(d + 1):
            for k2 in range(k1, d + 1):
                if k1 == k2:
                    lams = np.array([1.0])
                elif forced:
                    # lam * k1 + (1 - lam) * k2 is pinned by the off-range part of q
                    base = q_perp - k2 * u_perp / d
                    step = (k1 - k2) * u_perp / d
                    lam = float(base @ step / (step @ step))
                    if not -1e-12 <= lam <= 1 + 1e-12:
                        continue
                    lams = np.array([min(max(lam, 0.0), 1.0)])
                else:
                    lams = np.concatenate([np.linspace(0, 1, self.grid),
                                           self.rng.uniform(size=self.trials)])
                kappa = lams * k1 + (1 - lams) * k2
                y = q[None, :] - kappa[:, None] * u / d
                off = np.linalg.norm(y - y @ proj, axis=1)
                gnorm = np.sqrt(np.clip(np.einsum("mi,ij,mj->m", y, gp, y), 0, None))
                reach = lams * radii[k1] + (1 - lams) * radii[k2]
                ok = (off <= self.tol) & ((gnorm <= reach * (1 + 1e-12)) | (np.linalg.norm(y, axis=1) <= self.tol))
                for idx in np.flatnonzero(ok):
                    pts = self._split(q, y[idx], float(lams[idx]), k1, k2, reach[idx], radii)
                    if pts is not None:
                        return OracleResult("member", [(k1, float(lams[idx])), (k2, 1 - float(lams[idx]))], pts)
        return None

    def _split(self, q, y, lam, k1, k2, reach, radii):
        c = self.c
        d, u = c.dim, c.axis
        if reach > 0:
            y1, y2 = y * radii[k1] / reach, y * radii[k2] / reach
        else:
            y1 = y2 = y
        x1 = k1 * u / d + y1
        x2 = k2 * u / d + y2
        # independent re-check: each point sits in its slice, and the mixture is q
        for k, x in ((k1, x1), (k2, x2)):
            v = x - k * u / d
            if k in (0, d) or c.coefficients[k] == 0:
                if np.linalg.norm(v) > self.tol:
                    return None
            elif float(v @ c.pinv.pinv @ v) / c.coefficients[k] > 1 / c.scale ** 2 + self.tol:
                return None
        if np.linalg.norm(lam * x1 + (1 - lam) * x2 - q) > self.tol:
            return None
        return np.array([x1, x2])

    # ---- non-membership by separation
    def _witness(self, dirs, q):
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        gap = dirs @ q - dcone_support(self.c, dirs)
        i = int(np.argmax(gap))
        if gap[i] > VIOLATION_TOL:
            return OracleResult("nonmember-evidence", direction=dirs[i], margin=float(gap[i]))
        return None

    def _separate(self, q):
        import cvxpy as cp

        c = self.c
        if self._socp is None:
            a = cp.Variable(c.n)
            s = cp.Variable()
            qp = cp.Parameter(c.n)
            root = sqrt_psd(c.shape)
            radii = np.sqrt(c.coefficients) / c.scale
            cons = [cp.norm(a, 2) <= 1]
            for k in range(c.dim + 1):
                cons.append(s >= (k / c.dim) * cp.sum(a) + radii[k] * cp.norm(root @ a, 2))
            prob = cp.Problem(cp.Maximize(qp @ a - s), cons)
            self._socp = (prob, a, qp)
        prob, a, qp = self._socp
        qp.value = q
        try:
            prob.solve()
        except Exception:  # solver failure leaves the query inconclusive
            return None
        if a.value is None or np.linalg.norm(a.value) == 0:
            return None
        return self._witness(np.atleast_2d(a.value), q)

    def __call__(self, query) -> OracleResult:
        q = np.asarray(query, dtype=float)
        found = self._try_member(q)
        if found is not None:
            return found
        dirs = self.rng.standard_normal((self.trials, self.c.n))
        found = self._witness(dirs, q) or self._separate(q)
        return found or OracleResult("inconclusive")


def dcone_oracle(c: DConeApprox, query, trials: int = 2000, seed=0) -> OracleResult:
    return DConeOracle(c, trials, seed)(query)
