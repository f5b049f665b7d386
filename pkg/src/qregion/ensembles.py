"""Measurements (POVMs) and state families.

An :class:`Ensemble` is an ordered stack of ``n`` Hermitian ``d x d``
operators.  Order matters: probability vectors are index-aligned with the
elements, so every constructor documents its ordering.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import DEFAULT, Tolerances, default_rel_tol
from .linalg import DimensionError, NotHermitianError, hermiticity_error


class Kind(str, Enum):
    MEASUREMENT = "measurement"
    STATES = "states"


class UnsupportedDimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Ensemble:
    kind: Kind
    elements: np.ndarray
    label: str = ""

    def __post_init__(self):
        el = np.array(self.elements, dtype=complex)
        if el.ndim != 3 or el.shape[1] != el.shape[2] or el.shape[0] == 0:
            raise DimensionError(f"elements must have shape (n, d, d), got {el.shape}")
        if hermiticity_error(el) > DEFAULT.herm:
            raise NotHermitianError("ensemble elements must be Hermitian")
        el.setflags(write=False)
        object.__setattr__(self, "elements", el)
        object.__setattr__(self, "kind", Kind(self.kind))

    @property
    def n(self) -> int:
        return self.elements.shape[0]

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def image(self, ops) -> np.ndarray:
        """``Tr[e_i X]`` for an operator or a stack of operators ``X``."""
        ops = np.asarray(ops, dtype=complex)
        # Tr[e_i X] = sum_ab e_i[a, b] X[b, a]
        return np.real(np.einsum("iab,...ba->...i", self.elements, ops))

    def adjoint(self, p) -> np.ndarray:
        """``sum_i p_i e_i``."""
        return np.einsum("i,iab->ab", np.asarray(p, dtype=float), self.elements)

    def traces(self) -> np.ndarray:
        return np.real(np.trace(self.elements, axis1=1, axis2=2))

    def same_as(self, other: "Ensemble") -> bool:
        return (self.kind == other.kind and self.label == other.label
                and self.elements.shape == other.elements.shape
                and bool(np.array_equal(self.elements, other.elements)))


@dataclass(frozen=True)
class GramMatrix:
    matrix: np.ndarray
    traces: np.ndarray


def gram(e: Ensemble) -> GramMatrix:
    el = e.elements
    g = np.real(np.einsum("iab,jba->ij", el, el))
    return GramMatrix(0.5 * (g + g.T), e.traces())


def centered_gram(e: Ensemble) -> np.ndarray:
    """Gram matrix of the ensemble after removing each element's trace part.

    Entry ``(i, j)`` is ``Tr[e_i e_j] - Tr[e_i] Tr[e_j] / d``; its rank is
    ``d**2 - 1`` exactly when the ensemble is informationally complete.
    """
    g = gram(e)
    return g.matrix - np.outer(g.traces, g.traces) / e.dim


def centered_rank(e: Ensemble, rel_tol: float | None = None) -> int:
    m = centered_gram(e)
    w = np.linalg.eigvalsh(m)
    if rel_tol is None:
        rel_tol = default_rel_tol(e.n, e.dim)
    scale = float(np.max(np.abs(w)))
    return int(np.sum(w > rel_tol * scale)) if scale > 0 else 0


def is_informationally_complete(e: Ensemble, rel_tol: float | None = None) -> bool:
    return centered_rank(e, rel_tol) == e.dim ** 2 - 1


@dataclass
class ValidationReport:
    valid: bool
    kind: Kind
    n: int
    dim: int
    min_eigenvalues: list[float]
    informationally_complete: bool
    centered_rank: int
    completeness_residual: float | None = None
    trace_residuals: list[float] | None = None
    violations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "valid": self.valid,
            "kind": self.kind.value,
            "n": self.n,
            "dim": self.dim,
            "min_eigenvalues": self.min_eigenvalues,
            "informationally_complete": self.informationally_complete,
            "centered_rank": self.centered_rank,
            "violations": list(self.violations),
        }
        if self.completeness_residual is not None:
            out["completeness_residual"] = self.completeness_residual
        if self.trace_residuals is not None:
            out["trace_residuals"] = self.trace_residuals
        return out


def validate(e: Ensemble, tol: Tolerances = DEFAULT) -> ValidationReport:
    """Check positivity and normalization; never raises."""
    mins = np.linalg.eigvalsh(0.5 * (e.elements + np.swapaxes(e.elements, 1, 2).conj()))[:, 0]
    violations = [f"element {i}: negative eigenvalue {m:.3g}"
                  for i, m in enumerate(mins) if m < -tol.psd]
    completeness = None
    trace_res = None
    if e.kind is Kind.MEASUREMENT:
        total = e.elements.sum(axis=0)
        completeness = float(np.max(np.abs(total - np.eye(e.dim))))
        if completeness > tol.recon:
            violations.append(f"elements sum to identity only within {completeness:.3g}")
    else:
        trace_res = [float(abs(t - 1.0)) for t in e.traces()]
        violations += [f"element {i}: trace off by {r:.3g}"
                       for i, r in enumerate(trace_res) if r > tol.recon]
    rank = centered_rank(e, tol.rel)
    return ValidationReport(
        valid=not violations,
        kind=e.kind,
        n=e.n,
        dim=e.dim,
        min_eigenvalues=[float(m) for m in mins],
        informationally_complete=rank == e.dim ** 2 - 1,
        centered_rank=rank,
        completeness_residual=completeness,
        trace_residuals=trace_res,
        violations=violations,
    )


def _projectors(vectors) -> np.ndarray:
    v = np.asarray(vectors, dtype=complex)
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    return v[:, :, None] * v[:, None, :].conj()


def _from_projectors(projs, kind: Kind, weight: float, label: str) -> Ensemble:
    kind = Kind(kind)
    el = projs * weight if kind is Kind.MEASUREMENT else projs
    return Ensemble(kind, el, label)


_PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


def bloch_state(r) -> np.ndarray:
    """Qubit operator ``(I + r . sigma) / 2``."""
    return 0.5 * (np.eye(2) + np.einsum("k,kab->ab", np.asarray(r, dtype=float), _PAULI))


def bloch_vector(rho) -> np.ndarray:
    return np.real(np.einsum("kab,...ba->...k", _PAULI, np.asarray(rho)))


def weyl_heisenberg(d: int, a: int, b: int) -> np.ndarray:
    """Displacement ``X^a Z^b`` with ``X|j> = |j+1>`` and ``Z|j> = w^j |j>``."""
    omega = np.exp(2j * np.pi / d)
    x = np.roll(np.eye(d), 1, axis=0)
    z = np.diag(omega ** np.arange(d))
    return np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b)


def make_sic(d: int, kind=Kind.MEASUREMENT) -> Ensemble:
    """SIC ensemble for ``d`` in {2, 3}.

    d = 2 uses the regular tetrahedron of Bloch vectors
    ``(1,1,1), (1,-1,-1), (-1,1,-1), (-1,-1,1)`` (over sqrt 3).  d = 3 is the
    Weyl-Heisenberg orbit of ``(0, 1, -1)/sqrt 2`` ordered by ``(a, b)`` with
    ``a`` the shift power.  Measurement elements are the projectors over d.
    """
    if d == 2:
        dirs = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3)
        projs = np.array([bloch_state(r) for r in dirs])
    elif d == 3:
        fid = np.array([0, 1, -1], dtype=complex) / np.sqrt(2)
        vecs = [weyl_heisenberg(3, a, b) @ fid for a in range(3) for b in range(3)]
        projs = _projectors(vecs)
    else:
        raise UnsupportedDimensionError(f"SIC ensembles are available for d in {{2, 3}}, not {d}")
    return _from_projectors(projs, kind, 1.0 / d, f"sic-{d}")


def _is_prime(d: int) -> bool:
    return d >= 2 and all(d % p for p in range(2, int(d ** 0.5) + 1))


def mub_vectors(d: int) -> np.ndarray:
    """The ``d + 1`` bases as an array of shape ``(d + 1, d, d)`` of kets.

    Basis 0 is computational.  For d = 2 the others are the X and Y eigenbases;
    for odd primes basis ``b + 1`` has kets
    ``|e_bj> = sum_m w^(b m^2 + j m) |m> / sqrt d``.
    """
    if not _is_prime(d):
        raise UnsupportedDimensionError(f"MUB construction needs a prime dimension, got {d}")
    bases = [np.eye(d, dtype=complex)]
    if d == 2:
        s = 1 / np.sqrt(2)
        bases.append(np.array([[s, s], [s, -s]], dtype=complex))
        bases.append(np.array([[s, 1j * s], [s, -1j * s]], dtype=complex))
    else:
        omega = np.exp(2j * np.pi / d)
        m = np.arange(d)
        for b in range(d):
            bases.append(np.array([omega ** ((b * m * m + j * m) % d) for j in range(d)]) / np.sqrt(d))
    return np.array(bases)


def make_mub(d: int, kind=Kind.MEASUREMENT) -> Ensemble:
    """Complete MUB ensemble, basis-major ordering; measurements weigh each projector by 1/(d+1)."""
    vecs = mub_vectors(d).reshape(d * (d + 1), d)
    return _from_projectors(_projectors(vecs), kind, 1.0 / (d + 1), f"mub-{d}")


def computational(d: int) -> Ensemble:
    projs = np.array([np.diag(np.eye(d)[i]) for i in range(d)], dtype=complex)
    return Ensemble(Kind.MEASUREMENT, projs, f"computational({d})")


def trine() -> Ensemble:
    """``(2/3)|phi_i><phi_i|`` with Bloch vectors at 0, 120, 240 degrees in the x-z plane."""
    angles = 2 * np.pi * np.arange(3) / 3
    projs = np.array([bloch_state([np.sin(a), 0.0, np.cos(a)]) for a in angles])
    return Ensemble(Kind.MEASUREMENT, projs * (2.0 / 3.0), "trine")


def tensor(a: Ensemble, b: Ensemble) -> Ensemble:
    """Product ensemble ``{a_i (x) b_j}`` in ``(i, j)`` row-major order."""
    if a.kind != b.kind:
        raise ValueError("cannot tensor a measurement with a state family")
    el = np.einsum("iab,jcd->ijacbd", a.elements, b.elements)
    d = a.dim * b.dim
    return Ensemble(a.kind, el.reshape(a.n * b.n, d, d), f"{a.label}*{b.label}")


_PARAM = re.compile(r"^([a-z0-9-]+?)(?:\((\d+)\)|[:-](\d+))?$")


def builtin(name: str) -> Ensemble:
    """Named ensembles.

    ``trine``, ``tetrahedron`` (the d = 2 SIC POVM), ``bb84-states``
    (|0>, |1>, |+>, |->), ``pair`` (|0>, |+>) and ``computational(d)``.
    ``sic(d)``, ``sic-states(d)``, ``mub(d)`` and ``mub-states(d)`` are also
    accepted.
    """
    key = name.strip().lower()
    if key == "trine":
        return trine()
    if key == "tetrahedron":
        e = make_sic(2, Kind.MEASUREMENT)
        return Ensemble(e.kind, e.elements, "tetrahedron")
    if key == "bb84-states":
        projs = np.array([bloch_state(r) for r in ([0, 0, 1], [0, 0, -1], [1, 0, 0], [-1, 0, 0])])
        return Ensemble(Kind.STATES, projs, "bb84-states")
    if key in ("pair", "pair(|0>,|+>)"):
        projs = np.array([bloch_state([0, 0, 1]), bloch_state([1, 0, 0])])
        return Ensemble(Kind.STATES, projs, "pair")
    m = _PARAM.match(key)
    if m and (m.group(2) or m.group(3)):
        base, d = m.group(1), int(m.group(2) or m.group(3))
        makers = {
            "computational": lambda: computational(d),
            "sic": lambda: make_sic(d, Kind.MEASUREMENT),
            "sic-states": lambda: make_sic(d, Kind.STATES),
            "mub": lambda: make_mub(d, Kind.MEASUREMENT),
            "mub-states": lambda: make_mub(d, Kind.STATES),
        }
        if base in makers:
            return makers[base]()
    raise KeyError(f"unknown builtin ensemble {name!r}")
