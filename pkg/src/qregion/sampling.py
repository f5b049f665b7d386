"""Random states and effects.

Every sampler takes a ``seed`` that may be an int, a
:class:`numpy.random.SeedSequence` or an existing
:class:`numpy.random.Generator`, so the same call with the same seed always
returns the same operators.  The ``*_batch`` variants return stacks of shape
``(size, d, d)`` and are what the verification loops use.
"""

from __future__ import annotations

import numpy as np

KINDS = ("haar_pure", "mixed", "projector", "random_effect")


def rng_from(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def split_seed(seed, count: int) -> list[np.random.Generator]:
    """Independent generators for parallel tasks, derived from one seed."""
    if isinstance(seed, np.random.Generator):
        return list(seed.spawn(count))
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(count)]


def _ginibre(rng, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def haar_unitary_batch(d: int, size: int, seed=None) -> np.ndarray:
    """Haar unitaries by QR of complex Gaussian matrices with phase fixing."""
    rng = rng_from(seed)
    z = _ginibre(rng, (size, d, d))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[:, None, :]


def haar_unitary(d: int, seed=None) -> np.ndarray:
    return haar_unitary_batch(d, 1, seed)[0]


def haar_pure_batch(d: int, size: int, seed=None) -> np.ndarray:
    u = haar_unitary_batch(d, size, seed)
    psi = u[:, :, 0]
    return psi[:, :, None] * psi[:, None, :].conj()


def mixed_batch(d: int, rank: int, size: int, seed=None) -> np.ndarray:
    """Unit-trace PSD operators of the given rank (induced Ginibre measure)."""
    if not 1 <= rank <= d:
        raise ValueError(f"rank must be in [1, {d}], got {rank}")
    rng = rng_from(seed)
    g = _ginibre(rng, (size, d, rank))
    rho = g @ np.swapaxes(g, -1, -2).conj()
    tr = np.real(np.trace(rho, axis1=-2, axis2=-1))
    return rho / tr[:, None, None]


def projector_batch(d: int, k: int, size: int, seed=None) -> np.ndarray:
    """Haar-rotated rank-``k`` projectors."""
    if not 0 <= k <= d:
        raise ValueError(f"trace must be in [0, {d}], got {k}")
    u = haar_unitary_batch(d, size, seed)[:, :, :k]
    return u @ np.swapaxes(u, -1, -2).conj()


def random_effect_batch(d: int, size: int, seed=None) -> np.ndarray:
    """Mixtures ``w P1 + (1 - w) P2`` of two Haar projectors of uniform random trace.

    This is a harness distribution that reaches every trace class; it is not
    meant to be a canonical measure on effects.
    """
    rng = rng_from(seed)
    ks = rng.integers(0, d + 1, size=(2, size))
    w = rng.uniform(size=size)
    u = haar_unitary_batch(d, 2 * size, rng).reshape(2, size, d, d)
    cols = np.arange(d)
    out = np.zeros((size, d, d), dtype=complex)
    for j, weight in enumerate((w, 1.0 - w)):
        mask = (cols[None, :] < ks[j][:, None]).astype(float)
        uk = u[j] * mask[:, None, :]
        out += weight[:, None, None] * (uk @ np.swapaxes(uk, -1, -2).conj())
    return out


def sample(kind: str, d: int, seed=None, *, rank: int | None = None,
           k: int | None = None) -> np.ndarray:
    """Draw a single operator of the requested ``kind``.

    ``kind`` is one of ``haar_pure``, ``mixed`` (needs ``rank``),
    ``projector`` (needs ``k``) or ``random_effect``.
    """
    if kind == "haar_pure":
        return haar_pure_batch(d, 1, seed)[0]
    if kind == "mixed":
        if rank is None:
            raise ValueError("mixed sampling needs a rank")
        return mixed_batch(d, rank, 1, seed)[0]
    if kind == "projector":
        if k is None:
            raise ValueError("projector sampling needs a trace k")
        return projector_batch(d, k, 1, seed)[0]
    if kind == "random_effect":
        return random_effect_batch(d, 1, seed)[0]
    raise ValueError(f"unknown sample kind {kind!r}; expected one of {KINDS}")
