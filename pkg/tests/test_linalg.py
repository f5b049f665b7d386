import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qregion.config import Tolerances, default_rel_tol
from qregion.linalg import (
    DimensionError,
    NotHermitianError,
    NotPSDError,
    as_operator,
    eig_hermitian,
    hermiticity_error,
    hs_inner,
    min_eigenvalue,
    pinv_gram,
    sqrt_psd,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_psd(seed, n, rank, cond=1e3):
    """PSD matrix of the given rank with nonzero spectrum in ``[1, cond]``."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.zeros(n)
    lam[:rank] = np.exp(rng.uniform(0, np.log(cond), size=rank))
    return (q * lam) @ q.T


def test_as_operator_rejects_non_square():
    with pytest.raises(DimensionError):
        as_operator(np.zeros((2, 3)))


def test_as_operator_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        as_operator(np.array([[0, 1], [0, 0]]))


def test_as_operator_accepts_roundoff_asymmetry():
    a = np.array([[1.0, 1e-12j], [0, 0]])
    out = as_operator(a, tol=1e-10)
    assert out.dtype == complex
    assert hermiticity_error(out) == pytest.approx(1e-12)


def test_hs_inner_of_paulis():
    x = np.array([[0, 1], [1, 0]])
    z = np.diag([1, -1])
    assert hs_inner(x, z) == 0.0
    assert hs_inner(z, z) == 2.0


def test_eig_hermitian_descending_and_reconstructs():
    m = np.array([[2, 1j], [-1j, 2]])
    sd = eig_hermitian(m)
    assert sd.eigenvalues[0] >= sd.eigenvalues[1]
    np.testing.assert_allclose(sd.eigenvalues, [3, 1])
    np.testing.assert_allclose(sd.reconstruct(), m, atol=1e-14)


def test_pinv_gram_rank_and_projector():
    m = random_psd(0, 5, 3)
    f = pinv_gram(m)
    assert f.rank == 3
    np.testing.assert_allclose(f.projector @ f.projector, f.projector, atol=1e-12)
    np.testing.assert_allclose(f.projector, m @ f.pinv, atol=1e-10)


def test_pinv_gram_rejects_negative():
    with pytest.raises(NotPSDError):
        pinv_gram(np.diag([1.0, -0.5]))


def test_pinv_gram_rejects_asymmetric():
    with pytest.raises(NotHermitianError):
        pinv_gram(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_pinv_of_zero_is_zero():
    f = pinv_gram(np.zeros((3, 3)))
    assert f.rank == 0
    assert not f.pinv.any()


def test_default_rel_tol_scales_with_size():
    assert default_rel_tol(9, 3) == 64 * np.finfo(float).eps * 9
    assert default_rel_tol(10, 2) > default_rel_tol(4, 2)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=st.integers(1, 8), data=st.data())
def test_pinv_penrose_and_involution(seed, n, data):
    rank = data.draw(st.integers(0, n))
    m = random_psd(seed, n, rank)
    f = pinv_gram(m)
    assert f.rank == rank
    assert max(f.penrose_residuals(m)) <= 1e-9 * max(1.0, np.abs(m).max())
    back = pinv_gram(f.pinv)
    np.testing.assert_allclose(back.pinv, m, atol=1e-7 * max(1.0, np.abs(m).max()))


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=st.integers(1, 6))
def test_sqrt_psd_squares_back(seed, n):
    m = random_psd(seed, n, n)
    s = sqrt_psd(m)
    np.testing.assert_allclose(s, s.T, atol=1e-12)
    np.testing.assert_allclose(s @ s, m, atol=1e-9 * max(1.0, np.abs(m).max()))
    assert min_eigenvalue(s) >= -1e-12


def test_sqrt_psd_rejects_negative():
    with pytest.raises(NotPSDError):
        sqrt_psd(np.diag([1.0, -1.0]), tol_psd=1e-10)


def test_tolerances_env_and_override():
    env = {"QREGION_TOL_RANGE": "1e-6", "QREGION_TOL_MEMBER": ""}
    t = Tolerances.from_env(env, member=1e-5)
    assert t.range == 1e-6 and t.member == 1e-5
    t2 = Tolerances.from_env(env, range=1e-3)
    assert t2.range == 1e-3
    assert t.with_(herm=None).herm == Tolerances().herm
    assert set(t.to_dict()) == {"herm", "psd", "recon", "penrose", "range", "member", "rel"}
