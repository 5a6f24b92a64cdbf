import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from uipdg.bench import test1
from uipdg.exceptions import SolverError
from uipdg.forms import BoundaryData, SchemeSpec, assemble
from uipdg.linalg import as_csr, dump_matrix_market, is_symmetric, solve, spd_check
from uipdg.mesh import generate_structured
from uipdg.space import DGSpace


@pytest.mark.parametrize("method", ["auto", "dense", "direct", "cg", "bicgstab"])
def test_identity(method, rng):
    b = rng.standard_normal(50)
    x, rep = solve(sp.identity(50), b, method=method)
    assert np.allclose(x, b)
    assert rep.iterations <= 1


@pytest.mark.parametrize("method", ["dense", "direct", "cg", "bicgstab"])
def test_small_system(method):
    x, rep = solve(np.array([[2.0, 1.0], [1.0, 3.0]]), np.array([3.0, 4.0]), method=method)
    assert np.allclose(x, [1.0, 1.0])
    assert rep.residual <= 1e-10


def _suip(n=16, k=1, lam=1.0, eps=1, alpha0=8.0):
    case = test1(lam)
    space = DGSpace(generate_structured(n, partition="quadrant"), k)
    return space, assemble(space, case.diffusion, SchemeSpec("UIP", eps, alpha0, k), case.source,
                           BoundaryData(g_D=case.dirichlet))


def test_cg_on_suip():
    space, sys_ = _suip()
    x, rep = solve(sys_.matrix, sys_.rhs, method="cg", block_size=space.N)
    assert rep.method == "cg" and rep.converged
    assert rep.residual <= 1e-10
    assert np.linalg.norm(sys_.matrix @ x - sys_.rhs) <= 1e-10 * np.linalg.norm(sys_.rhs)


def test_bicgstab_on_nuip():
    space, sys_ = _suip(n=8, eps=-1)
    x, rep = solve(sys_.matrix, sys_.rhs, method="bicgstab", block_size=space.N)
    assert rep.residual <= 1e-10


def test_failure_is_reported():
    A = sp.diags([-np.ones(2999), 2 * np.ones(3000), -np.ones(2999)], [-1, 0, 1]).tocsr()
    with pytest.raises(SolverError) as info:
        solve(A, np.ones(3000), method="cg", max_iter=3)
    assert info.value.report is not None
    assert not info.value.report.converged
    assert len(info.value.report.history) >= 1


def test_shape_checks():
    with pytest.raises(ValueError):
        solve(np.eye(3), np.ones(2))
    with pytest.raises(ValueError):
        solve(np.eye(2), np.ones(2), method="magic")


def test_zero_rhs():
    x, rep = solve(sp.identity(4), np.zeros(4))
    assert np.all(x == 0) and rep.iterations == 0


def test_spd_examples():
    assert spd_check(np.eye(5))
    assert not spd_check(np.diag([1.0, -1.0]))
    _, sys_ = _suip(n=8, lam=1e6)
    assert spd_check(sys_.matrix)
    with pytest.raises(ValueError):
        spd_check(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_spd_sparse_path():
    _, sys_ = _suip(n=24, k=2, lam=1e4)
    assert sys_.matrix.shape[0] > 2000
    assert spd_check(sys_.matrix)
    assert not spd_check(sys_.matrix - 1e9 * sp.identity(sys_.matrix.shape[0]))


def test_csr_canonical(rng):
    _, sys_ = _suip(n=4)
    A = as_csr(sys_.matrix)
    assert A.has_sorted_indices and A.has_canonical_format
    assert np.all(np.isfinite(A.data))
    assert is_symmetric(A)
    v = rng.standard_normal(A.shape[0])
    assert A.shape[0] <= 200
    dense = A.toarray() @ v
    assert np.linalg.norm(A @ v - dense) <= 1e-13 * np.linalg.norm(dense)
    with pytest.raises(ValueError):
        as_csr(sp.csr_matrix(np.array([[np.nan]])))


def test_matrix_market_round_trip(tmp_path):
    _, sys_ = _suip(n=2)
    dump_matrix_market(sys_.matrix, tmp_path / "a.mtx")
    back = scipy.io.mmread(str(tmp_path / "a.mtx")).tocsr()
    assert abs(back - sys_.matrix).max() <= 1e-15 * abs(sys_.matrix).max()
