import numpy as np
import pytest

from ladmc.lrmc import SolveDiagnostics, SvpOptions, svp_complete, truncated_svd_project


def test_options_validation():
    with pytest.raises(ValueError):
        SvpOptions(rank=0)
    with pytest.raises(ValueError):
        SvpOptions(rank=2, step_size=0.0)
    with pytest.raises(ValueError):
        SvpOptions(rank=2, rel_tol=-1.0)


def test_project_diag():
    got = truncated_svd_project(np.diag([3.0, 2.0, 1.0]), 2)
    np.testing.assert_allclose(got, np.diag([3.0, 2.0, 0.0]), atol=1e-12)


def test_project_fixed_point():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((8, 3)) @ rng.standard_normal((3, 8))
    got = truncated_svd_project(M, 3)
    assert np.linalg.norm(got - M) / np.linalg.norm(M) < 1e-10


def test_project_error_matches_spectrum():
    # independent oracle: the optimal rank-3 error is the tail of the spectrum
    rng = np.random.default_rng(1)
    M = rng.standard_normal((10, 10))
    s = np.linalg.svd(M, compute_uv=False)
    expected = np.sqrt(np.sum(s[3:] ** 2))
    got = np.linalg.norm(truncated_svd_project(M, 3) - M)
    assert abs(got - expected) < 1e-10


def test_project_rectangular_paths_agree():
    # the Gram-side shortcut must match the plain SVD projection
    rng = np.random.default_rng(2)
    for shape in [(5, 40), (40, 5)]:
        M = rng.standard_normal(shape)
        fast = truncated_svd_project(M, 3)
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
        ref = (U[:, :3] * s[:3]) @ Vt[:3]
        np.testing.assert_allclose(fast, ref, atol=1e-10)


def test_project_infeasible_rank():
    with pytest.raises(ValueError):
        truncated_svd_project(np.zeros((3, 5)), 4)


def test_svp_rank1_closed_form():
    # x22 = m12 * m21 / m11 = 4 for a rank-1 completion of [[1,2],[2,?]]
    M = np.array([[1.0, 2.0], [2.0, 0.0]])
    mask = np.array([[True, True], [True, False]])
    Z, diag = svp_complete(M, mask, SvpOptions(rank=1, max_iters=1000,
                                               rel_tol=1e-12))
    assert abs(Z[1, 1] - 4.0) < 1e-6
    assert diag.converged


def test_svp_fully_observed_fixed_point():
    rng = np.random.default_rng(3)
    M = rng.standard_normal((9, 6)) @ rng.standard_normal((6, 9))
    mask = np.ones_like(M, dtype=bool)
    Z, diag = svp_complete(M, mask, SvpOptions(rank=6))
    assert np.linalg.norm(Z - M) / np.linalg.norm(M) < 1e-6
    assert diag.converged
    assert diag.iterations_run <= 2


def test_svp_fully_observed_matches_projection():
    rng = np.random.default_rng(4)
    M = rng.standard_normal((12, 12))
    mask = np.ones_like(M, dtype=bool)
    Z, _ = svp_complete(M, mask, SvpOptions(rank=4, max_iters=50))
    ref = truncated_svd_project(M, 4)
    assert np.linalg.norm(Z - ref) / np.linalg.norm(ref) < 1e-8


def test_svp_iterate_rank_bounded():
    rng = np.random.default_rng(5)
    M = rng.standard_normal((10, 4)) @ rng.standard_normal((4, 10))
    mask = rng.random(M.shape) < 0.8
    Z, diag = svp_complete(M, mask, SvpOptions(rank=4, max_iters=200))
    s = np.linalg.svd(Z, compute_uv=False)
    assert s[4] / s[0] < 1e-10
    assert diag.singular_values.shape == (5,)


def test_svp_residual_not_worse_than_zero_fill():
    # final observed-entry RMS residual never exceeds that of the all-zero
    # estimate (the RMS of the observed values themselves)
    rng = np.random.default_rng(6)
    M = rng.standard_normal((10, 3)) @ rng.standard_normal((3, 10))
    mask = rng.random(M.shape) < 0.7
    _, diag = svp_complete(M, mask, SvpOptions(rank=3, max_iters=100))
    zero_rms = np.linalg.norm(M[mask]) / np.sqrt(mask.sum())
    assert 0.0 <= diag.final_residual <= zero_rms


def test_svp_determinism():
    rng = np.random.default_rng(7)
    M = rng.standard_normal((8, 30))
    mask = rng.random(M.shape) < 0.6
    opts = SvpOptions(rank=3, max_iters=40, seed=1)
    Z1, d1 = svp_complete(M, mask, opts)
    Z2, d2 = svp_complete(M, mask, opts)
    assert np.array_equal(Z1, Z2)
    assert d1.iterations_run == d2.iterations_run


def test_svp_accelerated_matches_plain_solution():
    M = np.array([[1.0, 2.0], [2.0, 0.0]])
    mask = np.array([[True, True], [True, False]])
    Z, diag = svp_complete(M, mask, SvpOptions(rank=1, max_iters=1000,
                                               rel_tol=1e-12, accel=True))
    assert abs(Z[1, 1] - 4.0) < 1e-6
    assert diag.converged


def test_svp_accelerated_converges_faster():
    # on a partially observed low-rank matrix, momentum reaches the same
    # tolerance in fewer iterations than the plain update
    rng = np.random.default_rng(9)
    M = rng.standard_normal((20, 5)) @ rng.standard_normal((5, 60))
    mask = rng.random(M.shape) < 0.6
    plain = SvpOptions(rank=5, max_iters=3000, rel_tol=1e-10)
    fast = SvpOptions(rank=5, max_iters=3000, rel_tol=1e-10, accel=True)
    _, d_plain = svp_complete(M, mask, plain)
    Z, d_fast = svp_complete(M, mask, fast)
    assert d_fast.converged
    assert d_fast.iterations_run < d_plain.iterations_run
    assert np.linalg.norm(Z - M) / np.linalg.norm(M) < 1e-4


def test_svp_accel_restart_validation():
    with pytest.raises(ValueError):
        SvpOptions(rank=1, accel_restart=0)


def test_svp_errors():
    M = np.zeros((3, 3))
    with pytest.raises(ValueError, match="nothing observed"):
        svp_complete(M, np.zeros_like(M, dtype=bool), SvpOptions(rank=1))
    with pytest.raises(ValueError):
        svp_complete(M, np.ones_like(M, dtype=bool), SvpOptions(rank=4))
    with pytest.raises(ValueError):
        svp_complete(M, np.ones((3, 2), dtype=bool), SvpOptions(rank=1))


def test_svp_divergent_step_reported_unconverged():
    rng = np.random.default_rng(8)
    M = rng.standard_normal((6, 6))
    mask = rng.random(M.shape) < 0.8
    _, diag = svp_complete(M, mask, SvpOptions(rank=2, step_size=50.0,
                                               max_iters=200))
    assert not diag.converged


def test_diagnostics_defaults():
    d = SolveDiagnostics(iterations_run=1, final_residual=0.0, converged=True)
    assert d.singular_values.size == 0
