import math

import numpy as np
import pytest

from srm.dscm import dark_covariance, quadrature_gap
from srm.errors import DomainError, SingularCovariance, StabilityError
from srm.metrology import (
    dark_state_moments,
    error_propagation,
    gmsc,
    moment_matrix,
    msc,
    shot_noise_fim,
    squeezing_from_moments,
    squeezing_matrix,
    squeezing_report,
    xi_cov_bound,
)
from srm.model import EnsembleConfig, TaskVector, config_from_task
from srm.potential import curvature
from srm.sampling import make_rng, random_stable_config, random_task

from conftest import uniform

R2 = 1 / math.sqrt(2)


def rayleigh_f(lam, v):
    return float(np.sum(lam * v**2) / np.sum(v**2))


def test_shot_noise_diag():
    np.testing.assert_allclose(shot_noise_fim(uniform(2, N=100)), np.diag([50, 50]))
    cfg = EnsembleConfig(M=2, N=70, eta=[3 / 7, 4 / 7], c=[R2, R2])
    np.testing.assert_allclose(shot_noise_fim(cfg), np.diag([30, 40]), atol=1e-12)
    rng = make_rng(40)
    for _ in range(20):
        cfg = random_stable_config(rng)
        assert np.trace(shot_noise_fim(cfg)) == pytest.approx(cfg.N, rel=1e-12)


def test_moment_matrix_identity():
    np.testing.assert_allclose(moment_matrix(np.eye(3), np.eye(3)), np.eye(3))


def test_moment_matrix_quadratic_scaling():
    rng = make_rng(41)
    C = rng.normal(size=(3, 3))
    G = np.eye(3) + 0.1 * np.ones((3, 3))
    np.testing.assert_allclose(moment_matrix(2.5 * C, G), 6.25 * moment_matrix(C, G), rtol=1e-12)


def test_moment_matrix_singular():
    G = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularCovariance):
        moment_matrix(np.eye(2), G)


def test_moments_reproduce_squeezing_matrix():
    rng = make_rng(42)
    for _ in range(200):
        cfg = random_stable_config(rng)
        xi2 = squeezing_from_moments(cfg, dark_state_moments(cfg))
        np.testing.assert_allclose(xi2, squeezing_matrix(cfg), atol=1e-9 * max(1, np.abs(xi2).max()))


def test_squeezing_matrix_is_y_block():
    rng = make_rng(43)
    for _ in range(50):
        cfg = random_stable_config(rng)
        np.testing.assert_allclose(squeezing_matrix(cfg), dark_covariance(cfg).gamma_y, atol=1e-13)


def test_squeezing_identity_at_origin():
    np.testing.assert_allclose(squeezing_matrix(uniform(4)), np.eye(4), atol=1e-15)


@pytest.mark.parametrize("M", [2, 3, 5])
def test_uniform_diagonal_and_min(M):
    rng = make_rng(44 + M)
    eta = rng.dirichlet(np.ones(M))
    eta[-1] = 1 - eta[:-1].sum()
    signs = rng.choice([-1.0, 1.0], size=M)
    kappa = 0.3
    cfg = EnsembleConfig(M=M, N=100, eta=eta, c=signs / math.sqrt(M), theta=math.sqrt(M) * math.acos(kappa))
    xi2 = squeezing_matrix(cfg)
    np.testing.assert_allclose(np.diag(xi2), 1 - eta * (1 - kappa), atol=1e-13)
    vals, vecs = np.linalg.eigh(xi2)
    assert vals[0] == pytest.approx(kappa, abs=1e-13)
    target = signs * np.sqrt(eta)
    assert abs(abs(vecs[:, 0] @ target) - 1) < 1e-12


def test_msc_trivial_at_origin():
    cfg = uniform(3)
    assert msc(cfg, TaskVector.normalized([1, -2, 3])) == pytest.approx(1.0, abs=1e-14)


def test_msc_for_designed_config():
    n = TaskVector.normalized([0.3, -0.5, 0.8])
    cfg = config_from_task(n, 3, 90, 1.1)
    assert msc(cfg, n) == pytest.approx(curvature(cfg, cfg.theta), abs=1e-12)


def test_msc_orthogonal_direction():
    rng = make_rng(45)
    for _ in range(50):
        cfg = random_stable_config(rng, M_range=(2, 6))
        vals, vecs = np.linalg.eigh(squeezing_matrix(cfg))
        pops = cfg.populations
        # m = F^{-1/2} n orthogonal to the minimal eigenvector
        m = vecs[:, 1]
        n = TaskVector.normalized(np.sqrt(pops) * m)
        assert msc(cfg, n) >= vals[1] - 1e-10


def test_rayleigh_sandwich():
    rng = make_rng(46)
    for _ in range(300):
        cfg = random_stable_config(rng)
        rep = squeezing_report(cfg, random_task(rng, cfg.M))
        assert rep.eigvals[0] - 1e-12 <= rep.msc <= rep.eigvals[-1] + 1e-12
        assert rep.chi >= 1 - 1e-12
        assert rep.gmsc == pytest.approx(rep.chi * rep.msc, rel=1e-12)
        assert 1 / cfg.N - 1e-12 <= rep.sn_opt_variance <= cfg.M / cfg.N + 1e-12


def test_designed_chi_is_one():
    n = TaskVector.normalized([1.0, -2.0, 0.5])
    cfg = config_from_task(n, 3, 70, 0.9)
    g, chi = gmsc(cfg, n)
    assert chi == pytest.approx(1.0, abs=1e-12)
    assert g == pytest.approx(msc(cfg, n), abs=1e-12)


def test_chi_above_one_off_allocation():
    n = TaskVector.normalized([1.0, 2.0])
    cfg = uniform(2, theta=0.5)
    _, chi = gmsc(cfg, n)
    assert chi > 1 + 1e-3


def test_sn_opt_variance_values():
    rep = squeezing_report(uniform(2, N=100, theta=0.2), TaskVector([R2, -R2]))
    assert rep.sn_opt_variance == pytest.approx(0.02, abs=1e-15)
    rep = squeezing_report(uniform(4, N=40, theta=0.2), TaskVector([0.5, 0.5, -0.5, 0.5]))
    assert rep.sn_opt_variance == pytest.approx(4 / 40, abs=1e-15)


def test_chi_sign_invariance():
    rng = make_rng(47)
    for _ in range(30):
        M = int(rng.integers(2, 6))
        n = random_task(rng, M)
        flip = rng.choice([-1.0, 1.0], size=M)
        a = config_from_task(n, M, 50, 0.4)
        b = config_from_task(TaskVector(n.n * flip), M, 50, 0.4)
        assert gmsc(a, n)[1] == pytest.approx(gmsc(b, TaskVector(n.n * flip))[1], abs=1e-12)


def test_cov_bound_uniform():
    cfg = uniform(3, theta=0.8)
    bound, gap = xi_cov_bound(cfg)
    assert gap == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(bound, squeezing_matrix(cfg), atol=1e-12)


def test_cov_bound_origin():
    bound, _ = xi_cov_bound(uniform(2))
    np.testing.assert_allclose(bound, np.eye(2), atol=1e-15)


def test_cov_bound_ordering():
    rng = make_rng(48)
    for _ in range(300):
        cfg = random_stable_config(rng)
        bound, gap = xi_cov_bound(cfg)
        diff = squeezing_matrix(cfg) - bound
        assert np.linalg.eigvalsh(diff)[0] >= -1e-10 * max(1.0, np.abs(bound).max())
        t2, _ = quadrature_gap(cfg)
        assert gap == pytest.approx(t2, abs=1e-9 * max(1.0, t2))


def test_error_propagation_degenerate():
    ep = error_propagation([0.5, 0.5, 0.5])
    assert ep.frob == 0.0
    assert np.all(ep.f2 == 0)


def test_error_propagation_value():
    ep = error_propagation([0.5, 1.0, 1.0])
    np.testing.assert_allclose(ep.f2, np.diag([0, 0.5, 0.5]))
    assert ep.frob == pytest.approx(math.sqrt(1 / 6), abs=1e-12)


def test_error_propagation_unsorted():
    with pytest.raises(DomainError):
        error_propagation([1.0, 0.5])


def test_error_propagation_second_order():
    rng = make_rng(49)
    for _ in range(50):
        lam = np.sort(rng.uniform(0.05, 2.0, size=int(rng.integers(2, 7))))
        ep = error_propagation(lam)
        e1 = np.zeros(lam.size)
        e1[0] = 1.0
        d = rng.normal(size=lam.size)
        d *= 1e-3 / np.linalg.norm(d)
        lhs = rayleigh_f(lam, e1 + d) - rayleigh_f(lam, e1)
        assert lhs == pytest.approx(d @ ep.f2 @ d, abs=1e-6)


def test_squeezing_requires_stability():
    with pytest.raises(StabilityError):
        squeezing_matrix(uniform(2, theta=3.0))
