import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from egedyn.errors import ArgumentError
from egedyn.linalg import first_minors
from egedyn.process import Initial, SimConfig, increments_from_normals
from egedyn.reports import apply_family_threshold
from egedyn.sde_verify import (QVTarget, _coordinate_pairs, char_poly_coordinate_derivatives,
                               char_poly_second_derivatives, coordinate_basis, coordinate_names,
                               derivative_error_sweep, eigenvalue_gradient, median_of_means,
                               non_collision_report, vandermonde_inverse, verify_char_poly_derivatives,
                               verify_drift, verify_gradient_inner_products, verify_implicit_derivatives,
                               verify_laplacian, verify_martingale_term, verify_qv,
                               verify_vandermonde_martingale)
from egedyn.spectral import EnsembleTracks, decompose, simulate_ensemble, track_path

from conftest import gauss_cmatrix

J3 = np.array([[1, 2j, 0], [0.5, -1, 1], [1j, 0, 2]], dtype=complex)
# d lambda / d eta at tau = 0.5 for the eigenvalue near -1.313 - 0.356i,
# 0-based coordinate keys; reference computed offline with mpmath at 40 digits
GRAD_J3 = {
    ("x", 0, 0): 0.11648877979208738 + 0.082111718142093833j,
    ("x", 0, 1): -0.18127959322505565 - 0.32826239949186749j,
    ("y", 0, 1): -0.49808678783458261 + 0.017631728864697965j,
    ("alpha", 0, 2): -0.054071218528821926 + 0.033267355901975955j,
    ("beta", 1, 2): -0.01526656145746229 - 0.008476263005847213j,
    ("alpha", 1, 1): 0.033797984624088192 + 0.40461047142275844j,
}


def label_near(J, z):
    return int(np.abs(decompose(J).eigenvalues - z).argmin())


def random_state(n, seed):
    return gauss_cmatrix(n, np.random.default_rng(seed))


# ---------------------------------------------------------------- coordinates

def test_coordinate_names():
    assert coordinate_names(2) == ["x1,1", "x1,2", "x2,2", "alpha1,1", "alpha1,2", "alpha2,2",
                                   "y1,2", "beta1,2"]
    assert len(coordinate_names(5)) == 50


@pytest.mark.parametrize("tau", [-1.0, -0.3, 0.0, 0.6, 1.0])
def test_basis_generates_the_increments(tau, rng):
    # increments are sum_m eta_m E_m with eta the standard normals of the generator
    n, dt = 4, 0.01
    g = rng.standard_normal((2, n, n))
    E = coordinate_basis(n, tau)
    eta = []
    for kind, k, l in _coordinate_pairs(n):
        eta.append({"x": g[0, k, l], "alpha": g[1, k, l], "y": g[0, l, k], "beta": g[1, l, k]}[kind])
    recon = math.sqrt(dt) * np.einsum("m,mkl->kl", np.array(eta), E)
    assert np.allclose(recon, increments_from_normals(g, tau, dt), atol=1e-15)


@pytest.mark.parametrize("tau", [-0.4, 0.0, 0.7])
def test_basis_covariance(tau):
    E = coordinate_basis(3, tau)
    # sum_m E_m[kl] conj E_m[k'l'] = delta, sum_m E_m[kl] E_m[k'l'] = tau delta_(kl),(l'k')
    mixed = np.einsum("mab,mcd->abcd", E, E.conj())
    holo = np.einsum("mab,mcd->abcd", E, E)
    eye = np.einsum("ac,bd->abcd", np.eye(3), np.eye(3))
    swap = np.einsum("ad,bc->abcd", np.eye(3), np.eye(3))
    assert np.allclose(mixed, eye) and np.allclose(holo, tau * swap)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), tau=st.floats(-1, 1))
def test_first_derivatives_match_cofactor_contraction(seed, n, tau):
    r = np.random.default_rng(seed)
    J = gauss_cmatrix(n, r)
    lam = complex(r.standard_normal(), r.standard_normal())
    A = lam * np.eye(n) - J
    C = ((-1.0) ** np.add.outer(np.arange(n), np.arange(n))) * first_minors(A) if n > 1 \
        else np.ones((1, 1))
    # d det(A)/d eta = -sum_kl C_kl E_kl
    ref = -np.einsum("kl,mkl->m", C, coordinate_basis(n, tau))
    got = char_poly_coordinate_derivatives(J, lam, tau)
    assert np.allclose(got, ref, rtol=1e-9, atol=1e-9 * np.abs(ref).max())


def test_second_derivatives_against_differences(rng):
    J = gauss_cmatrix(4, rng)
    lam, tau, h = 0.3 - 0.2j, 0.35, 1e-3
    E = coordinate_basis(4, tau)
    A = lam * np.eye(4) - J
    fd = (np.linalg.det(A - h * E) - 2 * np.linalg.det(A) + np.linalg.det(A + h * E)) / h ** 2
    an = char_poly_second_derivatives(J, lam, tau)
    assert np.allclose(an, fd, atol=1e-5 * np.abs(an).max())


def test_gradient_reference_values():
    i = label_near(J3, -1.3129 - 0.3564j)
    grad = eigenvalue_gradient(J3, decompose(J3).eigenvalues, i, 0.5)
    keys = _coordinate_pairs(3)
    for key, ref in GRAD_J3.items():
        assert abs(grad[keys.index(key)] - ref) < 1e-12


def test_gradient_scalar_case():
    g = eigenvalue_gradient(np.array([[0.3 + 0.1j]]), [0.3 + 0.1j], 0, 0.2)
    assert g[0] == pytest.approx(math.sqrt(0.6))
    assert g[1] == pytest.approx(1j * math.sqrt(0.4))


def test_gradient_hermitian_limit(rng):
    A = gauss_cmatrix(3, rng)
    H = A + A.conj().T
    eigs = decompose(H).eigenvalues
    g = eigenvalue_gradient(H, eigs, 0, 1.0)
    # alpha and beta coordinates carry weight sqrt((1 - tau)/2) = 0
    names = coordinate_names(3)
    for m, name in enumerate(names):
        if name.startswith(("alpha", "beta")):
            assert g[m] == 0
    assert abs(np.sum(g.real ** 2) - 1.0) < 1e-10
    assert np.abs(g.imag).max() < 1e-10


# ---------------------------------------------------------------- deterministic verifiers

@pytest.mark.parametrize("tau", [0.0, 0.5, 1.0])
def test_implicit_and_char_poly_derivative_reports(tau):
    J = random_state(3, 4)
    assert verify_implicit_derivatives(J, tau, 1).passed
    assert all(r.passed for r in verify_char_poly_derivatives(J, tau, 0.2 + 0.4j))


def test_central_difference_error_is_quadratic():
    J = random_state(3, 1)
    err = derivative_error_sweep(J, 0.4, 0, [1e-2, 5e-3])
    assert err[0] / err[1] == pytest.approx(4.0, rel=0.1)


def test_gradient_identities_random():
    reps = verify_gradient_inner_products(random_state(4, 7), 0.3, 0, 2)
    assert len(reps) == 8 and all(r.passed for r in reps)


def test_gradient_identities_conformal():
    g = verify_gradient_inner_products(random_state(3, 2), 0.0, 1)
    rr = next(r for r in g if r.name == "gradR2.gradR2").estimate
    ii = next(r for r in g if r.name == "gradI2.gradI2").estimate
    assert abs(rr - ii) < 1e-8 * abs(rr)


def test_gradient_identities_hermitian():
    reps = verify_gradient_inner_products(np.diag([1.0, -1.0, 0.5]), 1.0, 0)
    assert all(r.passed for r in reps)
    assert next(r for r in reps if r.name == "gradR1.gradR1").estimate == pytest.approx(1.0)


def test_laplacian_conformal_is_zero():
    r = verify_laplacian(random_state(3, 3), 0.0, 0)
    assert r.passed and r.theory == 0


def test_laplacian_hermitian_two_level():
    r = verify_laplacian(np.diag([1.0, -1.0]), 1.0, 0)
    assert r.theory == pytest.approx(1.0)
    assert r.estimate == pytest.approx(1.0, abs=1e-3)
    assert r.details["pairwise_form"] == pytest.approx(1.0)


def test_laplacian_random():
    assert verify_laplacian(random_state(3, 5), 0.7, 2).passed


def test_label_range():
    with pytest.raises(ArgumentError):
        verify_implicit_derivatives(np.eye(2) * [1, 2], 0.1, 2)


# ---------------------------------------------------------------- one-step drift / martingale

def test_drift_hermitian_two_level():
    cfg = SimConfig(N=2, tau=1.0, seed=3)
    J = np.diag([1.0, -1.0]).astype(complex)
    i = label_near(J, 1.0)
    r = verify_drift(J, cfg, i, draws=20000)
    assert r.theory == pytest.approx(0.5)
    assert r.passed


def test_drift_conformal_zero():
    r = verify_drift(random_state(3, 8), SimConfig(N=3, tau=0.0, seed=1), 0, draws=20000)
    assert r.theory == 0 and r.passed


def test_drift_random_state():
    J = np.diag([-1.0, 0.4j, 1.2]) + 0.3 * random_state(3, 9)
    assert verify_drift(J, SimConfig(N=3, tau=0.5, seed=2), 1, draws=50000).passed


def test_martingale_residual_order():
    r = verify_martingale_term(np.diag([-1.0, 1.0]), SimConfig(N=2, tau=0.3), 0)
    assert r.passed and abs(r.estimate - 1.0) <= 0.15


def test_martingale_scalar_exact():
    r = verify_martingale_term(np.array([[0.5]]), SimConfig(N=1, tau=0.3), 0, draws=100)
    assert r.passed and abs(r.estimate) < 1e-12


def test_martingale_hermitian_prediction_real():
    r = verify_martingale_term(np.diag([-1.0, 0.0, 1.0]), SimConfig(N=3, tau=1.0), 1, draws=200)
    assert r.details["max_abs_imag_prediction"] <= 1e-10


# ---------------------------------------------------------------- quadratic variations

def test_qv_target_validation():
    with pytest.raises(ArgumentError):
        QVTarget("XY", (1, 1))
    with pytest.raises(ArgumentError):
        QVTarget("RR", (1, 4)).check(3)
    assert QVTarget("RI", (2, 1)).label == "RI(2,1)"


@pytest.fixture(scope="module")
def qv_tracks():
    cfg = SimConfig(N=3, tau=0.5, dt=1e-4, steps=500, seed=6, replicas=100,
                    initial=Initial("diagonal", (-1.0, 0.3j, 1.0)))
    return simulate_ensemble(cfg)


@pytest.mark.parametrize("target", [QVTarget("RR", (1, 1)), QVTarget("II", (2, 2)),
                                    QVTarget("RI", (1, 2)), QVTarget("complex_holomorphic", (3, 3)),
                                    QVTarget("complex_mixed", (1, 3))])
def test_qv_ensemble(qv_tracks, target):
    assert verify_qv(qv_tracks, target).passed


def test_qv_single_trajectory(qv_tracks):
    r = verify_qv(qv_tracks.trajectory(0), QVTarget("complex_mixed", (1, 1)))
    assert r.details["replicas"] == 1
    assert np.isfinite(r.z_score)


def test_qv_hermitian_imaginary_parts_vanish():
    cfg = SimConfig(N=3, tau=1.0, dt=1e-3, steps=50, seed=1, replicas=4)
    r = verify_qv(simulate_ensemble(cfg), QVTarget("II", (1, 1)))
    assert abs(r.estimate) < 1e-20 and r.passed


# ---------------------------------------------------------------- Vandermonde, non-collision

def test_vandermonde_inverse_two_level():
    assert vandermonde_inverse(np.array([3.0, 1.0])) == pytest.approx(0.5)


def test_median_of_means_constant():
    m, se = median_of_means(np.full(100, 2.5), 10)
    assert m == 2.5 and se == 0


def test_vandermonde_constant_paths_pass():
    paths = np.tile(np.array([-1.0, 0.0, 1.0], dtype=complex), (40, 6, 1))
    tracks = EnsembleTracks(np.arange(6.0), paths, np.ones((40, 6, 3)), np.ones((40, 6)), None,
                            np.zeros((40, 6), dtype=bool))
    reps = verify_vandermonde_martingale(SimConfig(N=3), tracks=tracks, checkpoints=5)
    assert len(reps) == 5 and all(r.passed and r.estimate == 0 for r in reps)
    assert all(r.details["heuristic"] for r in reps)


def test_vandermonde_small_run():
    cfg = SimConfig(N=3, tau=0.0, dt=1e-3, steps=20, seed=3,
                    initial=Initial("diagonal", (-1.0, 0.0, 1.0)))
    reps = apply_family_threshold(verify_vandermonde_martingale(cfg, replicas=400))
    assert all(r.passed for r in reps)


def test_non_collision():
    tracks = simulate_ensemble(SimConfig(N=5, tau=1.0, dt=1e-3, steps=1000, seed=0, replicas=5))
    assert non_collision_report(tracks).passed
    scalar = simulate_ensemble(SimConfig(N=1, tau=0.2, dt=1e-2, steps=5, replicas=2))
    r = non_collision_report(scalar)
    assert r.passed and r.details["vacuous"]


def test_non_collision_detects_zero_gap():
    t = track_path(np.array([np.diag([1.0, -1.0])] * 3, dtype=complex)).trajectory(0)
    t.min_gaps = np.array([2.0, 0.0, 2.0])
    assert not non_collision_report(t).passed
    with pytest.raises(ArgumentError):
        non_collision_report([])
