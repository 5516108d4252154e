import numpy as np
import pytest

from qheat.errors import InvariantError, ResourceError, ShapeError
from qheat.operators import (
    DensityMatrix,
    HermitianOperator,
    Isometry,
    Units,
    gibbs_state,
    j_function,
    minimizer_sigma,
    partial_trace,
    relative_entropy,
    spectral_decomposition,
    tensor,
    trace_distance,
    von_neumann_entropy,
)
from qheat.sampling import random_density, random_hermitian, random_unitary

LN2 = np.log(2)


def dimless(m):
    return HermitianOperator(m, Units.DIMENSIONLESS)


def test_hermitian_operator_rejects_non_hermitian():
    with pytest.raises(InvariantError):
        HermitianOperator(np.array([[0, 1], [0, 0]]))


def test_hermitian_operator_symmetrizes_small_noise():
    m = np.array([[1, 1e-12], [0, 2]])
    h = HermitianOperator(m)
    assert np.allclose(h.entries, h.entries.conj().T, atol=0)


def test_density_matrix_invariants():
    with pytest.raises(InvariantError):
        DensityMatrix(np.diag([0.6, 0.6]))
    with pytest.raises(InvariantError):
        DensityMatrix(np.diag([1.2, -0.2]))
    DensityMatrix(np.diag([1 + 5e-11, -5e-11]))


def test_isometry_shape_and_deviation():
    with pytest.raises(ShapeError):
        Isometry(np.ones((2, 3)))
    with pytest.raises(InvariantError, match="max"):
        Isometry(np.array([[1.0, 0], [0, 1.1]]))
    v = Isometry(np.eye(4)[:, :2])
    assert (v.dim_in, v.dim_out) == (2, 4)


def test_spectral_decomposition_reconstructs(rng):
    m = random_hermitian(5, rng)
    sd = spectral_decomposition(m)
    assert np.all(np.diff(sd.eigenvalues) >= 0)
    assert np.max(np.abs(sd.reconstruct() - m)) < 1e-9


def test_tensor_examples():
    assert np.allclose(tensor(np.eye(2), np.eye(3)), np.eye(6))
    assert np.allclose(tensor(np.diag([0, 1]), np.diag([0, 1])), np.diag([0, 0, 0, 1]))
    rho = tensor(DensityMatrix.diagonal([1, 0]), DensityMatrix.maximally_mixed(2))
    assert isinstance(rho, DensityMatrix)
    assert rho.dims == (2, 2)
    assert np.allclose(rho.entries, np.diag([0.5, 0.5, 0, 0]))


def test_tensor_rejects_mixed_categories():
    with pytest.raises(ShapeError):
        tensor(DensityMatrix.maximally_mixed(2), HermitianOperator(np.eye(2)))
    with pytest.raises(ShapeError):
        tensor(HermitianOperator(np.eye(2)), dimless(np.eye(2)))


def test_tensor_size_cap():
    with pytest.raises(ResourceError):
        tensor(np.eye(2**11), np.eye(2))


def test_partial_trace_product_and_bell(rng):
    ra, rb = random_density(2, rng), random_density(3, rng)
    assert np.allclose(partial_trace(np.kron(ra, rb), (2, 3), keep=0), ra, atol=1e-12)
    assert np.allclose(partial_trace(np.kron(ra, rb), (2, 3), keep=1), rb, atol=1e-12)
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(partial_trace(np.outer(phi, phi), (2, 2), keep=0), np.eye(2) / 2)


def test_partial_trace_preserves_trace_and_positivity(rng):
    for _ in range(20):
        rho = random_density(6, rng)
        red = partial_trace(DensityMatrix(rho, dims=(2, 3)), keep=0)
        assert isinstance(red, DensityMatrix)
        assert abs(np.trace(red.entries) - 1) < 1e-12


def test_partial_trace_bad_dims():
    with pytest.raises(ShapeError):
        partial_trace(np.eye(6), (2, 2), keep=0)


def test_entropy_examples():
    assert von_neumann_entropy(DensityMatrix.pure([1, 1j])) == pytest.approx(0, abs=1e-14)
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(0.693147, abs=1e-6)
    assert von_neumann_entropy(np.diag([2 / 3, 1 / 3])) == pytest.approx(0.636514, abs=1e-6)
    assert von_neumann_entropy(np.diag([2 / 3, 1 / 3])) == pytest.approx(np.log(3) - 2 / 3 * LN2, abs=1e-15)


def test_entropy_unitary_invariance(rng):
    for _ in range(20):
        rho = random_density(4, rng)
        u = random_unitary(4, rng)
        assert abs(von_neumann_entropy(u @ rho @ u.conj().T) - von_neumann_entropy(rho)) < 1e-10


def test_relative_entropy_examples():
    rho = np.diag([0.3, 0.7])
    assert relative_entropy(rho, rho) == pytest.approx(0, abs=1e-14)
    assert relative_entropy(np.diag([0.5, 0.5]), np.diag([0.7311, 0.2689])) == pytest.approx(0.12017, abs=1e-5)
    assert relative_entropy(np.diag([1.0, 0]), np.diag([0, 1.0])) == np.inf


def test_relative_entropy_small_implies_close(rng):
    for _ in range(200):
        a = random_density(3, rng)
        eps = rng.random() * 1e-4
        b = (1 - eps) * a + eps * random_density(3, rng)
        s = relative_entropy(a, b)
        assert s >= 0
        if s < 1e-9:
            assert trace_distance(a, b) < 1e-4


def test_j_function_examples():
    assert j_function(dimless(np.zeros((2, 2)))) == pytest.approx(-LN2, abs=1e-15)
    g = dimless(np.eye(2) * (LN2 + 0.1))
    assert j_function(g) == pytest.approx(0.1, abs=1e-14)
    assert np.exp(-j_function(g)) == pytest.approx(0.9048, abs=1e-4)
    rho0 = np.array([2 / 3, 1 / 3])
    q = -np.diag(np.log(rho0)) - von_neumann_entropy(np.diag(rho0)) * np.eye(2)
    assert j_function(dimless(q)) == pytest.approx(-0.636514, abs=1e-6)


def test_j_function_requires_dimensionless():
    with pytest.raises(ShapeError):
        j_function(HermitianOperator(np.eye(2)))


def test_j_function_shift_identity(rng):
    g = random_hermitian(3, rng)
    assert j_function(g + 0.37 * np.eye(3)) == pytest.approx(j_function(g) + 0.37, abs=1e-13)


def test_j_function_is_stable_for_large_arguments():
    assert j_function(np.diag([1000.0, 1001.0])) == pytest.approx(1000 - np.log1p(np.exp(-1.0)), abs=1e-10)


def test_gibbs_examples():
    rho, log_z = gibbs_state(np.zeros((3, 3)), 2.7)
    assert np.allclose(rho.entries, np.eye(3) / 3)
    assert log_z == pytest.approx(np.log(3))
    rho, _ = gibbs_state(np.diag([0, 1]), 1.0)
    assert np.allclose(np.diag(rho.entries).real, [0.731059, 0.268941], atol=1e-6)
    rho, _ = gibbs_state(np.diag([0, 50]), 1.0)
    assert rho.entries[1, 1].real < 1e-21


def test_gibbs_rejects_bad_beta():
    with pytest.raises(ShapeError):
        gibbs_state(np.eye(2), 0.0)


def test_minimizer_sigma_examples(rng):
    assert np.allclose(minimizer_sigma(np.zeros((2, 2))).entries, np.eye(2) / 2)
    s = minimizer_sigma(np.diag([0, 10]))
    assert np.allclose(np.diag(s.entries).real, [0.9999546, 0.0000454], atol=1e-7)
    for _ in range(10):
        g = random_hermitian(4, rng)
        sig = minimizer_sigma(g)
        lhs = j_function(g) + von_neumann_entropy(sig)
        assert lhs == pytest.approx(np.trace(sig.entries @ g).real, abs=1e-10)


def test_legendre_lower_bound(rng):
    for _ in range(300):
        d = int(rng.integers(1, 9))
        g = random_hermitian(d, rng, scale=rng.random() * 3)
        rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        assert j_function(g) + von_neumann_entropy(rho) <= np.trace(rho @ g).real + 1e-10


def test_relative_entropy_with_known_log(rng):
    h = random_hermitian(4, rng)
    rho, log_z = gibbs_state(h, 3.0)
    sigma = random_density(4, rng)
    exact = relative_entropy(sigma, rho, log_rho=-3.0 * h - log_z * np.eye(4))
    assert exact == pytest.approx(relative_entropy(sigma, rho), rel=1e-6)
    # weights far below the support floor stay finite when the log is supplied
    rho, log_z = gibbs_state(4 * h, 3.0)
    assert np.isfinite(relative_entropy(sigma, rho, log_rho=-12.0 * h - log_z * np.eye(4)))
