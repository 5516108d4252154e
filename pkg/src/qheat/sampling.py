"""Seeded random generators for states, unitaries, hermitian operators and channels."""

import numpy as np
from scipy.stats import unitary_group


def rng_from(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ginibre(rng, rows, cols):
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def random_unitary(dim: int, seed=None) -> np.ndarray:
    rng = rng_from(seed)
    if dim == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(dim, random_state=rng)


def random_pure_vector(dim: int, seed=None) -> np.ndarray:
    rng = rng_from(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, seed=None, rank=None) -> np.ndarray:
    """Hilbert-Schmidt distributed state of the given rank (full rank by default)."""
    rng = rng_from(seed)
    g = ginibre(rng, dim, rank or dim)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, seed=None, scale: float = 1.0) -> np.ndarray:
    rng = rng_from(seed)
    g = ginibre(rng, dim, dim)
    return scale * (g + g.conj().T) / 2


def random_isometry(rows: int, cols: int, seed=None) -> np.ndarray:
    rng = rng_from(seed)
    q, r = np.linalg.qr(ginibre(rng, rows, cols))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_kraus(dim_in: int, n: int, seed=None, dim_out=None) -> np.ndarray:
    """n Kraus operators from a random Stinespring isometry."""
    dim_out = dim_out or dim_in
    v = random_isometry(dim_out * n, dim_in, seed)
    return v.reshape(n, dim_out, dim_in)
