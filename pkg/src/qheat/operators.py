"""Dense operator foundation: typed matrices, tensor structure, entropies and the J-function.

All quantities use k_B = 1, so temperatures are energies and entropies are in nats.
Admissibility checks work with dimensionless operators such as ``beta * Q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .errors import InvariantError, ResourceError, ShapeError

MAX_ENTRIES = 2**22
HERMITIAN_TOL = 1e-10
STATE_TOL = 1e-10
ISOMETRY_TOL = 1e-9
ENTROPY_FLOOR = 1e-14
SUPPORT_WEIGHT = 1e-12


class Units(str, Enum):
    ENERGY = "energy"
    DIMENSIONLESS = "dimensionless"


def as_matrix(x) -> np.ndarray:
    """Return the complex ndarray behind a typed operator or an array-like."""
    return np.asarray(getattr(x, "entries", x), dtype=complex)


def check_entries(rows: int, cols: int) -> None:
    if rows * cols > MAX_ENTRIES:
        raise ResourceError(
            f"dense {rows}x{cols} matrix exceeds the cap of {MAX_ENTRIES} entries"
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _square(a: np.ndarray, what: str) -> np.ndarray:
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ShapeError(f"{what} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvariantError(f"{what} has non-finite entries")
    return a


def _resolve_dims(dims, dim: int) -> tuple:
    if dims is None:
        return (dim,)
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != dim:
        raise ShapeError(f"subsystem dims {dims} do not multiply to {dim}")
    return dims


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Hermitian matrix tagged with its units; symmetrized on construction."""

    entries: np.ndarray
    units: Units = Units.ENERGY
    dims: tuple = None

    def __post_init__(self):
        a = _square(np.asarray(self.entries, dtype=complex), "hermitian operator")
        dev = np.max(np.abs(a - a.conj().T))
        if dev > HERMITIAN_TOL:
            raise InvariantError(f"operator is not hermitian (max deviation {dev:.3e})")
        object.__setattr__(self, "entries", _frozen((a + a.conj().T) / 2))
        object.__setattr__(self, "units", Units(self.units))
        object.__setattr__(self, "dims", _resolve_dims(self.dims, a.shape[0]))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def spectrum(self) -> "SpectralDecomposition":
        return spectral_decomposition(self)

    def scaled(self, factor: float, units: Units | None = None) -> "HermitianOperator":
        return HermitianOperator(self.entries * factor, units or self.units, self.dims)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive semidefinite, unit-trace operator."""

    entries: np.ndarray
    dims: tuple = None

    def __post_init__(self):
        a = _square(np.asarray(self.entries, dtype=complex), "density matrix")
        dev = np.max(np.abs(a - a.conj().T))
        if dev > STATE_TOL:
            raise InvariantError(f"state is not hermitian (max deviation {dev:.3e})")
        a = (a + a.conj().T) / 2
        tr = np.trace(a).real
        if abs(tr - 1.0) > STATE_TOL:
            raise InvariantError(f"state trace is {tr!r}, expected 1")
        lam_min = np.linalg.eigvalsh(a)[0]
        if lam_min < -STATE_TOL:
            raise InvariantError(f"state has negative eigenvalue {lam_min:.3e}")
        object.__setattr__(self, "entries", _frozen(a))
        object.__setattr__(self, "dims", _resolve_dims(self.dims, a.shape[0]))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    @classmethod
    def pure(cls, vector) -> "DensityMatrix":
        v = np.asarray(vector, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def diagonal(cls, probs) -> "DensityMatrix":
        return cls(np.diag(np.asarray(probs, dtype=float)))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)


@dataclass(frozen=True, eq=False)
class Isometry:
    """Matrix V with V^dagger V equal to the identity on the input space."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] < a.shape[1] or a.shape[1] < 1:
            raise ShapeError(f"isometry needs dim_out >= dim_in >= 1, got shape {a.shape}")
        check_entries(*a.shape)
        dev = isometry_deviation(a)
        if dev > ISOMETRY_TOL:
            raise InvariantError(f"matrix is not an isometry: max |V'V - 1| = {dev:.3e}")
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def dim_in(self) -> int:
        return self.entries.shape[1]

    @property
    def dim_out(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def isometry_deviation(v) -> float:
    v = as_matrix(v)
    return float(np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1]))))


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues with the unitary matrix of eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        p = self.eigenvectors
        return (p * self.eigenvalues) @ p.conj().T


def spectral_decomposition(m) -> SpectralDecomposition:
    a = as_matrix(m)
    a = (a + a.conj().T) / 2
    w, p = np.linalg.eigh(a)
    return SpectralDecomposition(w, p)


def hermitian_function(m, func) -> np.ndarray:
    """Apply a scalar function to a hermitian matrix through its eigenbasis."""
    w, p = np.linalg.eigh(as_matrix(m))
    return (p * func(w)) @ p.conj().T


def tensor(a, b):
    """Kronecker product keeping the left-to-right subsystem order.

    Both operands must be states, or both hermitian operators with the same units.
    Plain arrays give a plain array.
    """
    ma, mb = as_matrix(a), as_matrix(b)
    check_entries(ma.shape[0] * mb.shape[0], ma.shape[1] * mb.shape[1])
    out = np.kron(ma, mb)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(out, dims=a.dims + b.dims)
    if isinstance(a, HermitianOperator) and isinstance(b, HermitianOperator):
        if a.units != b.units:
            raise ShapeError(f"cannot tensor {a.units.value} with {b.units.value} operators")
        return HermitianOperator(out, a.units, dims=a.dims + b.dims)
    if isinstance(a, (DensityMatrix, HermitianOperator)) or isinstance(
        b, (DensityMatrix, HermitianOperator)
    ):
        raise ShapeError("tensor operands must both be states or both operators")
    return out


def partial_trace(m, dims=None, keep=(0,)):
    """Reduce ``m`` onto the subsystems listed in ``keep``.

    ``dims`` defaults to the subsystem structure recorded on a typed operand.
    Typed inputs return the same type with the kept subsystem dims.
    """
    a = as_matrix(m)
    if dims is None:
        dims = getattr(m, "dims", None) or (a.shape[0],)
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != a.shape[0] or a.shape[0] != a.shape[1]:
        raise ShapeError(f"dims {dims} inconsistent with matrix shape {a.shape}")
    keep = sorted({int(k) for k in np.atleast_1d(keep)})
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ShapeError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = a.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters) + 26:
        raise ShapeError("too many subsystems")
    alphabet = letters + letters.upper()
    row = list(alphabet[:n])
    col = list(alphabet[n : 2 * n])
    for k in range(n):
        if k not in keep:
            col[k] = row[k]
    out_idx = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    red = np.einsum("".join(row) + "".join(col) + "->" + out_idx, t)
    kd = tuple(dims[k] for k in keep)
    d = int(np.prod(kd)) if kd else 1
    red = red.reshape(d, d)
    if isinstance(m, DensityMatrix):
        return DensityMatrix(red, dims=kd or None)
    if isinstance(m, HermitianOperator):
        return HermitianOperator(red, m.units, dims=kd or None)
    return red


def entropy_from_eigenvalues(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > ENTROPY_FLOOR]
    return float(max(-np.sum(p * np.log(p)), 0.0))


def von_neumann_entropy(rho) -> float:
    """S(rho) = -tr rho ln rho in nats; eigenvalues below 1e-14 contribute zero."""
    return entropy_from_eigenvalues(np.linalg.eigvalsh(as_matrix(rho)))


def relative_entropy(sigma, rho, log_rho=None) -> float:
    """S(sigma || rho) = tr sigma (ln sigma - ln rho); +inf when sigma leaves supp(rho).

    ``log_rho`` may carry an exactly known ln rho (e.g. -beta H - ln Z for a thermal
    state); tiny eigenvalues of rho then do not lose relative precision.
    """
    s, r = as_matrix(sigma), as_matrix(rho)
    if s.shape != r.shape:
        raise ShapeError(f"states have different shapes {s.shape} and {r.shape}")
    ws, ps = np.linalg.eigh(s)
    if log_rho is not None:
        cross = float(np.real(np.trace(s @ as_matrix(log_rho))))
        return float(max(-entropy_from_eigenvalues(ws) - cross, 0.0))
    wr, pr = np.linalg.eigh(r)
    support = wr > ENTROPY_FLOOR
    # overlap[i, j] = |<s_i|r_j>|^2
    overlap = np.abs(ps.conj().T @ pr) ** 2
    kernel_weight = float(ws.clip(min=0) @ overlap[:, ~support].sum(axis=1))
    if kernel_weight > SUPPORT_WEIGHT:
        return float("inf")
    cross = ws.clip(min=0) @ (overlap[:, support] @ np.log(wr[support]))
    return float(max(-entropy_from_eigenvalues(ws) - cross, 0.0))


def j_function(g) -> float:
    """J(G) = -ln tr exp(-G) for a dimensionless hermitian G."""
    if isinstance(g, HermitianOperator) and g.units != Units.DIMENSIONLESS:
        raise ShapeError("j_function expects a dimensionless operator such as beta*Q")
    w = np.linalg.eigvalsh(as_matrix(g))
    return float(-logsumexp(-w))


def gibbs_state(h, beta: float) -> tuple[DensityMatrix, float]:
    """Thermal state exp(-beta H)/Z and ln Z."""
    if not np.isfinite(beta) or beta <= 0:
        raise ShapeError(f"beta must be finite and positive, got {beta}")
    w, p = np.linalg.eigh(as_matrix(h))
    logw = -beta * w
    log_z = float(logsumexp(logw))
    probs = np.exp(logw - log_z)
    rho = DensityMatrix((p * probs) @ p.conj().T, dims=getattr(h, "dims", None))
    return rho, log_z


def minimizer_sigma(g) -> DensityMatrix:
    """sigma_G = exp(J(G)) exp(-G), the minimizer of tr(rho G) - S(rho)."""
    w, p = np.linalg.eigh(as_matrix(g))
    logw = -w
    probs = np.exp(logw - logsumexp(logw))
    return DensityMatrix((p * probs) @ p.conj().T)


def trace_distance(a, b) -> float:
    d = as_matrix(a) - as_matrix(b)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh((d + d.conj().T) / 2))))


def expectation(rho, op) -> float:
    return float(np.real(np.trace(as_matrix(rho) @ as_matrix(op))))
