"""Quantum operations in Kraus and Choi form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import sqrtm

from .errors import ContractError, InvariantError, ShapeError
from .operators import DensityMatrix, as_matrix, check_entries, trace_distance
from .sampling import random_pure_vector, rng_from

TP_TOL = 1e-9
INDEPENDENCE_TOL = 1e-9
CHOI_RANK_TOL = 1e-10
CHOI_PSD_TOL = 1e-10


def _independence_ratio(columns: np.ndarray) -> tuple[float, np.ndarray]:
    """Smallest over largest singular value of a column stack, and a null vector."""
    _, sv, vh = np.linalg.svd(columns, full_matrices=True)
    ncols = columns.shape[1]
    if sv.size == 0 or sv[0] == 0:
        return 0.0, vh[-1].conj()
    if ncols > sv.size:
        return 0.0, vh[-1].conj()
    return float(sv[-1] / sv[0]), vh[-1].conj()


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Trace-preserving CP map stored as a stack of Kraus operators (n, dim_out, dim_in)."""

    kraus_ops: np.ndarray
    minimal: bool = False

    def __post_init__(self):
        k = np.asarray(self.kraus_ops, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[0] < 1:
            raise ShapeError(f"Kraus stack must have shape (n, dout, din), got {k.shape}")
        dev = np.max(np.abs(np.einsum("kji,kjl->il", k.conj(), k) - np.eye(k.shape[2])))
        if dev > TP_TOL:
            raise InvariantError(f"Kraus operators are not trace preserving (deviation {dev:.3e})")
        if self.minimal:
            ratio, _ = _independence_ratio(k.reshape(k.shape[0], -1).T)
            if ratio <= INDEPENDENCE_TOL:
                raise InvariantError("Kraus operators flagged minimal are linearly dependent")
        k = k.copy()
        k.setflags(write=False)
        object.__setattr__(self, "kraus_ops", k)

    @property
    def n(self) -> int:
        return self.kraus_ops.shape[0]

    @property
    def dim_in(self) -> int:
        return self.kraus_ops.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops.shape[1]

    def __call__(self, rho) -> np.ndarray:
        """Raw array action; ``apply`` is the validated counterpart."""
        k = self.kraus_ops
        return np.einsum("kij,jl,kml->im", k, as_matrix(rho), k.conj())

    def adjoint(self, x) -> np.ndarray:
        k = self.kraus_ops
        return np.einsum("kji,jl,klm->im", k.conj(), as_matrix(x), k)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Unnormalized Choi matrix sum_ij |i><j| (x) E(|i><j|), input factor first."""

    matrix: np.ndarray
    dim_in: int
    dim_out: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        size = self.dim_in * self.dim_out
        if m.shape != (size, size):
            raise ShapeError(f"Choi matrix must be {size}x{size}, got {m.shape}")
        m = (m + m.conj().T) / 2
        lam_min = np.linalg.eigvalsh(m)[0]
        if lam_min < -CHOI_PSD_TOL * max(1.0, np.abs(m).max()):
            raise InvariantError(f"Choi matrix is not positive semidefinite ({lam_min:.3e})")
        red = np.einsum("iaja->ij", m.reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out))
        dev = np.max(np.abs(red - np.eye(self.dim_in)))
        if dev > TP_TOL:
            raise InvariantError(f"Choi matrix is not trace preserving (deviation {dev:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def rank(self) -> int:
        w = np.linalg.eigvalsh(self.matrix)
        return int(np.sum(w > CHOI_RANK_TOL * max(w[-1], 0.0)))


def apply(channel: KrausChannel, rho) -> DensityMatrix:
    r = as_matrix(rho)
    if r.shape != (channel.dim_in, channel.dim_in):
        raise ShapeError(f"state of shape {r.shape} does not match channel input {channel.dim_in}")
    return DensityMatrix(channel(r))


def to_choi(channel: KrausChannel) -> ChoiMatrix:
    k = channel.kraus_ops
    # vec_k[(i, o)] = K[o, i]
    vecs = k.transpose(0, 2, 1).reshape(channel.n, -1)
    check_entries(vecs.shape[1], vecs.shape[1])
    return ChoiMatrix(vecs.T @ vecs.conj(), channel.dim_in, channel.dim_out)


def from_choi(choi: ChoiMatrix) -> KrausChannel:
    """Minimal Kraus set from the eigendecomposition of the Choi matrix."""
    w, p = np.linalg.eigh(choi.matrix)
    keep = w > CHOI_RANK_TOL * max(w[-1], 0.0)
    w, p = w[keep][::-1], p[:, keep][:, ::-1]
    ops = (np.sqrt(w) * p).T.reshape(-1, choi.dim_in, choi.dim_out).transpose(0, 2, 1)
    return KrausChannel(ops, minimal=True)


def minimal_kraus(channel: KrausChannel) -> KrausChannel:
    if channel.minimal:
        return channel
    return from_choi(to_choi(channel))


@dataclass(frozen=True)
class ExtremalityReport:
    extremal: bool
    singular_ratio: float
    witness: np.ndarray | None = None

    def __bool__(self):
        return self.extremal


def products(channel: KrausChannel) -> np.ndarray:
    """The n^2 operators M_i^dagger M_j as an array indexed [i, j]."""
    k = channel.kraus_ops
    return np.einsum("iab,jac->ijbc", k.conj(), k)


def is_extremal(channel: KrausChannel) -> ExtremalityReport:
    """Linear independence test of {M_i^dagger M_j}; the witness is a null combination c_ij."""
    if not channel.minimal:
        raise ContractError("extremality test requires a minimal Kraus representation")
    n = channel.n
    cols = products(channel).reshape(n * n, -1).T
    ratio, null = _independence_ratio(cols)
    extremal = ratio > INDEPENDENCE_TOL
    witness = None if extremal else null.reshape(n, n)
    return ExtremalityReport(extremal, ratio, witness)


def convex_combine(channels, weights) -> KrausChannel:
    weights = np.asarray(weights, dtype=float)
    if len(channels) != len(weights) or len(channels) == 0:
        raise ShapeError("need one weight per channel")
    if np.any(weights < 0):
        raise ContractError("convex weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ContractError(f"convex weights sum to {weights.sum()!r}, not 1")
    shapes = {(c.dim_in, c.dim_out) for c in channels}
    if len(shapes) != 1:
        raise ShapeError(f"channels have mismatched dimensions {shapes}")
    ops = [np.sqrt(w) * c.kraus_ops for c, w in zip(channels, weights) if w > 0]
    return KrausChannel(np.concatenate(ops))


def probe_states(dim: int, count: int = 64, seed=0) -> list[np.ndarray]:
    """Computational basis states followed by Haar-random pure states."""
    rng = rng_from(seed)
    probes = [np.outer(e, e) for e in np.eye(dim, dtype=complex)][:count]
    while len(probes) < count:
        v = random_pure_vector(dim, rng)
        probes.append(np.outer(v, v.conj()))
    return probes


def channel_distance(a: KrausChannel, b: KrausChannel, probes: int = 64, seed=0) -> float:
    """Largest output trace distance over a fixed probe set (lower bound on the diamond norm)."""
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise ShapeError("channels have different dimensions")
    return max(trace_distance(a(p), b(p)) for p in probe_states(a.dim_in, probes, seed))


# Constructors


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel(np.eye(dim)[None], minimal=True)


def unitary_channel(u) -> KrausChannel:
    return KrausChannel(as_matrix(u)[None], minimal=True)


def complete_erasure(rho0, dim_in: int | None = None) -> KrausChannel:
    """Constant channel rho -> rho0 with Kraus ops sqrt(p_a)|a><i|."""
    r = as_matrix(rho0)
    dim_in = dim_in or r.shape[0]
    w, p = np.linalg.eigh(r)
    w = w.clip(min=0)
    w = w / w.sum()
    ops = []
    for lam, vec in zip(w, p.T):
        if lam == 0:
            continue
        for i in range(dim_in):
            op = np.zeros((r.shape[0], dim_in), dtype=complex)
            op[:, i] = np.sqrt(lam) * vec
            ops.append(op)
    # tiny weights stay in so the action is exact; minimality follows the Choi threshold
    minimal = w.min(initial=1.0, where=w > 0) > CHOI_RANK_TOL * w.max()
    return KrausChannel(np.array(ops), minimal=bool(minimal))


def et_kraus(x, t: float) -> np.ndarray:
    """M_1 = t X and M_2 = sqrt(1 - t^2 X^dagger X); raises if the root is indefinite."""
    x = as_matrix(x)
    gram = np.eye(x.shape[1]) - t**2 * (x.conj().T @ x)
    w = np.linalg.eigvalsh((gram + gram.conj().T) / 2)
    if w[0] < -1e-12:
        raise ContractError(f"1 - t^2 X'X is indefinite at t={t} (min eigenvalue {w[0]:.3e})")
    m2 = sqrtm(gram)
    m2 = (m2 + m2.conj().T) / 2
    return np.array([t * x, m2])


def et_channel(x, t: float) -> KrausChannel:
    ops = et_kraus(x, t)
    minimal = _independence_ratio(ops.reshape(2, -1).T)[0] > INDEPENDENCE_TOL
    return KrausChannel(ops, minimal=minimal)
