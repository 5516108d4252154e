"""Dense realizations: thermal bath plus isometry, the induced channel and its HTO.

Subsystem order is always device first, bath second. A realization may map the
input bath space onto a different output bath space; ``bath_h_out`` then carries
the Hamiltonian of the output bath.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp

from .channels import KrausChannel, convex_combine, from_choi, to_choi
from .errors import ConsistencyError, ContractError, NumericError, ShapeError
from .operators import (
    DensityMatrix,
    HermitianOperator,
    Isometry,
    Units,
    as_matrix,
        expectation,
    j_function,
    partial_trace,
)

HTO_CONSISTENCY_TOL = 1e-8


def _is_diagonal(m: np.ndarray) -> bool:
    return not np.any(m - np.diag(m.diagonal()))


def _hermitian(h, units=Units.ENERGY) -> HermitianOperator:
    if isinstance(h, HermitianOperator):
        return h
    return HermitianOperator(as_matrix(h), units)


@dataclass(frozen=True, eq=False)
class DenseRealization:
    dim_A: int
    bath_h: HermitianOperator
    beta: float
    v: Isometry
    bath_h_out: HermitianOperator | None = None

    def __post_init__(self):
        object.__setattr__(self, "bath_h", _hermitian(self.bath_h))
        if self.bath_h_out is not None:
            object.__setattr__(self, "bath_h_out", _hermitian(self.bath_h_out))
        if not isinstance(self.v, Isometry):
            object.__setattr__(self, "v", Isometry(as_matrix(self.v)))
        if not np.isfinite(self.beta) or self.beta <= 0:
            raise ShapeError(f"beta must be positive, got {self.beta}")
        expected = (self.dim_A * self.dim_bath_out, self.dim_A * self.dim_bath)
        if self.v.entries.shape != expected:
            raise ShapeError(f"isometry has shape {self.v.entries.shape}, expected {expected}")
        # exp(-beta E)/Z is full rank whenever every energy is finite; tiny weights may underflow
        if not np.all(np.isfinite(self.bath_eig[2])):
            raise ShapeError("bath Hamiltonian has non-finite levels")

    @property
    def dim_bath(self) -> int:
        return self.bath_h.dim

    @property
    def h_out(self) -> HermitianOperator:
        return self.bath_h if self.bath_h_out is None else self.bath_h_out

    @property
    def dim_bath_out(self) -> int:
        return self.h_out.dim

    @cached_property
    def bath_eig(self):
        """(thermal weights, eigenbasis or None when H_B is diagonal, energies, ln Z)."""
        h = self.bath_h.entries
        if _is_diagonal(h):
            energies, basis = h.diagonal().real, None
        else:
            energies, basis = np.linalg.eigh(h)
        e = -self.beta * energies
        log_z = float(logsumexp(e))
        return np.exp(e - log_z), basis, energies, log_z

    @property
    def bath_state(self) -> DensityMatrix:
        w, basis, _, _ = self.bath_eig
        if basis is None:
            return DensityMatrix(np.diag(w))
        return DensityMatrix((basis * w) @ basis.conj().T)

    @property
    def log_partition(self) -> float:
        return self.bath_eig[3]

    @property
    def bath_energy(self) -> float:
        w, _, energies, _ = self.bath_eig
        return float(np.dot(w, energies))

    def v_tensor(self) -> np.ndarray:
        """Isometry reshaped to [a_out, b_out, a_in, b_in]."""
        return self.v.entries.reshape(self.dim_A, self.dim_bath_out, self.dim_A, self.dim_bath)


@dataclass(frozen=True, eq=False)
class HeatReport:
    hto: HermitianOperator
    channel: KrausChannel
    j_of_beta_q: float
    bath_log_partition: float
    beta: float


def _bath_frame(r: DenseRealization) -> np.ndarray:
    """V tensor [a_out, b_out, a_in, k] with the input bath in the thermal eigenbasis."""
    vt = r.v_tensor()
    basis = r.bath_eig[1]
    return vt if basis is None else np.einsum("xyab,bk->xyak", vt, basis)


def induced_channel(r: DenseRealization) -> KrausChannel:
    """Channel rho -> tr_B V (rho x rho_B) V^dagger as a minimal Kraus set."""
    w = r.bath_eig[0]
    vt = _bath_frame(r)
    # K[(b', k)] = sqrt(p_k) (1 x <b'|) V (1 x |e_k>)
    k = np.transpose(vt, (1, 3, 0, 2)) * np.sqrt(w)[None, :, None, None]
    k = k.reshape(r.dim_bath_out * r.dim_bath, r.dim_A, r.dim_A)
    return from_choi(to_choi(KrausChannel(k)))


def _sandwich(r: DenseRealization, op_out: np.ndarray) -> np.ndarray:
    """tr_B[(1 x rho_B) V^dagger (1 x op_out) V] as a dim_A matrix."""
    w = r.bath_eig[0]
    vt = _bath_frame(r)
    if _is_diagonal(op_out):
        hv = vt * op_out.diagonal()[None, :, None, None]
    else:
        hv = np.einsum("yz,xzak->xyak", op_out, vt)
    return np.einsum("xyak,xyck->ac", vt.conj() * w, hv)


def compute_hto(r: DenseRealization) -> HeatReport:
    """HTO from the energy sandwich, cross-checked against the ln(rho_B) form."""
    q = _sandwich(r, r.h_out.entries) - r.bath_energy * np.eye(r.dim_A)
    q = (q + q.conj().T) / 2
    # dimensionless route: ln rho_B continued to the output space as -beta H_out - ln Z
    h_out = r.h_out.entries
    if _is_diagonal(h_out):
        log_rho_out = np.diag(-r.beta * h_out.diagonal() - r.log_partition)
    else:
        w_out, p_out = np.linalg.eigh(h_out)
        log_rho_out = (p_out * (-r.beta * w_out - r.log_partition)) @ p_out.conj().T
    weights, _, energies, _ = r.bath_eig
    neg_entropy = float(np.dot(weights, -r.beta * energies - r.log_partition))
    beta_q = -_sandwich(r, log_rho_out) + neg_entropy * np.eye(r.dim_A)
    dev = np.max(np.abs(r.beta * q - beta_q))
    scale = max(1.0, np.max(np.abs(beta_q)))
    if dev > HTO_CONSISTENCY_TOL * scale:
        raise ConsistencyError(f"energy and entropy forms of beta*Q disagree by {dev:.3e}")
    hto = HermitianOperator(q, Units.ENERGY)
    return HeatReport(
        hto=hto,
        channel=induced_channel(r),
        j_of_beta_q=j_function(HermitianOperator(r.beta * q, Units.DIMENSIONLESS)),
        bath_log_partition=r.log_partition,
        beta=r.beta,
    )


def average_heat(report: HeatReport, rho) -> float:
    """tr(rho Q)."""
    if as_matrix(rho).shape != report.hto.entries.shape:
        raise ShapeError("state and HTO dimensions differ")
    return expectation(rho, report.hto)


def total_work(report: HeatReport, rho, h_a, h_a_prime) -> float:
    """tr(E(rho) H_A' - rho H_A + rho Q)."""
    out = report.channel(as_matrix(rho))
    return expectation(out, h_a_prime) - expectation(rho, h_a) + average_heat(report, rho)


def final_joint_state(r: DenseRealization, rho) -> np.ndarray:
    v = r.v.entries
    return v @ np.kron(as_matrix(rho), r.bath_state.entries) @ v.conj().T


def final_bath_state(r: DenseRealization, rho) -> np.ndarray:
    joint = final_joint_state(r, rho)
    return partial_trace(joint, (r.dim_A, r.dim_bath_out), keep=1)


def bath_energy_change(r: DenseRealization, rho) -> float:
    """Direct tr(rho_B' H_out) - tr(rho_B H_B) from the joint final state."""
    return expectation(final_bath_state(r, rho), r.h_out) - r.bath_energy


# Constructions


def identity_realization(dim_A: int, bath_h, beta: float) -> DenseRealization:
    h = _hermitian(bath_h)
    return DenseRealization(dim_A, h, beta, Isometry(np.eye(dim_A * h.dim)))


def product_realization(w, bath_unitary, bath_h, beta: float) -> DenseRealization:
    """V = W (x) U_B; realizes the unitary channel W."""
    w = as_matrix(w)
    return DenseRealization(w.shape[0], _hermitian(bath_h), beta,
                            Isometry(np.kron(w, as_matrix(bath_unitary))))


def swap_operator(dim: int) -> np.ndarray:
    s = np.zeros((dim * dim, dim * dim))
    for a in range(dim):
        for b in range(dim):
            s[b * dim + a, a * dim + b] = 1.0
    return s


def rider_gap(a: float, beta: float) -> float:
    """Level splitting D of a two-level rider with D tanh(beta D / 2) = a."""
    if a < 0:
        raise ContractError(f"extra heat must be nonnegative, got {a}")
    if a == 0:
        return 0.0
    hi = a + 2.0 / beta + 1.0
    try:
        gap, info = bisect(lambda d: d * np.tanh(beta * d / 2) - a, 0.0, hi,
                           xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200,
                           full_output=True, disp=False)
    except ValueError as exc:
        raise NumericError(f"rider bisection bracket failed for a={a}") from exc
    if not info.converged:
        raise NumericError(f"rider bisection did not converge for a={a}")
    return float(gap)


def _lift_bath(h, extra) -> np.ndarray:
    h = as_matrix(h)
    extra = as_matrix(extra)
    return np.kron(h, np.eye(extra.shape[0])) + np.kron(np.eye(h.shape[0]), extra)


def add_heat_rider(r: DenseRealization, a: float) -> DenseRealization:
    """Append a flipped two-level bath system C; the HTO shifts by a times the identity."""
    gap = rider_gap(a, r.beta)
    h_c = np.diag([gap / 2, -gap / 2])
    sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]])
    v = np.kron(r.v.entries, sigma_x)
    h_out = None if r.bath_h_out is None else _lift_bath(r.bath_h_out, h_c)
    return DenseRealization(r.dim_A, _lift_bath(r.bath_h, h_c), r.beta, Isometry(v), h_out)


def controller_combine(rs, weights) -> DenseRealization:
    """Realization of sum_i w_i E_i with HTO sum_i w_i Q_i via a thermal controller C.

    Zero weights are dropped before C is built.
    """
    weights = np.asarray(weights, dtype=float)
    if len(rs) != len(weights) or not rs:
        raise ShapeError("need one weight per realization")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ContractError("weights must be nonnegative and sum to 1")
    base = rs[0]
    for r in rs[1:]:
        same = (
            r.dim_A == base.dim_A
            and r.beta == base.beta
            and np.array_equal(r.bath_h.entries, base.bath_h.entries)
            and np.array_equal(r.h_out.entries, base.h_out.entries)
        )
        if not same:
            raise ContractError("controller combination needs a common device, bath and beta")
    kept = [(r, w) for r, w in zip(rs, weights) if w > 0]
    if len(kept) == 1:
        return kept[0][0]
    n = len(kept)
    lam = np.array([w for _, w in kept])
    lam = lam / lam.sum()
    h_c = np.diag(-np.log(lam) / base.beta)
    da, db, dbo = base.dim_A, base.dim_bath, base.dim_bath_out
    v = np.zeros((da * dbo * n, da * db * n), dtype=complex)
    for i, (r, _) in enumerate(kept):
        proj = np.zeros((n, n))
        proj[i, i] = 1.0
        v += np.kron(r.v.entries, proj)
    h_out = None if base.bath_h_out is None else _lift_bath(base.bath_h_out, h_c)
    return DenseRealization(da, _lift_bath(base.bath_h, h_c), base.beta, Isometry(v), h_out)


def mixture_channel(rs, weights) -> KrausChannel:
    return convex_combine([induced_channel(r) for r in rs], weights)


def bath_operators(r: DenseRealization, channel: KrausChannel) -> np.ndarray:
    """Operators L_i with V = sum_i M_i (x) L_i for the Kraus set of ``channel``.

    Returns an array (n, dim_bath_out, dim_bath) and raises when V is not in the
    span (the channel is not the one realized by ``r``).
    """
    m = channel.kraus_ops
    n, da = m.shape[0], r.dim_A
    if channel.dim_in != da or channel.dim_out != da:
        raise ShapeError("channel does not act on the device of this realization")
    vt = r.v_tensor()
    # R[(a', a), (b', b)] = sum_i M_i[a', a] L_i[b', b]
    rmat = vt.transpose(0, 2, 1, 3).reshape(da * da, -1)
    mmat = m.reshape(n, da * da).T
    lmat, *_ = np.linalg.lstsq(mmat, rmat, rcond=None)
    resid = np.max(np.abs(mmat @ lmat - rmat))
    if resid > 1e-8:
        raise ContractError(f"isometry is not spanned by the Kraus operators (residual {resid:.3e})")
    return lmat.reshape(n, r.dim_bath_out, r.dim_bath)
