"""Admissibility decisions, heat-transfer matrices and the E_t study."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.special import logsumexp

from .channels import KrausChannel, et_channel, is_extremal, products
from .errors import (
    ContractError,
    InadmissibleHTO,
    ShapeError,
    StructureViolation,
    UnsupportedDecision,
)
from .operators import (
    ENTROPY_FLOOR,
    MAX_ENTRIES,
    DensityMatrix,
    HermitianOperator,
    Isometry,
    Units,
    as_matrix,
    j_function,
    minimizer_sigma,
    partial_trace,
    von_neumann_entropy,
)
from .realizations import (
    DenseRealization,
    add_heat_rider,
    bath_operators,
    identity_realization,
)
from .sampling import ginibre, rng_from
from .synthesis import Closure, synthesize_landauer, to_dense

LEP_TOL = 1e-8
BOUNDARY_TOL = 1e-10
ISOSPECTRAL_TOL = 1e-8
RESIDUAL_REL_TOL = 1e-9
POSITIVE_TOL = 1e-10
LOG_FLOOR = 1e-300
STRICT_MARGIN = 1e-9


class Verdict(str, Enum):
    ADMISSIBLE = "admissible"
    INADMISSIBLE = "inadmissible"
    BOUNDARY = "boundary-case"


@dataclass(frozen=True)
class AdmissibilityVerdict:
    verdict: Verdict
    certificate: dict = field(default_factory=dict)

    @property
    def admissible(self) -> bool:
        return self.verdict is not Verdict.INADMISSIBLE

    def __bool__(self):
        return self.admissible


def _dimensionless(q, beta: float) -> HermitianOperator:
    return HermitianOperator(beta * as_matrix(q), Units.DIMENSIONLESS)


def trace_exp(q, beta: float) -> float:
    """tr exp(-beta q)."""
    return math.exp(-j_function(_dimensionless(q, beta)))


# Entropic bound


def _hermitian_log(m: np.ndarray):
    w, p = np.linalg.eigh(m)
    w = w.clip(min=LOG_FLOOR)
    return (p * np.log(w)) @ p.conj().T, w


def _entropy_of(w: np.ndarray) -> float:
    w = w[w > ENTROPY_FLOOR]
    return float(-np.dot(w, np.log(w)))


def _unpack(x: np.ndarray, d: int):
    lmat = (x[: d * d] + 1j * x[d * d:]).reshape(d, d)
    a = lmat @ lmat.conj().T
    t = float(np.trace(a).real)
    return a / t, lmat, t


def _slack(x, channel: KrausChannel, q: np.ndarray, beta: float, d: int):
    """g(rho) = tr(rho q) - (S(rho) - S(E(rho)))/beta and its gradient in L."""
    rho, lmat, t = _unpack(x, d)
    out = channel(rho)
    out = (out + out.conj().T) / 2
    log_r, wr = _hermitian_log(rho)
    log_e, we = _hermitian_log(out)
    val = float(np.trace(rho @ q).real) - (_entropy_of(wr) - _entropy_of(we)) / beta
    g = q + (log_r - channel.adjoint(log_e)) / beta
    g = (g + g.conj().T) / 2
    gm = (2.0 / t) * (g - np.trace(g @ rho).real * np.eye(d)) @ lmat
    return val, np.concatenate([gm.real.ravel(), gm.imag.ravel()])


def _starts(d: int, count: int, rng) -> list[np.ndarray]:
    eye = np.eye(d, dtype=complex)
    seeds = [eye]
    for i in range(d):
        m = 1e-3 * eye
        m[i, i] = 1.0
        seeds.append(m)
    while len(seeds) < count:
        seeds.append(ginibre(rng, d, d))
    return [np.concatenate([m.real.ravel(), m.imag.ravel()]) for m in seeds[:max(count, 1)]]


def minimize_slack(channel: KrausChannel, q, beta: float, starts: int = 32, seed=0):
    """Multi-start quasi-Newton minimum of g over density matrices; returns (value, argmin)."""
    q = as_matrix(q)
    d = channel.dim_in
    if q.shape != (d, d) or channel.dim_out != d:
        raise ShapeError("heat operator and channel dimensions differ")
    rng = rng_from(seed)
    best_val, best_rho = math.inf, None
    for x0 in _starts(d, starts, rng):
        res = minimize(_slack, x0, args=(channel, q, beta, d), jac=True, method="L-BFGS-B",
                       options={"maxiter": 1000, "gtol": 1e-12, "ftol": 1e-15})
        rho, _, _ = _unpack(res.x, d)
        val = exact_slack(channel, q, beta, rho)
        if val < best_val:
            best_val, best_rho = val, rho
    return best_val, best_rho


def exact_slack(channel: KrausChannel, q, beta: float, rho) -> float:
    rho = DensityMatrix(as_matrix(rho))
    out = DensityMatrix(channel(rho.entries))
    return (float(np.trace(rho.entries @ as_matrix(q)).real)
            - (von_neumann_entropy(rho) - von_neumann_entropy(out)) / beta)


@dataclass(frozen=True)
class LepReport:
    min_slack: float
    argmin: np.ndarray
    verdict: Verdict


def check_lep(channel: KrausChannel, q, beta: float, samples: int = 32, seed=0,
              tol: float = LEP_TOL) -> LepReport:
    """Worst case of tr(rho Q) >= (S(rho) - S(E(rho)))/beta over states."""
    val, rho = minimize_slack(channel, q, beta, samples, seed)
    verdict = Verdict.INADMISSIBLE if val < -tol else Verdict.ADMISSIBLE
    return LepReport(val, rho, verdict)


# Erasure decisions


def decide_landauer_hto(q, beta: float) -> AdmissibilityVerdict:
    """Finite-bath Landauer test tr exp(-beta q) < 1, strict."""
    j = j_function(_dimensionless(q, beta))
    cert = {"j_value": j, "trace_exp": math.exp(-j), "margin": -math.expm1(-j)}
    return AdmissibilityVerdict(Verdict.ADMISSIBLE if j > 0 else Verdict.INADMISSIBLE, cert)


def decide_complete_erasure_hto(q, beta: float, rho0, tol: float = BOUNDARY_TOL) -> AdmissibilityVerdict:
    g = _dimensionless(q, beta)
    rho0 = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(as_matrix(rho0))
    j = j_function(g)
    s0 = von_neumann_entropy(rho0)
    gap = j + s0
    cert = {"j_value": j, "entropy_rho0": s0, "gap": gap}
    if gap > tol:
        return AdmissibilityVerdict(Verdict.ADMISSIBLE, cert)
    if gap < -tol:
        return AdmissibilityVerdict(Verdict.INADMISSIBLE, cert)
    spec_sigma = np.sort(np.linalg.eigvalsh(minimizer_sigma(g).entries))
    spec_rho = np.sort(np.linalg.eigvalsh(rho0.entries))
    mismatch = float(np.max(np.abs(spec_sigma - spec_rho)))
    cert.update(isospectral_mismatch=mismatch, sigma_spectrum=spec_sigma.tolist(),
                rho0_spectrum=spec_rho.tolist())
    ok = mismatch <= ISOSPECTRAL_TOL
    return AdmissibilityVerdict(Verdict.BOUNDARY if ok else Verdict.INADMISSIBLE, cert)


# Heat transfer matrices


@dataclass(frozen=True, eq=False)
class HeatTransferMatrix:
    q: np.ndarray
    residual: float
    unique: bool = True

    def __post_init__(self):
        q = np.asarray(self.q, dtype=complex)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ShapeError("heat transfer matrix must be square")
        if np.max(np.abs(q - q.conj().T), initial=0.0) > 1e-10:
            raise ShapeError("heat transfer matrix must be hermitian")
        q = (q + q.conj().T) / 2
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def operator(self, channel: KrausChannel) -> np.ndarray:
        """sum_ij q_ij M_i^dagger M_j."""
        return np.einsum("ij,ijab->ab", self.q, products(channel))


def extract_heat_matrix(q_op, channel: KrausChannel) -> HeatTransferMatrix:
    """Least-squares coefficients of Q in the products M_i^dagger M_j."""
    if not channel.minimal:
        raise ContractError("heat matrix extraction needs a minimal Kraus set")
    qm = as_matrix(q_op)
    n = channel.n
    cols = products(channel).reshape(n * n, -1).T
    coef, *_ = np.linalg.lstsq(cols, qm.ravel(), rcond=None)
    qmat = coef.reshape(n, n)
    qmat = (qmat + qmat.conj().T) / 2
    residual = float(np.linalg.norm(np.einsum("ij,ijab->ab", qmat, products(channel)) - qm))
    unique = bool(is_extremal(channel))
    scale = max(float(np.linalg.norm(qm)), 1.0)
    if residual > RESIDUAL_REL_TOL * scale:
        # the expansion in M_i^dagger M_j holds for every realization of the channel
        raise StructureViolation(
            f"Q is not in the span of M_i^dagger M_j (residual {residual:.3e})",
            residual=residual,
        )
    return HeatTransferMatrix(qmat, residual, unique)


def decide_extremal_hto(q_op, channel: KrausChannel, beta: float) -> AdmissibilityVerdict:
    ext = is_extremal(channel)
    if not ext:
        raise UnsupportedDecision(
            f"channel is not extremal (singular ratio {ext.singular_ratio:.3e}); only a sufficient test exists")
    try:
        hm = extract_heat_matrix(q_op, channel)
    except StructureViolation as exc:
        return AdmissibilityVerdict(Verdict.INADMISSIBLE, {"residual": exc.residual, "reason": "structure"})
    cert = {"q": hm.q, "residual": hm.residual, "n": hm.n}
    if hm.n == 1:
        alpha = float(hm.q[0, 0].real)
        cert["alpha"] = alpha
        ok = alpha >= -POSITIVE_TOL
    else:
        j = j_function(_dimensionless(hm.q, beta))
        cert.update(j_value=j, trace_exp=math.exp(-j))
        ok = j > 0
    return AdmissibilityVerdict(Verdict.ADMISSIBLE if ok else Verdict.INADMISSIBLE, cert)


def extremal_identity_floor(channel: KrausChannel, beta: float) -> float:
    """Smallest alpha with Q = alpha 1 admissible for an extremal channel (boundary value)."""
    hm = extract_heat_matrix(np.eye(channel.dim_in), channel)
    if hm.n == 1:
        return 0.0
    w = np.linalg.eigvalsh(hm.q)
    # tr exp(-beta alpha q1) = 1 is decreasing in alpha when q1 > 0
    f = lambda a: float(logsumexp(-beta * a * w))
    hi = 1.0
    while f(hi) > 0:
        hi *= 2
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def heat_matrix_from_realization(r: DenseRealization, channel: KrausChannel) -> HeatTransferMatrix:
    """q_ij = tr(rho_B L_i^dagger H_out L_j) - E_B delta_ij from V = sum M_i x L_i."""
    ls = bath_operators(r, channel)
    rho_b = r.bath_state.entries
    h = r.h_out.entries
    q = np.einsum("iyb,yz,jzc,cb->ij", ls.conj(), h, ls, rho_b) - r.bath_energy * np.eye(channel.n)
    return HeatTransferMatrix((q + q.conj().T) / 2, 0.0, bool(is_extremal(channel)))


# Widening


@dataclass(frozen=True)
class WideningCertificate:
    t: float
    components: tuple
    weights: tuple
    trace_exps: tuple

    def check(self, beta: float) -> bool:
        return all(trace_exp(c, beta) < 1 for c, w in zip(self.components, self.weights) if w > 0)


def widen_heat_matrix(q: HeatTransferMatrix, s, beta: float, max_doublings: int = 200):
    """q + s as a convex combination of q + t s and q, both admissible."""
    s = as_matrix(s)
    if s.shape != q.q.shape:
        raise ShapeError("widening matrix has the wrong shape")
    if np.max(np.abs(s - s.conj().T)) > 1e-10:
        raise ContractError("widening matrix must be hermitian")
    if np.linalg.eigvalsh(s)[0] <= POSITIVE_TOL:
        raise ContractError("widening matrix must be strictly positive definite")
    if not trace_exp(q.q, beta) < 1:
        raise InadmissibleHTO("base heat matrix fails tr exp(-beta q) < 1", j_value=j_function(_dimensionless(q.q, beta)))
    t = 1.0
    for _ in range(max_doublings):
        if trace_exp(q.q + t * s, beta) < 1:
            break
        t *= 2
    else:
        raise InadmissibleHTO("no admissible q + t s found", j_value=float("nan"))
    comps = (q.q + t * s, q.q)
    weights = (1.0 / t, (t - 1.0) / t)
    cert = WideningCertificate(t, comps, weights, tuple(trace_exp(c, beta) for c in comps))
    widened = HeatTransferMatrix(weights[0] * comps[0] + weights[1] * comps[1], q.residual, q.unique)
    return widened, cert


def decide_by_certificate(widened: HeatTransferMatrix, cert: WideningCertificate, beta: float) -> AdmissibilityVerdict:
    combo = sum(w * c for c, w in zip(cert.components, cert.weights))
    ok = cert.check(beta) and np.allclose(combo, widened.q, atol=1e-12, rtol=0)
    return AdmissibilityVerdict(Verdict.ADMISSIBLE if ok else Verdict.INADMISSIBLE,
                                {"t": cert.t, "trace_exps": cert.trace_exps})


# Re-synthesis from a heat matrix


def lift_chain_length(dim: int, n: int, cap: int = MAX_ENTRIES, longest: int = 12) -> int:
    """Longest R-chain whose lifted dense isometry fits the entry cap."""
    best = 0
    for length in range(2, longest + 1):
        if (dim * n ** (length + 1)) * (dim * n ** length) <= cap:
            best = length
    if best < 2:
        raise ContractError(f"no chain fits the dense cap for dim {dim}, n {n}")
    return best


def lift_extremal_realization(channel: KrausChannel, q, beta: float, chain_length: int | None = None,
                              tail_bound: float = 1e-3) -> DenseRealization:
    """U = sum_i M_i x L_i from a Landauer realization W = sum_i |psi0><i| x L_i on an n-level R."""
    qm = q.q if isinstance(q, HeatTransferMatrix) else as_matrix(q)
    n, d = channel.n, channel.dim_in
    if qm.shape != (n, n):
        raise ShapeError("heat matrix size must match the Kraus count")
    if n == 1:
        alpha = float(qm[0, 0].real)
        if alpha < -POSITIVE_TOL:
            raise InadmissibleHTO(f"alpha = {alpha} is negative", j_value=beta * alpha)
        base = identity_realization(d, np.zeros((2, 2)), beta)
        base = DenseRealization(d, base.bath_h, beta,
                                Isometry(np.kron(channel.kraus_ops[0], np.eye(2))))
        return add_heat_rider(base, max(alpha, 0.0))
    length = chain_length or lift_chain_length(d, n)
    chain = synthesize_landauer(qm, beta, chain_length=length, tail_bound=tail_bound, closure=Closure.OPEN)
    w = to_dense(chain)
    psi0 = chain.out_basis[:, 0]
    ls = np.einsum("x,xyab->ayb", psi0.conj(), w.v_tensor())
    u = sum(np.kron(m, l) for m, l in zip(channel.kraus_ops, ls))
    return DenseRealization(d, w.bath_h, beta, Isometry(u), w.bath_h_out)


# Strong subadditivity


def apply_on_first(channel: KrausChannel, rho_ax, dim_x: int) -> np.ndarray:
    """(E x id)(rho_AX)."""
    ops = np.array([np.kron(m, np.eye(dim_x)) for m in channel.kraus_ops])
    return np.einsum("kij,jl,kml->im", ops, as_matrix(rho_ax), ops.conj())


def subadditivity_slack(channel: KrausChannel, rho_ax, dim_x: int) -> float:
    """[S(A) - S(A')] - [S(AX) - S(A'X)]."""
    d = channel.dim_in
    rho_ax = DensityMatrix(as_matrix(rho_ax))
    out = DensityMatrix(apply_on_first(channel, rho_ax.entries, dim_x))
    rho_a = DensityMatrix(partial_trace(rho_ax.entries, (d, dim_x), keep=0))
    out_a = DensityMatrix(partial_trace(out.entries, (channel.dim_out, dim_x), keep=0))
    left = von_neumann_entropy(rho_a) - von_neumann_entropy(out_a)
    right = von_neumann_entropy(rho_ax) - von_neumann_entropy(out)
    return left - right


def strong_subadditivity_corollary_check(channel: KrausChannel, ancilla_dim: int, samples: int = 100,
                                         seed=0) -> float:
    """Worst slack over random joint states; nonnegative up to rounding."""
    from .sampling import random_density

    rng = rng_from(seed)
    dim = channel.dim_in * ancilla_dim
    worst = math.inf
    for _ in range(samples):
        rank = int(rng.integers(1, dim + 1))
        worst = min(worst, subadditivity_slack(channel, random_density(dim, rng, rank), ancilla_dim))
    return worst


# E_t family


def max_entropy_drop(channel: KrausChannel, starts: int = 32, seed=0) -> tuple[float, np.ndarray]:
    """max over rho of S(rho) - S(E(rho))."""
    val, rho = minimize_slack(channel, np.zeros((channel.dim_in, channel.dim_in)), 1.0, starts, seed)
    return -val, rho


def _min_norm_admissible(channel: KrausChannel, beta: float, margin: float = STRICT_MARGIN):
    """Smallest spectral norm of beta Q = a M1'M1 + b M2'M2 with e^-a + e^-b = 1 - margin."""
    prods = products(channel)
    p1, p2 = prods[0, 0], prods[1, 1]

    def a_of(b):
        return -math.log1p(-margin - math.exp(-b))

    def norm(log_b):
        b = math.exp(log_b)
        return float(np.linalg.norm(a_of(b) * p1 + b * p2, 2))

    lo = math.log(-math.log1p(-margin) * 1.0001)
    res = minimize_scalar(norm, bounds=(lo, math.log(50.0)), method="bounded",
                          options={"xatol": 1e-12})
    b = math.exp(res.x)
    a = a_of(b)
    qmat = np.diag([a, b]) / beta
    return qmat, (a * p1 + b * p2) / beta, float(res.fun)


def et_family_study(x_op, t_grid, beta: float, starts: int = 32, seed=0) -> list[dict]:
    """Per t: B_t, entropic floor B_t/beta, extremal floor, literal and certified small HTOs."""
    x = as_matrix(x_op)
    rows = []
    for t in t_grid:
        row = {"t": float(t), "status": "ok", "extremal": False, "B_t": math.nan,
               "entropic_floor": math.nan, "extremal_floor": math.nan,
               "literal_trace_exp": math.nan, "literal_margin": math.nan,
               "admissible_Q_norm": math.nan, "admissible_trace_exp": math.nan}
        try:
            channel = et_channel(x, t)
        except ContractError:
            row["status"] = "infeasible"
            rows.append(row)
            continue
        b_t, _ = max_entropy_drop(channel, starts, seed)
        row["B_t"] = b_t
        row["entropic_floor"] = b_t / beta
        if not channel.minimal or not is_extremal(channel):
            row["status"] = "not-extremal"
            rows.append(row)
            continue
        row["extremal"] = True
        row["extremal_floor"] = extremal_identity_floor(channel, beta)
        literal = np.diag([math.log(1 / t**2), t**2]) / beta
        row["literal_trace_exp"] = trace_exp(literal, beta)
        row["literal_margin"] = 1.0 - row["literal_trace_exp"]
        qmat, _, norm = _min_norm_admissible(channel, beta)
        row["admissible_Q_norm"] = norm
        row["admissible_trace_exp"] = trace_exp(qmat, beta)
        rows.append(row)
    return rows


STUDY_COLUMNS = ("t", "status", "extremal", "B_t", "entropic_floor", "extremal_floor",
                 "literal_trace_exp", "literal_margin", "admissible_Q_norm", "admissible_trace_exp")
