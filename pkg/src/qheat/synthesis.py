"""Erasure realizations built from chains of thermal bath sites.

A chain is a sequence of independent bath sites with diagonal Hamiltonians
h(nu_k). The isometry only relabels basis states: the device content is pushed
onto the first X site, every X site hands its content to the next one, and the
device receives either a fixed pure state (Landauer erasure) or the content of
the first Y site (complete erasure to rho0). Everything heat-related therefore
reduces to per-site populations, and the dense form exists only for checking.

Site spacing. All sites of a schedule share the same ramp r = c nu / (1 - nu)
on their excited levels, so the site state is a one-parameter family in the
excited weight. Sites are placed at equal steps of thermodynamic length
arctan(sinh(u / 2)), u = beta r - ln Z_excited, between r = 0 and an end ramp
R(s) = R_tail + c (K - 1) / s. R_tail is the smallest ramp meeting the tail
bound, s -> infinity gives the finest chain and s -> 0 the coarsest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.optimize import brentq
from scipy.special import logit, logsumexp

from .errors import (
    BracketError,
    ContractError,
    InadmissibleHTO,
    NumericError,
    ResourceError,
    ShapeError,
    TruncationError,
)
from .operators import (
    DensityMatrix,
    HermitianOperator,
    Isometry,
    Units,
    as_matrix,
    check_entries,
    j_function,
    trace_distance,
    von_neumann_entropy,
)
from .realizations import DenseRealization, add_heat_rider, average_heat, compute_hto, swap_operator

DELTA_TOL = 1e-10
RANK_TOL = 1e-12
TAIL_MARGIN = 1e-3
ORACLE_MAX_DIM = 2**12
DEFAULT_TAIL = 1e-8


class SiteKind(str, Enum):
    X = "X"
    Y = "Y"


class Closure(str, Enum):
    CYCLIC = "cyclic"
    OPEN = "open"
    TWO_CHAIN = "two-chain"


@dataclass(frozen=True, eq=False)
class LevelSchedule:
    """Level energies eps_0 = 0 and eps_i(nu) = base_i + c nu / (1 - nu)."""

    kind: SiteKind
    base: np.ndarray
    c: float = 1.0

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float).ravel()
        if base.size < 1 or base[0] != 0.0:
            raise ShapeError("schedule base must start with a zero ground level")
        if np.any(base < 0) or not np.all(np.isfinite(base)):
            raise ShapeError("schedule base levels must be finite and nonnegative")
        if not self.c > 0:
            raise ShapeError(f"divergence scale c must be positive, got {self.c}")
        base.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "kind", SiteKind(self.kind))

    @property
    def levels(self) -> int:
        return self.base.size

    def ramp(self, nu) -> np.ndarray:
        nu = np.asarray(nu, dtype=float)
        return self.c * nu / (1.0 - nu)

    def nu_of_ramp(self, ramps) -> np.ndarray:
        ramps = np.asarray(ramps, dtype=float)
        return ramps / (self.c + ramps)

    def energies(self, nu) -> np.ndarray:
        """Array (sites, levels)."""
        return self.energies_at(self.ramp(nu))

    def energies_at(self, ramps) -> np.ndarray:
        """Energies from the divergence terms c nu / (1 - nu) directly.

        Near nu = 1 the ramp cannot be recovered accurately from nu, so chains keep ramps.
        """
        e = self.base[None, :] + np.asarray(ramps, dtype=float)[:, None]
        e[:, 0] = 0.0
        return e


def ramp_sequence(schedule: LevelSchedule, beta: float, sites: int, s: float,
                  tail_bound: float = DEFAULT_TAIL) -> np.ndarray:
    """Divergence terms c nu_k / (1 - nu_k) of the schedule, see ``nu_sequence``."""
    k = np.arange(sites, dtype=float)
    if sites == 1:
        return np.zeros(1)
    if schedule.levels == 1:
        # no excited levels: spacing is irrelevant
        return schedule.c * k / s
    ln_ze = float(logsumexp(-beta * schedule.base[1:]))
    tau = tail_bound * (1.0 - TAIL_MARGIN)
    r_tail = max(0.0, (ln_ze - logit(tau)) / beta)
    r_end = r_tail + schedule.c * (sites - 1) / s
    u_ends = beta * np.array([0.0, r_end]) - ln_ze
    # equal steps in the complementary length m = atan2(1, sinh(u/2)); unlike
    # arctan(sinh(u/2)) it keeps relative precision for large ramps
    with np.errstate(over="ignore", divide="ignore"):
        m = np.linspace(*np.arctan2(1.0, np.sinh(u_ends / 2)), sites)
        ramps = (2 * np.arcsinh(np.cos(m) / np.sin(m)) + ln_ze) / beta
    ramps[0], ramps[-1] = 0.0, r_end
    return np.maximum.accumulate(ramps)


def nu_sequence(schedule: LevelSchedule, beta: float, sites: int, s: float,
                tail_bound: float = DEFAULT_TAIL) -> np.ndarray:
    """Strictly increasing nu_1 = 0 < nu_2 < ... < nu_K < 1 at equal thermodynamic-length steps.

    The last site is pushed far enough that its excited weight stays below ``tail_bound``;
    larger ``s`` gives finer steps and less dissipation.
    """
    return schedule.nu_of_ramp(ramp_sequence(schedule, beta, sites, s, tail_bound))


@dataclass(frozen=True)
class SiteProfile:
    energies: np.ndarray
    log_probs: np.ndarray
    log_zeta: np.ndarray

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def kl_series(self, reverse: bool = False) -> float:
        """sum_k S(sigma_k || sigma_k+1), or S(sigma_k+1 || sigma_k) when reverse."""
        lp = self.log_probs
        a, b = (lp[1:], lp[:-1]) if reverse else (lp[:-1], lp[1:])
        return float(np.sum(np.exp(a) * (a - b)))

    @property
    def tail(self) -> float:
        """Excited weight of the last site."""
        return float(-np.expm1(self.log_probs[-1, 0]))


def site_profile(schedule: LevelSchedule, nu, beta: float, ramps=None) -> SiteProfile:
    e = schedule.energies(nu) if ramps is None else schedule.energies_at(ramps)
    log_zeta = logsumexp(-beta * e, axis=1)
    return SiteProfile(e, -beta * e - log_zeta[:, None], log_zeta)


def completion_basis(psi0) -> np.ndarray:
    """Unitary whose first column is psi0."""
    v = np.asarray(psi0, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(v.size)]))
    q[:, 0] *= np.vdot(q[:, 0], v)
    return q


@dataclass(frozen=True, eq=False)
class ChainRealization:
    """Structured erasure realization on a truncated chain of bath sites."""

    dim_A: int
    beta: float
    target_q: HermitianOperator
    schedule_x: LevelSchedule
    ramp_x: np.ndarray
    basis_x: np.ndarray
    out_basis: np.ndarray
    closure: Closure
    s: float
    target_delta: float
    j_value: float
    entropy_rho0: float = 0.0
    schedule_y: LevelSchedule | None = None
    ramp_y: np.ndarray | None = None
    rider_heat: float = 0.0
    bracket: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "closure", Closure(self.closure))
        for ramp in (self.ramp_x, self.ramp_y):
            if ramp is None:
                continue
            ramp = np.asarray(ramp)
            if ramp[0] != 0 or not np.all(np.isfinite(ramp)) or (ramp.size > 1 and np.any(np.diff(ramp) <= 0)):
                raise ShapeError("nu sequence must increase strictly from 0 and stay below 1")
        if (self.schedule_y is None) != (self.closure is not Closure.TWO_CHAIN):
            raise ShapeError("Y schedule is present exactly for two-chain closure")

    @property
    def nu_x(self) -> np.ndarray:
        return self.schedule_x.nu_of_ramp(self.ramp_x)

    @property
    def nu_y(self) -> np.ndarray | None:
        return None if self.ramp_y is None else self.schedule_y.nu_of_ramp(self.ramp_y)

    @property
    def N(self) -> int:
        return len(self.ramp_x)

    @property
    def M(self) -> int:
        return 0 if self.ramp_y is None else len(self.ramp_y)

    @property
    def r(self) -> int:
        return 1 if self.schedule_y is None else self.schedule_y.levels

    @cached_property
    def x(self) -> SiteProfile:
        return site_profile(self.schedule_x, None, self.beta, self.ramp_x)

    @cached_property
    def y(self) -> SiteProfile | None:
        if self.schedule_y is None:
            return None
        return site_profile(self.schedule_y, None, self.beta, self.ramp_y)

    @cached_property
    def h_out(self) -> np.ndarray:
        """Levels of the output slot receiving the last X site."""
        last_x = self.x.energies[-1]
        if self.closure is Closure.OPEN:
            return last_x
        if self.closure is Closure.TWO_CHAIN:
            return np.concatenate([self.y.energies[-1], last_x[self.r:]])
        return np.zeros(0)

    @cached_property
    def delta(self) -> float:
        """Dissipation Delta from the relative-entropy series."""
        x, b = self.x, self.beta
        kl = x.kl_series()
        sig_n = x.probs[-1]
        if self.closure is Closure.CYCLIC:
            entropy_n = -float(np.dot(sig_n, x.log_probs[-1]))
            val = kl - entropy_n
        elif self.closure is Closure.OPEN:
            val = kl - x.log_zeta[-1]
        else:
            y = self.y
            val = (kl + y.kl_series(reverse=True) + y.log_zeta[-1] - x.log_zeta[-1]
                   + b * float(np.dot(sig_n, self.h_out - x.energies[-1])))
        return val / b + self.rider_heat

    def _bracket_terms(self) -> float:
        """Heat offset sum_sites tr(final - initial) h minus tr(rho q), in energy-difference form."""
        x = self.x
        e, p = x.energies, x.probs
        q0 = float(np.linalg.eigvalsh(self.target_q.entries)[0])
        val = -q0 - float(np.dot(p[0], e[0]))
        val += float(np.sum((p[:-1] - p[1:]) * e[1:]))
        if self.closure is Closure.OPEN:
            val += float(np.dot(p[-1], e[-1]))
        elif self.closure is Closure.TWO_CHAIN:
            ye, yp = self.y.energies, self.y.probs
            val += float(np.sum((yp[1:] - yp[:-1]) * ye[:-1]))
            val += -float(np.dot(yp[-1], ye[-1])) + float(np.dot(p[-1], self.h_out))
        return val + self.rider_heat

    @property
    def delta_energy_form(self) -> float:
        return self.target_delta + self._bracket_terms()

    @property
    def epsilon_tail_x(self) -> float:
        return self.x.tail

    @property
    def epsilon_tail_y(self) -> float:
        return 0.0 if self.y is None else self.y.tail

    @property
    def epsilon_tail(self) -> float:
        return max(self.epsilon_tail_x, self.epsilon_tail_y)

    @property
    def ln_z_bath(self) -> float:
        val = float(np.sum(self.x.log_zeta))
        if self.y is not None:
            val += float(np.sum(self.y.log_zeta))
        return val

    @property
    def achieved_q(self) -> HermitianOperator:
        """HTO of the truncated chain: target q shifted by Delta - Delta_target."""
        shift = self.delta - self.target_delta
        return HermitianOperator(self.target_q.entries + shift * np.eye(self.dim_A), Units.ENERGY)

    @property
    def szilard_margin(self) -> float:
        """1 - tr exp(-beta Q_hat) exp(-S(rho0)); the plain Szilard margin for Landauer chains."""
        g = HermitianOperator(self.beta * self.achieved_q.entries, Units.DIMENSIONLESS)
        return float(-np.expm1(-(j_function(g) + self.entropy_rho0)))

    def output_state(self) -> np.ndarray:
        """Constant output of the induced channel."""
        if self.closure is Closure.CYCLIC:
            phi = self.out_basis
            return (phi * self.x.probs[-1]) @ phi.conj().T
        if self.closure is Closure.OPEN:
            v = self.out_basis[:, 0]
            return np.outer(v, v.conj())
        a = self.out_basis[:, : self.r]
        return (a * self.y.probs[0]) @ a.conj().T

    def ideal_output(self) -> np.ndarray:
        if self.closure is Closure.TWO_CHAIN:
            return self.output_state()
        v = self.out_basis[:, 0]
        return np.outer(v, v.conj())

    @property
    def channel_distance(self) -> float:
        """Distance to the ideal erasure; exact since both channels have constant output."""
        return trace_distance(self.output_state(), self.ideal_output())

    def descriptor(self) -> dict:
        return {
            "d": self.dim_A,
            "r": self.r,
            "closure": self.closure.value,
            "base_x": self.schedule_x.base.tolist(),
            "base_y": [] if self.schedule_y is None else self.schedule_y.base.tolist(),
            "c": self.schedule_x.c,
            "s": self.s,
            "N": self.N,
            "M": self.M,
            "beta": self.beta,
            "nu_x": np.asarray(self.nu_x).tolist(),
            "nu_y": [] if self.nu_y is None else np.asarray(self.nu_y).tolist(),
            "epsilon_tail_achieved": self.epsilon_tail,
            "delta_achieved": self.delta,
            "delta_target": self.target_delta,
            "ln_Z_B": self.ln_z_bath,
            "szilard_margin": self.szilard_margin,
            "channel_distance": self.channel_distance,
        }


def _tune(build, target: float, length: int, delta_tol: float = DELTA_TOL):
    """Root of Delta(s) = target in log s; Delta falls as s grows."""
    def gap(log_s):
        return build(math.exp(log_s)).delta - target

    step = math.log(8.0)
    g0 = gap(0.0)
    if g0 == 0:
        chain = build(1.0)
        return chain, (1.0, 1.0, chain.delta, chain.delta)
    if g0 < 0:
        fine, coarse = 0.0, -step
        while gap(coarse) <= 0:
            fine, coarse = coarse, coarse - step
            if coarse < -600:
                raise BracketError(f"Delta cannot reach target {target:.6g} even on the coarsest chain")
    else:
        coarse, fine = 0.0, step
        while gap(fine) >= 0:
            coarse, fine = fine, fine + step
            if fine > 80:
                floor = build(math.exp(fine)).delta
                suggested = int(math.ceil(length * 1.5 * max(floor / max(target, 1e-300), 1.0))) + 1
                raise TruncationError(
                    f"finest chain of length {length} dissipates {floor:.6g} > target {target:.6g}",
                    suggested_length=suggested,
                )
    root = brentq(gap, coarse, fine, xtol=1e-14, rtol=8.9e-16, maxiter=500)
    chain = build(math.exp(root))
    if abs(chain.delta - target) > delta_tol:
        # brentq stops on the bracket width; take the better end point if it is closer
        alt = [build(math.exp(x)) for x in (coarse, fine)]
        chain = min([chain] + alt, key=lambda c: abs(c.delta - target))
        if abs(chain.delta - target) > delta_tol:
            raise NumericError(f"Delta bisection stalled at |Delta - target| = {abs(chain.delta - target):.3e}")
    bracket = (math.exp(coarse), math.exp(fine), build(math.exp(coarse)).delta, build(math.exp(fine)).delta)
    return chain, bracket


def _check_tails(chain: ChainRealization, tail_bound: float) -> None:
    if chain.epsilon_tail > tail_bound:
        raise TruncationError(
            f"tail weight {chain.epsilon_tail:.3e} exceeds bound {tail_bound:.3e}",
            suggested_length=2 * chain.N,
        )


def _hermitian_energy(q) -> HermitianOperator:
    if isinstance(q, HermitianOperator):
        if q.units is not Units.ENERGY:
            raise ContractError("target heat operator must carry energy units")
        return q
    return HermitianOperator(as_matrix(q), Units.ENERGY)


def synthesize_landauer(q, beta: float, psi0=None, chain_length: int = 30,
                        tail_bound: float = DEFAULT_TAIL, c: float = 1.0,
                        closure: Closure | str = Closure.CYCLIC,
                        delta_tol: float = DELTA_TOL) -> ChainRealization:
    """Chain realization of the erasure rho -> |psi0><psi0| whose HTO is q (up to 1e-10)."""
    q = _hermitian_energy(q)
    closure = Closure(closure)
    if closure is Closure.TWO_CHAIN:
        raise ContractError("Landauer chains close cyclically or into an open slot")
    d = q.dim
    j = j_function(HermitianOperator(beta * q.entries, Units.DIMENSIONLESS))
    if not j > 0:
        raise InadmissibleHTO(f"J(beta q) = {j:.12g} is not positive; tr exp(-beta q) >= 1", j_value=j)
    if chain_length < 2:
        raise ContractError("chain length must be at least 2")
    psi0 = np.eye(d)[:, 0] if psi0 is None else np.asarray(psi0, dtype=complex).ravel()
    if psi0.size != d:
        raise ShapeError(f"psi0 has dimension {psi0.size}, device has {d}")
    w, vecs = np.linalg.eigh(q.entries)
    schedule = LevelSchedule(SiteKind.X, w - w[0], c)
    phi = completion_basis(psi0)
    target = j / beta

    def build(s, rider=0.0):
        return ChainRealization(
            dim_A=d, beta=beta, target_q=q, schedule_x=schedule,
            ramp_x=ramp_sequence(schedule, beta, chain_length, s, tail_bound),
            basis_x=vecs, out_basis=phi, closure=closure, s=s,
            target_delta=target, j_value=j, rider_heat=rider,
        )

    if d == 1:
        # one-level sites carry no heat; the whole amount goes through a two-level rider
        chain = build(1.0)
        chain = build(1.0, rider=target - chain.delta)
        bracket = ()
    else:
        chain, bracket = _tune(build, target, chain_length, delta_tol)
    _check_tails(chain, tail_bound)
    object.__setattr__(chain, "bracket", bracket)
    return chain


def synthesize_complete_erasure(q, beta: float, rho0, M: int = 20, N: int = 20,
                                tail_bound: float = DEFAULT_TAIL, c: float = 1.0,
                                delta_tol: float = DELTA_TOL) -> ChainRealization:
    """Two-chain realization of the constant channel rho -> rho0 with HTO q."""
    q = _hermitian_energy(q)
    rho0 = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(as_matrix(rho0))
    d = q.dim
    if rho0.dim != d:
        raise ShapeError("rho0 and q act on different dimensions")
    j = j_function(HermitianOperator(beta * q.entries, Units.DIMENSIONLESS))
    s0 = von_neumann_entropy(rho0)
    if not j > -s0:
        raise InadmissibleHTO(
            f"J(beta q) = {j:.12g} does not exceed -S(rho0) = {-s0:.12g}", j_value=j)
    if N < 2 or M < 1:
        raise ContractError("need N >= 2 X sites and M >= 1 Y sites")
    p, alpha = np.linalg.eigh(rho0.entries)
    p, alpha = p[::-1], alpha[:, ::-1]
    r = int(np.sum(p > RANK_TOL))
    base_y = np.log(p[0] / p[:r]) / beta
    base_y[0] = 0.0
    w, vecs = np.linalg.eigh(q.entries)
    sched_x = LevelSchedule(SiteKind.X, w - w[0], c)
    sched_y = LevelSchedule(SiteKind.Y, base_y, c)
    target = (j + s0) / beta

    def build(s):
        return ChainRealization(
            dim_A=d, beta=beta, target_q=q, schedule_x=sched_x,
            ramp_x=ramp_sequence(sched_x, beta, N, s, tail_bound),
            basis_x=vecs, out_basis=alpha, closure=Closure.TWO_CHAIN, s=s,
            target_delta=target, j_value=j, entropy_rho0=s0,
            schedule_y=sched_y, ramp_y=ramp_sequence(sched_y, beta, M, s, tail_bound),
        )

    chain, bracket = _tune(build, target, N, delta_tol)
    _check_tails(chain, tail_bound)
    object.__setattr__(chain, "bracket", bracket)
    return chain


def swap_equality_case(rho0, w, beta: float) -> DenseRealization:
    """Rotate the device by W, then swap it with a bath copy prepared thermally in rho0."""
    rho0 = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(as_matrix(rho0))
    w = as_matrix(w)
    d = rho0.dim
    if w.shape != (d, d):
        raise ShapeError("W must act on the device")
    lam, vecs = np.linalg.eigh(rho0.entries)
    if lam[0] <= RANK_TOL:
        raise InadmissibleHTO("rho0 must be full rank for the swap construction",
                              j_value=float("nan"))
    h_b = (vecs * (-np.log(lam) / beta)) @ vecs.conj().T
    v = swap_operator(d) @ np.kron(w, np.eye(d))
    return DenseRealization(d, HermitianOperator(h_b), beta, Isometry(v))


def equality_case_hto(rho0, w, beta: float) -> np.ndarray:
    """Closed form -W^dagger (ln rho0 + S(rho0)) W / beta."""
    r = as_matrix(rho0)
    lam, vecs = np.linalg.eigh(r)
    s0 = -float(np.dot(lam, np.log(lam)))
    log_r = (vecs * np.log(lam)) @ vecs.conj().T
    w = as_matrix(w)
    return -(w.conj().T @ (log_r + s0 * np.eye(r.shape[0])) @ w) / beta


def structured_heat_accounting(chain: ChainRealization, rho) -> float:
    """Bath energy change summed site by site from the final site populations."""
    rho = as_matrix(rho)
    if rho.shape != (chain.dim_A, chain.dim_A):
        raise ShapeError("state does not live on the device")
    u = chain.basis_x
    pops = np.einsum("ia,ij,ja->a", u.conj(), rho, u).real
    x = chain.x
    p, e = x.probs, x.energies
    finals = np.vstack([pops[None, :], p[:-1]])
    total = float(np.sum((finals - p) * e))
    if chain.closure is Closure.OPEN:
        total += float(np.dot(p[-1], chain.h_out))
    elif chain.closure is Closure.TWO_CHAIN:
        yp, ye = chain.y.probs, chain.y.energies
        total += float(np.sum((yp[1:] - yp[:-1]) * ye[:-1]))
        total += float(np.dot(p[-1], chain.h_out)) - float(np.dot(yp[-1], ye[-1]))
    return total + chain.rider_heat


# Dense materialization


def _site_sum(levels) -> np.ndarray:
    """Diagonal of sum_k h_k on the product of sites, first site most significant."""
    total = np.zeros(1)
    for lv in levels:
        total = (total[:, None] + np.asarray(lv)[None, :]).ravel()
    return total


def _relabel(in_dims, out_dims, mapping) -> np.ndarray:
    """0/1 matrix sending basis state idx to mapping(idx)."""
    size_in, size_out = int(np.prod(in_dims)), int(np.prod(out_dims))
    check_entries(size_out, size_in)
    coords = list(np.indices(in_dims).reshape(len(in_dims), -1))
    out = np.ravel_multi_index(tuple(mapping(coords)), out_dims)
    v = np.zeros((size_out, size_in))
    v[out, np.arange(size_in)] = 1.0
    return v


def to_dense(chain: ChainRealization) -> DenseRealization:
    """Materialize the chain as a dense realization (device first, sites in chain order)."""
    d, n, m, r = chain.dim_A, chain.N, chain.M, chain.r
    xe = chain.x.energies
    if chain.closure is Closure.CYCLIC:
        in_dims = (d,) + (d,) * n
        out_dims = in_dims
        in_levels = list(xe)
        out_levels = in_levels

        def mapping(c):
            return [c[n]] + [c[0]] + c[1:n]
    elif chain.closure is Closure.OPEN:
        in_dims = (d,) + (d,) * n
        out_dims = (d,) + (d,) * (n + 1)
        in_levels = list(xe)
        out_levels = in_levels + [chain.h_out]

        def mapping(c):
            return [np.zeros_like(c[0])] + c[0:n + 1]
    else:
        ye = chain.y.energies
        in_dims = (d,) + (r,) * m + (d,) * n
        out_dims = (d,) + (r,) * (m - 1) + (d,) + (d,) * n
        in_levels = list(ye) + list(xe)
        out_levels = list(ye[:-1]) + [chain.h_out] + list(xe)

        def mapping(c):
            ys, xs = c[1:m + 1], c[m + 1:]
            return [ys[0]] + ys[1:] + [xs[-1]] + [c[0]] + xs[:-1]

    size_in = int(np.prod(in_dims))
    size_out = int(np.prod(out_dims))
    check_entries(size_out, size_in)
    v_level = _relabel(in_dims, out_dims, mapping)
    bo, bi = size_out // d, size_in // d
    v4 = v_level.reshape(d, bo, d, bi)
    v4 = np.einsum("xp,pycb,ac->xyab", chain.out_basis, v4, chain.basis_x.conj())
    h_in = np.diag(_site_sum(in_levels))
    h_out = None if out_dims == in_dims else np.diag(_site_sum(out_levels))
    dense = DenseRealization(d, HermitianOperator(h_in), chain.beta,
                             Isometry(v4.reshape(size_out, size_in)),
                             None if h_out is None else HermitianOperator(h_out))
    if chain.rider_heat:
        dense = add_heat_rider(dense, chain.rider_heat)
    return dense


@dataclass(frozen=True)
class OracleReport:
    heat_deviation: float
    hto_deviation: float
    channel_distance: float
    channel_bound: float
    joint_dim: int

    @property
    def passed(self) -> bool:
        return (self.heat_deviation <= 1e-10 and self.hto_deviation <= 1e-10
                and self.channel_distance <= self.channel_bound + 1e-12)


def dense_oracle_check(chain: ChainRealization, probes: int = 8, seed=0) -> OracleReport:
    """Compare the structured accounting with the dense HTO and channel."""
    from .channels import channel_distance, complete_erasure
    from .sampling import random_density

    dim_in = chain.dim_A * chain.dim_A ** chain.N * chain.r ** chain.M
    dim_out = dim_in * (chain.dim_A if chain.closure is Closure.OPEN else 1)
    if chain.closure is Closure.TWO_CHAIN:
        dim_out = dim_in // chain.r * chain.dim_A
    if max(dim_in, dim_out) > ORACLE_MAX_DIM:
        raise ResourceError(f"joint dimension {max(dim_in, dim_out)} exceeds oracle cap {ORACLE_MAX_DIM}")
    dense = to_dense(chain)
    report = compute_hto(dense)
    rng = np.random.default_rng(seed)
    states = [random_density(chain.dim_A, rng) for _ in range(probes)]
    states.append(np.eye(chain.dim_A) / chain.dim_A)
    heat_dev = max(abs(structured_heat_accounting(chain, s) - average_heat(report, s)) for s in states)
    hto_dev = float(np.max(np.abs(report.hto.entries - chain.achieved_q.entries)))
    ideal = complete_erasure(chain.ideal_output(), chain.dim_A)
    dist = channel_distance(report.channel, ideal)
    return OracleReport(heat_dev, hto_dev, dist, chain.dim_A * chain.epsilon_tail, max(dim_in, dim_out))


def design_min_heat_erasure(rho_avg, beta: float, epsilon: float, N: int = 200,
                            tail_bound: float = DEFAULT_TAIL, psi0=None):
    """HTO -ln(rho_avg)/beta + epsilon and its chain; average heat sits epsilon above the bound."""
    rho = rho_avg if isinstance(rho_avg, DensityMatrix) else DensityMatrix(as_matrix(rho_avg))
    if not epsilon > 0:
        raise InadmissibleHTO(f"epsilon must be positive for a finite bath, got {epsilon}",
                              j_value=beta * epsilon)
    lam, vecs = np.linalg.eigh(rho.entries)
    if lam[0] <= RANK_TOL:
        raise ContractError("rho_avg must be full rank")
    q = (vecs * (-np.log(lam) / beta + epsilon)) @ vecs.conj().T
    q_op = HermitianOperator(q, Units.ENERGY)
    return q_op, synthesize_landauer(q_op, beta, psi0=psi0, chain_length=N, tail_bound=tail_bound)
