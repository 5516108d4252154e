import dataclasses

import numpy as np
import pytest

from qheat.errors import ContractError, InadmissibleHTO, ResourceError, ShapeError, TruncationError
from qheat.operators import DensityMatrix, HermitianOperator, Units, j_function, von_neumann_entropy
from qheat.realizations import compute_hto
from qheat.sampling import random_density, random_hermitian, random_pure_vector
from qheat.synthesis import (
    Closure,
    LevelSchedule,
    SiteKind,
    completion_basis,
    dense_oracle_check,
    design_min_heat_erasure,
    equality_case_hto,
    nu_sequence,
    ramp_sequence,
    site_profile,
    structured_heat_accounting,
    swap_equality_case,
    synthesize_complete_erasure,
    synthesize_landauer,
    to_dense,
)

LN2 = np.log(2)
RHO0 = np.diag([2 / 3, 1 / 3])
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


def q_with_j(h, j, beta=1.0):
    """Shift h so that J(beta q) = j."""
    d = h.shape[0]
    j0 = j_function(HermitianOperator(beta * h, Units.DIMENSIONLESS))
    return h + (j - j0) / beta * np.eye(d)


def equality_q(rho0=RHO0, beta=1.0):
    return np.real(equality_case_hto(rho0, np.eye(rho0.shape[0]), beta))


# schedules


def test_schedule_levels_and_divergence():
    sch = LevelSchedule(SiteKind.X, [0.0, 0.5, 2.0], c=1.5)
    nu = np.array([0.0, 0.5, 0.9, 0.999999])
    e = sch.energies(nu)
    assert np.all(e[:, 0] == 0)
    assert np.allclose(e[0], [0, 0.5, 2.0])
    assert np.all(np.diff(e[:, 1]) > 0)
    assert e[-1, 1] > 1e6


def test_schedule_rejects_bad_base():
    with pytest.raises(ShapeError):
        LevelSchedule(SiteKind.X, [0.1, 1.0])
    with pytest.raises(ShapeError):
        LevelSchedule(SiteKind.Y, [0.0, 1.0], c=0)


@pytest.mark.parametrize("s", [1e-3, 1.0, 1e3])
def test_nu_sequence_increasing_from_zero(s):
    sch = LevelSchedule(SiteKind.X, [0.0, 0.3], 1.0)
    nu = nu_sequence(sch, 1.0, 30, s)
    assert nu[0] == 0
    assert np.all(np.diff(nu) > 0)
    assert np.all(nu < 1)


def test_tail_formula_at_point_nine():
    sch = LevelSchedule(SiteKind.X, [0.0, 0.0], 1.0)
    prof = site_profile(sch, np.array([0.0, 0.9]), 1.0)
    tail = prof.tail
    assert tail == pytest.approx(np.exp(-9) / (1 + np.exp(-9)), rel=1e-12)
    assert tail <= 2 * np.exp(-9)


def test_completion_basis_first_column(rng):
    v = random_pure_vector(4, rng)
    u = completion_basis(v)
    assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
    assert np.allclose(u[:, 0], v)


# Landauer chains


def test_landauer_admissible_scalar_example():
    chain = synthesize_landauer(np.eye(2) * (LN2 + 0.1), 1.0)
    assert abs(chain.delta - 0.1) <= 1e-10
    assert chain.epsilon_tail <= 1e-8
    assert chain.szilard_margin > 0
    assert np.isfinite(chain.ln_z_bath)


def test_landauer_inadmissible_scalar_example():
    with pytest.raises(InadmissibleHTO) as info:
        synthesize_landauer(np.eye(2) * (LN2 - 0.1), 1.0)
    assert np.exp(-info.value.j_value) == pytest.approx(1.1052, abs=1e-4)


@pytest.mark.parametrize("alpha,ok", [(0.4, True), (0.0, False), (-0.2, False)])
def test_landauer_one_level_device(alpha, ok):
    q = np.array([[alpha]])
    if not ok:
        with pytest.raises(InadmissibleHTO):
            synthesize_landauer(q, 1.0)
        return
    chain = synthesize_landauer(q, 1.0)
    assert abs(chain.delta - alpha) <= 1e-10
    rep = compute_hto(to_dense(chain))
    assert rep.hto.entries[0, 0].real == pytest.approx(alpha, abs=1e-8)


def test_landauer_chain_length_precondition():
    with pytest.raises(ContractError):
        synthesize_landauer(np.eye(2) * 2, 1.0, chain_length=1)


def test_landauer_truncation_suggests_length():
    with pytest.raises(TruncationError) as info:
        synthesize_landauer(np.eye(2) * (LN2 + 0.1), 1.0, chain_length=3)
    assert info.value.suggested_length > 3
    longer = synthesize_landauer(np.eye(2) * (LN2 + 0.1), 1.0, chain_length=info.value.suggested_length)
    assert abs(longer.delta - 0.1) <= 1e-10


@pytest.mark.parametrize("closure", list(Closure)[:2])
def test_landauer_round_trip_random(rng, closure):
    for d in (2, 3, 4):
        beta = float(rng.uniform(0.5, 2))
        q = q_with_j(random_hermitian(d, rng), float(rng.uniform(0.05, 4)), beta)
        chain = synthesize_landauer(q, beta, closure=closure)
        assert abs(chain.delta - chain.j_value / beta) <= 1e-10
        assert abs(chain.delta - chain.delta_energy_form) <= 1e-10
        assert np.max(np.abs(chain.achieved_q.entries - q)) <= 1e-9
        assert chain.channel_distance <= d * chain.epsilon_tail + 1e-15


def test_bracket_straddles_target():
    chain = synthesize_landauer(np.diag([2.2, 3.5, 5.0]), 0.7)
    s_coarse, s_fine, d_coarse, d_fine = chain.bracket
    assert s_coarse < s_fine
    assert d_coarse > chain.target_delta > d_fine


def test_custom_pure_target(rng):
    psi = random_pure_vector(2, rng)
    chain = synthesize_landauer(np.diag([1.0, 2.0]), 1.0, psi0=psi, chain_length=6, tail_bound=1e-3)
    assert np.allclose(chain.ideal_output(), np.outer(psi, psi.conj()))
    rep = dense_oracle_check(chain)
    assert rep.passed


def test_degenerate_spectrum_chain():
    chain = synthesize_landauer(np.eye(2) * 3.0, 1.0, chain_length=3, tail_bound=1e-3)
    assert np.all(chain.schedule_x.base == 0)
    assert dense_oracle_check(chain).passed


def test_fine_schedule_has_small_dissipation():
    q = np.diag([0.0, 1.0])
    j = j_function(HermitianOperator(q, Units.DIMENSIONLESS))
    chain = synthesize_landauer(q_with_j(q, 0.5), 1.0, chain_length=200)
    fine = dataclasses.replace(chain, s=1e4, ramp_x=ramp_sequence(chain.schedule_x, 1.0, 200, 1e4))
    assert 0 < fine.delta < 0.05
    assert j < 0


# accounting


def test_structured_accounting_matches_target(rng):
    q = q_with_j(random_hermitian(3, rng), 1.2)
    chain = synthesize_landauer(q, 1.0)
    for _ in range(5):
        rho = random_density(3, rng)
        assert structured_heat_accounting(chain, rho) == pytest.approx(np.trace(rho @ q).real, abs=1e-8)


def test_structured_accounting_reports_untuned_offset(rng):
    q = q_with_j(random_hermitian(2, rng), 2.0)
    chain = synthesize_landauer(q, 1.0)
    untuned = dataclasses.replace(chain, s=chain.s * 3, ramp_x=ramp_sequence(chain.schedule_x, 1.0, chain.N, chain.s * 3))
    rho = random_density(2, rng)
    offset = structured_heat_accounting(untuned, rho) - np.trace(rho @ q).real
    assert offset == pytest.approx(untuned.delta - untuned.j_value, abs=1e-10)
    assert abs(offset) > 1e-3


# dense oracle


@pytest.mark.parametrize("closure", list(Closure)[:2])
def test_dense_oracle_small_chain(rng, closure):
    q = q_with_j(random_hermitian(2, rng), 3.0)
    chain = synthesize_landauer(q, 1.0, chain_length=3, tail_bound=1e-3, closure=closure)
    rep = dense_oracle_check(chain)
    assert rep.passed
    assert rep.heat_deviation <= 1e-10
    assert rep.channel_distance <= rep.channel_bound + 1e-12


def test_dense_oracle_complete_erasure(rng):
    rho0 = random_density(2, rng)
    q = q_with_j(random_hermitian(2, rng), 3.0 - von_neumann_entropy(rho0))
    chain = synthesize_complete_erasure(q, 1.0, rho0, M=2, N=2, tail_bound=1e-2)
    rep = dense_oracle_check(chain)
    assert rep.passed and rep.joint_dim == 32


def test_dense_oracle_size_cap():
    chain = synthesize_landauer(np.eye(2) * 3, 1.0, chain_length=30)
    with pytest.raises(ResourceError):
        dense_oracle_check(chain)


# complete erasure


def test_complete_erasure_pure_target_is_landauer():
    q = np.eye(2) * (LN2 + 0.3)
    chain = synthesize_complete_erasure(q, 1.0, np.diag([1.0, 0.0]), M=5, N=30)
    assert chain.r == 1
    assert abs(chain.delta - 0.3) <= 1e-10


def test_complete_erasure_rejects_equality_case():
    with pytest.raises(InadmissibleHTO):
        synthesize_complete_erasure(equality_q(), 1.0, RHO0)


def test_complete_erasure_small_margin_needs_long_chains():
    q = equality_q() + 0.05 * np.eye(2)
    with pytest.raises(TruncationError):
        synthesize_complete_erasure(q, 1.0, RHO0, M=20, N=20)
    chain = synthesize_complete_erasure(q, 1.0, RHO0, M=60, N=60)
    assert abs(chain.delta - 0.05) <= 1e-10
    assert np.max(np.abs(chain.achieved_q.entries - q)) <= 1e-6
    assert chain.szilard_margin > 0


def test_complete_erasure_rank_deficient_target(rng):
    rho0 = np.diag([0.6, 0.4, 0.0])
    q = q_with_j(random_hermitian(3, rng), 2.0)
    chain = synthesize_complete_erasure(q, 1.0, rho0)
    assert chain.r == 2
    assert np.allclose(chain.output_state(), rho0, atol=1e-12)


# swap construction


def test_swap_case_examples():
    rep = compute_hto(swap_equality_case(DensityMatrix.maximally_mixed(2), np.eye(2), 1.0))
    assert np.max(np.abs(rep.hto.entries)) < 1e-12
    rep = compute_hto(swap_equality_case(DensityMatrix(RHO0), np.eye(2), 1.0))
    assert np.allclose(np.linalg.eigvalsh(rep.hto.entries), [-0.23105, 0.46209], atol=1e-5)
    flipped = compute_hto(swap_equality_case(DensityMatrix(RHO0), SIGMA_X, 1.0))
    assert np.allclose(flipped.hto.entries, SIGMA_X @ rep.hto.entries @ SIGMA_X, atol=1e-12)


def test_swap_case_rank_deficient():
    with pytest.raises(InadmissibleHTO):
        swap_equality_case(DensityMatrix(np.diag([1.0, 0.0])), np.eye(2), 1.0)


# minimal-heat design


def test_min_heat_design_mixed():
    rho = DensityMatrix.maximally_mixed(2)
    q, chain = design_min_heat_erasure(rho, 1.0, 0.01)
    heat = np.trace(rho.entries @ q.entries).real
    assert heat == pytest.approx(LN2 + 0.01, abs=1e-12)
    assert chain.j_value == pytest.approx(0.01, abs=1e-12)


def test_min_heat_design_nearly_pure():
    rho = np.diag([1 - 1e-6, 1e-6])
    q, chain = design_min_heat_erasure(rho, 2.0, 0.05, N=400)
    heat = np.trace(rho @ q.entries).real
    bound = von_neumann_entropy(rho) / 2.0
    assert bound <= heat <= bound + 0.05 + 1e-8
    assert heat == pytest.approx(0.05, abs=1e-4)
    assert abs(chain.delta - chain.target_delta) <= 1e-10


def test_min_heat_design_preconditions():
    with pytest.raises(InadmissibleHTO):
        design_min_heat_erasure(np.eye(2) / 2, 1.0, 0.0)
    with pytest.raises(ContractError):
        design_min_heat_erasure(np.diag([1.0, 0.0]), 1.0, 0.1)
