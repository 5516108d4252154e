import numpy as np
import pytest

from qheat.channels import (
    KrausChannel,
    apply,
    channel_distance,
    complete_erasure,
    convex_combine,
    et_channel,
    from_choi,
    identity_channel,
    is_extremal,
    minimal_kraus,
    to_choi,
    unitary_channel,
)
from qheat.errors import ContractError, InvariantError, ShapeError
from qheat.operators import trace_distance
from qheat.sampling import random_density, random_kraus, random_unitary

X01 = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_kraus_channel_requires_trace_preservation():
    with pytest.raises(InvariantError):
        KrausChannel(np.array([np.eye(2) * 0.9]))


def test_minimal_flag_checked():
    with pytest.raises(InvariantError):
        KrausChannel(np.array([np.eye(2), np.eye(2)]) / np.sqrt(2), minimal=True)


def test_apply_identity_and_erasure(rng):
    rho = random_density(3, rng)
    assert np.allclose(apply(identity_channel(3), rho).entries, rho)
    rho0 = random_density(3, rng)
    assert np.allclose(apply(complete_erasure(rho0), rho).entries, rho0, atol=1e-12)


def test_apply_et_channel():
    out = apply(et_channel(X01, 0.5), np.diag([0, 1]))
    assert np.allclose(out.entries, np.diag([0.25, 0.75]), atol=1e-12)


def test_apply_dimension_mismatch():
    with pytest.raises(ShapeError):
        apply(identity_channel(2), np.eye(3) / 3)


def test_choi_identity_rank_one():
    choi = to_choi(identity_channel(2))
    phi = np.zeros(4)
    phi[[0, 3]] = 1
    assert np.allclose(choi.matrix, np.outer(phi, phi))
    assert choi.rank == 1
    assert from_choi(choi).n == 1


def test_choi_of_maximally_mixing_erasure_has_rank_four():
    ch = complete_erasure(np.eye(2) / 2)
    assert to_choi(ch).rank == 4
    assert minimal_kraus(KrausChannel(ch.kraus_ops)).n == 4


def test_redundant_kraus_collapses():
    u = random_unitary(2, 3)
    ch = KrausChannel(np.array([u, u]) / np.sqrt(2))
    m = minimal_kraus(ch)
    assert m.n == 1 and m.minimal


def test_choi_round_trip(rng):
    for n in (1, 2, 5):
        ch = KrausChannel(random_kraus(3, n, rng))
        back = from_choi(to_choi(ch))
        assert back.n == n
        for e in np.eye(3):
            basis = np.outer(e, e)
            assert trace_distance(ch(basis), back(basis)) < 1e-9


def test_minimal_count_equals_choi_rank(rng):
    for n in (1, 2, 3, 4):
        ch = KrausChannel(random_kraus(2, n, rng))
        assert minimal_kraus(ch).n == to_choi(ch).rank == min(n, 4)


def test_trace_preservation_and_cp_for_constructed_channels(rng):
    channels = [identity_channel(2), complete_erasure(np.diag([0.7, 0.3])), et_channel(X01, 0.3),
                KrausChannel(random_kraus(2, 3, rng)), unitary_channel(random_unitary(2, rng))]
    for ch in channels:
        to_choi(ch)
        for _ in range(100):
            assert abs(np.trace(ch(random_density(2, rng))) - 1) <= 1e-9


def test_extremality_examples():
    assert is_extremal(unitary_channel(random_unitary(2, 0)))
    rep = is_extremal(et_channel(X01, 0.5))
    assert rep.extremal and rep.singular_ratio > 1e-3
    rep = is_extremal(complete_erasure(np.eye(2) / 2))
    assert not rep.extremal
    assert rep.witness.shape == (4, 4)


def test_extremality_requires_minimal():
    with pytest.raises(ContractError):
        is_extremal(KrausChannel(np.eye(2)[None]))


def test_convex_combine_examples(rng):
    ch = KrausChannel(random_kraus(2, 2, rng))
    rho = random_density(2, rng)
    assert np.allclose(convex_combine([ch, ch], [0.3, 0.7])(rho), ch(rho))
    mix = convex_combine([identity_channel(2), unitary_channel(SIGMA_X)], [0.5, 0.5])
    assert np.allclose(mix(np.diag([1, 0])), np.eye(2) / 2)
    other = unitary_channel(SIGMA_X)
    assert np.allclose(convex_combine([ch, other], [1, 0])(rho), ch(rho))


def test_convex_combine_matches_pointwise_mixture(rng):
    a, b = KrausChannel(random_kraus(3, 2, rng)), KrausChannel(random_kraus(3, 3, rng))
    mix = convex_combine([a, b], [0.25, 0.75])
    for _ in range(100):
        rho = random_density(3, rng)
        assert np.max(np.abs(mix(rho) - 0.25 * a(rho) - 0.75 * b(rho))) <= 1e-10


def test_convex_combine_rejects_bad_weights():
    ch = identity_channel(2)
    with pytest.raises(ContractError):
        convex_combine([ch, ch], [1.5, -0.5])
    with pytest.raises(ContractError):
        convex_combine([ch, ch], [0.5, 0.6])


def test_channel_distance_examples():
    ch = et_channel(X01, 0.4)
    assert channel_distance(ch, ch) == 0
    assert channel_distance(identity_channel(2), unitary_channel(SIGMA_X)) == pytest.approx(1)
    r0, r1 = np.diag([0.8, 0.2]), np.diag([0.5, 0.5])
    assert channel_distance(complete_erasure(r0), complete_erasure(r1)) == pytest.approx(trace_distance(r0, r1))


def test_complete_erasure_keeps_tiny_weights_exact():
    rho0 = np.diag([1 - 1e-13, 1e-13])
    ch = complete_erasure(rho0)
    assert not ch.minimal
    assert np.allclose(ch(np.eye(2) / 2), rho0, atol=0, rtol=1e-12)
