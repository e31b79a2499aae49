import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import random_extension
from qtraj.channels import (
    KrausChannel,
    channel_distance,
    identity_channel,
    random_channel,
    restrict_to_sector,
    validate_cptp,
)
from qtraj.linops import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, direct_sum, haar_unitary, ket, random_density, random_pure
from qtraj.superpose import PathConfig, effective_channel, superpose_general_vacuum, superpose_independent
from qtraj.vacuum import (
    VacuumExtension,
    check_extension_sectors,
    extensions_from_amplitudes,
    independent_kraus,
    is_extreme_extension,
    make_vacuum_extension,
    no_coherence_extension,
    vacuum_interference_operator,
)

S2 = np.sqrt(2)
DEPHASING = KrausChannel([np.diag([1, 0]), np.diag([0, 1])])
seeds = st.integers(0, 2**31 - 1)


def erasure(psi0):
    return KrausChannel([np.outer(psi0, ket(i, 2).ravel()) for i in range(2)])


# construction ---------------------------------------------------------------------


def test_unitary_extension():
    u = haar_unitary(2, seed=1)
    ext = make_vacuum_extension(KrausChannel([u]), [1])
    assert np.allclose(ext.extended_kraus()[0], direct_sum(u, [[1]]))
    assert ext.vac_dim == 1 and ext.n_kraus == 1


def test_dephasing_extension_blocks():
    ext = make_vacuum_extension(DEPHASING, [1 / S2, 1 / S2])
    k0, k1 = ext.extended_kraus()
    assert np.allclose(k0, np.diag([1, 0, 1 / S2]))
    assert np.allclose(k1, np.diag([0, 1, 1 / S2]))


def test_erasure_extension_is_valid():
    psi0 = random_pure(2, seed=3).ravel()
    ext = make_vacuum_extension(erasure(psi0), [0.6, 0.8j])
    assert validate_cptp(ext.channel)
    check_extension_sectors(ext)


def test_amplitude_errors():
    with pytest.raises(ValueError):
        make_vacuum_extension(DEPHASING, [1, 1])
    with pytest.raises(ValueError):
        make_vacuum_extension(DEPHASING, [1])


def test_extension_json_roundtrip():
    ext = random_extension(3, 2, seed=4)
    back = VacuumExtension.from_dict(ext.to_dict())
    assert channel_distance(back.channel, ext.channel) == 0


@given(seeds, st.integers(1, 3), st.integers(1, 4))
def test_extension_invariants(seed, d, rank):
    rank = max(rank, 1)
    ext = random_extension(d, rank, seed)
    assert validate_cptp(ext.channel)
    base_back = restrict_to_sector(ext.channel, ext.space, "msg")
    assert channel_distance(base_back, ext.base) < 1e-12
    vac = restrict_to_sector(ext.channel, ext.space, "vac")
    assert validate_cptp(vac)


# no coherence ---------------------------------------------------------------------


def test_no_coherence_erasure_form():
    psi0 = np.array([1, 0])
    ext = no_coherence_extension(erasure(psi0))
    ops = ext.extended_kraus()
    assert len(ops) == 3
    assert np.allclose(ops[0], direct_sum(np.outer(psi0, [1, 0]), [[0]]))
    assert np.allclose(ops[2], direct_sum(np.zeros((2, 2)), [[1]]))


def test_no_coherence_identity():
    ops = no_coherence_extension(identity_channel(2)).extended_kraus()
    assert np.allclose(ops[0], np.diag([1, 1, 0]))
    assert np.allclose(ops[1], np.diag([0, 0, 1]))


@given(seeds)
def test_no_coherence_decoheres_the_path(seed):
    ext = no_coherence_extension(random_channel(2, 2, 2, seed))
    eff = effective_channel(superpose_independent([ext, ext]), PathConfig.pure([1, 1]))
    for k in range(3):
        rho = random_density(2, seed=seed + k)
        assert np.allclose(eff.path_marginal(rho), np.eye(2) / 2, atol=1e-12)


# interference operator --------------------------------------------------------------


def test_interference_operator_dephasing():
    f = vacuum_interference_operator(make_vacuum_extension(DEPHASING, [1 / S2, 1 / S2]))
    assert np.allclose(f, np.eye(2) / S2, atol=1e-15)


def test_interference_operator_erasure():
    psi0 = random_pure(2, seed=5).ravel()
    alpha = np.array([0.6, 0.8j])
    f = vacuum_interference_operator(make_vacuum_extension(erasure(psi0), alpha))
    assert np.allclose(f, np.outer(psi0, alpha.conj()), atol=1e-15)


def test_interference_operator_depolarising():
    base = KrausChannel([p / 2 for p in (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)])
    f = vacuum_interference_operator(make_vacuum_extension(base, [0.5, 0.5j, 0.5j, 0.5j]))
    cos = 0.5
    sin = np.sqrt(1 - cos**2)
    s = (PAULI_X + PAULI_Y + PAULI_Z) / np.sqrt(3)
    assert np.allclose(f, (cos * PAULI_I - 1j * sin * s) / 2, atol=1e-15)


def test_interference_operator_needs_scalar_vacuum():
    a, _ = extensions_from_amplitudes(DEPHASING, DEPHASING, np.eye(2) / S2, np.eye(2) / S2)
    with pytest.raises(ValueError):
        vacuum_interference_operator(a)


@given(seeds, st.integers(1, 3), st.integers(1, 4))
def test_interference_operator_is_a_contraction(seed, d, rank):
    f = vacuum_interference_operator(random_extension(d, rank, seed))
    assert np.max(np.linalg.eigvalsh(f.conj().T @ f)) <= 1 + 1e-10


@given(seeds)
def test_interference_operator_invariant_under_remixing(seed):
    ext = random_extension(2, 3, seed)
    u = haar_unitary(3, seed + 1)
    kraus = np.einsum("ab,bij->aij", u, ext.base.kraus)
    amps = u @ ext.amplitudes
    remixed = make_vacuum_extension(KrausChannel(kraus), amps)
    assert np.allclose(vacuum_interference_operator(remixed), vacuum_interference_operator(ext), atol=1e-12)


# extremality ---------------------------------------------------------------------------


def test_unitary_extension_is_extreme():
    rep = is_extreme_extension(make_vacuum_extension(KrausChannel([haar_unitary(2, seed=2)]), [1]))
    assert rep.extreme and rep.n_independent == 1


def test_no_coherence_extension_is_not_extreme_and_flags_null_bound():
    rep = is_extreme_extension(no_coherence_extension(DEPHASING))
    assert not rep.extreme
    assert rep.null_count == 1
    assert rep.null_bound == pytest.approx(np.sqrt(2) - 1)
    assert not rep.null_bound_ok


def test_dephasing_extension_is_rank_deficient():
    rep = is_extreme_extension(make_vacuum_extension(DEPHASING, [1 / S2, 1 / S2]))
    assert not rep.extreme
    assert rep.n_independent == 2
    # C1^†C2 and C2^†C1 both reduce to 0 ⊕ 1/2, so only 3 of the 4 products are independent
    assert rep.product_rank == 3
    assert not rep.rank_bound_ok


def test_extremality_report_serialises():
    d = is_extreme_extension(make_vacuum_extension(DEPHASING, [1 / S2, 1 / S2])).to_dict()
    assert set(d) >= {"extreme", "r", "L", "z", "z_bound"}


@given(seeds, st.lists(st.floats(0, 2 * np.pi), min_size=3, max_size=3))
def test_extremality_is_phase_invariant(seed, phases):
    ext = random_extension(2, 3, seed)
    ph = np.exp(1j * np.array(phases))
    rotated = make_vacuum_extension(KrausChannel(ph[:, None, None] * ext.base.kraus), ph * ext.amplitudes)
    assert bool(is_extreme_extension(rotated)) == bool(is_extreme_extension(ext))


@given(seeds, st.floats(0.1, 0.9))
def test_mixtures_of_extensions_are_not_extreme(seed, lam):
    base = random_channel(2, 2, 2, seed)
    g1 = np.array([1, 0])
    g2 = np.array([0, 1j])
    kraus = np.concatenate([np.sqrt(lam) * base.kraus, np.sqrt(1 - lam) * base.kraus])
    amps = np.concatenate([np.sqrt(lam) * g1, np.sqrt(1 - lam) * g2])
    mixed = make_vacuum_extension(KrausChannel(kraus), amps)
    assert validate_cptp(mixed.channel)
    assert not is_extreme_extension(mixed)


def test_independent_kraus_keeps_channel():
    ops = np.stack([np.eye(2) / 2] * 4)
    red = independent_kraus(ops)
    assert red.shape[0] == 1
    assert channel_distance(KrausChannel(red), identity_channel(2)) < 1e-12


# multi-dimensional vacuum -----------------------------------------------------------


def test_amplitudes_with_one_column_reduce_to_scalar_extensions():
    alpha = np.array([[0.6], [0.8]])
    beta = np.array([[1 / S2], [1j / S2]])
    a, b = extensions_from_amplitudes(DEPHASING, DEPHASING, alpha, beta)
    assert a.vac_dim == 1
    ref_a = make_vacuum_extension(DEPHASING, alpha.ravel())
    ref_b = make_vacuum_extension(DEPHASING, beta.ravel())
    assert channel_distance(a.channel, ref_a.channel) < 1e-12
    assert channel_distance(b.channel, ref_b.channel) < 1e-12


def test_two_dim_vacuum_extension_is_valid():
    a, b = extensions_from_amplitudes(DEPHASING, DEPHASING, np.eye(2) / S2, np.array([[1, 1], [1, -1]]) / 2)
    for ext in (a, b):
        assert ext.vac_dim == 2
        assert validate_cptp(ext.channel)
        check_extension_sectors(ext)
        assert np.allclose(sum(k.conj().T @ k for k in ext.vac_blocks), np.eye(2))


def test_zero_amplitude_rows_are_completed():
    alpha = np.array([[1, 0], [0, 0]], dtype=complex)
    a, _ = extensions_from_amplitudes(DEPHASING, DEPHASING, alpha, alpha)
    assert np.allclose(a.vac_blocks[1], 0)
    assert validate_cptp(a.channel)


def _unit(rng, shape):
    m = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return m / np.linalg.norm(m)


@pytest.mark.parametrize("seed", range(5))
def test_amplitude_recipe_reproduces_target_kraus(seed):
    rng = np.random.default_rng(seed)
    a = random_channel(2, 2, 2, seed)
    b = random_channel(2, 2, 3, seed + 100)
    alpha, beta = _unit(rng, (2, 2)), _unit(rng, (3, 2))
    ea, eb = extensions_from_amplitudes(a, b, alpha, beta)
    for ext, amp in ((ea, alpha), (eb, beta)):
        assert np.allclose(ext.vacuum_amplitude_matrix(), amp, atol=1e-12)
    target = KrausChannel(
        direct_sum(a.kraus[i] * beta[j, k], b.kraus[j] * alpha[i, k])
        for i in range(2) for j in range(3) for k in range(2)
    )
    assert validate_cptp(target)
    built = superpose_general_vacuum(ea, eb, failure_state=[1, 0, 0, 0])
    assert channel_distance(built, target) < 1e-11


def test_amplitude_normalisation_is_checked():
    with pytest.raises(ValueError):
        extensions_from_amplitudes(DEPHASING, DEPHASING, np.ones((2, 2)), np.eye(2) / S2)
