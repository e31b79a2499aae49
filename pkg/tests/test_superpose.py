import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import apply_kraus, brute_force_superposition, choi_distance, random_extension
from qtraj.capacity import path_branches
from qtraj.channels import (
    KrausChannel,
    channel_distance,
    choi,
    identity_channel,
    mix,
    random_channel,
    restrict_to_sector,
    tensor,
    unitary_channel,
    validate_cptp,
)
from qtraj.linops import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    SectorSpace,
    direct_sum,
    fourier_basis,
    haar_unitary,
    ket,
    kron,
    partial_trace,
    projector,
    random_density,
    random_pure,
    swap_operator,
)
from qtraj.reproduce import depolarising_extension, dephasing_extension, erasure_extension
from qtraj.superpose import (
    LocalVacuumViolation,
    PathConfig,
    asymptotic_identical_channel,
    check_path_sectors,
    closed_form_identical,
    correlated_env_channel,
    correlated_superposition,
    cswap_realization,
    effective_channel,
    induced_vacuum_extension,
    oi_realization,
    one_particle_embedding,
    particle_mode_isomorphism,
    superpose_general_vacuum,
    superpose_independent,
    to_slot_ordering,
    vacuum_discarding_map,
)
from qtraj.vacuum import VacuumExtension, extensions_from_amplitudes, make_vacuum_extension, no_coherence_extension

S2 = np.sqrt(2)
PLUS = PathConfig.pure([1, 1])
seeds = st.integers(0, 2**31 - 1)


def unitary_ext(u, phase=1.0):
    return make_vacuum_extension(KrausChannel([u]), [phase])


def erasure_pair(psi0, alpha, coherent=True):
    base = KrausChannel([np.outer(psi0, ket(i, 2).ravel()) for i in range(2)])
    ext = make_vacuum_extension(base, alpha) if coherent else no_coherence_extension(base)
    return superpose_independent([ext, ext])


# pictures ---------------------------------------------------------------------------


def test_isomorphism_trivial_case():
    assert np.array_equal(particle_mode_isomorphism(1, 1), np.ones((1, 1)))


def test_isomorphism_two_paths_is_a_permutation():
    u = particle_mode_isomorphism(2, 2)
    assert set(np.unique(u)) == {0, 1}
    assert np.array_equal(u.sum(axis=0), np.ones(4)) and np.array_equal(u.sum(axis=1), np.ones(4))
    psi = random_pure(2, seed=1)
    # path 0 lands in the first slot, path 1 in the second
    assert np.allclose(u @ np.kron(psi, ket(0, 2)), np.vstack([psi, np.zeros((2, 1))]))
    assert np.allclose(u @ np.kron(psi, ket(1, 2)), np.vstack([np.zeros((2, 1)), psi]))


@pytest.mark.parametrize("d,n", [(2, 2), (3, 4)])
def test_isomorphism_is_unitary(d, n):
    u = particle_mode_isomorphism(d, n)
    assert np.array_equal(u.conj().T @ u, np.eye(d * n))


def test_one_particle_embedding_is_an_isometry():
    iso = one_particle_embedding(2, 3)
    assert iso.shape == (27, 6)
    assert np.array_equal(iso.conj().T @ iso, np.eye(6))


# independent superpositions ---------------------------------------------------------


def test_unitary_extensions_give_a_controlled_unitary():
    u, v = haar_unitary(2, seed=1), haar_unitary(2, seed=2)
    sup = superpose_independent([unitary_ext(u), unitary_ext(v)])
    assert sup.n_kraus == 1
    expected = np.kron(u, projector(ket(0, 2))) + np.kron(v, projector(ket(1, 2)))
    assert np.allclose(sup.kraus[0], expected, atol=1e-15)


def test_dephasing_pair_has_four_kraus_operators():
    sup = superpose_independent([dephasing_extension()] * 2)
    assert sup.n_kraus == 4
    assert validate_cptp(sup)


@pytest.mark.parametrize("seed", range(4))
def test_three_paths_match_mode_picture_oracle(seed):
    exts = [random_extension(2, 2, seed * 10 + k) for k in range(3)]
    sup = superpose_independent(exts)
    assert choi_distance(list(sup.kraus), brute_force_superposition(exts), 6) < 1e-10


def test_superposition_rejects_mismatched_dimensions():
    with pytest.raises(ValueError):
        superpose_independent([random_extension(2, 1, 1), random_extension(3, 1, 2)])
    with pytest.raises(ValueError):
        superpose_independent([])


@given(seeds, st.integers(2, 3))
def test_superposition_respects_path_sectors_and_restricts_to_parents(seed, n):
    exts = [random_extension(2, 2, seed + k) for k in range(n)]
    sup = superpose_independent(exts)
    assert validate_cptp(sup)
    check_path_sectors(sup, 2, n)
    space = SectorSpace(tuple((f"p{j}", 2) for j in range(n)))
    slots = to_slot_ordering(sup, 2, n)
    for j, ext in enumerate(exts):
        assert channel_distance(restrict_to_sector(slots, space, f"p{j}"), ext.base) < 1e-10


def test_identical_unitary_extensions_act_as_unitary_on_message():
    u = haar_unitary(3, seed=4)
    sup = superpose_independent([unitary_ext(u)] * 3)
    assert channel_distance(sup, unitary_channel(np.kron(u, np.eye(3)))) < 1e-12


# effective channels ------------------------------------------------------------------


def test_identity_superposition_with_definite_path_is_an_embedding():
    sup = superpose_independent([unitary_ext(np.eye(2))] * 2)
    eff = effective_channel(sup, PathConfig.pure([1, 0]))
    rho = random_density(2, seed=3)
    assert np.allclose(eff(rho), np.kron(rho, projector(ket(0, 2))), atol=1e-15)


def test_erasure_pair_gives_binary_asymmetric_path_channel():
    psi0 = random_pure(2, seed=5).ravel()
    alpha = np.array([0.6, 0.8j])
    eff = effective_channel(erasure_pair(psi0, alpha), PLUS)
    plus = projector(np.ones(2))
    for k in range(10):
        rho = random_density(2, seed=100 + k)
        p = np.real(alpha.conj() @ rho @ alpha)
        expected = np.kron(np.outer(psi0, psi0.conj()), p * plus + (1 - p) * np.eye(2) / 2)
        assert np.max(np.abs(eff(rho) - expected)) < 1e-12


def test_erasure_pair_without_coherence_is_constant():
    psi0 = np.array([1, 0])
    eff = effective_channel(erasure_pair(psi0, None, coherent=False), PLUS)
    expected = np.kron(np.outer(psi0, psi0), np.eye(2) / 2)
    for k in range(5):
        assert np.allclose(eff(random_density(2, seed=k)), expected, atol=1e-15)


def test_effective_channel_absorbs_mixed_path_states():
    exts = [random_extension(2, 2, 7), random_extension(2, 3, 8)]
    sup = superpose_independent(exts)
    omega = random_density(2, seed=9)
    eff = effective_channel(sup, PathConfig(omega))
    rho = random_density(2, seed=10)
    assert np.max(np.abs(eff(rho) - sup.apply(np.kron(rho, omega)))) < 1e-13


def test_effective_channel_checks_path_count():
    with pytest.raises(ValueError):
        effective_channel(identity_channel(6), PathConfig.uniform(4))


def test_path_config_rejects_invalid_states():
    with pytest.raises(ValueError):
        PathConfig(np.diag([1.0, 1.0]))
    with pytest.raises(ValueError):
        PathConfig(np.ones((2, 3)) / 2)


# closed forms -----------------------------------------------------------------------------


def _uniform_split(n):
    e0 = projector(np.ones(n))
    return [e0, np.eye(n) - e0]


@pytest.mark.parametrize("n,rank", [(2, 3), (3, 3), (5, 2), (8, 2)])
def test_closed_form_matches_direct_construction(n, rank):
    ext = random_extension(2, rank, seed=31 + n)
    direct = effective_channel(superpose_independent([ext] * n), PathConfig.uniform(n))
    closed = closed_form_identical(ext, n)
    assert channel_distance(direct.chan, closed.chan) < 1e-10


def test_dephasing_destructive_branch_is_a_quarter_of_z():
    eff = closed_form_identical(dephasing_extension(), 2)
    dec = path_branches(eff, _uniform_split(2), probe=np.eye(2) / 2)
    construct, destruct = dec.branches
    assert destruct.probability == pytest.approx(0.25, abs=1e-12)
    assert construct.probability == pytest.approx(0.75, abs=1e-12)
    assert channel_distance(destruct.operation, KrausChannel([PAULI_Z / 2])) < 1e-12


def test_unitary_extension_has_no_destructive_branch():
    eff = closed_form_identical(unitary_ext(np.eye(2)), 2)
    dec = path_branches(eff, _uniform_split(2), probe=np.eye(2) / 2)
    assert dec.branches[1].probability == pytest.approx(0, abs=1e-14)
    assert channel_distance(dec.branches[0].operation, identity_channel(2)) < 1e-12


def test_branches_reassemble_base_channel():
    ext = random_extension(2, 3, seed=2)
    eff = closed_form_identical(ext, 3)
    dec = path_branches(eff, _uniform_split(3))
    assert dec.probabilities.sum() == pytest.approx(1, abs=1e-10)
    assert channel_distance(dec.reassembled(), ext.base) < 1e-10


@pytest.mark.parametrize("make", [dephasing_extension, depolarising_extension])
@pytest.mark.parametrize("n", [2, 3, 5])
def test_constructive_branch_is_never_noiseless(make, n):
    dec = path_branches(closed_form_identical(make(), n), _uniform_split(n))
    op = dec.branches[0].operation
    c = choi(op)
    spectrum = np.sort(np.linalg.eigvalsh(c / np.trace(c).real))[::-1]
    # a unitary conjugation has a rank-one Choi matrix
    assert spectrum[1] > 1e-3


def test_closed_form_approaches_asymptotic_channel():
    ext = random_extension(2, 3, seed=12)
    asym = asymptotic_identical_channel(ext)
    assert validate_cptp(asym.chan)
    rho = random_density(2, seed=13)
    limit = asym(rho).reshape(2, 2, 2, 2)[:, 0, :, 0]
    gaps = []
    for n in (2, 4, 8, 16):
        eff = closed_form_identical(ext, n)
        e0 = fourier_basis(n)[:, [0]]
        lift = np.kron(np.eye(2), e0)
        gaps.append(np.linalg.norm(lift.conj().T @ eff(rho) @ lift - limit))
    # the gap is exactly (A(rho) - F rho F^†)/N
    assert np.allclose(np.array(gaps) * np.array([2, 4, 8, 16]), gaps[0] * 2, rtol=1e-9)


def test_closed_form_rejects_multi_dim_vacuum():
    a, _ = extensions_from_amplitudes(identity_channel(2), identity_channel(2), [[S2 / 2, S2 / 2]], [[1, 0]])
    with pytest.raises(ValueError):
        closed_form_identical(a, 2)


# CSWAP circuit --------------------------------------------------------------------------


def test_cswap_with_definite_control_is_the_first_channel():
    u = haar_unitary(2, seed=14)
    ext = unitary_ext(u)
    eff = effective_channel(cswap_realization(ext, ext), PathConfig.pure([1, 0]))
    rho = random_density(2, seed=15)
    assert np.allclose(eff(rho), np.kron(u @ rho @ u.conj().T, projector(ket(0, 2))), atol=1e-13)


def test_cswap_dephasing_matches_closed_form():
    ext = dephasing_extension()
    eff = effective_channel(cswap_realization(ext, ext), PLUS)
    assert channel_distance(eff.chan, closed_form_identical(ext, 2).chan) < 1e-10


@given(seeds)
def test_cswap_route_matches_independent_route(seed):
    a, b = random_extension(2, 2, seed), random_extension(2, 3, seed + 1)
    omega = PathConfig(random_density(2, seed=seed + 2))
    via_cswap = effective_channel(cswap_realization(a, b), omega)
    direct = effective_channel(superpose_independent([a, b]), omega)
    assert channel_distance(via_cswap.chan, direct.chan) < 1e-9


# correlated environments ------------------------------------------------------------------


def _controlled_interaction(unitaries):
    """(sum_i U_i ⊗ |i><i|) ⊕ (|vac><vac| ⊗ I) on (message ⊕ Vac) ⊗ E."""
    d, e = unitaries[0].shape[0], len(unitaries)
    msg = sum(np.kron(u, projector(ket(i, e))) for i, u in enumerate(unitaries))
    return direct_sum(msg, np.eye(e))


def _local_interaction(d, e, seed):
    """Random unitary on the message ⊗ E block, identity on Vac ⊗ E."""
    return direct_sum(haar_unitary(d * e, seed=seed), np.eye(e))


def test_product_environments_reproduce_independent_superposition():
    v, w = _local_interaction(2, 2, 1), _local_interaction(2, 3, 2)
    s_e, s_f = random_density(2, seed=3), random_density(3, seed=4)
    corr = correlated_superposition(v, w, np.kron(s_e, s_f), (2, 3))
    ind = superpose_independent([induced_vacuum_extension(v, s_e, 2), induced_vacuum_extension(w, s_f, 2)])
    assert channel_distance(corr, ind) < 1e-10


def test_classically_correlated_environment_gives_product_action():
    us = [np.eye(2), PAULI_X, PAULI_Y, PAULI_Z]
    p = np.array([0.4, 0.3, 0.2, 0.1])
    v = _controlled_interaction(us)
    sigma = sum(pi * projector(ket(i * 4 + i, 16)) for i, pi in enumerate(p))
    corr = correlated_superposition(v, v, sigma, (4, 4))
    r = mix([unitary_channel(u) for u in us], p)
    assert channel_distance(corr, tensor(r, identity_channel(2))) < 1e-10
    eff = correlated_env_channel(v, v, sigma, PLUS, (4, 4))
    rho = random_density(2, seed=5)
    assert np.allclose(eff(rho), np.kron(r.apply(rho), PLUS.omega), atol=1e-12)


def test_trivial_interactions_give_identity():
    sigma = random_density(6, seed=6)
    corr = correlated_superposition(np.eye(6), np.eye(9), sigma, (2, 3))
    assert channel_distance(corr, identity_channel(4)) < 1e-12


def test_interaction_touching_the_vacuum_is_rejected():
    bad = haar_unitary(6, seed=7)
    with pytest.raises(LocalVacuumViolation) as info:
        correlated_superposition(bad, np.eye(6), np.eye(4) / 4, (2, 2))
    assert info.value.residual > 1e-3
    with pytest.raises(ValueError):
        correlated_env_channel(np.eye(6), np.eye(6), np.eye(4) / 4, PathConfig.uniform(3), (2, 2))


@given(seeds)
def test_correlated_channel_is_cptp_and_respects_paths(seed):
    v, w = _local_interaction(2, 2, seed), _local_interaction(2, 2, seed + 1)
    corr = correlated_superposition(v, w, random_density(4, seed=seed + 2), (2, 2))
    assert validate_cptp(corr)
    check_path_sectors(corr, 2, 2)


# multi-dimensional vacuum ------------------------------------------------------------------


def _one_particle_encoder(d_a, d_b, v):
    db = d_b + v
    enc = np.zeros(((d_a + v) * db, d_a + d_b))
    for a in range(d_a):
        enc[a * db + d_b, a] = 1
    for b in range(d_b):
        enc[d_a * db + b, d_a + b] = 1
    return enc


def test_discarding_map_inverts_one_particle_encoding():
    t = vacuum_discarding_map(2, 3, 1, failure_state=[1, 0, 0, 0, 0])
    assert validate_cptp(t)
    enc = _one_particle_encoder(2, 3, 1)
    rho = random_density(5, seed=1)
    assert np.allclose(t.apply(enc @ rho @ enc.T), rho, atol=1e-14)


def test_discarding_map_sends_double_vacuum_to_failure_state():
    psi0 = random_pure(4, seed=2)
    t = vacuum_discarding_map(2, 2, 1, failure_state=psi0)
    vv = projector(ket(2 * 3 + 2, 9))
    assert np.allclose(t.apply(vv), projector(psi0), atol=1e-14)


def test_discarding_map_success_weight_with_two_dim_vacuum():
    d_a, d_b, v = 2, 2, 2
    psi0 = random_pure(4, seed=3)
    t = vacuum_discarding_map(d_a, d_b, v, failure_state=psi0)
    assert validate_cptp(t)
    db = d_b + v
    success = [a * db + d_b + k for a in range(d_a) for k in range(v)]
    success += [(d_a + k) * db + b for k in range(v) for b in range(d_b)]
    p_succ = np.zeros((16, 16))
    p_succ[success, success] = 1
    rho = random_density(16, seed=4)
    out = t.apply(rho)
    assert abs(np.trace(out) - 1) < 1e-12
    weight = np.real(np.trace(p_succ @ rho))
    fail = out - apply_kraus(t.kraus[:v], rho)
    assert np.allclose(fail, (1 - weight) * projector(psi0), atol=1e-12)


def test_discarding_map_rejects_non_unit_failure_state():
    with pytest.raises(ValueError):
        vacuum_discarding_map(1, 1, 1, failure_state=[1, 1])


@given(seeds)
def test_general_vacuum_with_scalar_vacuum_matches_independent(seed):
    a, b = random_extension(2, 2, seed), random_extension(2, 3, seed + 1)
    gen = superpose_general_vacuum(a, b, failure_state=[1, 0, 0, 0])
    slot = to_slot_ordering(superpose_independent([a, b]), 2, 2)
    assert channel_distance(gen, slot) < 1e-11


def _random_vacuum_extension(d, rank, v, seed):
    base = random_channel(d, d, rank, seed)
    blocks = random_channel(v, v, rank, seed + 1).kraus
    return VacuumExtension(base, blocks)


@pytest.mark.parametrize("seed", range(5))
def test_general_vacuum_with_random_vacuum_dynamics_is_cptp(seed):
    a, b = _random_vacuum_extension(2, 2, 2, seed), _random_vacuum_extension(2, 3, 2, seed + 50)
    psi0 = random_pure(4, seed=seed)
    assert validate_cptp(superpose_general_vacuum(a, b, failure_state=psi0))


def test_general_vacuum_rejects_mismatched_vacua():
    a = random_extension(2, 2, 1)
    b = _random_vacuum_extension(2, 2, 2, 2)
    with pytest.raises(ValueError):
        superpose_general_vacuum(a, b, failure_state=[1, 0, 0, 0])


def test_oi_realisation_of_unitaries_is_controlled_unitary():
    u, v = haar_unitary(2, seed=1), haar_unitary(2, seed=2)
    out = oi_realization(unitary_ext(u), unitary_ext(v))
    assert channel_distance(out, unitary_channel(direct_sum(u, v))) < 1e-10


def test_oi_realisation_of_dephasing_pair():
    ext = dephasing_extension()
    out = oi_realization(ext, ext)
    assert channel_distance(out, to_slot_ordering(superpose_independent([ext, ext]), 2, 2)) < 1e-9


@pytest.mark.parametrize("v", [1, 2])
@pytest.mark.parametrize("seed", range(3))
def test_oi_realisation_matches_general_vacuum(v, seed):
    a = _random_vacuum_extension(2, 2, v, seed)
    b = _random_vacuum_extension(3, 2, v, seed + 20)
    target = superpose_general_vacuum(a, b, failure_state=ket(0, 5))
    assert channel_distance(oi_realization(a, b), target) < 1e-9


# no-signalling ------------------------------------------------------------------------------


def test_product_encoding_has_input_independent_path_marginal():
    omega = random_density(3, seed=1)
    for k in range(10):
        rho = random_density(2, seed=k)
        enc = np.kron(rho, omega)
        assert np.allclose(partial_trace(enc, [2, 3], keep=[1]), omega, atol=1e-15)


def test_cswap_encoding_has_input_independent_path_marginal():
    d = 2
    big = d + 1
    cswap = np.kron(np.eye(big * big), projector(ket(0, 2))) + np.kron(swap_operator(big, big), projector(ket(1, 2)))
    omega = random_density(2, seed=2)
    vac = projector(ket(d, big))
    embed = np.eye(big)[:, :d]
    marginals = []
    for k in range(10):
        rho = embed @ random_density(d, seed=k) @ embed.T
        enc = cswap @ kron(rho, vac, omega) @ cswap
        marginals.append(partial_trace(enc, [big, big, 2], keep=[2]))
    # the modes record which path was taken, so only the populations of omega survive
    assert np.max(np.abs(np.array(marginals) - marginals[0])) < 1e-15
    assert np.allclose(marginals[0], np.diag(np.diag(omega)), atol=1e-15)


@given(seeds)
def test_path_populations_never_depend_on_the_message(seed):
    exts = [random_extension(2, 2, seed + k) for k in range(3)]
    eff = effective_channel(superpose_independent(exts), PathConfig(random_density(3, seed=seed)))
    pops = [np.diag(eff.path_marginal(random_density(2, seed=seed + 10 + k))) for k in range(5)]
    assert np.max(np.abs(np.array(pops) - pops[0])) < 1e-12


@given(seeds)
def test_path_marginal_is_constant_for_incoherent_path_states(seed):
    exts = [random_extension(2, 2, seed + k) for k in range(2)]
    eff = effective_channel(superpose_independent(exts), PathConfig(np.diag([0.3, 0.7])))
    marg = [eff.path_marginal(random_density(2, seed=seed + 10 + k)) for k in range(10)]
    assert np.max(np.abs(np.array(marg) - marg[0])) < 1e-12


def test_path_coherence_after_the_channel_can_depend_on_the_message():
    # the path coherence is proportional to <alpha|rho|alpha>, so message inputs shift it
    ext = erasure_extension()
    eff = effective_channel(superpose_independent([ext, ext]), PLUS)
    alpha = np.array([1, 1]) / S2
    along = eff.path_marginal(projector(alpha))
    across = eff.path_marginal(projector(np.array([1, -1]) / S2))
    assert along[0, 1] == pytest.approx(0.5, abs=1e-12)
    assert across[0, 1] == pytest.approx(0.0, abs=1e-12)
