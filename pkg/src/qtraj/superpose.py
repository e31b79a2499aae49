"""Channels acting on a particle sent along a superposition of paths.

Two pictures are used. In the particle picture the state lives on
``message ⊗ path`` (message major, index ``m * N + j``). In the mode picture
every path ``j`` carries its own mode ``A_j ⊕ Vac`` (message levels first,
vacuum last) and a single particle occupies the one-particle sector of
``⊗_j (A_j ⊕ Vac)``. :func:`particle_mode_isomorphism` and
:func:`one_particle_embedding` are the only places where the two meet.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import KrausChannel, check_no_leakage
from .linops import (
    ATOL,
    as_cmat,
    dagger,
    direct_sum,
    embed_operator,
    fourier_basis,
    is_density,
    ket,
    kron,
    max_abs,
    orthonormal_complement,
    psd_sqrt_factors,
    swap_operator,
    unitary_from_isometry,
)
from .vacuum import VacuumExtension, vacuum_interference_operator


class LocalVacuumViolation(ValueError):
    """A system-environment unitary does not leave ``Vac ⊗ env`` untouched."""

    def __init__(self, residual: float, which: str = "unitary"):
        self.residual = residual
        super().__init__(f"{which} is not the identity on the vacuum block (residual {residual:.3e})")


@dataclass(frozen=True)
class PathConfig:
    """Path state ``omega`` of an ``N``-path superposition."""

    omega: np.ndarray

    def __post_init__(self):
        w = as_cmat(self.omega)
        if w.shape[0] != w.shape[1]:
            raise ValueError("path state must be square")
        if not is_density(w):
            raise ValueError("path state must be a density matrix")
        w.setflags(write=False)
        object.__setattr__(self, "omega", w)

    @property
    def n_paths(self) -> int:
        return self.omega.shape[0]

    @classmethod
    def pure(cls, vec) -> "PathConfig":
        v = as_cmat(vec)
        v = v / np.linalg.norm(v)
        return cls(v @ dagger(v))

    @classmethod
    def uniform(cls, n: int) -> "PathConfig":
        """The maximally coherent state ``sum_k |k> / sqrt(N)``."""
        return cls.pure(np.ones(n))


@dataclass(frozen=True)
class EffectiveChannel:
    """Map from the message (dim ``d``) to ``message ⊗ path`` (dim ``d * N``)."""

    chan: KrausChannel
    d: int
    n_paths: int

    def __post_init__(self):
        if self.chan.dim_in != self.d or self.chan.dim_out != self.d * self.n_paths:
            raise ValueError(
                f"effective channel must map {self.d} -> {self.d * self.n_paths}, "
                f"got {self.chan.dim_in} -> {self.chan.dim_out}"
            )

    def apply(self, rho) -> np.ndarray:
        return self.chan.apply(rho)

    __call__ = apply

    def path_marginal(self, rho) -> np.ndarray:
        out = self.apply(rho).reshape(self.d, self.n_paths, self.d, self.n_paths)
        return np.einsum("mjmk->jk", out)


@dataclass(frozen=True)
class Branch:
    probability: float
    operation: KrausChannel  # trace non-increasing, message -> message
    path_projector: np.ndarray


@dataclass(frozen=True)
class BranchDecomposition:
    """Outcome probabilities of a path measurement and the conditional operations."""

    branches: tuple[Branch, ...]
    probe: np.ndarray = field(repr=False)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([b.probability for b in self.branches])

    def reassembled(self) -> KrausChannel:
        """Sum of the branch operations, i.e. the channel with the path discarded."""
        return KrausChannel([k for b in self.branches for k in b.operation.kraus])


# --------------------------------------------------------------------------
# pictures


def particle_mode_isomorphism(d: int, N: int) -> np.ndarray:
    """Permutation from ``message ⊗ path`` to slot ordering ``path * d + message``."""
    u = np.zeros((d * N, d * N), dtype=complex)
    for m in range(d):
        for j in range(N):
            u[j * d + m, m * N + j] = 1.0
    return u


def one_particle_embedding(d: int, N: int) -> np.ndarray:
    """Isometry from ``message ⊗ path`` into ``⊗_j (C^d ⊕ Vac)``.

    Column ``m * N + j`` is the product state with mode ``j`` holding level
    ``m`` and every other mode in the vacuum (local index ``d``).
    """
    D = d + 1
    iso = np.zeros((D ** N, d * N), dtype=complex)
    for m in range(d):
        for j in range(N):
            local = [d] * N
            local[j] = m
            row = 0
            for x in local:
                row = row * D + x
            iso[row, m * N + j] = 1.0
    return iso


def to_slot_ordering(ch: KrausChannel, d: int, N: int) -> KrausChannel:
    """Re-express a channel on ``message ⊗ path`` in slot ordering (``A_0 ⊕ A_1 ⊕ ...``)."""
    u = particle_mode_isomorphism(d, N)
    return KrausChannel(u @ k @ dagger(u) for k in ch.kraus)


def path_projector(d: int, N: int, j: int) -> np.ndarray:
    """``I_d ⊗ |j><j|`` on ``message ⊗ path``."""
    return np.kron(np.eye(d), ket(j, N) @ ket(j, N).T)


# --------------------------------------------------------------------------
# independent superpositions


def _require_one_dim_vacuum(exts: Sequence[VacuumExtension]) -> int:
    if not exts:
        raise ValueError("need at least one extension")
    d = exts[0].dim
    for e in exts:
        if e.dim != d:
            raise ValueError(f"message dimensions differ: {e.dim} vs {d}")
        if e.vac_dim != 1:
            raise ValueError("independent superpositions need one-dimensional vacua")
    return d


def superpose_independent(exts: Sequence[VacuumExtension]) -> KrausChannel:
    """Superposition of ``N`` independent channels, one per path.

    For a Kraus index tuple ``(i_1, ..., i_N)`` the Kraus operator is
    ``sum_j (prod_{k != j} gamma^(k)_{i_k}) A^(j)_{i_j} ⊗ |j><j|``.
    """
    d = _require_one_dim_vacuum(exts)
    N = len(exts)
    amps = [e.amplitudes for e in exts]
    kraus = [e.base.kraus for e in exts]
    diag = [ket(j, N) @ ket(j, N).T for j in range(N)]
    ops = []
    for idx in itertools.product(*(range(e.n_kraus) for e in exts)):
        gam = np.array([amps[j][i] for j, i in enumerate(idx)])
        op = np.zeros((d * N, d * N), dtype=complex)
        for j, i in enumerate(idx):
            coeff = np.prod(np.delete(gam, j))
            if coeff != 0:
                op += coeff * np.kron(kraus[j][i], diag[j])
        ops.append(op)
    return KrausChannel(ops)


def superposition_from_kraus(kraus_a, kraus_b) -> KrausChannel:
    """Direct-sum superposition ``A_i ⊕ B_i`` of two equally long Kraus lists."""
    a = [as_cmat(k) for k in kraus_a]
    b = [as_cmat(k) for k in kraus_b]
    if len(a) != len(b):
        raise ValueError("Kraus lists must have equal length (pad with zeros)")
    return KrausChannel(direct_sum(x, y) for x, y in zip(a, b))


def effective_channel(sup: KrausChannel, cfg: PathConfig) -> EffectiveChannel:
    """``rho -> sup(rho ⊗ omega)`` with ``omega`` absorbed via a purification."""
    N = cfg.n_paths
    if sup.dim_in != sup.dim_out or sup.dim_in % N:
        raise ValueError(f"channel of dimension {sup.dim_in} cannot carry {N} paths")
    d = sup.dim_in // N
    ops = []
    for col in psd_sqrt_factors(cfg.omega):
        lift = np.kron(np.eye(d), col)  # (d*N) x d
        ops.extend(k @ lift for k in sup.kraus)
    return EffectiveChannel(KrausChannel(ops), d, N)


def closed_form_identical(ext: VacuumExtension, N: int) -> EffectiveChannel:
    """Analytic effective channel for ``N`` identical paths in the uniform path state.

    The output is ``(A(rho) + (N-1) F rho F^†)/N ⊗ |e0><e0|`` plus
    ``(A(rho) - F rho F^†)/N ⊗ (I - |e0><e0|)`` where ``F`` is the vacuum
    interference operator.
    """
    if ext.vac_dim != 1:
        raise ValueError("closed form needs a one-dimensional vacuum")
    d = ext.dim
    f = vacuum_interference_operator(ext)
    g = ext.amplitudes.conj()
    fourier = fourier_basis(N)
    e0 = fourier[:, [0]]

    ops = [np.kron(c, e0) / np.sqrt(N) for c in ext.base.kraus]
    ops.append(np.sqrt((N - 1) / N) * np.kron(f, e0))
    if N > 1:
        # A - F.F^† has Kraus sum_i u_i C_i over an orthonormal basis u of g's complement
        for u in orthonormal_complement(g.reshape(-1, 1)).T:
            gk = np.einsum("a,aij->ij", u, ext.base.kraus)
            for m in range(1, N):
                ops.append(np.kron(gk, fourier[:, [m]]) / np.sqrt(N))
    return EffectiveChannel(KrausChannel(ops).pruned(1e-15), d, N)


def asymptotic_identical_channel(ext: VacuumExtension) -> EffectiveChannel:
    """Large-``N`` limit of :func:`closed_form_identical` with a two-outcome path register.

    Outcome 0 (uniform path state) carries ``F rho F^†``, outcome 1 carries
    ``A(rho) - F rho F^†``.
    """
    if ext.vac_dim != 1:
        raise ValueError("closed form needs a one-dimensional vacuum")
    f = vacuum_interference_operator(ext)
    g = ext.amplitudes.conj()
    ops = [np.kron(f, ket(0, 2))]
    for u in orthonormal_complement(g.reshape(-1, 1)).T:
        ops.append(np.kron(np.einsum("a,aij->ij", u, ext.base.kraus), ket(1, 2)))
    return EffectiveChannel(KrausChannel(ops).pruned(1e-15), ext.dim, 2)


def cswap_realization(ext_a: VacuumExtension, ext_b: VacuumExtension) -> KrausChannel:
    """Two-path superposition built from controlled swaps on two modes and a control qubit.

    The message enters the first mode, the second mode holds the vacuum. A
    controlled swap routes the particle, both extended channels act, a second
    controlled swap routes it back and the vacuum-bearing second mode is
    traced out. The result acts on ``message ⊗ control``.
    """
    d = _require_one_dim_vacuum([ext_a, ext_b])
    D = d + 1
    p0 = ket(0, 2) @ ket(0, 2).T
    p1 = ket(1, 2) @ ket(1, 2).T
    cswap = np.kron(np.eye(D * D), p0) + np.kron(swap_operator(D, D), p1)

    # |m, c> -> |m>|vac>|c>
    enc = np.kron(np.kron(np.eye(D)[:, :d], ket(d, D)), np.eye(2))
    ops = []
    for ka in ext_a.extended_kraus():
        for kb in ext_b.extended_kraus():
            g = cswap @ np.kron(np.kron(ka, kb), np.eye(2)) @ cswap @ enc
            for w in range(D):
                out = np.kron(np.kron(np.eye(D)[:d, :], ket(w, D).T), np.eye(2))
                ops.append(out @ g)
    return KrausChannel(ops).pruned(1e-15)


# --------------------------------------------------------------------------
# environments attached to each path


def check_local_vacuum(unitary, d: int, env_dim: int, tol: float = ATOL, which: str = "unitary") -> None:
    """Raise unless ``unitary`` fixes every state of ``Vac ⊗ env``."""
    u = as_cmat(unitary)
    D = d + 1
    if u.shape != (D * env_dim, D * env_dim):
        raise ValueError(f"{which} has shape {u.shape}, expected {(D * env_dim,) * 2}")
    vac = np.kron(ket(d, D), np.eye(env_dim))
    res = max_abs(u @ vac - vac)
    if res > tol:
        raise LocalVacuumViolation(res, which)


def induced_vacuum_extension(unitary, env_state, d: int) -> VacuumExtension:
    """Vacuum extension obtained by tracing the environment of a local interaction."""
    env_state = as_cmat(env_state)
    e = env_state.shape[0]
    check_local_vacuum(unitary, d, e)
    u = as_cmat(unitary)
    D = d + 1
    msg, amps = [], []
    for col in psd_sqrt_factors(env_state):
        for out in range(e):
            op = np.kron(np.eye(D), ket(out, e).T) @ u @ np.kron(np.eye(D), col)
            msg.append(op[:d, :d])
            amps.append(op[d, d])
    return VacuumExtension(KrausChannel(msg), [[[g]] for g in amps])


def correlated_superposition(v_ae, w_bf, sigma_ef, env_dims: tuple[int, int]) -> KrausChannel:
    """Two-path channel on ``message ⊗ path`` with a shared environment state.

    Parameters
    ----------
    v_ae, w_bf : array_like
        Local interactions on ``(message ⊕ Vac) ⊗ E`` and ``(message ⊕ Vac) ⊗ F``.
    sigma_ef : array_like
        Joint environment state on ``E ⊗ F``.
    env_dims : (int, int)
        Dimensions of ``E`` and ``F``.
    """
    e, f = env_dims
    v_ae, w_bf, sigma = as_cmat(v_ae), as_cmat(w_bf), as_cmat(sigma_ef)
    if v_ae.shape[0] % e or w_bf.shape[0] % f:
        raise ValueError("interaction sizes are not multiples of the environment dimensions")
    D = v_ae.shape[0] // e
    if w_bf.shape[0] // f != D:
        raise ValueError("both paths must carry the same message dimension")
    if sigma.shape != (e * f, e * f) or not is_density(sigma):
        raise ValueError("environment state must be a density matrix on E ⊗ F")
    d = D - 1
    check_local_vacuum(v_ae, d, e, which="V_AE")
    check_local_vacuum(w_bf, d, f, which="W_BF")

    dims = [D, D, e, f]
    g = embed_operator(v_ae, [0, 2], dims) @ embed_operator(w_bf, [1, 3], dims)
    j = one_particle_embedding(d, 2)
    jd = dagger(j)
    ops = []
    for col in psd_sqrt_factors(sigma):
        out = (g @ np.kron(j, col)).reshape(D * D, e * f, 2 * d)
        for k in range(e * f):
            ops.append(jd @ out[:, k, :])
    return KrausChannel(ops).pruned(1e-15)


def correlated_env_channel(v_ae, w_bf, sigma_ef, cfg: PathConfig, env_dims: tuple[int, int]) -> EffectiveChannel:
    if cfg.n_paths != 2:
        raise ValueError("correlated environments are modelled for two paths")
    return effective_channel(correlated_superposition(v_ae, w_bf, sigma_ef, env_dims), cfg)


# --------------------------------------------------------------------------
# multi-dimensional vacuum


def _unit_vector(vec, n: int, tol: float = ATOL) -> np.ndarray:
    v = as_cmat(vec).reshape(-1, 1)
    if v.shape[0] != n:
        raise ValueError(f"failure state must have dimension {n}, got {v.shape[0]}")
    if abs(np.linalg.norm(v) - 1) > tol:
        raise ValueError("failure state must be a unit vector")
    return v


def vacuum_discarding_map(d_a: int, d_b: int, v: int, failure_state) -> KrausChannel:
    """Map from ``(A ⊕ Vac) ⊗ (B ⊕ Vac)`` back to ``A ⊕ B``.

    One-particle inputs are mapped to the matching sector of ``A ⊕ B``;
    everything else (no particle, or two) is replaced by ``failure_state``.
    """
    Da, Db = d_a + v, d_b + v
    psi0 = _unit_vector(failure_state, d_a + d_b)
    ops = []
    for k in range(v):
        t = np.zeros((d_a + d_b, Da * Db), dtype=complex)
        for a in range(d_a):
            t[a, a * Db + d_b + k] = 1.0
        for b in range(d_b):
            t[d_a + b, (d_a + k) * Db + b] = 1.0
        ops.append(t)
    failing = [a * Db + b for a in range(d_a) for b in range(d_b)]
    failing += [(d_a + k) * Db + d_b + l for k in range(v) for l in range(v)]
    for x in failing:
        ops.append(psi0 @ ket(x, Da * Db).T)
    return KrausChannel(ops)


def superpose_general_vacuum(ext_a: VacuumExtension, ext_b: VacuumExtension, failure_state) -> KrausChannel:
    """Superposition on ``A ⊕ B`` of two extensions sharing a ``v``-dim vacuum."""
    if ext_a.vac_dim != ext_b.vac_dim:
        raise ValueError(f"vacuum dimensions differ: {ext_a.vac_dim} vs {ext_b.vac_dim}")
    v = ext_a.vac_dim
    d_a, d_b = ext_a.dim, ext_b.dim
    Db = d_b + v
    enc = np.zeros(((d_a + v) * Db, d_a + d_b), dtype=complex)
    for a in range(d_a):
        enc[a * Db + d_b, a] = 1.0
    for b in range(d_b):
        enc[d_a * Db + b, d_a + b] = 1.0
    discard = vacuum_discarding_map(d_a, d_b, v, failure_state)
    ops = []
    for ka in ext_a.extended_kraus():
        for kb in ext_b.extended_kraus():
            mid = np.kron(ka, kb) @ enc
            ops.extend(t @ mid for t in discard.kraus)
    return KrausChannel(ops).pruned(1e-14)


def oi_realization(ext_a: VacuumExtension, ext_b: VacuumExtension) -> KrausChannel:
    """Unitary realisation of a superposition from dilations and state preparations.

    Environments ``E`` (Kraus index of A), ``F`` (Kraus index of B) and ``G``
    (vacuum index) start in ``|0>``. On ``A`` the gate is ``U_AE ⊗ U_FG``, on
    ``B`` it is ``V_BF ⊗ V_EG``; ``U_FG|00>`` and ``V_EG|00>`` prepare the
    vacuum amplitudes of B and A. Tracing ``E F G`` gives a channel on ``A ⊕ B``.
    """
    if ext_a.vac_dim != ext_b.vac_dim:
        raise ValueError(f"vacuum dimensions differ: {ext_a.vac_dim} vs {ext_b.vac_dim}")
    v = ext_a.vac_dim
    d_a, d_b = ext_a.dim, ext_b.dim
    r_a, r_b = ext_a.n_kraus, ext_b.n_kraus
    alpha = ext_a.vacuum_amplitude_matrix()
    beta = ext_b.vacuum_amplitude_matrix()

    # dilations with the environment in |0>
    iso_a = ext_a.base.kraus.transpose(1, 0, 2).reshape(d_a * r_a, d_a)
    iso_b = ext_b.base.kraus.transpose(1, 0, 2).reshape(d_b * r_b, d_b)
    u_ae = unitary_from_isometry(iso_a, [a * r_a for a in range(d_a)])
    v_bf = unitary_from_isometry(iso_b, [b * r_b for b in range(d_b)])
    u_fg = unitary_from_isometry(beta.reshape(-1, 1), [0])
    v_eg = unitary_from_isometry(alpha.reshape(-1, 1), [0])

    dims_a = [d_a, r_a, r_b, v]
    dims_b = [d_b, r_a, r_b, v]
    w_a = embed_operator(u_ae, [0, 1], dims_a) @ embed_operator(u_fg, [2, 3], dims_a)
    w_b = embed_operator(v_bf, [0, 2], dims_b) @ embed_operator(v_eg, [1, 3], dims_b)
    w = direct_sum(w_a, w_b)

    env = r_a * r_b * v
    n = d_a + d_b
    prep = np.kron(np.eye(n), ket(0, env))
    out = (w @ prep).reshape(n, env, n)
    return KrausChannel(out[:, k, :] for k in range(env)).pruned(1e-15)


def check_path_sectors(ch: KrausChannel, d: int, N: int, tol: float = ATOL) -> None:
    """No-Leakage for every path sector of a channel on ``message ⊗ path``."""
    for j in range(N):
        check_no_leakage(ch, path_projector(d, N, j), tol, label=f"path {j}")
