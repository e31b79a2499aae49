"""The quantum SWITCH and superpositions of channels with memory.

Path convention: control label ``j`` is the region the particle enters first.
On ``|0>`` channel A acts first and B second, so the ``|0><0|`` block of the
SWITCH is ``compose(a, b)``; on ``|1>`` the order is reversed.

The circuit simulations work in the particle picture: every local interaction
is conjugated into ``message ⊗ path ⊗ memories`` once, and the mid-circuit
swap of the two regions becomes a bit flip on the path.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import (
    KrausChannel,
    channel_distance,
    channel_from_choi,
    choi,
    compose,
    identity_channel,
    tensor,
)
from .linops import (
    PAULI_X,
    as_cmat,
    dagger,
    embed_operator,
    haar_unitary,
    is_density,
    is_unitary,
    ket,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    psd_sqrt_factors,
    unitary_from_isometry,
)
from .superpose import (
    Branch,
    BranchDecomposition,
    EffectiveChannel,
    PathConfig,
    check_local_vacuum,
    effective_channel,
    induced_vacuum_extension,
    one_particle_embedding,
)


class ProductRepeaterViolation(ValueError):
    """A repeater between memory steps does not factor as message ⊗ path."""

    def __init__(self, distance: float):
        self.distance = distance
        super().__init__(f"repeater is not a product of message and path maps (distance {distance:.3e})")


@dataclass(frozen=True)
class MemoryStep:
    """Local interaction of one region with its memory.

    ``unitary`` acts on ``(message ⊕ Vac) ⊗ memory`` and must leave every
    state of ``Vac ⊗ memory`` unchanged.
    """

    unitary: np.ndarray
    memory_dim: int

    def __post_init__(self):
        u = as_cmat(self.unitary)
        m = int(self.memory_dim)
        if u.shape[0] % m:
            raise ValueError(f"unitary of size {u.shape[0]} does not fit memory dimension {m}")
        if not is_unitary(u):
            raise ValueError("memory step is not unitary")
        check_local_vacuum(u, u.shape[0] // m - 1, m, which="memory step")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "memory_dim", m)

    @property
    def d(self) -> int:
        return self.unitary.shape[0] // self.memory_dim - 1

    def to_dict(self) -> dict:
        return {"unitary": matrix_to_json(self.unitary), "memory_dim": self.memory_dim}

    @classmethod
    def from_dict(cls, data: dict) -> "MemoryStep":
        return cls(matrix_from_json(data["unitary"]), int(data["memory_dim"]))


def memory_step_from_channel(ch: KrausChannel, memory_dim: int | None = None, seed=None) -> MemoryStep:
    """A dilation of ``ch`` as a memory step with the memory starting in ``|0>``.

    Extra memory dimensions and the completion of the isometry are randomised
    by ``seed`` so that different dilations of the same channel are easy to get.
    """
    d, r = ch.dim_in, ch.n_kraus
    m = memory_dim or r
    if m < r:
        raise ValueError(f"memory of dimension {m} cannot hold {r} Kraus operators")
    rng = np.random.default_rng(seed)
    ops = list(ch.kraus) + [np.zeros((d, d))] * (m - r)
    if seed is not None:
        # unitary remixing of the Kraus list leaves the channel unchanged
        mixer = haar_unitary(m, rng)
        ops = list(np.einsum("ab,bij->aij", mixer, np.stack(ops)))
    iso = np.stack(ops).transpose(1, 0, 2).reshape(d * m, d)
    block = unitary_from_isometry(iso, [a * m for a in range(d)])
    if seed is not None and d * m > d:
        # randomise the free columns as well
        free = [c for c in range(d * m) if c % m != 0]
        block[:, free] = block[:, free] @ haar_unitary(len(free), rng)
    D = d + 1
    u = np.zeros((D * m, D * m), dtype=complex)
    u[: d * m, : d * m] = block
    u[d * m:, d * m:] = np.eye(m)
    return MemoryStep(u, m)


def induced_channel(step: MemoryStep, eta) -> KrausChannel:
    """Message channel of a memory step with the memory prepared in ``eta``."""
    return induced_vacuum_extension(step.unitary, eta, step.d).base


def switch_channel(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """Kraus ``B_j A_i ⊗ |0><0| + A_i B_j ⊗ |1><1|`` on ``message ⊗ control``."""
    if not (a.dim_in == a.dim_out == b.dim_in == b.dim_out):
        raise ValueError("the SWITCH needs two square channels of equal dimension")
    p0 = ket(0, 2) @ ket(0, 2).T
    p1 = ket(1, 2) @ ket(1, 2).T
    return KrausChannel(
        np.kron(bj @ ai, p0) + np.kron(ai @ bj, p1) for ai in a.kraus for bj in b.kraus
    )


def self_switch_decomposition(a: KrausChannel, probe=None) -> BranchDecomposition:
    """Branches of a channel switched with itself, control in ``|+>``.

    The ``|+>`` branch has Kraus operators ``{A_i, A_j}/2`` and the ``|->``
    branch ``[A_i, A_j]/2``. Probabilities are evaluated on ``probe``
    (maximally mixed by default).
    """
    if a.dim_in != a.dim_out:
        raise ValueError("self-switching needs a square channel")
    d = a.dim_in
    probe = np.eye(d) / d if probe is None else as_cmat(probe)
    plus = np.array([[1], [1]]) / np.sqrt(2)
    minus = np.array([[1], [-1]]) / np.sqrt(2)
    anti = [(x @ y + y @ x) / 2 for x in a.kraus for y in a.kraus]
    comm = [(x @ y - y @ x) / 2 for x in a.kraus for y in a.kraus]
    branches = []
    for ops, vec in ((anti, plus), (comm, minus)):
        op = KrausChannel(ops)
        prob = float(np.trace(op.apply(probe)).real)
        branches.append(Branch(prob, op, vec @ vec.T.astype(complex)))
    return BranchDecomposition(tuple(branches), probe)


# --------------------------------------------------------------------------
# circuits with memories


def _env_columns(states: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Purification columns of a product of memory states."""
    cols = [np.ones((1, 1), dtype=complex)]
    for s in states:
        s = as_cmat(s)
        if not is_density(s):
            raise ValueError("memory states must be density matrices")
        cols = [np.kron(c, f) for c in cols for f in psd_sqrt_factors(s)]
    return cols


def _particle_step(step_a: MemoryStep, step_b: MemoryStep) -> np.ndarray:
    """One round of local interactions on ``message ⊗ path ⊗ E ⊗ F``."""
    d = step_a.d
    if step_b.d != d:
        raise ValueError(f"memory steps disagree on the message dimension: {d} vs {step_b.d}")
    D, e, f = d + 1, step_a.memory_dim, step_b.memory_dim
    dims = [D, D, e, f]
    g = embed_operator(step_a.unitary, [0, 2], dims) @ embed_operator(step_b.unitary, [1, 3], dims)
    j = np.kron(one_particle_embedding(d, 2), np.eye(e * f))
    return dagger(j) @ g @ j


def _as_product_repeater(rep, d: int, tol: float) -> tuple[KrausChannel, KrausChannel]:
    if isinstance(rep, (tuple, list)) and len(rep) == 2:
        msg, path = rep
        if msg.dim_in != d or msg.dim_out != d or path.dim_in != 2 or path.dim_out != 2:
            raise ValueError("repeaters must map message -> message and path -> path")
        return msg, path
    if isinstance(rep, KrausChannel):
        return factor_product_channel(rep, d, 2, tol)
    raise TypeError(f"unsupported repeater {rep!r}")


def factor_product_channel(ch: KrausChannel, d: int, n: int, tol: float = 1e-9) -> tuple[KrausChannel, KrausChannel]:
    """Split a channel on ``d ⊗ n`` into ``M ⊗ P`` or raise :class:`ProductRepeaterViolation`."""
    if ch.dim_in != d * n or ch.dim_out != d * n:
        raise ValueError(f"repeater must act on dimension {d * n}")
    # Choi on (out_m, out_p, in_m, in_p); marginal maps come from partial traces
    c = choi(ch)
    c = c.reshape(d, n, d, n, d, n, d, n).transpose(0, 2, 1, 3, 4, 6, 5, 7).reshape(d * d * n * n, -1)
    cm = partial_trace(c, [d * d, n * n], keep=[0]) / n
    cp = partial_trace(c, [d * d, n * n], keep=[1]) / d
    msg = channel_from_choi(cm, d, d)
    path = channel_from_choi(cp, n, n)
    dist = channel_distance(ch, tensor(msg, path))
    if dist > tol:
        raise ProductRepeaterViolation(dist)
    return msg, path


def memory_superposition_channel(
    steps_a: Sequence[MemoryStep],
    steps_b: Sequence[MemoryStep],
    repeaters: Sequence,
    eta_e,
    eta_f,
    tol: float = 1e-9,
) -> KrausChannel:
    """Channel on ``message ⊗ path`` after ``T`` rounds of interactions with persistent memories.

    Parameters
    ----------
    steps_a, steps_b : sequence of MemoryStep
        ``T`` interactions for the region entered on path 0 and path 1.
    repeaters : sequence
        ``T - 1`` maps applied between rounds, each either a pair
        ``(message_channel, path_channel)`` or a :class:`KrausChannel` on
        ``message ⊗ path`` that must factor as such a pair.
    eta_e, eta_f : array_like
        Initial memory states.
    """
    T = len(steps_a)
    if T == 0 or len(steps_b) != T:
        raise ValueError("need the same positive number of steps on both paths")
    if len(repeaters) != T - 1:
        raise ValueError(f"{T} steps need {T - 1} repeaters, got {len(repeaters)}")
    d = steps_a[0].d
    e, f = steps_a[0].memory_dim, steps_b[0].memory_dim
    for s in list(steps_a) + list(steps_b):
        if s.d != d:
            raise ValueError("all steps must share the message dimension")
    if any(s.memory_dim != e for s in steps_a) or any(s.memory_dim != f for s in steps_b):
        raise ValueError("a path's memory dimension must stay fixed across steps")
    reps = [_as_product_repeater(r, d, tol) for r in repeaters]

    env = e * f
    ops = [np.kron(np.eye(2 * d), col) for col in _env_columns([eta_e, eta_f])]
    for t in range(T):
        step = _particle_step(steps_a[t], steps_b[t])
        ops = [step @ k for k in ops]
        if t < T - 1:
            msg, path = reps[t]
            lifted = [np.kron(np.kron(m, p), np.eye(env)) for m in msg.kraus for p in path.kraus]
            ops = [r @ k for r in lifted for k in ops]
    out = []
    for k in ops:
        blocks = k.reshape(2 * d, env, 2 * d)
        out.extend(blocks[:, x, :] for x in range(env))
    return KrausChannel(out).pruned(1e-15)


def superpose_memory_channels(steps_a, steps_b, repeaters, omega, eta_e=None, eta_f=None) -> EffectiveChannel:
    """Effective channel of :func:`memory_superposition_channel` for the path state ``omega``.

    Memories default to ``|0><0|``.
    """
    e, f = steps_a[0].memory_dim, steps_b[0].memory_dim
    eta_e = _ket0(e) if eta_e is None else eta_e
    eta_f = _ket0(f) if eta_f is None else eta_f
    full = memory_superposition_channel(steps_a, steps_b, repeaters, eta_e, eta_f)
    return effective_channel(full, PathConfig(omega))


def _ket0(n: int) -> np.ndarray:
    return ket(0, n) @ ket(0, n).T


def bit_flip_path(d: int) -> KrausChannel:
    return KrausChannel([np.kron(np.eye(d), PAULI_X)])


def switch_circuit_channel(step_a: MemoryStep, step_b: MemoryStep, eta_e, eta_f) -> KrausChannel:
    """Two-region circuit with a swap in the middle, on ``message ⊗ path``.

    After the second round the particle leaves from the region it did not
    enter first; the final relabelling routes it back to its entry label.
    """
    d = step_a.d
    swap = (identity_channel(d), KrausChannel([PAULI_X]))
    raw = memory_superposition_channel([step_a, step_a], [step_b, step_b], [swap], eta_e, eta_f)
    return compose(raw, bit_flip_path(d))


def simulate_switch_circuit(step_a: MemoryStep, step_b: MemoryStep, eta_e, eta_f, omega) -> EffectiveChannel:
    return effective_channel(switch_circuit_channel(step_a, step_b, eta_e, eta_f), PathConfig(omega))
