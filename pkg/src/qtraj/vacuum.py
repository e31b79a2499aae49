"""Vacuum extensions of channels.

An extension of a channel with Kraus operators ``C_i`` on a ``d``-dimensional
message space acts on ``message ⊕ vacuum`` with Kraus ``C_i ⊕ V_i``. The
vacuum blocks ``V_i`` are ``v x v`` matrices with ``sum V_i^† V_i = I_v``;
for a one-dimensional vacuum they are the scalar vacuum amplitudes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import KrausChannel, check_no_leakage, validate_cptp
from .linops import (
    ATOL,
    SectorSpace,
    as_cmat,
    dagger,
    direct_sum,
    matrix_from_json,
    matrix_to_json,
    max_abs,
    orthonormal_complement,
)

RANK_CUTOFF = 1e-10


class VacuumExtension:
    """A base channel together with its vacuum blocks.

    Parameters
    ----------
    base : KrausChannel
        Square CPTP channel on the message space.
    vac_blocks : sequence of array_like
        One ``v x v`` block per Kraus operator of ``base``. Scalars are read
        as ``1 x 1`` blocks.
    tol : float
        Tolerance for the normalisation checks.
    """

    __slots__ = ("_base", "_blocks")

    def __init__(self, base: KrausChannel, vac_blocks, tol: float = ATOL):
        if base.dim_in != base.dim_out:
            raise ValueError("vacuum extensions need a square base channel")
        blocks = [as_cmat(b) for b in vac_blocks]
        if len(blocks) != base.n_kraus:
            raise ValueError(
                f"{len(blocks)} vacuum blocks given for {base.n_kraus} Kraus operators"
            )
        v = blocks[0].shape[0]
        if any(b.shape != (v, v) for b in blocks):
            raise ValueError("vacuum blocks must all be square of the same size")
        stack = np.stack(blocks)
        gram = np.einsum("aji,ajk->ik", stack.conj(), stack)
        if max_abs(gram - np.eye(v)) > tol:
            raise ValueError(
                f"vacuum blocks are not normalised (deviation {max_abs(gram - np.eye(v)):.3e})"
            )
        rep = validate_cptp(base, tol)
        if not rep:
            raise ValueError(f"base channel is not CPTP (deviation {rep.max_deviation:.3e})")
        stack.setflags(write=False)
        self._base = base
        self._blocks = stack

    @property
    def base(self) -> KrausChannel:
        return self._base

    @property
    def vac_blocks(self) -> np.ndarray:
        return self._blocks

    @property
    def vac_dim(self) -> int:
        return self._blocks.shape[1]

    @property
    def dim(self) -> int:
        """Message dimension ``d``."""
        return self._base.dim_in

    @property
    def n_kraus(self) -> int:
        return self._base.n_kraus

    @property
    def amplitudes(self) -> np.ndarray:
        """Scalar vacuum amplitudes; only defined for a one-dimensional vacuum."""
        if self.vac_dim != 1:
            raise ValueError("scalar amplitudes exist only for a one-dimensional vacuum")
        return self._blocks[:, 0, 0].copy()

    @property
    def space(self) -> SectorSpace:
        return SectorSpace((("msg", self.dim), ("vac", self.vac_dim)))

    def extended_kraus(self) -> list[np.ndarray]:
        return [direct_sum(c, b) for c, b in zip(self._base.kraus, self._blocks)]

    @property
    def channel(self) -> KrausChannel:
        """The assembled channel on ``message ⊕ vacuum``."""
        return KrausChannel(self.extended_kraus())

    def vacuum_amplitude_matrix(self) -> np.ndarray:
        """``alpha[i, k] = <vac_k| V_i |vac_0>``."""
        return self._blocks[:, :, 0].copy()

    def __repr__(self) -> str:
        return f"VacuumExtension(d={self.dim}, vac_dim={self.vac_dim}, n_kraus={self.n_kraus})"

    def to_dict(self) -> dict:
        return {
            "base": self._base.to_dict(),
            "vac_dim": self.vac_dim,
            "vac_blocks": [matrix_to_json(b) for b in self._blocks],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VacuumExtension":
        base = KrausChannel.from_dict(data["base"])
        blocks = [matrix_from_json(b) for b in data["vac_blocks"]]
        ext = cls(base, blocks)
        if "vac_dim" in data and int(data["vac_dim"]) != ext.vac_dim:
            raise ValueError(f"declared vac_dim {data['vac_dim']} but blocks are {ext.vac_dim}-dim")
        return ext


def make_vacuum_extension(base: KrausChannel, amplitudes, tol: float = ATOL) -> VacuumExtension:
    """Extension with a one-dimensional vacuum: ``C_i ⊕ gamma_i``."""
    amps = np.asarray(amplitudes, dtype=complex).ravel()
    if amps.size != base.n_kraus:
        raise ValueError(f"{amps.size} amplitudes given for {base.n_kraus} Kraus operators")
    if abs(np.vdot(amps, amps).real - 1) > tol:
        raise ValueError(f"amplitudes are not normalised (sum |g|^2 = {np.vdot(amps, amps).real})")
    return VacuumExtension(base, [[[g]] for g in amps], tol)


def no_coherence_extension(base: KrausChannel) -> VacuumExtension:
    """Append a pure-vacuum Kraus operator so no Kraus term touches both sectors."""
    d = base.dim_in
    ops = list(base.kraus) + [np.zeros((d, d))]
    return make_vacuum_extension(KrausChannel(ops), [0.0] * base.n_kraus + [1.0])


def vacuum_interference_operator(ext: VacuumExtension) -> np.ndarray:
    """``F = sum_i conj(gamma_i) C_i``."""
    if ext.vac_dim != 1:
        raise ValueError("the interference operator is only defined for a one-dimensional vacuum")
    return np.einsum("a,aij->ij", ext.amplitudes.conj(), ext.base.kraus)


# --------------------------------------------------------------------------
# extremality


def _numerical_rank(vectors: np.ndarray, cutoff: float = RANK_CUTOFF, scale: float | None = None) -> int:
    """Rank of a stack of row vectors.

    Singular values count when above ``cutoff * scale``; ``scale`` defaults to
    the largest singular value.
    """
    if vectors.size == 0:
        return 0
    s = np.linalg.svd(vectors, compute_uv=False)
    ref = s[0] if scale is None else scale
    if s.size == 0 or ref == 0:
        return 0
    return int(np.sum(s > cutoff * ref))


def independent_kraus(ops: np.ndarray, cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Equivalent Kraus list made of linearly independent operators.

    The span is kept and the channel is unchanged: ``M = U S W^†`` with the
    Kraus operators as columns of ``M``, and ``U S`` (truncated) is returned.
    Linear combinations of block-diagonal operators stay block-diagonal.
    """
    r, m, n = ops.shape
    mat = ops.reshape(r, m * n).T
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return ops[:1]
    keep = s > cutoff * s[0]
    return (u[:, keep] * s[keep]).T.reshape(-1, m, n)


@dataclass(frozen=True)
class ExtremalityReport:
    extreme: bool
    n_independent: int  # r
    n_products: int  # L, independent C_j^† C_i
    vac_dim: int
    product_rank: int  # rank of the r^2 extended products
    rank_bound_ok: bool  # r^2 <= L + v^2
    null_count: int  # z, null message blocks in an independent representation
    null_bound: float  # sqrt(v^2 + 1) - 1
    null_bound_ok: bool

    def __bool__(self) -> bool:
        return self.extreme

    def to_dict(self) -> dict:
        return {
            "extreme": self.extreme,
            "r": self.n_independent,
            "L": self.n_products,
            "vac_dim": self.vac_dim,
            "product_rank": self.product_rank,
            "rank_bound_ok": self.rank_bound_ok,
            "z": self.null_count,
            "z_bound": self.null_bound,
            "z_bound_ok": self.null_bound_ok,
        }


def is_extreme_extension(ext: VacuumExtension, cutoff: float = RANK_CUTOFF) -> ExtremalityReport:
    """Extreme-point test for an extension among all extensions of its base.

    Notes
    -----
    The null count ``z`` is representation dependent. We report the largest
    value reachable by a linearly independent Kraus list of the same channel,
    ``r - rank{C_i}``, which is the value the bound must survive.
    """
    d, v = ext.dim, ext.vac_dim
    ops = independent_kraus(np.stack(ext.extended_kraus()), cutoff)
    r = ops.shape[0]
    msg = ops[:, :d, :d]

    ext_products = np.einsum("jba,ibc->jiac", ops.conj(), ops).reshape(r * r, -1)
    msg_products = np.einsum("jba,ibc->jiac", msg.conj(), msg).reshape(r * r, -1)
    product_rank = _numerical_rank(ext_products, cutoff)
    n_products = _numerical_rank(msg_products, cutoff)
    # measured against the full operators so that tiny message blocks count as null
    scale = np.linalg.svd(ops.reshape(r, -1), compute_uv=False)[0]
    z = r - _numerical_rank(msg.reshape(r, -1), cutoff, scale)
    z_bound = float(np.sqrt(v * v + 1) - 1)
    return ExtremalityReport(
        extreme=product_rank == r * r,
        n_independent=r,
        n_products=n_products,
        vac_dim=v,
        product_rank=product_rank,
        rank_bound_ok=r * r <= n_products + v * v,
        null_count=z,
        null_bound=z_bound,
        null_bound_ok=z <= z_bound + 1e-12,
    )


# --------------------------------------------------------------------------
# v-dimensional vacuum from amplitude matrices


def _row_unitary(row: np.ndarray) -> tuple[float, np.ndarray]:
    """Weight and a unitary whose first column is the normalised ``row``."""
    v = row.size
    p = float(np.vdot(row, row).real)
    if p <= 1e-15:
        # weight zero: any orthonormal basis works
        return 0.0, np.eye(v, dtype=complex)
    first = (row / np.sqrt(p)).reshape(v, 1)
    if v == 1:
        return p, first
    return p, np.hstack([first, orthonormal_complement(first)])


def extensions_from_amplitudes(kraus_a, kraus_b, alpha, beta, tol: float = ATOL):
    """Build two ``v``-dim extensions realising the given vacuum amplitudes.

    Parameters
    ----------
    kraus_a, kraus_b : KrausChannel or sequence of array_like
        The two channels.
    alpha, beta : array_like
        ``r_A x v`` and ``r_B x v`` amplitude matrices, each with unit
        Frobenius norm.

    Returns
    -------
    tuple of VacuumExtension
        Extensions whose vacuum blocks satisfy ``<vac_k| V_i |vac_0> = alpha[i, k]``.
    """
    a = kraus_a if isinstance(kraus_a, KrausChannel) else KrausChannel(kraus_a)
    b = kraus_b if isinstance(kraus_b, KrausChannel) else KrausChannel(kraus_b)
    out = []
    for ch, amp, name in ((a, alpha, "alpha"), (b, beta, "beta")):
        amp = np.asarray(amp, dtype=complex)
        if amp.ndim == 1:
            amp = amp.reshape(-1, 1)
        if amp.shape[0] != ch.n_kraus:
            raise ValueError(f"{name} has {amp.shape[0]} rows for {ch.n_kraus} Kraus operators")
        norm = float(np.vdot(amp, amp).real)
        if abs(norm - 1) > tol:
            raise ValueError(f"{name} is not normalised (sum |.|^2 = {norm})")
        blocks = []
        for row in amp:
            p, u = _row_unitary(row)
            blocks.append(np.sqrt(p) * u)
        out.append(VacuumExtension(ch, blocks, tol))
    return out[0], out[1]


def check_extension_sectors(ext: VacuumExtension, tol: float = ATOL) -> None:
    """Both sectors of the assembled channel satisfy No-Leakage."""
    ch = ext.channel
    for label in ext.space.labels:
        check_no_leakage(ch, ext.space.projector(label), tol, label)
