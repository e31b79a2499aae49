"""Kraus-form quantum channels.

A :class:`KrausChannel` is only shape-checked on construction, so the same type
also carries trace-non-increasing operations (branch operations after a path
measurement, for instance). Use :func:`validate_cptp` or
:meth:`KrausChannel.require_cptp` wherever a full channel is required.

The Choi matrix is ``sum_i vec(K_i) vec(K_i)^†`` with row-major ``vec``, i.e.
it lives on ``output ⊗ input``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .linops import (
    ATOL,
    SectorSpace,
    as_cmat,
    dagger,
    matrix_from_json,
    matrix_to_json,
    max_abs,
    partial_trace,
    random_isometry,
)

CHOI_CUTOFF = 1e-12


class NoLeakageViolation(ValueError):
    """A Kraus operator maps part of a sector outside that sector."""

    def __init__(self, index: int, residual: float, label: str | None = None):
        self.index = index
        self.residual = residual
        self.label = label
        where = f" sector {label!r}" if label is not None else ""
        super().__init__(f"Kraus operator {index} leaks out of{where} (residual {residual:.3e})")


class KrausChannel:
    """Finite Kraus list with explicit input and output dimensions.

    Parameters
    ----------
    kraus : iterable of array_like
        Operators of shape ``(dim_out, dim_in)``.
    """

    __slots__ = ("_kraus",)

    def __init__(self, kraus: Iterable):
        ops = [as_cmat(k) for k in kraus]
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        for i, k in enumerate(ops):
            if k.shape != shape:
                raise ValueError(f"Kraus operator {i} has shape {k.shape}, expected {shape}")
        stack = np.stack(ops)
        stack.setflags(write=False)
        self._kraus = stack

    @property
    def kraus(self) -> np.ndarray:
        """Read-only array of shape ``(r, dim_out, dim_in)``."""
        return self._kraus

    @property
    def dim_in(self) -> int:
        return self._kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self._kraus.shape[1]

    @property
    def n_kraus(self) -> int:
        return self._kraus.shape[0]

    def __len__(self) -> int:
        return self.n_kraus

    def __iter__(self):
        return iter(self._kraus)

    def __repr__(self) -> str:
        return f"KrausChannel(dim_in={self.dim_in}, dim_out={self.dim_out}, n_kraus={self.n_kraus})"

    def __call__(self, rho) -> np.ndarray:
        return self.apply(rho)

    def apply(self, rho) -> np.ndarray:
        rho = as_cmat(rho)
        if rho.shape != (self.dim_in, self.dim_in):
            raise ValueError(f"state of shape {rho.shape} does not fit dim_in={self.dim_in}")
        k = self._kraus
        return np.einsum("aij,jk,alk->il", k, rho, k.conj())

    def gram(self) -> np.ndarray:
        """``sum_i K_i^† K_i``."""
        k = self._kraus
        return np.einsum("aji,ajk->ik", k.conj(), k)

    def require_cptp(self, tol: float = ATOL) -> "KrausChannel":
        rep = validate_cptp(self, tol)
        if not rep:
            raise ValueError(f"not trace preserving (max deviation {rep.max_deviation:.3e})")
        return self

    def pruned(self, tol: float = 0.0) -> "KrausChannel":
        """Drop Kraus operators whose max-abs entry is ``<= tol`` (keeps at least one)."""
        keep = [k for k in self._kraus if max_abs(k) > tol]
        return KrausChannel(keep or [self._kraus[0]])

    def to_dict(self) -> dict:
        return {
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "kraus": [matrix_to_json(k) for k in self._kraus],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KrausChannel":
        ch = cls(matrix_from_json(k) for k in data["kraus"])
        if "dim_in" in data and int(data["dim_in"]) != ch.dim_in:
            raise ValueError(f"declared dim_in {data['dim_in']} but Kraus operators have {ch.dim_in}")
        if "dim_out" in data and int(data["dim_out"]) != ch.dim_out:
            raise ValueError(f"declared dim_out {data['dim_out']} but Kraus operators have {ch.dim_out}")
        return ch


@dataclass(frozen=True)
class CPTPReport:
    ok: bool
    max_deviation: float

    def __bool__(self) -> bool:
        return self.ok


def validate_cptp(ch: KrausChannel, tol: float = ATOL) -> CPTPReport:
    """Check ``sum K^†K = I`` in max-abs norm."""
    dev = max_abs(ch.gram() - np.eye(ch.dim_in))
    return CPTPReport(dev <= tol, dev)


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel([np.eye(d)])


def unitary_channel(u) -> KrausChannel:
    return KrausChannel([as_cmat(u)])


def choi(ch: KrausChannel) -> np.ndarray:
    """Unnormalised Choi matrix on ``output ⊗ input``."""
    vecs = ch.kraus.reshape(ch.n_kraus, -1)
    return vecs.T @ vecs.conj()


def choi_is_valid(mat, dim_in: int, dim_out: int, tol: float = ATOL) -> bool:
    """PSD and trace-preserving Choi matrix check."""
    mat = as_cmat(mat)
    if np.min(np.linalg.eigvalsh((mat + dagger(mat)) / 2)) < -tol:
        return False
    reduced = partial_trace(mat, [dim_out, dim_in], keep=[1])
    return max_abs(reduced - np.eye(dim_in)) <= tol


def channel_distance(a: KrausChannel, b: KrausChannel) -> float:
    """Frobenius norm of the Choi difference."""
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise ValueError(
            f"dimension mismatch: {a.dim_in}->{a.dim_out} vs {b.dim_in}->{b.dim_out}"
        )
    return float(np.linalg.norm(choi(a) - choi(b)))


def compose(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """Sequential composition: ``a`` first, then ``b``. Kraus ``{B_j A_i}``."""
    if a.dim_out != b.dim_in:
        raise ValueError(f"cannot feed a {a.dim_out}-dim output into a {b.dim_in}-dim input")
    ops = np.einsum("bij,ajk->baik", b.kraus, a.kraus)
    return KrausChannel(ops.reshape(-1, b.dim_out, a.dim_in))


def tensor(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """Parallel composition ``a ⊗ b``."""
    return KrausChannel(np.kron(x, y) for x in a.kraus for y in b.kraus)


def mix(channels: Sequence[KrausChannel], weights: Sequence[float]) -> KrausChannel:
    """Convex combination via scaled Kraus concatenation."""
    ops = []
    for ch, w in zip(channels, weights):
        if w < 0:
            raise ValueError("mixing weights must be non-negative")
        ops.extend(np.sqrt(w) * k for k in ch.kraus)
    return KrausChannel(ops)


def no_leakage_residual(ch: KrausChannel, proj) -> tuple[int, float]:
    """Worst ``|| P K P - K P ||_max`` over the Kraus list, with its index."""
    proj = as_cmat(proj)
    worst, idx = 0.0, 0
    for i, k in enumerate(ch.kraus):
        kp = k @ proj
        r = max_abs(proj @ kp - kp)
        if r > worst:
            worst, idx = r, i
    return idx, worst


def check_no_leakage(ch: KrausChannel, proj, tol: float = ATOL, label: str | None = None) -> None:
    idx, res = no_leakage_residual(ch, proj)
    if res > tol:
        raise NoLeakageViolation(idx, res, label)


def restrict_to_sector(
    ch: KrausChannel, space: SectorSpace, label: str, tol: float = ATOL
) -> KrausChannel:
    """Restriction of ``ch`` to one sector after checking the No-Leakage condition.

    Raises
    ------
    NoLeakageViolation
        If some Kraus operator maps the sector outside itself.
    """
    if ch.dim_in != space.total_dim or ch.dim_out != space.total_dim:
        raise ValueError(
            f"channel acts on {ch.dim_in}->{ch.dim_out}, space has dimension {space.total_dim}"
        )
    check_no_leakage(ch, space.projector(label), tol, label)
    s = space.slice(label)
    return KrausChannel(k[s, s] for k in ch.kraus)


def stinespring_dilate(ch: KrausChannel) -> tuple[np.ndarray, int]:
    """Isometry ``V = sum_i K_i ⊗ |i>`` into ``output ⊗ environment``."""
    r = ch.n_kraus
    # rows indexed (out, env): V[(o, i), :] = K_i[o, :]
    v = ch.kraus.transpose(1, 0, 2).reshape(ch.dim_out * r, ch.dim_in)
    return v, r


def complementary_channel(ch: KrausChannel) -> KrausChannel:
    """Channel to the environment of :func:`stinespring_dilate`."""
    # E_o = sum_i |i><o| K_i, i.e. row i of E_o is row o of K_i
    return KrausChannel(ch.kraus[:, o, :] for o in range(ch.dim_out))


def random_channel(dim_in: int, dim_out: int, kraus_rank: int, seed=None) -> KrausChannel:
    """Random channel from a Haar isometry into ``kraus_rank`` stacked output blocks."""
    if kraus_rank < 1:
        raise ValueError("kraus_rank must be at least 1")
    rows = dim_out * kraus_rank
    if rows < dim_in:
        raise ValueError(
            f"dim_out*kraus_rank = {rows} is too small for an isometry from dimension {dim_in}"
        )
    v = random_isometry(rows, dim_in, seed)
    return KrausChannel(v.reshape(kraus_rank, dim_out, dim_in))


def canonical_kraus(ch: KrausChannel, cutoff: float = CHOI_CUTOFF) -> KrausChannel:
    """Minimal Kraus list from the Choi eigendecomposition, largest weight first."""
    return channel_from_choi(choi(ch), ch.dim_in, ch.dim_out, cutoff)


def channel_from_choi(mat, dim_in: int, dim_out: int, cutoff: float = CHOI_CUTOFF) -> KrausChannel:
    """Kraus operators ``sqrt(w) * reshape(v)`` for Choi eigenpairs with ``w > cutoff``."""
    w, v = np.linalg.eigh(as_cmat(mat))
    order = np.argsort(w)[::-1]
    ops = [np.sqrt(w[j]) * v[:, j].reshape(dim_out, dim_in) for j in order if w[j] > cutoff]
    return KrausChannel(ops or [np.zeros((dim_out, dim_in))])
