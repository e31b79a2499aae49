"""Dense complex linear algebra shared by the rest of the package.

Conventions
-----------
Everything is a ``numpy.ndarray`` of dtype ``complex128``. Tensor products
use the row-major, big-endian convention of :func:`numpy.kron`: the basis
index of ``|i_0>|i_1>...|i_{n-1}>`` is ``((i_0 * d_1 + i_1) * d_2 + ...)``,
so the first factor is the most significant. Every embedding in the package
is derived from that one rule.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

#: Default max-abs tolerance for analytic identities.
ATOL = 1e-10
#: Channel equality threshold on the Choi-Frobenius distance.
CHANNEL_EQ_TOL = 1e-9

TOLERANCES = {
    "matrix_atol": ATOL,
    "channel_equality": CHANNEL_EQ_TOL,
    "multi_stage_circuit": 1e-9,
    "choi_eigen_cutoff": 1e-12,
    "rank_cutoff_relative": 1e-10,
    "entropy_eigen_cutoff": 1e-12,
    "unitary_branch_purity": 1 - 1e-8,
}

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_cmat(a) -> np.ndarray:
    """Return ``a`` as a 2-D complex128 array (vectors become columns)."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(-1, 1)
    elif m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def ket(index: int, dim: int) -> np.ndarray:
    """Computational basis column vector."""
    v = np.zeros((dim, 1), dtype=complex)
    v[index, 0] = 1.0
    return v


def projector(vec) -> np.ndarray:
    """Rank-one projector onto the normalised vector ``vec``."""
    v = as_cmat(vec)
    v = v / np.linalg.norm(v)
    return v @ dagger(v)


def direct_sum(a, b) -> np.ndarray:
    """Block-diagonal ``a ⊕ b``."""
    a, b = as_cmat(a), as_cmat(b)
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=complex)
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def kron(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices, first factor major."""
    if not mats:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, (as_cmat(m) for m in mats))


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep``.

    Parameters
    ----------
    m : array_like
        Square matrix on the space ``dims[0] ⊗ dims[1] ⊗ ...``.
    dims : sequence of int
        Local dimensions.
    keep : iterable of int
        Factors to keep. The result keeps them in ascending order.

    Returns
    -------
    numpy.ndarray
        Reduced matrix on the kept factors.
    """
    m = as_cmat(m)
    dims = [int(x) for x in dims]
    total = int(np.prod(dims)) if dims else 1
    if m.shape != (total, total):
        raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} factors")

    t = m.reshape(dims + dims)
    # einsum labels: row axes 0..n-1, column axes n..2n-1; traced factors share labels
    row = list(range(n))
    col = [n + i if i in keep else i for i in range(n)]
    out = [i for i in keep] + [n + i for i in keep]
    reduced = np.einsum(t, row + col, out)
    kd = int(np.prod([dims[k] for k in keep])) if keep else 1
    return reduced.reshape(kd, kd)


def permute_factors(m, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of a square operator.

    The factor that sits at position ``order[k]`` of the input ends up at
    position ``k`` of the output.
    """
    m = as_cmat(m)
    dims = list(dims)
    n = len(dims)
    t = m.reshape(dims + dims)
    t = t.transpose(list(order) + [n + o for o in order])
    d = int(np.prod(dims))
    return t.reshape(d, d)


def embed_operator(op, targets: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Lift ``op`` acting on the factors ``targets`` (in that order) to the full space."""
    op = as_cmat(op)
    dims = list(dims)
    targets = list(targets)
    rest = [i for i in range(len(dims)) if i not in targets]
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    full = np.kron(op, np.eye(d_rest, dtype=complex))
    # full lives on targets + rest; move factors back to their natural slots
    current = targets + rest
    inverse = [current.index(i) for i in range(len(dims))]
    return permute_factors(full, [dims[i] for i in current], inverse)


def swap_operator(d1: int, d2: int) -> np.ndarray:
    """Permutation ``|a>|b> -> |b>|a>`` from ``d1 ⊗ d2`` to ``d2 ⊗ d1``."""
    s = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for a in range(d1):
        for b in range(d2):
            s[b * d1 + a, a * d2 + b] = 1.0
    return s


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(a, tol: float = ATOL) -> bool:
    a = as_cmat(a)
    return a.shape[0] == a.shape[1] and max_abs(a - dagger(a)) <= tol


def is_unitary(a, tol: float = ATOL) -> bool:
    a = as_cmat(a)
    if a.shape[0] != a.shape[1]:
        return False
    return max_abs(dagger(a) @ a - np.eye(a.shape[0])) <= tol


def is_isometry(a, tol: float = ATOL) -> bool:
    a = as_cmat(a)
    return max_abs(dagger(a) @ a - np.eye(a.shape[1])) <= tol


def is_psd(a, tol: float = ATOL) -> bool:
    a = as_cmat(a)
    if not is_hermitian(a, tol):
        return False
    return float(np.min(np.linalg.eigvalsh((a + dagger(a)) / 2))) >= -tol


def is_density(a, tol: float = ATOL) -> bool:
    a = as_cmat(a)
    return is_psd(a, tol) and abs(np.trace(a) - 1) <= tol


def psd_sqrt_factors(rho, cutoff: float = 1e-14) -> list[np.ndarray]:
    """Columns ``sqrt(lambda_k) |phi_k>`` with ``rho = sum_k |.><.|``.

    Used to absorb a mixed state into Kraus form through a purification.
    """
    rho = as_cmat(rho)
    w, v = np.linalg.eigh((rho + dagger(rho)) / 2)
    cols = [np.sqrt(lam) * v[:, [k]] for k, lam in enumerate(w) if lam > cutoff]
    return cols[::-1]


def orthonormal_complement(vectors) -> np.ndarray:
    """Orthonormal basis (as columns) of the complement of span(columns)."""
    from scipy.linalg import null_space

    a = as_cmat(vectors)
    return null_space(dagger(a))


def unitary_from_isometry(iso, columns: Sequence[int] | None = None) -> np.ndarray:
    """Complete an isometry to a unitary.

    Parameters
    ----------
    iso : array_like
        ``n x k`` matrix with orthonormal columns.
    columns : sequence of int, optional
        Column positions in the returned unitary where the isometry's columns go.
        Defaults to the first ``k`` columns.
    """
    iso = as_cmat(iso)
    n, k = iso.shape
    if columns is None:
        columns = list(range(k))
    comp = orthonormal_complement(iso)
    u = np.zeros((n, n), dtype=complex)
    u[:, list(columns)] = iso
    free = [c for c in range(n) if c not in set(columns)]
    u[:, free] = comp
    return u


def fourier_basis(n: int) -> np.ndarray:
    """Unitary whose k-th column is the k-th Fourier vector; column 0 is the uniform state."""
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.exp(2j * np.pi * j * k / n) / np.sqrt(n)


# --------------------------------------------------------------------------
# random objects


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rows: int, cols: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_isometry(rows: int, cols: int, seed=None) -> np.ndarray:
    """Haar-random isometry via QR of a Gaussian matrix with phase-fixed R."""
    if cols > rows:
        raise ValueError("an isometry needs rows >= cols")
    q, r = np.linalg.qr(ginibre(rows, cols, seed))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def haar_unitary(n: int, seed=None) -> np.ndarray:
    return random_isometry(n, n, seed)


def random_density(n: int, rank: int | None = None, seed=None) -> np.ndarray:
    g = ginibre(n, rank or n, seed)
    rho = g @ dagger(g)
    return rho / np.trace(rho)


def random_pure(n: int, seed=None) -> np.ndarray:
    v = ginibre(n, 1, seed)
    return v / np.linalg.norm(v)


# --------------------------------------------------------------------------
# sectors


@dataclass(frozen=True)
class SectorSpace:
    """Ordered orthogonal sectors covering ``0..total_dim``.

    >>> s = SectorSpace((("msg", 2), ("vac", 1)))
    >>> s.offsets, s.total_dim
    ((0, 2), 3)
    """

    sectors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        sectors = tuple((str(lbl), int(d)) for lbl, d in self.sectors)
        labels = [lbl for lbl, _ in sectors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate sector labels {labels}")
        if any(d < 1 for _, d in sectors):
            raise ValueError("sector dimensions must be positive")
        object.__setattr__(self, "sectors", sectors)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.sectors)

    @property
    def total_dim(self) -> int:
        return sum(d for _, d in self.sectors)

    @property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for _, d in self.sectors:
            out.append(acc)
            acc += d
        return tuple(out)

    def dim(self, label: str) -> int:
        return dict(self.sectors)[label]

    def slice(self, label: str) -> slice:
        i = self.labels.index(label)
        start = self.offsets[i]
        return slice(start, start + self.sectors[i][1])

    def projector(self, label: str) -> np.ndarray:
        p = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        s = self.slice(label)
        p[s, s] = np.eye(s.stop - s.start)
        return p

    def inclusion(self, label: str) -> np.ndarray:
        """Isometry from the sector into the full space."""
        s = self.slice(label)
        iso = np.zeros((self.total_dim, s.stop - s.start), dtype=complex)
        iso[s, :] = np.eye(s.stop - s.start)
        return iso


# --------------------------------------------------------------------------
# JSON encoding: nested arrays of [re, im] pairs


def matrix_to_json(m) -> list:
    m = as_cmat(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _entry(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError(f"complex entry must be [re, im], got {x!r}")
        return complex(float(x[0]), float(x[1]))
    return complex(float(x))


def matrix_from_json(data) -> np.ndarray:
    """Decode a matrix; bare real numbers are accepted in place of pairs."""
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise ValueError("matrix must be a non-empty list of rows")
    width = len(data[0])
    if width == 0 or any(len(r) != width for r in data):
        raise ValueError("matrix rows must be non-empty and of equal length")
    return np.array([[_entry(x) for x in row] for row in data], dtype=complex)
