"""Entropies, capacities and path-measurement decoding.

All logarithms are base 2. Capacities of quantum effective channels are
computed for a fixed choice of input states and measurement (the induced
classical channel), so the numbers are lower bounds on the unrestricted
capacities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .channels import KrausChannel, choi, complementary_channel, compose
from .linops import ATOL, as_cmat, dagger, is_density, is_psd, matrix_to_json, max_abs
from .superpose import Branch, BranchDecomposition, EffectiveChannel

ENTROPY_CUTOFF = 1e-12
UNITARY_PURITY = 1 - 1e-8


class NonConvergence(RuntimeError):
    def __init__(self, report: "CapacityReport"):
        self.report = report
        lo, hi = report.bracket or (report.value, float("nan"))
        super().__init__(f"{report.method} did not converge in {report.iterations} iterations (bracket [{lo}, {hi}])")


@dataclass(frozen=True)
class CapacityReport:
    value: float
    method: str
    iterations: int
    residual: float
    achiever: np.ndarray
    converged: bool = True
    bracket: tuple[float, float] | None = None
    history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def lower_bound(self) -> float:
        return max(self.value, 0.0)

    def raise_if_unconverged(self) -> "CapacityReport":
        if not self.converged:
            raise NonConvergence(self)
        return self

    def to_dict(self) -> dict:
        ach = np.asarray(self.achiever)
        out = {
            "value": self.value,
            "method": self.method,
            "iterations": self.iterations,
            "residual": self.residual,
            "achiever": ach.real.tolist() if ach.ndim == 1 else matrix_to_json(ach),
            "converged": self.converged,
        }
        if self.bracket is not None:
            out["bracket"] = list(self.bracket)
        return out


# --------------------------------------------------------------------------
# entropies


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy needs 0 <= x <= 1, got {x}")
    return float(sum(-p * np.log2(p) for p in (x, 1.0 - x) if p > 0))


def _entropy_of_spectrum(w: np.ndarray) -> float:
    w = w[w > ENTROPY_CUTOFF]
    return float(-(w * np.log2(w)).sum())


def von_neumann_entropy(rho, tol: float = 1e-8) -> float:
    rho = as_cmat(rho)
    if not is_density(rho, tol):
        raise ValueError("von Neumann entropy needs a density matrix")
    return _entropy_of_spectrum(np.linalg.eigvalsh((rho + dagger(rho)) / 2))


def holevo_quantity(ensemble: Sequence[tuple[float, np.ndarray]]) -> float:
    probs = np.array([p for p, _ in ensemble], dtype=float)
    if np.any(probs < 0) or abs(probs.sum() - 1) > 1e-10:
        raise ValueError("ensemble probabilities must be non-negative and sum to 1")
    states = [as_cmat(s) for _, s in ensemble]
    avg = sum(p * s for p, s in zip(probs, states))
    return von_neumann_entropy(avg) - sum(p * von_neumann_entropy(s) for p, s in zip(probs, states))


# --------------------------------------------------------------------------
# classical channels


@dataclass(frozen=True)
class StochasticMatrix:
    """Row-stochastic matrix ``p[x, y] = p(y | x)``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2 or p.size == 0:
            raise ValueError("stochastic matrix must be a non-empty 2-D array")
        if np.any(p < -1e-12):
            raise ValueError("stochastic matrix has negative entries")
        p = np.clip(p, 0.0, None)
        if np.max(np.abs(p.sum(axis=1) - 1)) > 1e-12:
            raise ValueError("rows of a stochastic matrix must sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape


def _as_stochastic(p) -> StochasticMatrix:
    return p if isinstance(p, StochasticMatrix) else StochasticMatrix(p)


def induced_classical_channel(eff, input_states, povm, tol: float = ATOL) -> StochasticMatrix:
    """``p(y|x) = Tr[povm_y eff(input_x)]``.

    ``eff`` may be an :class:`EffectiveChannel` or any :class:`KrausChannel`.
    """
    chan = eff.chan if isinstance(eff, EffectiveChannel) else eff
    povm = [as_cmat(e) for e in povm]
    if any(e.shape != (chan.dim_out, chan.dim_out) for e in povm):
        raise ValueError("POVM elements must match the channel output dimension")
    if not all(is_psd(e, tol) for e in povm):
        raise ValueError("POVM elements must be positive semidefinite")
    if max_abs(sum(povm) - np.eye(chan.dim_out)) > tol:
        raise ValueError("POVM elements must sum to the identity")
    rows = []
    for rho in input_states:
        rho = as_cmat(rho)
        if not is_density(rho, tol):
            raise ValueError("input states must be density matrices")
        out = chan.apply(rho)
        rows.append([float(np.real(np.trace(e @ out))) for e in povm])
    p = np.clip(np.array(rows), 0.0, None)
    return StochasticMatrix(p / p.sum(axis=1, keepdims=True))


def _divergences(prior: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``D[x] = sum_y p(y|x) ln(p(y|x) / q(y))`` in nats."""
    q = prior @ p
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / q), 0.0)
    return terms.sum(axis=1)


def mutual_information(prior, p) -> float:
    prior = np.asarray(prior, dtype=float)
    p = _as_stochastic(p).probs
    return float(prior @ _divergences(prior, p) / np.log(2))


def blahut_arimoto(p, tol: float = 1e-9, max_iter: int = 100_000) -> CapacityReport:
    """Classical capacity of a discrete memoryless channel, in bits.

    Stops when the upper bound ``max_x D(x)`` and the lower bound
    ``log sum_x r(x) 2^D(x)`` differ by less than ``tol``. The reported value
    is the lower bound, which never decreases between iterations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = _as_stochastic(p).probs
    n = p.shape[0]
    r = np.full(n, 1.0 / n)
    ln2 = np.log(2)
    history = []
    lower = upper = 0.0
    for it in range(1, max_iter + 1):
        dv = _divergences(r, p)
        shift = dv.max()
        weights = r * np.exp(dv - shift)
        total = weights.sum()
        lower = (np.log(total) + shift) / ln2
        upper = shift / ln2
        history.append(lower)
        if upper - lower < tol:
            return CapacityReport(
                value=float(lower),
                method="blahut_arimoto",
                iterations=it,
                residual=float(upper - lower),
                achiever=r,
                bracket=(float(lower), float(upper)),
                history=tuple(history),
            )
        r = weights / total
    return CapacityReport(
        value=float(lower),
        method="blahut_arimoto",
        iterations=max_iter,
        residual=float(upper - lower),
        achiever=r,
        converged=False,
        bracket=(float(lower), float(upper)),
        history=tuple(history),
    )


# --------------------------------------------------------------------------
# coherent information


def coherent_information(ch: KrausChannel, rho) -> float:
    """``S(ch(rho)) - S(complement(rho))``."""
    out = ch.apply(rho)
    env = complementary_channel(ch).apply(rho)
    return _entropy_of_spectrum(np.linalg.eigvalsh(out)) - _entropy_of_spectrum(np.linalg.eigvalsh(env))


def _superoperator(ch: KrausChannel) -> np.ndarray:
    """Matrix acting on row-major ``vec(rho)``: ``sum_i K_i ⊗ conj(K_i)``."""
    return np.einsum("aij,akl->ikjl", ch.kraus, ch.kraus.conj()).reshape(ch.dim_out ** 2, ch.dim_in ** 2)


def _density_from_params(x: np.ndarray, d: int, low=None) -> np.ndarray:
    """Lower-triangular factor with real diagonal, normalised ``T T^†``."""
    if low is None:
        low = np.tril_indices(d, -1)
    k = len(low[0])
    t = np.diag(x[:d].astype(complex))
    t[low] = x[d:d + k] + 1j * x[d + k:d + 2 * k]
    rho = t @ t.conj().T
    tr = rho.trace().real
    return rho / tr if tr > 0 else np.eye(d) / d


def coherent_information_max(
    ch: KrausChannel,
    restarts: int = 32,
    tol: float = 1e-10,
    seed=0,
    max_evals: int = 4000,
) -> CapacityReport:
    """Best coherent information found by restarted Nelder-Mead searches.

    The first restart starts from the maximally mixed state, the others from
    random factors. The winner is polished once more and ``residual`` is the
    gain of that last polish. The value is a lower bound on the quantum
    capacity and may be negative.
    """
    if ch.dim_in != ch.dim_out:
        raise ValueError("coherent information maximisation needs a square channel")
    d = ch.dim_in
    out_map = _superoperator(ch)
    env_map = _superoperator(complementary_channel(ch))
    d_env = ch.n_kraus
    rng = np.random.default_rng(seed)
    n_par = d * d
    low = np.tril_indices(d, -1)

    def objective(x):
        v = _density_from_params(x, d, low).reshape(-1)
        s_out = _entropy_of_spectrum(np.linalg.eigvalsh((out_map @ v).reshape(d, d)))
        s_env = _entropy_of_spectrum(np.linalg.eigvalsh((env_map @ v).reshape(d_env, d_env)))
        return s_env - s_out

    opts = {"xatol": 1e-7, "fatol": tol, "maxfev": max_evals, "adaptive": n_par > 4}
    evals = 0
    best_x, best_f = None, np.inf
    for k in range(max(1, restarts)):
        x0 = np.concatenate([np.ones(d), np.zeros(n_par - d)]) if k == 0 else rng.standard_normal(n_par)
        res = minimize(objective, x0, method="Nelder-Mead", options=opts)
        evals += res.nfev
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
    polish = minimize(objective, best_x, method="Nelder-Mead", options=opts)
    evals += polish.nfev
    residual = max(best_f - polish.fun, 0.0)
    if polish.fun < best_f:
        best_x, best_f = polish.x, polish.fun
    return CapacityReport(
        value=float(-best_f),
        method="coherent_info_max",
        iterations=int(evals),
        residual=float(residual),
        achiever=_density_from_params(best_x, d),
    )


# --------------------------------------------------------------------------
# path measurement


@dataclass(frozen=True)
class BranchCorrection:
    probability: float
    purity: float  # of the normalised branch Choi matrix
    unitary_fidelity: float  # overlap of the dominant Kraus operator with the closest unitary
    correctable: bool
    correction: KrausChannel


@dataclass(frozen=True)
class DecodeReport:
    decomposition: BranchDecomposition
    corrections: tuple[BranchCorrection, ...]
    best_effort_channel: KrausChannel  # corrections applied, all branches summed
    corrected_channel: KrausChannel | None  # only when every branch is unitary-correctable

    @property
    def perfectly_correctable(self) -> bool:
        return self.corrected_channel is not None


def _validate_projectors(projs: Sequence[np.ndarray], n: int, tol: float) -> None:
    if not projs:
        raise ValueError("need at least one path projector")
    for p in projs:
        if p.shape != (n, n):
            raise ValueError(f"path projectors must be {n}x{n}")
        if max_abs(p - dagger(p)) > tol or max_abs(p @ p - p) > tol:
            raise ValueError("path projectors must be Hermitian and idempotent")
    if max_abs(sum(projs) - np.eye(n)) > tol:
        raise ValueError("path projectors must sum to the identity")


def path_branches(eff: EffectiveChannel, path_basis, probe=None, tol: float = ATOL) -> BranchDecomposition:
    """Conditional message operations for each outcome of a projective path measurement."""
    d, n = eff.d, eff.n_paths
    projs = [as_cmat(p) for p in path_basis]
    _validate_projectors(projs, n, tol)
    probe = np.eye(d) / d if probe is None else as_cmat(probe)
    branches = []
    for p in projs:
        w, v = np.linalg.eigh(p)
        vecs = [v[:, [k]] for k in range(n) if w[k] > 0.5]
        ops = [np.kron(np.eye(d), dagger(t)) @ k for t in vecs for k in eff.chan.kraus]
        op = KrausChannel(ops).pruned(1e-15)
        prob = float(np.real(np.trace(op.apply(probe))))
        branches.append(Branch(prob, op, p))
    return BranchDecomposition(tuple(branches), probe)


def _closest_unitary_correction(op: KrausChannel, d: int) -> BranchCorrection:
    j = choi(op)
    weight = float(np.real(np.trace(j)))
    if weight <= 1e-12:
        return BranchCorrection(0.0, 1.0, 1.0, True, KrausChannel([np.eye(d)]))
    jn = j / weight
    purity = float(np.real(np.trace(jn @ jn)))
    w, v = np.linalg.eigh(jn)
    k = v[:, -1].reshape(d, d)
    u, s, vh = np.linalg.svd(k)
    fidelity = float(s.sum() ** 2 / (d * np.sum(s ** 2)))
    correction = dagger(u @ vh)
    ok = purity > UNITARY_PURITY and fidelity > UNITARY_PURITY
    return BranchCorrection(weight / d, purity, fidelity, ok, KrausChannel([correction]))


def measure_path_decode(eff: EffectiveChannel, path_basis, corrections="search_unitary", probe=None) -> DecodeReport:
    """Measure the path, then correct the message conditionally on the outcome.

    Parameters
    ----------
    eff : EffectiveChannel
    path_basis : sequence of array_like
        Orthogonal projectors on the path, summing to the identity.
    corrections : sequence of KrausChannel or ``"search_unitary"``
        Either explicit corrections per outcome, or a search for the unitary
        that undoes the dominant Kraus operator of each branch.
    probe : array_like, optional
        Input state used for the branch probabilities (maximally mixed by default).
    """
    dec = path_branches(eff, path_basis, probe)
    d = eff.d
    if isinstance(corrections, str):
        if corrections != "search_unitary":
            raise ValueError(f"unknown correction strategy {corrections!r}")
        fixes = [_closest_unitary_correction(b.operation, d) for b in dec.branches]
    else:
        corrections = list(corrections)
        if len(corrections) != len(dec.branches):
            raise ValueError("need one correction per path outcome")
        fixes = []
        for b, c in zip(dec.branches, corrections):
            fx = _closest_unitary_correction(b.operation, d)
            fixes.append(BranchCorrection(fx.probability, fx.purity, fx.unitary_fidelity, fx.correctable, c))
    total = KrausChannel(
        [k for b, fx in zip(dec.branches, fixes) for k in compose(b.operation, fx.correction).kraus]
    )
    # explicit corrections are trusted; searched ones must all be unitary
    perfect = not isinstance(corrections, str) or all(fx.correctable for fx in fixes)
    return DecodeReport(dec, tuple(fixes), total, total if perfect else None)
