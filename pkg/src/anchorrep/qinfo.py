"""Finite-dimensional quantum information toolbox.

Numerical conventions used throughout:

- all entropic quantities are in bits (logarithms base 2);
- eigenvalues below ``EIG_FLOOR`` are treated as exact zeros, both when
  evaluating ``p * log(p)`` terms and when forming pseudoinverses;
- a state supported outside the second argument's support makes a
  relative-entropy-type quantity ``math.inf`` rather than raising;
- conditioning on an event of zero probability raises :class:`ZeroMassError`.

States are plain complex ``numpy`` arrays.  :class:`DensityMatrix` and
:class:`POVM` are thin validating wrappers used at API boundaries; every
function below also accepts raw arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .games import ZeroMassError

__all__ = [
    "HERM_ATOL",
    "PSD_ATOL",
    "TRACE_ATOL",
    "EIG_FLOOR",
    "QuantumValidationError",
    "DensityMatrix",
    "POVM",
    "CQState",
    "is_hermitian",
    "check_density_matrix",
    "check_povm",
    "vn_entropy",
    "relative_entropy",
    "max_relative_entropy",
    "mutual_information",
    "trace_norm",
    "trace_distance",
    "fidelity",
    "psd_sqrt",
    "psd_power",
    "partial_trace",
    "check_pinsker",
    "check_fuchs_van_de_graaf",
    "cq_relative_entropy",
    "cq_max_relative_entropy",
    "cq_entropy",
    "check_chain_rule",
    "check_quantum_raz",
    "uhlmann_unitary",
    "random_density_matrix",
    "random_pure_matrix",
    "random_povm",
    "random_unitary",
    "random_cq_state",
]

HERM_ATOL = 1e-10
PSD_ATOL = 1e-10
TRACE_ATOL = 1e-10
#: Eigenvalues at or below this magnitude count as zero (support cutoff).
EIG_FLOOR = 1e-12
#: Mass outside the reference support above this threshold means "not
#: absolutely continuous", i.e. an infinite divergence.
SUPPORT_MASS_TOL = 1e-10

LOG2 = math.log(2.0)


class QuantumValidationError(ValueError):
    """An operator failed a structural check (hermiticity, PSD, trace...)."""


# ---------------------------------------------------------------------------
# basic matrix helpers


def _as_matrix(m) -> np.ndarray:
    if isinstance(m, DensityMatrix):
        return m.matrix
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise QuantumValidationError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def is_hermitian(m, atol: float = HERM_ATOL) -> bool:
    arr = _as_matrix(m)
    return bool(np.max(np.abs(arr - arr.conj().T)) <= atol) if arr.size else True


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2.0


def check_density_matrix(rho, *, name: str = "state") -> np.ndarray:
    """Validate Hermiticity / positivity / unit trace; return the array."""
    arr = _as_matrix(rho)
    if not is_hermitian(arr):
        raise QuantumValidationError(f"{name} is not Hermitian within {HERM_ATOL}")
    tr = float(np.trace(arr).real)
    if abs(tr - 1.0) > TRACE_ATOL:
        raise QuantumValidationError(f"{name} has trace {tr!r}, expected 1")
    eigs = np.linalg.eigvalsh(_hermitize(arr))
    if eigs.size and float(eigs[0]) < -PSD_ATOL:
        raise QuantumValidationError(
            f"{name} has a negative eigenvalue {float(eigs[0])!r}"
        )
    return _hermitize(arr)


def check_povm(effects: Mapping[Hashable, np.ndarray], *, name: str = "povm") -> dict:
    """Validate a labelled POVM: PSD effects that sum to the identity."""
    if not effects:
        raise QuantumValidationError(f"{name} has no effects")
    out = {}
    dim = None
    for label, eff in effects.items():
        arr = _as_matrix(eff)
        if dim is None:
            dim = arr.shape[0]
        elif arr.shape[0] != dim:
            raise QuantumValidationError(f"{name}[{label!r}] has mismatched dimension")
        if not is_hermitian(arr):
            raise QuantumValidationError(f"{name}[{label!r}] is not Hermitian")
        eigs = np.linalg.eigvalsh(_hermitize(arr))
        if eigs.size and float(eigs[0]) < -PSD_ATOL:
            raise QuantumValidationError(
                f"{name}[{label!r}] has negative eigenvalue {float(eigs[0])!r}"
            )
        out[label] = _hermitize(arr)
    total = sum(out.values())
    if np.max(np.abs(total - np.eye(dim))) > 10 * PSD_ATOL:
        raise QuantumValidationError(f"{name} effects do not sum to the identity")
    return out


@dataclass(frozen=True)
class DensityMatrix:
    """A validated density matrix (Hermitian, PSD, unit trace)."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", check_density_matrix(self.matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class POVM:
    """A validated POVM: labelled PSD effects summing to the identity."""

    effects: Mapping[Hashable, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "effects", check_povm(self.effects))

    @property
    def dim(self) -> int:
        return next(iter(self.effects.values())).shape[0]

    def labels(self) -> tuple:
        return tuple(self.effects)


# ---------------------------------------------------------------------------
# spectral helpers


def _clipped_eigh(m: np.ndarray):
    eigs, vecs = np.linalg.eigh(_hermitize(m))
    eigs = np.where(np.abs(eigs) <= EIG_FLOOR, 0.0, eigs)
    return eigs, vecs


def psd_power(m, power: float) -> np.ndarray:
    """Pseudo-power of a PSD matrix; eigenvalues at the floor map to 0."""
    eigs, vecs = _clipped_eigh(_as_matrix(m))
    out = np.zeros_like(eigs)
    pos = eigs > 0
    out[pos] = eigs[pos] ** power
    return (vecs * out) @ vecs.conj().T


def psd_sqrt(m) -> np.ndarray:
    return psd_power(m, 0.5)


def trace_norm(m) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(m, dtype=complex), compute_uv=False)))


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of the difference, in [0, 1] for states."""
    return 0.5 * trace_norm(_as_matrix(rho) - _as_matrix(sigma))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``F = || sqrt(rho) sqrt(sigma) ||_1`` (not squared)."""
    prod = psd_sqrt(rho) @ psd_sqrt(sigma)
    return min(1.0, trace_norm(prod))


def vn_entropy(rho) -> float:
    """von Neumann entropy in bits."""
    eigs, _ = _clipped_eigh(_as_matrix(rho))
    return float(-sum(p * math.log(p) for p in eigs if p > 0) / LOG2)


def _support_projector_complement(sigma: np.ndarray) -> np.ndarray:
    eigs, vecs = _clipped_eigh(sigma)
    ker = vecs[:, eigs <= 0]
    return ker @ ker.conj().T


def relative_entropy(rho, sigma) -> float:
    """Umegaki relative entropy ``S(rho || sigma)`` in bits.

    Returns ``math.inf`` when ``rho`` has mass outside the support of
    ``sigma``.
    """
    r = _as_matrix(rho)
    s = _as_matrix(sigma)
    if r.shape != s.shape:
        raise QuantumValidationError("relative entropy needs equal dimensions")
    kerp = _support_projector_complement(s)
    if float(np.trace(kerp @ r).real) > SUPPORT_MASS_TOL:
        return math.inf
    r_eigs, _ = _clipped_eigh(r)
    term1 = sum(p * math.log(p) for p in r_eigs if p > 0)
    s_eigs, s_vecs = _clipped_eigh(s)
    term2 = 0.0
    for j in range(len(s_eigs)):
        if s_eigs[j] <= 0:
            continue
        weight = float((s_vecs[:, j].conj() @ r @ s_vecs[:, j]).real)
        term2 += weight * math.log(s_eigs[j])
    return float((term1 - term2) / LOG2)


def max_relative_entropy(rho, sigma) -> float:
    """Max-relative entropy ``S_inf = log2 min{ t : rho <= t * sigma }``."""
    r = _as_matrix(rho)
    s = _as_matrix(sigma)
    kerp = _support_projector_complement(s)
    if float(np.trace(kerp @ r).real) > SUPPORT_MASS_TOL:
        return math.inf
    inv_sqrt = psd_power(s, -0.5)
    mid = _hermitize(inv_sqrt @ r @ inv_sqrt)
    top = float(np.linalg.eigvalsh(mid)[-1])
    if top <= 0:
        return -math.inf
    return math.log2(top)


def partial_trace(m, dims: Sequence[int], keep: int) -> np.ndarray:
    """Trace out one factor of a bipartite operator on ``C^d0 (x) C^d1``."""
    arr = _as_matrix(m)
    d0, d1 = dims
    if arr.shape[0] != d0 * d1:
        raise QuantumValidationError("dimension mismatch in partial_trace")
    t = arr.reshape(d0, d1, d0, d1)
    if keep == 0:
        return np.einsum("ijkj->ik", t)
    if keep == 1:
        return np.einsum("ijil->jl", t)
    raise QuantumValidationError("keep must be 0 or 1")


def mutual_information(rho_ab, dims: Sequence[int]) -> float:
    """I(A:B) in bits of a bipartite state with factor dimensions ``dims``."""
    arr = _as_matrix(rho_ab)
    rho_a = partial_trace(arr, dims, 0)
    rho_b = partial_trace(arr, dims, 1)
    return vn_entropy(rho_a) + vn_entropy(rho_b) - vn_entropy(arr)


# ---------------------------------------------------------------------------
# inequality checkers


class InequalityCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def check_pinsker(rho, sigma, slack: float = 1e-9) -> InequalityCheck:
    """``0.5 * ||rho - sigma||_1^2 <= S(rho || sigma)`` (bits)."""
    lhs = 0.5 * trace_norm(_as_matrix(rho) - _as_matrix(sigma)) ** 2
    rhs = relative_entropy(rho, sigma)
    return InequalityCheck(lhs, rhs, lhs <= rhs + slack)


class TwoSidedCheck(NamedTuple):
    lower: float
    middle: float
    upper: float
    holds: bool


def check_fuchs_van_de_graaf(rho, sigma, slack: float = 1e-9) -> TwoSidedCheck:
    """``1 - F <= trace_distance <= sqrt(1 - F^2)``."""
    f = fidelity(rho, sigma)
    d = trace_distance(rho, sigma)
    upper = math.sqrt(max(0.0, 1.0 - f * f))
    return TwoSidedCheck(1.0 - f, d, upper, (1.0 - f) <= d + slack and d <= upper + slack)


# ---------------------------------------------------------------------------
# classical-quantum states


class CQState:
    """A classical-quantum state stored as labelled unnormalized blocks.

    The global state is block diagonal: one PSD block per classical label,
    with the block traces forming the classical marginal.  Blocks of zero
    trace may be omitted.
    """

    def __init__(self, blocks: Mapping[Hashable, np.ndarray], *, validate: bool = True):
        mats = {}
        dim = None
        for key, block in blocks.items():
            arr = _as_matrix(block)
            if dim is None:
                dim = arr.shape[0]
            elif arr.shape[0] != dim:
                raise QuantumValidationError("CQ blocks must share one dimension")
            if validate:
                if not is_hermitian(arr):
                    raise QuantumValidationError(f"block {key!r} is not Hermitian")
                eigs = np.linalg.eigvalsh(_hermitize(arr))
                if eigs.size and float(eigs[0]) < -PSD_ATOL:
                    raise QuantumValidationError(
                        f"block {key!r} has negative eigenvalue {float(eigs[0])!r}"
                    )
            mats[key] = _hermitize(arr)
        if dim is None:
            raise QuantumValidationError("a CQ state needs at least one block")
        self.blocks = mats
        self.dim = dim

    def trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks.values()))

    def pmf(self) -> dict:
        return {k: float(np.trace(b).real) for k, b in self.blocks.items()}

    def quantum_marginal(self) -> np.ndarray:
        return sum(self.blocks.values())

    def block(self, key) -> np.ndarray:
        b = self.blocks.get(key)
        if b is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return b

    def conditioned(self, predicate) -> "CQState":
        """Restrict to labels where ``predicate(key)`` holds and renormalize."""
        kept = {k: b for k, b in self.blocks.items() if predicate(k)}
        mass = sum(float(np.trace(b).real) for b in kept.values())
        if mass <= 0:
            raise ZeroMassError("conditioning a CQ state on a zero-mass event")
        return CQState({k: b / mass for k, b in kept.items()}, validate=False)

    def map_keys(self, fn) -> "CQState":
        """Coarse-grain classical labels through ``fn`` (blocks are summed)."""
        out: dict = {}
        for k, b in self.blocks.items():
            nk = fn(k)
            out[nk] = out[nk] + b if nk in out else b.copy()
        return CQState(out, validate=False)


def _block_rel_ent_terms(a: np.ndarray, b: np.ndarray) -> float:
    """``Tr a log a - Tr a log b`` in nats for unnormalized PSD blocks."""
    ta = float(np.trace(a).real)
    if ta <= EIG_FLOOR:
        return 0.0
    kerp = _support_projector_complement(b)
    if float(np.trace(kerp @ a).real) > SUPPORT_MASS_TOL:
        return math.inf
    a_eigs, _ = _clipped_eigh(a)
    term1 = sum(p * math.log(p) for p in a_eigs if p > 0)
    b_eigs, b_vecs = _clipped_eigh(b)
    term2 = 0.0
    for j in range(len(b_eigs)):
        if b_eigs[j] <= 0:
            continue
        weight = float((b_vecs[:, j].conj() @ a @ b_vecs[:, j]).real)
        term2 += weight * math.log(b_eigs[j])
    return term1 - term2


def cq_relative_entropy(first: CQState, second: CQState) -> float:
    """Blockwise relative entropy between CQ states sharing a label space."""
    total = 0.0
    for key, a in first.blocks.items():
        if float(np.trace(a).real) <= EIG_FLOOR:
            continue
        b = second.blocks.get(key)
        if b is None:
            return math.inf
        term = _block_rel_ent_terms(a, b)
        if term == math.inf:
            return math.inf
        total += term
    return total / LOG2


def cq_entropy(state: CQState) -> float:
    """von Neumann entropy (bits) of the block-diagonal global state."""
    total = 0.0
    for b in state.blocks.values():
        eigs, _ = _clipped_eigh(b)
        total += -sum(p * math.log(p) for p in eigs if p > 0)
    return total / LOG2


def cq_max_relative_entropy(first: CQState, second: CQState) -> float:
    """Blockwise max-relative entropy (bits)."""
    worst = -math.inf
    for key, a in first.blocks.items():
        if float(np.trace(a).real) <= EIG_FLOOR:
            continue
        b = second.blocks.get(key)
        if b is None:
            return math.inf
        kerp = _support_projector_complement(b)
        if float(np.trace(kerp @ a).real) > SUPPORT_MASS_TOL:
            return math.inf
        inv_sqrt = psd_power(b, -0.5)
        mid = _hermitize(inv_sqrt @ a @ inv_sqrt)
        top = float(np.linalg.eigvalsh(mid)[-1])
        if top > 0:
            worst = max(worst, math.log2(top))
    return worst


class ChainRuleCheck(NamedTuple):
    lhs: float
    rhs: float
    slack: float
    consistent: bool


def check_chain_rule(first: CQState, second: CQState, atol: float = 1e-8) -> ChainRuleCheck:
    """Decompose S(first || second) as classical KL plus averaged block terms.

    Both sides are reported; ``consistent`` means they agree within ``atol``
    (two infinities also count as agreement).
    """
    lhs = cq_relative_entropy(first, second)
    p = first.pmf()
    q = second.pmf()
    rhs = 0.0
    for key, pk in p.items():
        if pk <= EIG_FLOOR:
            continue
        qk = q.get(key, 0.0)
        if qk <= EIG_FLOOR:
            rhs = math.inf
            break
        rhs += pk * math.log2(pk / qk)
        term = _block_rel_ent_terms(first.blocks[key] / pk, second.blocks[key] / qk)
        if term == math.inf:
            rhs = math.inf
            break
        rhs += pk * term / LOG2
    if math.isinf(lhs) or math.isinf(rhs):
        return ChainRuleCheck(lhs, rhs, 0.0, math.isinf(lhs) and math.isinf(rhs))
    return ChainRuleCheck(lhs, rhs, abs(lhs - rhs), abs(lhs - rhs) <= atol)


class RazCheck(NamedTuple):
    information_sum: float
    divergence: float
    slack: float
    holds: bool


def check_quantum_raz(
    rho: CQState,
    marginals: Sequence[Mapping[Hashable, float]],
    sigma_a: np.ndarray,
    slack: float = 1e-8,
) -> RazCheck:
    """Superadditivity of divergence over a product reference state.

    ``rho`` is classical on tuples ``(x_1, ..., x_n)`` with a quantum block
    per tuple; the reference is the product of the given classical
    ``marginals`` with ``sigma_a`` on the quantum register.  Checks

        sum_i I(X_i : A)_rho  <=  S(rho || sigma_1 x ... x sigma_n x sigma_a).
    """
    keys = list(rho.blocks)
    if not keys:
        raise QuantumValidationError("empty CQ state")
    n = len(keys[0])
    if any(len(k) != n for k in keys):
        raise QuantumValidationError("classical labels must be equal-length tuples")
    if len(marginals) != n:
        raise QuantumValidationError(
            f"need {n} classical marginals, got {len(marginals)}"
        )
    sig = _as_matrix(sigma_a)

    total_mass = rho.trace()
    if abs(total_mass - 1.0) > 1e-8:
        raise QuantumValidationError("rho must be normalized")

    rho_a = rho.quantum_marginal()
    s_a = vn_entropy(rho_a)
    info_sum = 0.0
    for i in range(n):
        cond = rho.map_keys(lambda k, i=i: k[i])
        pmf_i = cond.pmf()
        h_xi = -sum(p * math.log2(p) for p in pmf_i.values() if p > 0)
        info_sum += h_xi + s_a - cq_entropy(cond)

    divergence = 0.0
    for key, block in rho.blocks.items():
        mass = float(np.trace(block).real)
        if mass <= EIG_FLOOR:
            continue
        logp = 0.0
        ok = True
        for i in range(n):
            m = float(marginals[i].get(key[i], 0.0))
            if m <= 0.0:
                ok = False
                break
            logp += math.log(m)
        if not ok:
            return RazCheck(info_sum, math.inf, math.inf, True)
        term = _block_rel_ent_terms(block, sig)
        if term == math.inf:
            return RazCheck(info_sum, math.inf, math.inf, True)
        # Tr rho_k log(p * sigma_a) = Tr(rho_k) log p + Tr rho_k log sigma_a
        divergence += term - mass * logp
    divergence /= LOG2
    return RazCheck(
        info_sum, divergence, divergence - info_sum, info_sum <= divergence + slack
    )


# ---------------------------------------------------------------------------
# Uhlmann alignment


class UhlmannResult(NamedTuple):
    unitary: np.ndarray
    overlap: float


def uhlmann_unitary(t1: np.ndarray, t2: np.ndarray, side: str = "left") -> UhlmannResult:
    """Best local unitary aligning two bipartite pure states.

    The states are given by coefficient matrices (``phi = sum T[i, j]
    |i>|j>``).  ``side`` names the register the unitary acts on.  The
    returned unitary maximizes ``<phi2| (U (x) I) |phi1>`` (or ``I (x) U``),
    the maximum being the fidelity of the reduced states on the untouched
    register; the optimal inner product is rotated to be real nonnegative.
    """
    a = np.asarray(t1, dtype=complex)
    b = np.asarray(t2, dtype=complex)
    if a.shape != b.shape or a.ndim != 2:
        raise QuantumValidationError("states must be coefficient matrices of equal shape")
    if side == "left":
        m = a @ b.conj().T
    elif side == "right":
        m = (b.conj().T @ a).T
    else:
        raise QuantumValidationError("side must be 'left' or 'right'")
    w, s, vh = np.linalg.svd(m)
    u = (w @ vh).conj().T
    return UhlmannResult(u, float(np.sum(s)))


# ---------------------------------------------------------------------------
# seeded random instances (for property tests and the toolbox CLI suite)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_density_matrix(rng: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    r = rank or d
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_matrix(rng: np.random.Generator, d_left: int, d_right: int) -> np.ndarray:
    t = rng.normal(size=(d_left, d_right)) + 1j * rng.normal(size=(d_left, d_right))
    return t / np.linalg.norm(t)


def random_povm(rng: np.random.Generator, d: int, outcomes: int) -> dict:
    raw = []
    for _ in range(outcomes):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        raw.append(g @ g.conj().T)
    total = sum(raw)
    inv_sqrt = psd_power(total, -0.5)
    return {idx: _hermitize(inv_sqrt @ w @ inv_sqrt) for idx, w in enumerate(raw)}


def random_cq_state(
    rng: np.random.Generator,
    keys: Iterable[Hashable],
    d: int,
    *,
    full_rank: bool = True,
) -> CQState:
    keys = list(keys)
    weights = rng.dirichlet(np.ones(len(keys)))
    blocks = {}
    for key, w in zip(keys, weights):
        rho = random_density_matrix(rng, d, rank=None if full_rank else 1)
        blocks[key] = w * rho
    return CQState(blocks, validate=False)
