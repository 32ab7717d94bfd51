"""Overlap matrices ``<chi_i|O|chi_j>`` from Pauli-string expectations.

Every matrix element reduces to ``i**k <psi|W|psi>`` for a Hermitian word
``W = P_i^dag O_t P_j``.  Word expectations are memoized by canonical key so
each distinct string hits the backend once per run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ansatz import MomentBasis
from .errors import BuildError, DimensionMismatch
from .hamiltonian import TimeDependentHamiltonian
from .pauli import PauliString, PauliSum, as_sum
from .states import DENSE_LIMIT, InitialState

log = logging.getLogger(__name__)

DEFAULT_SHOTS = 8192
_BLOCK_BUDGET = 1 << 21
_I_POWERS = np.array([1, 1j, -1, -1j])


# -- single-string expectations ---------------------------------------------


def _dense_word_expectation(vec: np.ndarray, idx: np.ndarray, x: int, z: int) -> complex:
    sign = 1 - 2 * (np.bitwise_count(idx & z) & 1).astype(np.int8)
    val = np.vdot(vec[idx ^ x], sign * vec)
    return complex(_I_POWERS[(x & z).bit_count() % 4] * val)


def expectation_dense(op: PauliString | PauliSum, state: np.ndarray) -> complex:
    """``<psi|op|psi>`` for a dense amplitude vector."""
    vec = np.asarray(state, dtype=complex)
    s = as_sum(op)
    if vec.size != 1 << s.n_qubits:
        raise DimensionMismatch(f"state length {vec.size} does not match {s.n_qubits} qubits")
    idx = np.arange(vec.size, dtype=np.int64)
    return sum((c * _dense_word_expectation(vec, idx, x, z) for (x, z), c in s.items()), 0j)


def _site_codes(x: int, z: int, n: int) -> np.ndarray:
    """Per-site code ``x_bit + 2 z_bit`` in site order 1..n."""
    nbytes = (n + 7) // 8
    xb = np.unpackbits(np.frombuffer(x.to_bytes(nbytes, "little"), np.uint8), bitorder="little")[:n]
    zb = np.unpackbits(np.frombuffer(z.to_bytes(nbytes, "little"), np.uint8), bitorder="little")[:n]
    return (xb + 2 * zb)[::-1]


def _site_table(sites: np.ndarray) -> np.ndarray:
    """Columns ``[1, <X>, <Z>, <Y>]`` per site, indexed by site code."""
    a, b = sites[:, 0], sites[:, 1]
    ex = 2 * np.real(np.conj(a) * b)
    ey = 2 * np.imag(np.conj(a) * b)
    ez = np.abs(a) ** 2 - np.abs(b) ** 2
    return np.stack([np.ones_like(ex), ex, ez, ey], axis=1)


def expectation_product(op: PauliString, state: InitialState) -> complex:
    """O(n) expectation of one string on a product (or all-zeros) state."""
    if op.n_qubits != state.n_qubits:
        raise DimensionMismatch("string and state qubit counts differ")
    coeff = op.coefficient
    if state.kind == "all_zeros":
        return 0j if op.x else complex(coeff)
    codes = _site_codes(op.x, op.z, op.n_qubits)
    table = _site_table(state.site_states())
    vals = table[np.arange(op.n_qubits), codes]
    return complex(coeff * np.prod(vals))


def sampled_estimate(
    true_value: complex,
    shots: int,
    stream_key: Sequence[int],
    real_only: bool = False,
) -> complex:
    """Shot-noise estimate of an expectation with parts in ``[-1, 1]``.

    Each part is the mean of ``shots`` draws of +-1 whose mean is the true
    part.  The generator is seeded from ``stream_key`` alone.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    re, im = float(np.real(true_value)), float(np.imag(true_value))
    if abs(re) > 1 + 1e-12 or abs(im) > 1 + 1e-12:
        raise ValueError(f"expectation parts must lie in [-1, 1], got {true_value!r}")
    rng = np.random.default_rng(np.random.SeedSequence([int(k) for k in stream_key]))
    p_re = min(max((1 + re) / 2, 0.0), 1.0)
    est_re = 2 * rng.binomial(shots, p_re) / shots - 1
    if real_only:
        return complex(est_re, 0.0)
    p_im = min(max((1 + im) / 2, 0.0), 1.0)
    est_im = 2 * rng.binomial(shots, p_im) / shots - 1
    return complex(est_re, est_im)


# -- backends ----------------------------------------------------------------


class ExpectationBackend:
    """Evaluates ``<psi|W|psi>`` for Hermitian words ``W`` given by masks."""

    tag = "abstract"

    def __init__(self, n_qubits: int):
        self.n_qubits = n_qubits
        self.calls = 0

    def word_expectation(self, x: int, z: int) -> complex:
        self.calls += 1
        return self._evaluate(x, z)

    def _evaluate(self, x: int, z: int) -> complex:
        raise NotImplementedError


class DenseBackend(ExpectationBackend):
    tag = "dense"

    def __init__(self, state: InitialState | np.ndarray, limit: int = DENSE_LIMIT):
        vec = state.to_dense(limit) if isinstance(state, InitialState) else np.asarray(state, complex)
        super().__init__(int(vec.size).bit_length() - 1)
        self.vec = vec
        self._idx = np.arange(vec.size, dtype=np.int64)

    def _evaluate(self, x: int, z: int) -> complex:
        return _dense_word_expectation(self.vec, self._idx, x, z)


class ProductBackend(ExpectationBackend):
    tag = "product"

    def __init__(self, state: InitialState):
        if not state.is_product:
            raise BuildError(f"product backend cannot evaluate a {state.kind} state")
        super().__init__(state.n_qubits)
        self.state = state
        self._table = None if state.kind == "all_zeros" else _site_table(state.site_states())

    def _evaluate(self, x: int, z: int) -> complex:
        if self._table is None:
            return 0j if x else 1 + 0j
        codes = _site_codes(x, z, self.n_qubits)
        return complex(np.prod(self._table[np.arange(self.n_qubits), codes]))


class SampledBackend(ExpectationBackend):
    """Wraps an exact backend and replaces each value by a shot-noise estimate."""

    tag = "sampled"

    def __init__(self, inner: ExpectationBackend, shots: int = DEFAULT_SHOTS, seed: int = 0):
        super().__init__(inner.n_qubits)
        if shots <= 0:
            raise BuildError("shots must be positive")
        self.inner = inner
        self.shots = shots
        self.seed = seed

    def _evaluate(self, x: int, z: int) -> complex:
        exact = self.inner._evaluate(x, z)
        # Hermitian words have real expectations; only the real part is measured.
        return sampled_estimate(exact.real, self.shots, (self.seed, x, z, 0), real_only=True)


@dataclass(frozen=True)
class BackendSpec:
    kind: str = "dense"
    shots: int = DEFAULT_SHOTS
    seed: int = 0


def make_backend(spec: BackendSpec | str, state: InitialState) -> ExpectationBackend:
    if isinstance(spec, str):
        spec = BackendSpec(spec)
    if spec.kind == "dense":
        return DenseBackend(state)
    if spec.kind == "product":
        return ProductBackend(state)
    if spec.kind == "sampled":
        inner = ProductBackend(state) if state.is_product else DenseBackend(state)
        return SampledBackend(inner, spec.shots, spec.seed)
    raise BuildError(f"unknown backend {spec.kind!r}")


# -- vectorized string tables ------------------------------------------------


def _words(n: int) -> int:
    return max(1, (n + 63) // 64)


def _to_words(v: int, w: int) -> np.ndarray:
    return np.frombuffer(v.to_bytes(8 * w, "little"), dtype="<u8")


def _table(strings: Sequence[PauliString], w: int):
    xs = np.array([_to_words(p.x, w) for p in strings], dtype=np.uint64).reshape(len(strings), w)
    zs = np.array([_to_words(p.z, w) for p in strings], dtype=np.uint64).reshape(len(strings), w)
    ph = np.array([p.phase for p in strings], dtype=np.int64)
    return xs, zs, ph


def _pc(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).sum(axis=-1, dtype=np.int64)


def _mul(xa, za, pa, xb, zb, pb):
    xc, zc = xa ^ xb, za ^ zb
    k = pa + pb + _pc(xa & za) + _pc(xb & zb) - _pc(xc & zc) + 2 * _pc(za & xb)
    return xc, zc, k % 4


class _Evaluator:
    """Memoizing front end for a backend over canonical keys."""

    def __init__(self, backend: ExpectationBackend, n: int):
        self.backend = backend
        self.n = n
        self.w = _words(n)
        self.packed = self.w == 1 and 2 * n <= 64
        self.cache: dict = {}

    def _pack(self, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
        if self.packed:
            return (xs[..., 0] << np.uint64(self.n)) | zs[..., 0]
        both = np.ascontiguousarray(np.concatenate([xs, zs], axis=-1).reshape(-1, 2 * self.w))
        return both.view(np.dtype((np.void, 16 * self.w))).ravel()

    def _unpack(self, key) -> tuple[int, int]:
        if self.packed:
            k = int(key)
            return k >> self.n, k & ((1 << self.n) - 1)
        raw = bytes(key)
        half = 8 * self.w
        return int.from_bytes(raw[:half], "little"), int.from_bytes(raw[half:], "little")

    def values(self, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
        shape = xs.shape[:-1]
        keys = self._pack(xs, zs).ravel()
        uniq, inv = np.unique(keys, return_inverse=True)
        vals = np.empty(len(uniq), dtype=complex)
        for i, key in enumerate(uniq):
            h = key.item() if self.packed else bytes(key)
            v = self.cache.get(h)
            if v is None:
                v = self.backend.word_expectation(*self._unpack(key))
                self.cache[h] = v
            vals[i] = v
        return vals[inv].reshape(shape)


def _operator_matrix(
    ev: _Evaluator, basis_tab, op: PauliSum, hermitian: bool
) -> np.ndarray:
    """``[<psi| P_i^dag op P_j |psi>]_{ij}``; upper triangle only if Hermitian."""
    bx, bz, bp = basis_tab
    m = bx.shape[0]
    terms = [(c, PauliString(op.n_qubits, x, z)) for (x, z), c in op.items()]
    out = np.zeros((m, m), dtype=complex)
    if not terms:
        return out
    tx, tz, tp = _table([t for _, t in terms], ev.w)
    coeffs = np.array([c for c, _ in terms], dtype=complex)
    nt = len(terms)
    block = max(1, _BLOCK_BUDGET // max(1, m * ev.w * nt))
    dx, dz, dp = bx, bz, (-bp) % 4  # dagger of each basis string
    for i0 in range(0, m, block):
        i1 = min(m, i0 + block)
        j0 = i0 if hermitian else 0
        # left[t, i] = P_i^dag T_t
        lx, lz, lp = _mul(
            dx[None, i0:i1], dz[None, i0:i1], dp[None, i0:i1],
            tx[:, None], tz[:, None], tp[:, None],
        )
        fx, fz, fp = _mul(
            lx[:, :, None], lz[:, :, None], lp[:, :, None],
            bx[None, None, j0:], bz[None, None, j0:], bp[None, None, j0:],
        )
        vals = ev.values(fx, fz)
        out[i0:i1, j0:] = np.einsum("t,tij->ij", coeffs, _I_POWERS[fp] * vals)
    if hermitian:
        upper = np.triu(out)
        out = upper + np.triu(out, 1).conj().T
        out[np.diag_indices(m)] = out.diagonal().real
    return out


@dataclass(frozen=True, eq=False)
class OverlapSet:
    E: np.ndarray
    D: tuple[np.ndarray, ...]
    M_obs: tuple[np.ndarray, ...] = ()
    obs_labels: tuple[str, ...] = ()
    R: tuple[np.ndarray, ...] | None = None
    F: tuple[np.ndarray, ...] | None = None
    eval_count: int = 0
    backend: str = "dense"
    extra: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.E.shape[0]

    def observable(self, label: str) -> np.ndarray:
        return self.M_obs[self.obs_labels.index(label)]


def build_overlap_set(
    basis: MomentBasis,
    h: TimeDependentHamiltonian,
    observables: Sequence[PauliSum | PauliString] = (),
    jumps: Sequence[PauliSum | PauliString] | None = None,
    state: InitialState | None = None,
    backend: BackendSpec | str | ExpectationBackend = "dense",
    obs_labels: Sequence[str] | None = None,
) -> OverlapSet:
    """Compute every matrix the evolution needs in one pass over the backend."""
    ops = basis.operators
    if not ops or not ops[0].is_identity:
        raise BuildError("basis must be nonempty with the identity first")
    n = basis.n_qubits
    if h.n_qubits != n:
        raise DimensionMismatch("Hamiltonian and basis qubit counts differ")
    if isinstance(backend, ExpectationBackend):
        be = backend
    else:
        if state is None:
            raise BuildError("an initial state is required to build a backend")
        be = make_backend(backend, state)
    if be.n_qubits != n:
        raise DimensionMismatch("backend and basis qubit counts differ")

    ev = _Evaluator(be, n)
    tab = _table(ops, ev.w)
    ident = PauliSum.from_string(PauliString.identity(n))
    E = _operator_matrix(ev, tab, ident, hermitian=True)
    D = tuple(_operator_matrix(ev, tab, op, op.is_hermitian()) for op in h.operators)
    obs = [as_sum(o) for o in observables]
    M_obs = tuple(_operator_matrix(ev, tab, o, o.is_hermitian()) for o in obs)
    labels = tuple(obs_labels) if obs_labels is not None else tuple(repr(o) for o in obs)
    R = F = None
    if jumps is not None:
        Ls = [as_sum(L) for L in jumps]
        R = tuple(_operator_matrix(ev, tab, L, L.is_hermitian()) for L in Ls)
        F = tuple(
            _operator_matrix(ev, tab, L.dagger().multiply(L), True) for L in Ls
        )
    log.debug("overlaps built: M=%d distinct strings=%d", len(ops), len(ev.cache))
    return OverlapSet(E, D, M_obs, labels, R, F, len(ev.cache), be.tag)
