"""Symplectic Pauli-string algebra.

A Pauli string on ``n`` qubits is stored as two integer bitmasks plus a phase
exponent.  Site ``q`` (1-based, leftmost in a dense label) lives at bit
``n - q`` of both masks, so the masks line up with computational-basis indices
in kron order (site 1 is the most significant bit).

Per site ``(x, z)`` maps to ``(0,0)=I, (1,0)=X, (0,1)=Z, (1,1)=Y``.  The
operator represented is ``i**phase`` times that Hermitian word.  Python ints
are used for the masks so ``n`` is unbounded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DimensionMismatch, PauliLabelError

PRUNE_TOL = 1e-12

_I_POWERS = (1, 1j, -1, -1j)
_SITE_CHARS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_CHAR_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}

_DENSE_RE = re.compile(r"^[IXYZ]+$")
_INDEXED_TOKEN = re.compile(r"^([A-Za-z])(\d+)$")


def _popcount(v: int) -> int:
    return v.bit_count()


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x: int
    z: int
    phase: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("mask does not fit in n_qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits, 0, 0, 0)

    @property
    def key(self) -> tuple[int, int]:
        """Phase-free canonical key used for deduplication."""
        return (self.x, self.z)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def coefficient(self) -> complex:
        return _I_POWERS[self.phase]

    def canonical(self) -> PauliString:
        return PauliString(self.n_qubits, self.x, self.z, 0)

    def dagger(self) -> PauliString:
        return PauliString(self.n_qubits, self.x, self.z, -self.phase)

    def commutes_with(self, other: PauliString) -> bool:
        _check_dims(self.n_qubits, other.n_qubits)
        return _popcount((self.x & other.z) ^ (self.z & other.x)) % 2 == 0

    def site_char(self, site: int) -> str:
        bit = self.n_qubits - site
        return _SITE_CHARS[((self.x >> bit) & 1, (self.z >> bit) & 1)]

    def word_label(self) -> str:
        """Dense label of the Hermitian word, e.g. ``"XIZ"`` (phase dropped)."""
        return "".join(self.site_char(q) for q in range(1, self.n_qubits + 1))

    def indexed_label(self) -> str:
        toks = [
            f"{self.site_char(q)}{q}"
            for q in range(1, self.n_qubits + 1)
            if self.site_char(q) != "I"
        ]
        return " ".join(toks) if toks else "I"

    def __str__(self) -> str:
        prefix = ("", "i", "-", "-i")[self.phase]
        return prefix + self.word_label()

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def to_dense(self) -> np.ndarray:
        return self.coefficient * word_matrix(self.n_qubits, self.x, self.z)


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatch(f"qubit counts differ: {a} vs {b}")


def product_phase(xa: int, za: int, xb: int, zb: int) -> int:
    """Phase exponent ``k`` with ``word(a) word(b) = i**k word(a^b)``."""
    xc, zc = xa ^ xb, za ^ zb
    return (
        _popcount(xa & za)
        + _popcount(xb & zb)
        - _popcount(xc & zc)
        + 2 * _popcount(za & xb)
    ) % 4


def multiply(a: PauliString, b: PauliString) -> PauliString:
    _check_dims(a.n_qubits, b.n_qubits)
    k = product_phase(a.x, a.z, b.x, b.z)
    return PauliString(a.n_qubits, a.x ^ b.x, a.z ^ b.z, a.phase + b.phase + k)


def commutator(a: PauliString, b: PauliString) -> PauliSum:
    """``[a, b]``: empty when the strings commute, else ``2 a b``."""
    _check_dims(a.n_qubits, b.n_qubits)
    if a.commutes_with(b):
        return PauliSum(a.n_qubits)
    p = multiply(a, b)
    return PauliSum(a.n_qubits, {p.key: 2 * p.coefficient})


def parse_pauli(label: str, n_qubits: int) -> PauliString:
    """Parse ``"ZIX"`` (dense) or ``"Z1 X3"`` (1-based indexed) labels."""
    if n_qubits < 1:
        raise PauliLabelError("n_qubits must be positive")
    text = label.strip()
    if not text:
        raise PauliLabelError("empty Pauli label")
    if not any(ch.isdigit() for ch in text):
        compact = text.replace(" ", "")
        if not _DENSE_RE.match(compact):
            bad = next(ch for ch in compact if ch not in "IXYZ")
            raise PauliLabelError(f"unknown character {bad!r} in label {label!r}")
        if len(compact) != n_qubits:
            raise PauliLabelError(
                f"dense label {label!r} has length {len(compact)}, expected {n_qubits}"
            )
        x = z = 0
        for q, ch in enumerate(compact, start=1):
            bx, bz = _CHAR_BITS[ch]
            bit = n_qubits - q
            x |= bx << bit
            z |= bz << bit
        return PauliString(n_qubits, x, z)

    x = z = 0
    seen: set[int] = set()
    for tok in text.split():
        m = _INDEXED_TOKEN.match(tok)
        if m is None:
            raise PauliLabelError(f"malformed token {tok!r} in label {label!r}")
        ch, site = m.group(1), int(m.group(2))
        if ch not in "XYZ":
            raise PauliLabelError(f"unknown character {ch!r} in label {label!r}")
        if not 1 <= site <= n_qubits:
            raise PauliLabelError(f"site {site} out of range 1..{n_qubits}")
        if site in seen:
            raise PauliLabelError(f"site {site} assigned twice in {label!r}")
        seen.add(site)
        bx, bz = _CHAR_BITS[ch]
        bit = n_qubits - site
        x |= bx << bit
        z |= bz << bit
    return PauliString(n_qubits, x, z)


_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def word_matrix(n_qubits: int, x: int, z: int) -> np.ndarray:
    """Dense ``2**n`` matrix of the Hermitian word (small n only)."""
    out = np.ones((1, 1), dtype=complex)
    for q in range(1, n_qubits + 1):
        bit = n_qubits - q
        out = np.kron(out, _SINGLE[_SITE_CHARS[((x >> bit) & 1, (z >> bit) & 1)]])
    return out


class PauliSum:
    """Linear combination of Hermitian Pauli words with complex coefficients.

    Terms are keyed by the canonical ``(x, z)`` pair; any phase of an input
    string is folded into its coefficient.  Instances are treated as immutable.
    """

    __slots__ = ("n_qubits", "_terms")

    def __init__(
        self,
        n_qubits: int,
        terms: Mapping[tuple[int, int], complex] | None = None,
        tol: float = PRUNE_TOL,
    ):
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        self.n_qubits = n_qubits
        self._terms: dict[tuple[int, int], complex] = {}
        for key, c in (terms or {}).items():
            c = complex(c)
            if abs(c) > tol:
                self._terms[key] = c

    @classmethod
    def from_strings(
        cls, items: Iterable[tuple[complex, PauliString]], n_qubits: int | None = None
    ) -> PauliSum:
        acc: dict[tuple[int, int], complex] = {}
        n = n_qubits
        for c, p in items:
            if n is None:
                n = p.n_qubits
            _check_dims(n, p.n_qubits)
            acc[p.key] = acc.get(p.key, 0) + complex(c) * p.coefficient
        if n is None:
            raise ValueError("n_qubits required for an empty sum")
        return cls(n, acc)

    @classmethod
    def from_labels(cls, items: Iterable[tuple[complex, str]], n_qubits: int) -> PauliSum:
        return cls.from_strings(
            ((c, parse_pauli(lbl, n_qubits)) for c, lbl in items), n_qubits
        )

    @classmethod
    def from_string(cls, p: PauliString, coeff: complex = 1.0) -> PauliSum:
        return cls(p.n_qubits, {p.key: coeff * p.coefficient})

    @property
    def terms(self) -> dict[tuple[int, int], complex]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[tuple[int, int], complex]]:
        return iter(self._terms.items())

    def strings(self) -> list[PauliString]:
        """Canonical (phase 0) strings in insertion order."""
        return [PauliString(self.n_qubits, x, z) for x, z in self._terms]

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __repr__(self) -> str:
        parts = [
            f"({c.real:g}{c.imag:+g}j)*{PauliString(self.n_qubits, x, z).word_label()}"
            for (x, z), c in self._terms.items()
        ]
        return f"PauliSum({' + '.join(parts) or '0'})"

    def add(self, other: PauliSum) -> PauliSum:
        _check_dims(self.n_qubits, other.n_qubits)
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0) + c
        return PauliSum(self.n_qubits, acc)

    def scale(self, c: complex) -> PauliSum:
        return PauliSum(self.n_qubits, {k: v * c for k, v in self._terms.items()})

    def prune(self, tol: float = PRUNE_TOL) -> PauliSum:
        if tol < 0:
            raise ValueError("prune tolerance must be nonnegative")
        return PauliSum(self.n_qubits, self._terms, tol=tol)

    __add__ = add

    def __neg__(self) -> PauliSum:
        return self.scale(-1)

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self.add(other.scale(-1))

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return self.multiply(other)
        return self.scale(other)

    __rmul__ = scale

    def multiply(self, other: PauliSum) -> PauliSum:
        _check_dims(self.n_qubits, other.n_qubits)
        acc: dict[tuple[int, int], complex] = {}
        for (xa, za), ca in self._terms.items():
            for (xb, zb), cb in other._terms.items():
                key = (xa ^ xb, za ^ zb)
                val = ca * cb * _I_POWERS[product_phase(xa, za, xb, zb)]
                acc[key] = acc.get(key, 0) + val
        return PauliSum(self.n_qubits, acc)

    def commutator(self, other: PauliSum) -> PauliSum:
        """Bilinear extension of the string commutator."""
        _check_dims(self.n_qubits, other.n_qubits)
        acc: dict[tuple[int, int], complex] = {}
        for (xa, za), ca in self._terms.items():
            for (xb, zb), cb in other._terms.items():
                if _popcount((xa & zb) ^ (za & xb)) % 2 == 0:
                    continue
                key = (xa ^ xb, za ^ zb)
                val = 2 * ca * cb * _I_POWERS[product_phase(xa, za, xb, zb)]
                acc[key] = acc.get(key, 0) + val
        return PauliSum(self.n_qubits, acc)

    def dagger(self) -> PauliSum:
        return PauliSum(self.n_qubits, {k: c.conjugate() for k, c in self._terms.items()})

    def is_hermitian(self, tol: float = PRUNE_TOL) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def to_dense(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for (x, z), c in self._terms.items():
            out += c * word_matrix(self.n_qubits, x, z)
        return out


def as_sum(op: PauliString | PauliSum) -> PauliSum:
    return op if isinstance(op, PauliSum) else PauliSum.from_string(op)
