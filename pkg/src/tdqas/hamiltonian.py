"""Time-dependent Hamiltonians ``H(t) = sum_k f_k(t) H_k``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BuildError, DimensionMismatch, NumericalError
from .pauli import PauliString, PauliSum


@dataclass(frozen=True)
class DriveFunction:
    """Scalar drive from a closed family: a constant or a sum of sinusoids.

    A sinusoid part ``(A, w, phi)`` evaluates to ``A * sin(w t + phi)``.
    """

    kind: str = "constant"
    value: float = 1.0
    parts: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid", "sum"):
            raise ValueError(f"unknown drive kind {self.kind!r}")
        if self.kind == "sinusoid" and len(self.parts) != 1:
            raise ValueError("a sinusoid drive has exactly one part")

    @classmethod
    def constant(cls, value: float = 1.0) -> DriveFunction:
        return cls("constant", float(value))

    @classmethod
    def sinusoid(cls, amplitude: float, omega: float, phase: float = 0.0) -> DriveFunction:
        return cls("sinusoid", 0.0, ((float(amplitude), float(omega), float(phase)),))

    @classmethod
    def sum_of(cls, drives: Sequence[DriveFunction]) -> DriveFunction:
        parts: list[tuple[float, float, float]] = []
        offset = 0.0
        for d in drives:
            if d.kind == "constant":
                offset += d.value
            parts.extend(d.parts)
        return cls("sum", offset, tuple(parts))

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.value
        total = self.value if self.kind == "sum" else 0.0
        for amp, omega, phase in self.parts:
            total += amp * math.sin(omega * t + phase)
        return total


@dataclass(frozen=True)
class Channel:
    drive: DriveFunction
    operator: PauliSum


@dataclass(frozen=True)
class TimeDependentHamiltonian:
    n_qubits: int
    channels: tuple[Channel, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        for ch in self.channels:
            if ch.operator.n_qubits != self.n_qubits:
                raise DimensionMismatch(
                    f"channel acts on {ch.operator.n_qubits} qubits, expected {self.n_qubits}"
                )

    @classmethod
    def from_pairs(
        cls, n_qubits: int, pairs: Sequence[tuple[DriveFunction, PauliSum]]
    ) -> TimeDependentHamiltonian:
        return cls(n_qubits, tuple(Channel(d, op) for d, op in pairs))

    def __len__(self) -> int:
        return len(self.channels)

    @property
    def operators(self) -> list[PauliSum]:
        return [ch.operator for ch in self.channels]

    def strings(self) -> list[PauliString]:
        """Distinct canonical strings over all channels, in first-seen order."""
        seen: dict[tuple[int, int], PauliString] = {}
        for ch in self.channels:
            for p in ch.operator.strings():
                seen.setdefault(p.key, p)
        return list(seen.values())

    def require_hermitian(self) -> None:
        if not hermiticity_check(self):
            raise BuildError("Hamiltonian has a non-Hermitian channel operator")


def evaluate_drives(h: TimeDependentHamiltonian, t: float) -> np.ndarray:
    if not math.isfinite(t):
        raise NumericalError(f"non-finite time {t!r}")
    return np.array([ch.drive(t) for ch in h.channels], dtype=float)


def hermiticity_check(h: TimeDependentHamiltonian) -> bool:
    return all(ch.operator.is_hermitian() for ch in h.channels)


# Example models: small driven chains and a random-string family.


def _sum(n: int, labels: Sequence[str], coeff: float = 1.0) -> PauliSum:
    return PauliSum.from_labels([(coeff, lbl) for lbl in labels], n)


def one_qubit_example(omega: float = 2 * math.pi) -> TimeDependentHamiltonian:
    """``Z + sin(omega t) X``."""
    return TimeDependentHamiltonian.from_pairs(
        1,
        [
            (DriveFunction.constant(1.0), _sum(1, ["Z"])),
            (DriveFunction.sinusoid(1.0, omega), _sum(1, ["X"])),
        ],
    )


def three_qubit_example(omega: float = 2 * math.pi) -> TimeDependentHamiltonian:
    """``(Z1 Z2 + Z2 Z3) + sin(omega t) X2``."""
    return TimeDependentHamiltonian.from_pairs(
        3,
        [
            (DriveFunction.constant(1.0), _sum(3, ["Z1 Z2", "Z2 Z3"])),
            (DriveFunction.sinusoid(1.0, omega), _sum(3, ["X2"])),
        ],
    )


def two_qubit_demo(omega: float = 2 * math.pi) -> TimeDependentHamiltonian:
    """``X1 X2 + sin(omega t) Y2``."""
    return TimeDependentHamiltonian.from_pairs(
        2,
        [
            (DriveFunction.constant(1.0), _sum(2, ["X1 X2"])),
            (DriveFunction.sinusoid(1.0, omega), _sum(2, ["Y2"])),
        ],
    )


def ising_three_body_example() -> TimeDependentHamiltonian:
    """11-qubit open Ising chain plus a driven ``X5 Y6 X7`` term.

    The drive is ``sin(2 pi t) + sin(4 pi t) / 2``.
    """
    n = 11
    static = _sum(n, [f"Z{i} Z{i + 1}" for i in range(1, n)])
    drive = DriveFunction.sum_of(
        [DriveFunction.sinusoid(1.0, 2 * math.pi), DriveFunction.sinusoid(0.5, 4 * math.pi)]
    )
    return TimeDependentHamiltonian.from_pairs(
        n,
        [(DriveFunction.constant(1.0), static), (drive, _sum(n, ["X5 Y6 X7"]))],
    )


def zxz_chain_example(periodic: bool = False) -> TimeDependentHamiltonian:
    """7-qubit ``sum_i Z_i X_{i+1} Z_{i+2} + sin(2 pi t) X3 Y4 X5``.

    With ``periodic=False`` only the terms that fit on the chain are kept.
    """
    n = 7
    labels = []
    for i in range(1, n + 1):
        sites = [i, i + 1, i + 2]
        if periodic:
            sites = [(s - 1) % n + 1 for s in sites]
        elif sites[-1] > n:
            continue
        labels.append(" ".join(f"{c}{s}" for c, s in zip("ZXZ", sites)))
    return TimeDependentHamiltonian.from_pairs(
        n,
        [
            (DriveFunction.constant(1.0), _sum(n, labels)),
            (DriveFunction.sinusoid(1.0, 2 * math.pi), _sum(n, ["X3 Y4 X5"])),
        ],
    )


def random_pauli_hamiltonian(
    n_qubits: int,
    n_strings: int,
    seed: int,
    omega: float = math.pi,
    phase_choices: Sequence[float] = (0.0, math.pi / 2),
) -> TimeDependentHamiltonian:
    """``sum_i sin(omega t + phi_i) P_i`` with uniformly random strings ``P_i``.

    Each site of each string is drawn uniformly from ``{I, X, Y, Z}`` and each
    ``phi_i`` uniformly from ``phase_choices``.  Identity draws are rejected.
    """
    rng = np.random.default_rng(seed)
    channels = []
    seen: set[tuple[int, int]] = set()
    while len(channels) < n_strings:
        bits = rng.integers(0, 4, size=n_qubits)
        xs = np.packbits((bits & 1).astype(np.uint8)[::-1], bitorder="little")
        zs = np.packbits(((bits >> 1) & 1).astype(np.uint8)[::-1], bitorder="little")
        x = int.from_bytes(xs.tobytes(), "little")
        z = int.from_bytes(zs.tobytes(), "little")
        if (x, z) == (0, 0) or (x, z) in seen:
            continue
        seen.add((x, z))
        phi = float(phase_choices[int(rng.integers(0, len(phase_choices)))])
        p = PauliString(n_qubits, x, z)
        channels.append((DriveFunction.sinusoid(1.0, omega, phi), PauliSum.from_string(p)))
    return TimeDependentHamiltonian.from_pairs(n_qubits, channels)


__all__ = [
    "Channel",
    "DriveFunction",
    "TimeDependentHamiltonian",
    "evaluate_drives",
    "hermiticity_check",
    "one_qubit_example",
    "random_pauli_hamiltonian",
    "three_qubit_example",
    "two_qubit_demo",
    "ising_three_body_example",
    "zxz_chain_example",
]
