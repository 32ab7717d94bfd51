"""Initial states for the moment expansion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BuildError, ConfigError

DENSE_LIMIT = 14
NORM_TOL = 1e-12


def _rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


@dataclass(frozen=True, eq=False)
class InitialState:
    """One of ``all_zeros``, ``product``, ``dense`` or ``layered_circuit``.

    ``sites`` holds an ``(n, 2)`` array of per-site amplitudes for product
    states; ``amplitudes`` a ``2**n`` vector for dense ones.  A layered circuit
    applies ``Rz(c) Ry(b) Rx(a)`` to each site of ``|0...0>`` (angles taken
    three per site) followed by the entangler, and is materialized densely.
    """

    n_qubits: int
    kind: str
    sites: np.ndarray | None = None
    amplitudes: np.ndarray | None = None
    angles: tuple[float, ...] = ()
    entangler: str = "cz_chain"

    @classmethod
    def all_zeros(cls, n_qubits: int) -> InitialState:
        return cls(n_qubits, "all_zeros")

    @classmethod
    def product(cls, sites: Sequence[Sequence[complex]]) -> InitialState:
        arr = np.asarray(sites, dtype=complex)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ConfigError("product state needs one 2-amplitude vector per site")
        norms = np.linalg.norm(arr, axis=1)
        if np.any(np.abs(norms - 1) > NORM_TOL):
            raise ConfigError("product state sites must be normalized")
        return cls(arr.shape[0], "product", sites=arr)

    @classmethod
    def dense(cls, amplitudes: Sequence[complex]) -> InitialState:
        vec = np.asarray(amplitudes, dtype=complex).ravel()
        n = int(round(np.log2(vec.size))) if vec.size else 0
        if vec.size < 2 or (1 << n) != vec.size:
            raise ConfigError("dense state length must be a power of two")
        if abs(np.linalg.norm(vec) - 1) > NORM_TOL:
            raise ConfigError("dense state must be normalized")
        return cls(n, "dense", amplitudes=vec)

    @classmethod
    def layered_circuit(
        cls, angles: Sequence[float], entangler: str = "cz_chain"
    ) -> InitialState:
        if len(angles) == 0 or len(angles) % 3:
            raise ConfigError("layered circuit needs three angles per site")
        if entangler not in ("cz_chain", "none"):
            raise ConfigError(f"unknown entangler {entangler!r}")
        return cls(len(angles) // 3, "layered_circuit", angles=tuple(map(float, angles)),
                   entangler=entangler)

    @classmethod
    def random(cls, n_qubits: int, seed: int) -> InitialState:
        """Dense state with i.i.d. complex Gaussian amplitudes, normalized."""
        rng = np.random.default_rng(seed)
        vec = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
        return cls.dense(vec / np.linalg.norm(vec))

    @property
    def is_product(self) -> bool:
        return self.kind in ("all_zeros", "product")

    def site_states(self) -> np.ndarray:
        if self.kind == "all_zeros":
            out = np.zeros((self.n_qubits, 2), dtype=complex)
            out[:, 0] = 1
            return out
        if self.kind == "product":
            return self.sites
        raise BuildError(f"{self.kind} state is not a product state")

    def to_dense(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        if self.n_qubits > limit:
            raise BuildError(f"{self.n_qubits} qubits exceed the dense limit of {limit}")
        if self.kind == "dense":
            return self.amplitudes.copy()
        if self.kind == "layered_circuit":
            return self._circuit_vector()
        vec = np.ones(1, dtype=complex)
        for site in self.site_states():
            vec = np.kron(vec, site)
        return vec

    def _circuit_vector(self) -> np.ndarray:
        n = self.n_qubits
        vec = np.ones(1, dtype=complex)
        for q in range(n):
            a, b, c = self.angles[3 * q : 3 * q + 3]
            site = _rz(c) @ _ry(b) @ _rx(a) @ np.array([1, 0], dtype=complex)
            vec = np.kron(vec, site)
        if self.entangler == "cz_chain" and n > 1:
            idx = np.arange(1 << n)
            bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
            sign = np.ones(1 << n)
            for q in range(n - 1):
                sign[(bits[q] & bits[q + 1]) == 1] *= -1
            vec = vec * sign
        return vec


# Random angles drawn for the IBM demo state.
DEMO_ANGLES = (2.846, 1.367, 3.172, 0.011, 0.148, 0.841)


def demo_state() -> InitialState:
    return InitialState.layered_circuit(DEMO_ANGLES)
