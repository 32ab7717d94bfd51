"""Reference implementations that share no code with the package.

Dense matrices come from explicit Kronecker products of 2x2 Paulis built from
text labels, and time evolution uses scipy's adaptive DOP853 integrator.
"""

from __future__ import annotations

import re

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_word(word: str) -> np.ndarray:
    """``"XIZ"`` -> X (x) I (x) Z, site 1 leftmost."""
    out = np.ones((1, 1), dtype=complex)
    for ch in word:
        out = np.kron(out, PAULI[ch])
    return out


def sparse_word(word: str) -> sp.csr_matrix:
    """Same as ``dense_word`` but with sparse Kronecker products, for n > 10."""
    out = sp.identity(1, dtype=complex, format="csr")
    for ch in word:
        out = sp.kron(out, sp.csr_matrix(PAULI[ch]), format="csr")
    return out


def indexed_to_word(label: str, n: int) -> str:
    chars = ["I"] * n
    for tok in label.split():
        m = re.fullmatch(r"([XYZ])(\d+)", tok)
        chars[int(m.group(2)) - 1] = m.group(1)
    return "".join(chars)


def dense_label(label: str, n: int) -> np.ndarray:
    return dense_word(indexed_to_word(label, n) if any(c.isdigit() for c in label) else label)


def dense_sum(terms, n: int) -> np.ndarray:
    return sum(c * dense_label(lbl, n) for c, lbl in terms)


def rotation(axis: str, theta: float) -> np.ndarray:
    return np.cos(theta / 2) * PAULI["I"] - 1j * np.sin(theta / 2) * PAULI[axis]


def circuit_state(angles) -> np.ndarray:
    """Per-site Rz Ry Rx on |0>, then CZ on every neighbouring pair."""
    n = len(angles) // 3
    vec = np.ones(1, dtype=complex)
    for q in range(n):
        a, b, c = angles[3 * q : 3 * q + 3]
        site = rotation("Z", c) @ rotation("Y", b) @ rotation("X", a) @ np.array([1, 0])
        vec = np.kron(vec, site)
    for q in range(n - 1):
        # CZ phase is -1 only when both sites are 1
        both = np.ones(1)
        for s in range(n):
            both = np.kron(both, np.array([0, 1]) if s in (q, q + 1) else np.ones(2))
        vec = vec * np.where(both == 1, -1, 1)
    return vec


def schrodinger(hfun, psi0, times, rtol=1e-12, atol=1e-12) -> np.ndarray:
    """States at ``times`` for ``i psi' = H(t) psi`` with ``hfun(t)`` dense."""
    psi0 = np.asarray(psi0, dtype=complex)
    sol = solve_ivp(
        lambda t, y: -1j * (hfun(t) @ y), (times[0], times[-1]), psi0,
        t_eval=times, method="DOP853", rtol=rtol, atol=atol,
    )
    return sol.y.T


def lindblad(hfun, jumps, rho0, times, rtol=1e-11, atol=1e-12) -> np.ndarray:
    """Density matrices at ``times``; ``jumps`` is a list of (dense L, rate)."""
    d = rho0.shape[0]

    def f(t, y):
        rho = y.reshape(d, d)
        H = hfun(t)
        out = -1j * (H @ rho - rho @ H)
        for L, g in jumps:
            LdL = L.conj().T @ L
            out = out + g * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL))
        return out.ravel()

    sol = solve_ivp(f, (times[0], times[-1]), rho0.astype(complex).ravel(), t_eval=times,
                    method="DOP853", rtol=rtol, atol=atol)
    return sol.y.T.reshape(len(times), d, d)


def expval(states: np.ndarray, op: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("ti,ij,tj->t", states.conj(), op, states))


def one_qubit_h(t):
    return PAULI["Z"] + np.sin(2 * np.pi * t) * PAULI["X"]


def three_qubit_h(omega):
    static = dense_word("ZZI") + dense_word("IZZ")
    drive = dense_word("IXI")
    return lambda t: static + np.sin(omega * t) * drive


def demo_h(t):
    return dense_word("XX") + np.sin(2 * np.pi * t) * dense_word("IY")


def ising_h(n=11):
    static = sum(sparse_word(indexed_to_word(f"Z{i} Z{i + 1}", n)) for i in range(1, n))
    drive = sparse_word(indexed_to_word("X5 Y6 X7", n))
    return lambda t: static + (np.sin(2 * np.pi * t) + 0.5 * np.sin(4 * np.pi * t)) * drive


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))
