"""Reference propagators: exact dense evolution, Trotterization and VQS."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import BuildError, ConfigError, NumericalError
from .hamiltonian import TimeDependentHamiltonian, evaluate_drives
from .integrators import rk4_step, time_steps
from .pauli import PauliString, PauliSum, as_sum
from .states import DENSE_LIMIT


def _check_dense(n: int, limit: int = DENSE_LIMIT) -> None:
    if n > limit:
        raise BuildError(f"{n} qubits exceed the dense limit of {limit}")


def sparse_operator(op: PauliSum | PauliString) -> sp.csr_matrix:
    s = as_sum(op)
    n = s.n_qubits
    _check_dense(n)
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    out = sp.csr_matrix((dim, dim), dtype=complex)
    for (x, z), c in s.items():
        sign = 1 - 2 * (np.bitwise_count(idx & z) & 1).astype(float)
        phase = 1j ** ((x & z).bit_count() % 4)
        out = out + sp.csr_matrix((c * phase * sign, (idx ^ x, idx)), shape=(dim, dim))
    return out.tocsr()


def apply_string(p: PauliString, vec: np.ndarray) -> np.ndarray:
    """``p |vec>`` without building a matrix."""
    idx = np.arange(vec.size, dtype=np.int64)
    sign = 1 - 2 * (np.bitwise_count(idx & p.z) & 1).astype(float)
    out = np.empty_like(vec)
    out[idx ^ p.x] = sign * vec
    return p.coefficient * 1j ** ((p.x & p.z).bit_count() % 4) * out


def _channel_mats(h: TimeDependentHamiltonian) -> list[sp.csr_matrix]:
    _check_dense(h.n_qubits)
    return [sparse_operator(op) for op in h.operators]


def exact_evolve(
    h: TimeDependentHamiltonian,
    psi0: np.ndarray,
    grid: Sequence[float],
    max_dt: float = 1e-3,
) -> np.ndarray:
    """Dense RK4 solution of ``i d|psi>/dt = H(t)|psi>`` sampled on ``grid``."""
    mats = _channel_mats(h)
    psi = np.asarray(psi0, dtype=complex).copy()
    if psi.size != 1 << h.n_qubits:
        raise BuildError("initial vector does not match the Hamiltonian")

    def f(t, y):
        drives = evaluate_drives(h, t)
        out = np.zeros_like(y)
        for c, m in zip(drives, mats):
            if c != 0:
                out += c * (m @ y)
        return -1j * out

    grid = np.asarray(grid, dtype=float)
    out = np.empty((len(grid), psi.size), dtype=complex)
    t = grid[0]
    for k, tk in enumerate(grid):
        if tk < t - 1e-15:
            raise ValueError("grid must be nondecreasing")
        span = tk - t
        if span > 0:
            nsub = max(1, int(np.ceil(span / max_dt - 1e-9)))
            h_sub = span / nsub
            for i in range(nsub):
                psi = rk4_step(f, t + i * h_sub, psi, h_sub)
            t = tk
        out[k] = psi
    return out


def _hermitian_propagator(m: np.ndarray):
    w, v = np.linalg.eigh(m)
    return lambda s: (v * np.exp(-1j * s * w)) @ v.conj().T


def trotter_evolve(
    h: TimeDependentHamiltonian,
    psi0: np.ndarray,
    steps: int,
    horizon: float,
    t0: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """First-order product formula with drives sampled at each step's end time.

    Step ``i`` applies ``exp(-i dt f_k(t_i) H_k)`` channel by channel in order,
    where ``dt = horizon / steps`` and ``t_i = t0 + i dt``.  Returns the times
    ``t0, t_1, ..., t_N`` and the states there.
    """
    if steps <= 0:
        raise ConfigError("Trotter step count must be positive")
    _check_dense(h.n_qubits)
    props = [_hermitian_propagator(op.to_dense()) for op in h.operators]
    dt = horizon / steps
    psi = np.asarray(psi0, dtype=complex).copy()
    times = t0 + dt * np.arange(steps + 1)
    out = np.empty((steps + 1, psi.size), dtype=complex)
    out[0] = psi
    for i in range(1, steps + 1):
        drives = evaluate_drives(h, times[i])
        for c, prop in zip(drives, props):
            psi = prop(dt * c) @ psi
        out[i] = psi
    return times, out


def expectation_trace(states: np.ndarray, op: PauliSum | PauliString) -> np.ndarray:
    m = sparse_operator(op)
    return np.real(np.einsum("ti,ti->t", states.conj(), (m @ states.T).T))


# -- variational quantum simulation -------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing shrinkage of measured ``M`` and ``V`` entries."""

    lam: float = 0.0
    depth_M: int = 2
    depth_V: int = 3

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError("depolarizing parameter must lie in [0, 1]")
        if self.depth_M < 0 or self.depth_V < 0:
            raise ConfigError("circuit depths must be nonnegative")

    @property
    def shrink_M(self) -> float:
        return (1 - self.lam) ** self.depth_M

    @property
    def shrink_V(self) -> float:
        return (1 - self.lam) ** self.depth_V


@dataclass
class VQSState:
    theta: np.ndarray
    generators: tuple[PauliString, ...]

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.generators = tuple(self.generators)
        if self.theta.shape != (len(self.generators),):
            raise ConfigError("one parameter per generator is required")
        for g in self.generators:
            if not isinstance(g, PauliString):
                raise ConfigError("VQS generators must be Pauli strings")


def _rotate(g: PauliString, theta: float, vec: np.ndarray) -> np.ndarray:
    # exp(-i theta G) = cos(theta) - i sin(theta) G for a Pauli word G
    return np.cos(theta) * vec - 1j * np.sin(theta) * apply_string(g, vec)


def vqs_state(vqs: VQSState, phi0: np.ndarray) -> np.ndarray:
    """``exp(-i th_1 G_1) ... exp(-i th_m G_m) |phi0>``; ``G_m`` acts first."""
    vec = np.asarray(phi0, dtype=complex)
    for g, th in reversed(list(zip(vqs.generators, vqs.theta))):
        vec = _rotate(g, th, vec)
    return vec


def vqs_tangents(vqs: VQSState, phi0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """State and the derivative vectors ``d psi / d theta_k`` (rows)."""
    gens, th = vqs.generators, vqs.theta
    m = len(gens)
    suffix = [None] * (m + 1)
    suffix[m] = np.asarray(phi0, dtype=complex)
    for k in range(m - 1, -1, -1):
        suffix[k] = _rotate(gens[k], th[k], suffix[k + 1])
    derivs = np.empty((m, suffix[m].size), dtype=complex)
    for k in range(m):
        vec = -1j * apply_string(gens[k], suffix[k])
        for l in range(k - 1, -1, -1):
            vec = _rotate(gens[l], th[l], vec)
        derivs[k] = vec
    return suffix[0], derivs


def _truncated_solve(mat: np.ndarray, rhs: np.ndarray, svd_tol: float) -> np.ndarray:
    u, s, vh = np.linalg.svd(mat)
    if s.size == 0 or s[0] == 0:
        raise NumericalError("McLachlan matrix vanished")
    keep = s > svd_tol * s[0]
    return vh[keep].conj().T @ ((u[:, keep].conj().T @ rhs) / s[keep])


@dataclass
class VQSResult:
    times: np.ndarray
    thetas: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    states: np.ndarray | None = None


def vqs_run(
    generators: Sequence[PauliString],
    h: TimeDependentHamiltonian,
    phi0: np.ndarray,
    t0: float,
    t1: float,
    dt: float,
    noise: NoiseModel = NoiseModel(),
    svd_tol: float = 1e-6,
    observables: dict[str, PauliSum | PauliString] | None = None,
    record_stride: int = 1,
    keep_states: bool = False,
) -> VQSResult:
    """McLachlan VQS ``M theta' = V`` integrated with RK4.

    ``M_kl = Re<d_k psi|d_l psi>`` and ``V_k = Im<d_k psi|H(t)|psi>``; under
    ``noise`` both are scaled by ``(1 - lam)**depth`` before the solve.
    """
    gens = tuple(generators)
    for g in gens:
        if not isinstance(g, PauliString):
            raise ConfigError("VQS generators must be Pauli strings")
    mats = _channel_mats(h)
    phi0 = np.asarray(phi0, dtype=complex)
    sm, sv = noise.shrink_M, noise.shrink_V

    def theta_dot(t, theta):
        psi, d = vqs_tangents(VQSState(theta, gens), phi0)
        drives = evaluate_drives(h, t)
        hpsi = sum(c * (m @ psi) for c, m in zip(drives, mats))
        M = np.real(d.conj() @ d.T) * sm
        V = np.imag(d.conj() @ hpsi) * sv
        return _truncated_solve(M, V, svd_tol)

    obs_mats = {k: sparse_operator(o) for k, o in (observables or {}).items()}
    steps = time_steps(t0, t1, dt)
    theta = np.zeros(len(gens))
    rec_t, rec_th, rec_psi = [t0], [theta.copy()], [vqs_state(VQSState(theta, gens), phi0)]
    for k, (ts, hs) in enumerate(steps, start=1):
        theta = rk4_step(theta_dot, ts, theta, hs)
        if not np.all(np.isfinite(theta)):
            raise NumericalError(f"VQS parameters became non-finite at t={ts + hs:g}")
        if k % record_stride == 0 or k == len(steps):
            rec_t.append(ts + hs)
            rec_th.append(theta.copy())
            rec_psi.append(vqs_state(VQSState(theta, gens), phi0))
    psis = np.array(rec_psi)
    obs = {
        k: np.real(np.einsum("ti,ti->t", psis.conj(), (m @ psis.T).T))
        for k, m in obs_mats.items()
    }
    return VQSResult(np.array(rec_t), np.array(rec_th), obs, psis if keep_states else None)


def zero_crossings(trace: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Linearly interpolated times where ``trace`` changes sign."""
    y = np.asarray(trace, dtype=float)
    t = np.asarray(times, dtype=float)
    out = []
    for i in range(len(y) - 1):
        a, b = y[i], y[i + 1]
        if a == 0 and (i == 0 or y[i - 1] != 0):
            out.append(t[i])
        elif a * b < 0:
            out.append(t[i] + (t[i + 1] - t[i]) * a / (a - b))
    return np.array(out)


def lag_metric(trace_a: np.ndarray, trace_b: np.ndarray, times: np.ndarray) -> float:
    """Ratio of mean zero-crossing spacing of ``trace_a`` to that of ``trace_b``.

    Values above one mean ``trace_a`` oscillates more slowly.
    """
    ca, cb = zero_crossings(trace_a, times), zero_crossings(trace_b, times)
    if len(ca) < 2 or len(cb) < 2:
        raise ValueError("lag metric needs at least two zero crossings per trace")
    return float(np.mean(np.diff(ca)) / np.mean(np.diff(cb)))


# -- open systems -------------------------------------------------------------


def exact_lindblad_evolve(
    h: TimeDependentHamiltonian,
    jumps: Sequence[tuple[PauliSum | PauliString, float]],
    rho0: np.ndarray,
    grid: Sequence[float],
    max_dt: float = 1e-4,
) -> np.ndarray:
    """Dense RK4 solution of the Lindblad master equation on ``grid``."""
    _check_dense(h.n_qubits, 8)
    hs = [op.to_dense() for op in h.operators]
    ls = [(as_sum(L).to_dense(), float(g)) for L, g in jumps]
    lds = [(L, L.conj().T, L.conj().T @ L, g) for L, g in ls]

    def f(t, rho):
        drives = evaluate_drives(h, t)
        H = sum(c * m for c, m in zip(drives, hs))
        out = -1j * (H @ rho - rho @ H)
        for L, Ld, LdL, g in lds:
            out += g * (L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL))
        return out

    rho = np.asarray(rho0, dtype=complex).copy()
    grid = np.asarray(grid, dtype=float)
    out = np.empty((len(grid),) + rho.shape, dtype=complex)
    t = grid[0]
    for k, tk in enumerate(grid):
        span = tk - t
        if span > 0:
            nsub = max(1, int(np.ceil(span / max_dt - 1e-9)))
            h_sub = span / nsub
            for i in range(nsub):
                rho = rk4_step(f, t + i * h_sub, rho, h_sub)
            t = tk
        out[k] = rho
    return out
