"""JSON run configuration: schema, validation and construction of run objects."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .baselines import NoiseModel
from .errors import ConfigError, PauliLabelError
from .evolution import EvolutionConfig, QasProblem
from .hamiltonian import DriveFunction, TimeDependentHamiltonian, random_pauli_hamiltonian
from .integrators import time_steps
from .lindblad import LindbladModel
from .overlaps import DEFAULT_SHOTS, BackendSpec
from .pauli import PauliString, PauliSum, parse_pauli
from .states import InitialState

SCHEMA_VERSION = 1
NOISELESS_SVD_TOL = 1e-8
SAMPLED_SVD_TOL = 1e-2

Complex = Union[float, tuple[float, float]]


def _c(v: Complex) -> complex:
    return complex(*v) if isinstance(v, tuple) else complex(v)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ConstantDrive(_Strict):
    type: Literal["constant"] = "constant"
    value: float = 1.0


class SinusoidDrive(_Strict):
    type: Literal["sinusoid"]
    amplitude: float = 1.0
    omega: float
    phase: float = 0.0


class SinusoidPart(_Strict):
    amplitude: float = 1.0
    omega: float
    phase: float = 0.0


class SumDrive(_Strict):
    type: Literal["sum"]
    value: float = 0.0
    parts: list[SinusoidPart] = Field(min_length=1)


Drive = Annotated[Union[ConstantDrive, SinusoidDrive, SumDrive], Field(discriminator="type")]


class Term(_Strict):
    coeff: Complex = 1.0
    label: str


class ChannelSpec(_Strict):
    drive: Drive = ConstantDrive()
    pauli_terms: list[Term] = Field(min_length=1)


class RandomStrings(_Strict):
    r: int = Field(ge=1)
    seed: int | None = Field(default=None, ge=0)
    omega: float = math.pi
    phases: list[float] = Field(default_factory=lambda: [0.0, math.pi / 2], min_length=1)


class HamiltonianSpec(_Strict):
    channels: list[ChannelSpec] | None = None
    random_strings: RandomStrings | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.channels is None) == (self.random_strings is None):
            raise ValueError("give exactly one of 'channels' or 'random_strings'")
        return self


class ZerosState(_Strict):
    type: Literal["all_zeros"] = "all_zeros"


class ProductStateSpec(_Strict):
    type: Literal["product"]
    sites: list[tuple[Complex, Complex]] = Field(min_length=1)


class DenseStateSpec(_Strict):
    type: Literal["dense"]
    amplitudes: list[Complex] = Field(min_length=2)


class LayeredStateSpec(_Strict):
    type: Literal["layered_circuit"]
    angles: list[float] = Field(min_length=3)
    entangler: Literal["cz_chain", "none"] = "cz_chain"


class RandomStateSpec(_Strict):
    type: Literal["random"]
    seed: int | None = Field(default=None, ge=0)


StateSpec = Annotated[
    Union[ZerosState, ProductStateSpec, DenseStateSpec, LayeredStateSpec, RandomStateSpec],
    Field(discriminator="type"),
]


class AnsatzSpec(_Strict):
    K: int = Field(ge=0)
    closure_cap: int = Field(default=4096, ge=1)
    basis_cap: int = Field(default=8192, ge=1)


class BackendConfig(_Strict):
    kind: Literal["dense", "product", "sampled"] = "dense"
    shots: int = Field(default=DEFAULT_SHOTS, ge=1)
    seed: int | None = Field(default=None, ge=0)


class EvolutionSpec(_Strict):
    t0: float = 0.0
    t1: float
    dt: float
    integrator: Literal["euler", "rk4"] = "rk4"
    svd_tol: float | None = None
    renormalize: bool = True
    record_stride: int = Field(default=1, ge=1)


class TrotterSpec(_Strict):
    steps: int = Field(ge=1)


class VqsSpec(_Strict):
    generators: list[str] = Field(min_length=1)
    lam: float = Field(default=0.0, ge=0.0, le=1.0, alias="lambda")
    depth_m: int = Field(default=2, ge=0)
    depth_v: int = Field(default=3, ge=0)
    dt: float | None = None
    svd_tol: float = 1e-6

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


class BaselinesSpec(_Strict):
    exact: bool = False
    reference_dt: float = Field(default=1e-3, gt=0)
    trotter: TrotterSpec | None = None
    vqs: VqsSpec | None = None


class JumpSpec(_Strict):
    """A jump operator given either as one ``label`` or as ``pauli_terms``."""

    label: str | None = None
    pauli_terms: list[Term] | None = Field(default=None, min_length=1)
    gamma: float = Field(ge=0.0)

    @model_validator(mode="after")
    def _one_form(self):
        if (self.label is None) == (self.pauli_terms is None):
            raise ValueError("give exactly one of 'label' or 'pauli_terms'")
        return self

    def term_list(self) -> list[Term]:
        return self.pauli_terms if self.pauli_terms is not None else [Term(label=self.label)]


class LindbladSpec(_Strict):
    jumps: list[JumpSpec] = Field(default_factory=list)


class OutputSpec(_Strict):
    path: str = "tdqas_out"
    format: Literal["csv"] = "csv"


class RunSpec(_Strict):
    schema_version: Literal[1]
    n_qubits: int = Field(ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    hamiltonian: HamiltonianSpec
    initial_state: StateSpec = ZerosState()
    ansatz: AnsatzSpec
    backend: BackendConfig = BackendConfig()
    evolution: EvolutionSpec
    observables: list[str] = Field(default_factory=list)
    survival: bool = False
    baselines: BaselinesSpec = BaselinesSpec()
    lindblad: LindbladSpec | None = None
    output: OutputSpec = OutputSpec()

    @model_validator(mode="after")
    def _semantics(self):
        problems = semantic_problems(self)
        if problems:
            raise ValueError("; ".join(problems))
        return self


def _label_problem(label: str, n: int, where: str) -> str | None:
    try:
        parse_pauli(label, n)
    except PauliLabelError as exc:
        return f"{where}: {exc}"
    return None


def semantic_problems(spec: RunSpec) -> list[str]:
    """Every cross-field problem of ``spec``; an empty list means it is usable."""
    n = spec.n_qubits
    out: list[str] = []
    ev = spec.evolution
    if not ev.dt > 0:
        out.append("evolution.dt must be positive")
    elif ev.dt > ev.t1 - ev.t0 + 1e-12:
        out.append("evolution.dt must not exceed t1 - t0")
    if ev.svd_tol is not None and not 0 < ev.svd_tol < 1:
        out.append("evolution.svd_tol must lie in (0, 1)")
    for i, ch in enumerate(spec.hamiltonian.channels or []):
        for j, term in enumerate(ch.pauli_terms):
            p = _label_problem(term.label, n, f"hamiltonian.channels[{i}].pauli_terms[{j}]")
            if p:
                out.append(p)
            elif _c(term.coeff).imag != 0:
                out.append(f"hamiltonian.channels[{i}].pauli_terms[{j}]: coefficient must be real")
    for i, label in enumerate(spec.observables):
        p = _label_problem(label, n, f"observables[{i}]")
        if p:
            out.append(p)
    if len(set(spec.observables)) != len(spec.observables):
        out.append("observables must be distinct")
    st = spec.initial_state
    sizes = {
        "product": lambda: len(st.sites),
        "dense": lambda: math.log2(len(st.amplitudes)),
        "layered_circuit": lambda: len(st.angles) / 3,
    }
    if st.type in sizes and sizes[st.type]() != n:
        out.append(f"initial_state does not describe {n} qubits")
    if spec.backend.kind == "product" and st.type not in ("all_zeros", "product"):
        out.append("the product backend needs an all_zeros or product initial state")
    bl = spec.baselines
    if bl.vqs is not None:
        for i, g in enumerate(bl.vqs.generators):
            p = _label_problem(g, n, f"baselines.vqs.generators[{i}]")
            if p:
                out.append(p)
        if bl.vqs.dt is not None and not bl.vqs.dt > 0:
            out.append("baselines.vqs.dt must be positive")
        if not 0 < bl.vqs.svd_tol < 1:
            out.append("baselines.vqs.svd_tol must lie in (0, 1)")
    if spec.lindblad is not None:
        for i, jump in enumerate(spec.lindblad.jumps):
            for j, term in enumerate(jump.term_list()):
                p = _label_problem(term.label, n, f"lindblad.jumps[{i}].pauli_terms[{j}]")
                if p:
                    out.append(p)
    return out


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "invalid configuration:\n  " + "\n  ".join(lines)


def parse_config(text: str, source: str = "<config>") -> RunSpec:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return RunSpec.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {_format_validation(exc)}") from exc


def load_config(path: str | Path) -> RunSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, str(path))


def dump_config(spec: RunSpec) -> str:
    """Canonical JSON with every default filled in; ``parse_config`` inverts it."""
    return json.dumps(spec.model_dump(mode="json", by_alias=True), indent=2, sort_keys=True)


def with_seed(spec: RunSpec, seed: int) -> RunSpec:
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return spec.model_copy(update={"seed": seed})


# -- construction ---------------------------------------------------------------


def _terms_sum(terms: list[Term], n: int) -> PauliSum:
    return PauliSum.from_labels([(_c(t.coeff), t.label) for t in terms], n)


def _drive(d) -> DriveFunction:
    if d.type == "constant":
        return DriveFunction.constant(d.value)
    if d.type == "sinusoid":
        return DriveFunction.sinusoid(d.amplitude, d.omega, d.phase)
    parts = [DriveFunction.sinusoid(p.amplitude, p.omega, p.phase) for p in d.parts]
    return DriveFunction.sum_of([DriveFunction.constant(d.value), *parts])


def build_hamiltonian(spec: RunSpec) -> TimeDependentHamiltonian:
    n = spec.n_qubits
    hs = spec.hamiltonian
    if hs.random_strings is not None:
        rs = hs.random_strings
        seed = spec.seed if rs.seed is None else rs.seed
        return random_pauli_hamiltonian(n, rs.r, seed, rs.omega, tuple(rs.phases))
    return TimeDependentHamiltonian.from_pairs(
        n, [(_drive(ch.drive), _terms_sum(ch.pauli_terms, n)) for ch in hs.channels]
    )


def build_state(spec: RunSpec) -> InitialState:
    st = spec.initial_state
    n = spec.n_qubits
    if st.type == "all_zeros":
        return InitialState.all_zeros(n)
    if st.type == "product":
        return InitialState.product([[_c(a), _c(b)] for a, b in st.sites])
    if st.type == "dense":
        return InitialState.dense([_c(a) for a in st.amplitudes])
    if st.type == "layered_circuit":
        return InitialState.layered_circuit(st.angles, st.entangler)
    return InitialState.random(n, spec.seed if st.seed is None else st.seed)


def observables(spec: RunSpec) -> dict[str, PauliSum]:
    n = spec.n_qubits
    return {label: PauliSum.from_labels([(1.0, label)], n) for label in spec.observables}


def resolved_svd_tol(spec: RunSpec) -> float:
    if spec.evolution.svd_tol is not None:
        return spec.evolution.svd_tol
    return SAMPLED_SVD_TOL if spec.backend.kind == "sampled" else NOISELESS_SVD_TOL


def build_problem(spec: RunSpec, h: TimeDependentHamiltonian | None = None) -> QasProblem:
    ev = spec.evolution
    b = spec.backend
    return QasProblem(
        h=h if h is not None else build_hamiltonian(spec),
        state=build_state(spec),
        K=spec.ansatz.K,
        evolution=EvolutionConfig(
            ev.t0, ev.t1, ev.dt, ev.integrator, resolved_svd_tol(spec), ev.renormalize,
            ev.record_stride,
        ),
        observables=observables(spec),
        backend=BackendSpec(b.kind, b.shots, spec.seed if b.seed is None else b.seed),
        closure_cap=spec.ansatz.closure_cap,
        basis_cap=spec.ansatz.basis_cap,
        reference=spec.baselines.exact,
        survival=spec.survival,
        reference_dt=spec.baselines.reference_dt,
    )


def build_lindblad_model(spec: RunSpec, h: TimeDependentHamiltonian) -> LindbladModel:
    if spec.lindblad is None:
        raise ConfigError("the configuration has no 'lindblad' section")
    n = spec.n_qubits
    jumps = tuple((_terms_sum(j.term_list(), n), j.gamma) for j in spec.lindblad.jumps)
    return LindbladModel(h, jumps)


def vqs_generators(spec: RunSpec) -> list[PauliString]:
    out = []
    for label in spec.baselines.vqs.generators:
        p = parse_pauli(label, spec.n_qubits)
        if p.phase:
            raise ConfigError(f"VQS generator {label!r} must be a Hermitian Pauli word")
        out.append(p)
    return out


def vqs_noise(spec: RunSpec) -> NoiseModel:
    v = spec.baselines.vqs
    return NoiseModel(v.lam, v.depth_m, v.depth_v)


def record_grid(spec: RunSpec) -> np.ndarray:
    """Times at which ``run_closed`` records for this spec."""
    ev = spec.evolution
    steps = time_steps(ev.t0, ev.t1, ev.dt)
    idx = sorted(set(range(0, len(steps) + 1, ev.record_stride)) | {len(steps)})
    ends = [ev.t0] + [ts + hs for ts, hs in steps]
    return np.array([ends[i] for i in idx])
