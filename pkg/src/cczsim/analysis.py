"""Gate extraction, fidelity scoring, feasibility margins and the 25-gate oracle."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .dynamics import EvolutionMode
from .hilbert import CompositeSpace
from .protocol import (
    ProtocolConfig,
    compile_ccz_schedule,
    run_schedule,
    run_schedule_density,
    total_operation_time,
)

CCZ = np.diag([1, 1, 1, 1, 1, 1, 1, -1]).astype(complex)
MARGIN_LIMIT = 0.1


@dataclass(frozen=True)
class FidelityReport:
    process_fidelity: float
    avg_gate_fidelity: float
    leakage: float
    max_elementwise_error: float

    @property
    def infidelity(self) -> float:
        return 1.0 - self.avg_gate_fidelity


def extract_gate(cfg: ProtocolConfig) -> np.ndarray:
    """8x8 matrix of the realized gate on the logical ⊗ vacuum subspace.

    Column ``k`` holds the projected output for logical input ``k``; norm lost
    from the subspace shows up as :func:`leakage`.
    """
    space = cfg.space()
    V = space.logical_isometry()
    out = run_schedule(V, compile_ccz_schedule(cfg), cfg)
    return V.conj().T @ out


def leakage(gate: np.ndarray) -> float:
    """Population leaving the logical ⊗ vacuum subspace, averaged over the 8 inputs."""
    return float(max(0.0, 1.0 - np.sum(np.abs(gate) ** 2) / gate.shape[1]))


def align_global_phase(actual: np.ndarray, target: np.ndarray) -> np.ndarray:
    """``actual`` times the unit phase maximizing ``Re Tr(target+ actual)``."""
    overlap = np.trace(target.conj().T @ actual)
    if abs(overlap) == 0:
        return actual
    return actual * (overlap.conjugate() / abs(overlap))


def gate_fidelities(actual: np.ndarray, target: np.ndarray = CCZ) -> FidelityReport:
    """Process fidelity ``|Tr(T+ A)|^2 / d^2`` and average fidelity ``(d F_p + 1)/(d + 1)``."""
    actual = np.asarray(actual, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if actual.shape != target.shape or actual.shape[0] != actual.shape[1]:
        raise ValueError(f"shape mismatch: {actual.shape} vs {target.shape}")
    d = actual.shape[0]
    f_p = min(1.0, abs(np.trace(target.conj().T @ actual)) ** 2 / d**2)
    err = float(np.max(np.abs(align_global_phase(actual, target) - target)))
    return FidelityReport(f_p, (d * f_p + 1) / (d + 1), leakage(actual), err)


def extract_channel(cfg: ProtocolConfig) -> np.ndarray:
    """Lindblad channel restricted to the logical ⊗ vacuum subspace.

    Returns ``E[i, j]`` = projected image of ``|i><j|`` as an ``(8, 8, 8, 8)`` array.
    """
    space = cfg.space()
    V = space.logical_isometry()
    inputs = np.einsum("ai,bj->ijab", V, V.conj()).reshape(64, space.total_dim, space.total_dim)
    out = run_schedule_density(inputs, compile_ccz_schedule(cfg), cfg)
    projected = V.conj().T @ out @ V
    return projected.reshape(8, 8, 8, 8)


def channel_fidelities(channel: np.ndarray, target: np.ndarray = CCZ) -> FidelityReport:
    """Fidelities of a (possibly leaky) channel against a target unitary.

    ``F_p = sum_ij <i|T+ E(|i><j|) T|j> / d^2``, which reduces to
    ``|Tr(T+ A)|^2 / d^2`` when the channel is ``rho -> A rho A+``.
    """
    d = target.shape[0]
    rotated = np.einsum("ka,ijab,bl->ijkl", target.conj().T, channel, target)
    f_p = float(np.real(sum(rotated[i, j, i, j] for i in range(d) for j in range(d)))) / d**2
    f_p = min(1.0, max(0.0, f_p))
    retained = float(np.real(np.mean([np.trace(channel[i, i]) for i in range(d)])))
    ideal = np.einsum("ai,bj->ijab", target, target.conj())
    err = float(np.max(np.abs(channel - ideal)))
    return FidelityReport(f_p, (d * f_p + 1) / (d + 1), max(0.0, 1.0 - retained), err)


# feasibility


def cavity_lifetime(Q: float, nu_c: float) -> float:
    """Photon lifetime ``Q / (2 pi nu_c)`` in seconds."""
    if not (Q > 0 and nu_c > 0):
        raise ValueError("Q and nu_c must be positive")
    return Q / (2 * math.pi * nu_c)


@dataclass(frozen=True)
class FeasibilityReport:
    tau: float
    kappa_inv: float
    gamma3r_inv: float
    gamma3p_inv: float
    margin_cavity: float
    margin_relaxation: float
    margin_dephasing: float

    def margins(self) -> dict[str, float]:
        return {
            "tau_over_kappa_inv": self.margin_cavity,
            "tau_times_gamma3r": self.margin_relaxation,
            "tau_times_gamma3p": self.margin_dephasing,
        }

    def flags(self) -> dict[str, bool]:
        """``True`` marks a margin worse than 1/10."""
        return {k: v >= MARGIN_LIMIT for k, v in self.margins().items()}

    @property
    def passed(self) -> bool:
        return not any(self.flags().values())


def feasibility_check(
    cfg: ProtocolConfig,
    Q: float | None = None,
    nu_c: float | None = None,
    gamma3r_inv: float = math.inf,
    gamma3p_inv: float = math.inf,
    kappa_inv: float | None = None,
) -> FeasibilityReport:
    """Compare the gate time with the cavity lifetime and the level-3 coherence times.

    Pass either ``kappa_inv`` or both ``Q`` and ``nu_c``.
    """
    if kappa_inv is None:
        if Q is None or nu_c is None:
            raise ValueError("need kappa_inv or both Q and nu_c")
        kappa_inv = cavity_lifetime(Q, nu_c)
    if not (kappa_inv > 0 and gamma3r_inv > 0 and gamma3p_inv > 0):
        raise ValueError("lifetimes must be positive")
    tau = total_operation_time(cfg)
    return FeasibilityReport(
        tau=tau,
        kappa_inv=kappa_inv,
        gamma3r_inv=gamma3r_inv,
        gamma3p_inv=gamma3p_inv,
        margin_cavity=tau / kappa_inv,
        margin_relaxation=tau / gamma3r_inv,
        margin_dephasing=tau / gamma3p_inv,
    )


# conventional decomposition

GATE_NAMES = ("CZ", "H", "T", "Tdg")
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_T = np.diag([1, np.exp(1j * math.pi / 4)])
_SINGLE = {"H": _H, "T": _T, "Tdg": _T.conj().T}


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        arity = 2 if self.name == "CZ" else 1
        if self.name not in GATE_NAMES:
            raise ValueError(f"unknown gate {self.name!r}")
        if len(self.qubits) != arity or len(set(self.qubits)) != arity:
            raise ValueError(f"{self.name} needs {arity} distinct qubits, got {self.qubits}")

    def __str__(self) -> str:
        return f"{self.name}({','.join(map(str, self.qubits))})"


GateCircuit = tuple[Gate, ...]


def _cnot(control: int, target: int) -> list[Gate]:
    return [Gate("H", (target,)), Gate("CZ", (control, target)), Gate("H", (target,))]


def build_ccz_decomposition() -> GateCircuit:
    """25-gate CCZ from the T/T†/CNOT Toffoli network, each CNOT written as H·CZ·H.

    The Hadamards framing the Toffoli target cancel, leaving six CNOTs and
    seven T-type gates; expanding the CNOTs gives 6 CZ + 12 H + 7 T-type.
    """
    a, b, c = 1, 2, 3
    gates: list[Gate] = []
    gates += _cnot(b, c)
    gates += [Gate("Tdg", (c,))]
    gates += _cnot(a, c)
    gates += [Gate("T", (c,))]
    gates += _cnot(b, c)
    gates += [Gate("Tdg", (c,))]
    gates += _cnot(a, c)
    gates += [Gate("T", (b,)), Gate("T", (c,))]
    gates += _cnot(a, b)
    gates += [Gate("T", (a,)), Gate("Tdg", (b,))]
    gates += _cnot(a, b)
    return tuple(gates)


def gate_counts(circuit: Iterable[Gate]) -> dict[str, int]:
    counts = Counter(g.name for g in circuit)
    return {"CZ": counts["CZ"], "H": counts["H"], "T-type": counts["T"] + counts["Tdg"]}


def _gate_matrix(gate: Gate, n_qubits: int) -> np.ndarray:
    for q in gate.qubits:
        if not 1 <= q <= n_qubits:
            raise ValueError(f"qubit {q} outside 1..{n_qubits}")
    dim = 2**n_qubits
    if gate.name == "CZ":
        diag = np.ones(dim, dtype=complex)
        for k in range(dim):
            if all((k >> (n_qubits - q)) & 1 for q in gate.qubits):
                diag[k] = -1
        return np.diag(diag)
    factors = [np.eye(2, dtype=complex)] * n_qubits
    factors[gate.qubits[0] - 1] = _SINGLE[gate.name]
    out = np.array([[1.0 + 0j]])
    for f in factors:
        out = np.kron(out, f)
    return out


def circuit_unitary(circuit: Sequence[Gate], n_qubits: int = 3) -> np.ndarray:
    """Composed unitary; the first gate acts first. Qubit 1 is the most significant bit."""
    U = np.eye(2**n_qubits, dtype=complex)
    for gate in circuit:
        U = _gate_matrix(gate, n_qubits) @ U
    return U


# crosstalk sweep


@dataclass(frozen=True)
class SweepRow:
    ratio: float
    infidelity: float
    leakage: float
    tau: float


def sweep_point(template: ProtocolConfig, ratio: float) -> SweepRow:
    """Score the gate at ``Omega = ratio * max(g)``; ``ratio = inf`` runs the idealized limit."""
    if math.isinf(ratio):
        cfg = replace(template, mode=EvolutionMode.IDEALIZED, pulse_rabi=None)
        # pulse time vanishes in the limit
        tau = math.pi * sum(1 / g for g in template.couplings_tuple())
    else:
        if ratio < 2:
            raise ValueError(f"ratio must be >= 2, got {ratio}")
        cfg = replace(
            template,
            mode=EvolutionMode.SIMULTANEOUS,
            omega=ratio * max(template.couplings_tuple()),
            pulse_rabi=None,
        )
        tau = total_operation_time(cfg)
    report = gate_fidelities(extract_gate(cfg))
    return SweepRow(float(ratio), float(max(0.0, report.infidelity)), report.leakage, tau)


def error_scaling_sweep(template: ProtocolConfig, ratios: Iterable[float]) -> list[SweepRow]:
    """Simultaneous-mode infidelity versus ``Omega / g``, rows sorted by ratio."""
    return [sweep_point(template, r) for r in sorted(ratios)]
