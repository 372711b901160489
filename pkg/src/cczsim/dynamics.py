"""Interaction-picture Hamiltonians, propagators and Lindblad evolution.

Units: hbar = 1, every rate is angular (rad/s), every time is in seconds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .hilbert import LEVELS, QUDITS, CompositeSpace, annihilation, transition


class EvolutionMode(enum.Enum):
    # pulses act alone; cavity couplings are suspended for the pulse duration
    IDEALIZED = "idealized"
    # pulse and all cavity couplings act together during every pulse
    SIMULTANEOUS = "simultaneous"


@dataclass(frozen=True)
class JcCoupling:
    qudit: int
    g: float

    def __post_init__(self) -> None:
        if self.qudit not in QUDITS:
            raise ValueError(f"qudit id must be 1, 2 or 3, got {self.qudit}")
        if not self.g > 0:
            raise ValueError(f"coupling g must be positive, got {self.g}")


@dataclass(frozen=True)
class PulseDrive:
    """Square resonant pulse on ``lower <-> upper`` of one qudit."""

    qudit: int
    lower: int
    upper: int
    rabi: float
    phase: float
    duration: float

    def __post_init__(self) -> None:
        if self.qudit not in QUDITS:
            raise ValueError(f"qudit id must be 1, 2 or 3, got {self.qudit}")
        if self.lower == self.upper:
            raise ValueError("pulse transition needs two distinct levels")
        for level in (self.lower, self.upper):
            if not 0 <= level < LEVELS:
                raise ValueError(f"level {level} outside 0..{LEVELS - 1}")
        if not self.rabi > 0:
            raise ValueError(f"Rabi frequency must be positive, got {self.rabi}")
        if self.duration < 0:
            raise ValueError(f"pulse duration must be >= 0, got {self.duration}")


class CollapseKind(enum.Enum):
    RELAXATION = "relaxation"
    DEPHASING = "dephasing"
    CAVITY_DECAY = "cavity_decay"


@dataclass(frozen=True)
class CollapseOperator:
    """One Lindblad channel.

    ``RELAXATION`` jumps level 3 to ``relax_to`` at ``rate``; ``DEPHASING``
    damps coherences between level 3 and the other levels at ``rate``;
    ``CAVITY_DECAY`` removes photons at ``rate``.
    """

    kind: CollapseKind
    rate: float
    qudit: int | None = None
    relax_to: int = 2

    def __post_init__(self) -> None:
        if self.rate < 0:
            raise ValueError(f"decoherence rate must be >= 0, got {self.rate}")
        if self.kind is not CollapseKind.CAVITY_DECAY and self.qudit not in QUDITS:
            raise ValueError(f"{self.kind.value} channel needs a qudit id, got {self.qudit}")
        if self.relax_to not in (0, 1, 2):
            raise ValueError(f"level 3 can relax to 0, 1 or 2, got {self.relax_to}")

    def matrix(self, space: CompositeSpace) -> np.ndarray:
        if self.kind is CollapseKind.CAVITY_DECAY:
            return math.sqrt(self.rate) * space.annihilation()
        if self.kind is CollapseKind.RELAXATION:
            return math.sqrt(self.rate) * space.embed_qudit(self.qudit, transition(self.relax_to, 3))
        return math.sqrt(2 * self.rate) * space.embed_qudit(self.qudit, transition(3, 3))


def jc_hamiltonian(space: CompositeSpace, coupling: JcCoupling) -> np.ndarray:
    """``g (a+ |2><3| + a |3><2|)`` for the coupled qudit."""
    a = annihilation(space.n_max)
    lower = space.embed({coupling.qudit: transition(2, 3)}, a.conj().T)
    return coupling.g * (lower + lower.conj().T)


def jc_total_hamiltonian(space: CompositeSpace, couplings: Sequence[JcCoupling]) -> np.ndarray:
    H = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    for c in couplings:
        H += jc_hamiltonian(space, c)
    return H


def pulse_hamiltonian(space: CompositeSpace, drive: PulseDrive) -> np.ndarray:
    """``Omega (e^{i phi} |i><j| + h.c.)`` with ``i`` the lower level."""
    local = drive.rabi * np.exp(1j * drive.phase) * transition(drive.lower, drive.upper)
    return space.embed_qudit(drive.qudit, local + local.conj().T)


def jc_propagator_closed(space: CompositeSpace, coupling: JcCoupling, t: float) -> np.ndarray:
    """Closed-form ``exp(-i H_jc t)``.

    Each doublet ``{|3,n>, |2,n+1>}`` of the coupled qudit rotates at
    ``g sqrt(n+1)``; every other basis state is dark.
    """
    if t < 0:
        raise ValueError(f"evolution time must be >= 0, got {t}")
    U = space.identity()
    q = coupling.qudit
    for index in range(space.total_dim):
        levels = list(space.basis_tuple(index))
        n = levels[3]
        if levels[q - 1] != 3 or n + 1 >= space.n_max:
            continue
        levels[q - 1] = 2
        levels[3] = n + 1
        partner = space.basis_index(*levels)
        theta = coupling.g * math.sqrt(n + 1) * t
        c, s = math.cos(theta), math.sin(theta)
        U[index, index] = c
        U[partner, partner] = c
        U[partner, index] = -1j * s
        U[index, partner] = -1j * s
    return U


def pulse_propagator_closed(space: CompositeSpace, drive: PulseDrive) -> np.ndarray:
    """Closed-form rotation of a square pulse.

    ``|i> -> cos(Wt)|i> - i e^{-i phi} sin(Wt)|j>`` and
    ``|j> -> cos(Wt)|j> - i e^{i phi} sin(Wt)|i>``; other levels untouched.
    """
    theta = drive.rabi * drive.duration
    c, s = math.cos(theta), math.sin(theta)
    i, j = drive.lower, drive.upper
    local = np.eye(LEVELS, dtype=complex)
    local[i, i] = c
    local[j, j] = c
    local[j, i] = -1j * np.exp(-1j * drive.phase) * s
    local[i, j] = -1j * np.exp(1j * drive.phase) * s
    return space.embed_qudit(drive.qudit, local)


def _check_hermitian(H: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
    if np.max(np.abs(H - H.conj().T), initial=0.0) > 1e-12 * scale:
        raise ValueError("Hamiltonian is not Hermitian")


def evolve_numeric(H: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i H t)`` by Pade scaling and squaring (independent of the closed forms)."""
    H = np.asarray(H, dtype=complex)
    _check_hermitian(H)
    return scipy.linalg.expm(-1j * t * H)


def unitary_propagator(H: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i H t)`` through the eigendecomposition of a Hermitian ``H``."""
    H = np.asarray(H, dtype=complex)
    _check_hermitian(H)
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w * t)) @ V.conj().T


# open-system evolution


def collapse_matrices(space: CompositeSpace, collapses: Sequence[CollapseOperator]) -> list[np.ndarray]:
    return [c.matrix(space) for c in collapses if c.rate > 0]


class _LindbladGenerator:
    """Right-hand side of the Lindblad equation with sparse operators precomputed.

    ``-i[H, rho] + sum_L (L rho L+ - {L+ L, rho}/2)`` is evaluated as
    ``-i (H_eff rho - rho H_eff+) + sum_L L rho L+`` with ``H_eff = H - i K/2``.
    """

    def __init__(self, H: np.ndarray, Ls: Sequence[np.ndarray]):
        self.jumps = [sp.csr_matrix(L) for L in Ls]
        K = sum((L.conj().T @ L for L in self.jumps), sp.csr_matrix(H.shape, dtype=complex))
        self.h_eff = sp.csr_matrix(H) - 0.5j * K

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        # right products via adjoints: rho A+ = (A rho+)+
        rho_dag = rho.conj().T
        out = -1j * (self.h_eff @ rho - (self.h_eff @ rho_dag).conj().T)
        for L in self.jumps:
            out += L @ (L @ rho_dag).conj().T
        return out


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, Ls: Sequence[np.ndarray]) -> np.ndarray:
    """``d rho / dt`` for a single ``(d, d)`` operator."""
    return _LindbladGenerator(np.asarray(H, dtype=complex), Ls)(np.asarray(rho, dtype=complex))


def _rk4(rhs, rho: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * dt * k1)
    k3 = rhs(rho + 0.5 * dt * k2)
    k4 = rhs(rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def lindblad_step(rho: np.ndarray, H: np.ndarray, Ls: Sequence[np.ndarray], dt: float) -> np.ndarray:
    """One classical RK4 step of the Lindblad equation."""
    gen = _LindbladGenerator(np.asarray(H, dtype=complex), Ls)
    return _rk4(gen, np.asarray(rho, dtype=complex), dt)


def _generator_scale(H: np.ndarray, Ls: Sequence[np.ndarray]) -> float:
    # bound on the Liouvillian norm: 2||H|| + sum ||L||^2
    scale = 2 * np.linalg.norm(H, 2) if H.size else 0.0
    scale += sum(np.linalg.norm(L, 2) ** 2 for L in Ls)
    return float(scale)


def evolve_lindblad_rk4(
    rho: np.ndarray,
    H: np.ndarray,
    Ls: Sequence[np.ndarray],
    t: float,
    max_step_phase: float = 0.01,
) -> np.ndarray:
    """Fixed-step RK4 over ``[0, t]``.

    The step count keeps ``dt`` times the generator norm below
    ``max_step_phase``, which holds the trace drift far under 1e-8 per segment.
    """
    if t < 0:
        raise ValueError(f"evolution time must be >= 0, got {t}")
    if t == 0:
        return np.array(rho, dtype=complex)
    H = np.asarray(H, dtype=complex)
    Ls = [np.asarray(L, dtype=complex) for L in Ls]
    steps = max(1, math.ceil(t * _generator_scale(H, Ls) / max_step_phase))
    dt = t / steps
    gen = _LindbladGenerator(H, Ls)
    rho = np.array(rho, dtype=complex)
    for _ in range(steps):
        rho = _rk4(gen, rho, dt)
    return rho


def liouvillian(H: np.ndarray, Ls: Sequence[np.ndarray]) -> sp.csr_matrix:
    """Sparse Lindblad generator acting on row-major ``vec(rho)``."""
    d = H.shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    Hs = sp.csr_matrix(H)
    gen = -1j * (sp.kron(Hs, eye) - sp.kron(eye, Hs.T))
    for L in Ls:
        Lsp = sp.csr_matrix(L)
        K = (Lsp.conj().T @ Lsp).tocsr()
        gen = gen + sp.kron(Lsp, Lsp.conj()) - 0.5 * (sp.kron(K, eye) + sp.kron(eye, K.T))
    return sp.csr_matrix(gen)


def evolve_lindblad(rho: np.ndarray, H: np.ndarray, Ls: Sequence[np.ndarray], t: float) -> np.ndarray:
    """Exact-in-time Lindblad evolution over a segment with constant generator.

    ``rho`` is ``(d, d)`` or a batch ``(B, d, d)``; the batch is propagated in one
    Krylov/Taylor ``expm_multiply`` call.
    """
    if t < 0:
        raise ValueError(f"evolution time must be >= 0, got {t}")
    rho = np.asarray(rho, dtype=complex)
    if t == 0:
        return rho.copy()
    d = rho.shape[-1]
    batch = rho.reshape(-1, d * d).T
    out = expm_multiply(liouvillian(np.asarray(H, dtype=complex), Ls) * t, batch)
    return out.T.reshape(rho.shape)
