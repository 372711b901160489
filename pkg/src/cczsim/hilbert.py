"""Composite space of three 4-level qudits and one truncated cavity mode.

Basis states are ordered row-major in ``(l1, l2, l3, n)``::

    index = l1 * 16 * n_max + l2 * 4 * n_max + l3 * n_max + n

Operators, kets and density matrices are plain complex numpy arrays over
this basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

LEVELS = 4
QUDITS = (1, 2, 3)


def local_ket(level: int, dim: int = LEVELS) -> np.ndarray:
    if not 0 <= level < dim:
        raise ValueError(f"level {level} outside 0..{dim - 1}")
    ket = np.zeros(dim, dtype=complex)
    ket[level] = 1.0
    return ket


def transition(i: int, j: int, dim: int = LEVELS) -> np.ndarray:
    """Local operator ``|i><j|``."""
    return np.outer(local_ket(i, dim), local_ket(j, dim).conj())


def annihilation(n_max: int) -> np.ndarray:
    """Truncated cavity annihilation operator, ``a|n> = sqrt(n)|n-1>``."""
    return np.diag(np.sqrt(np.arange(1, n_max)), k=1).astype(complex)


@dataclass(frozen=True)
class LogicalEncoding:
    """Physical level label carrying logical 0 and logical 1 on each qudit.

    Qudit 3 has its two lowest levels named in reverse energy order (the
    ground level carries the label 1). Only labels enter the dynamics, so
    the default map is the identity on labels for every qudit.
    """

    levels: tuple[tuple[int, int], tuple[int, int], tuple[int, int]] = (
        (0, 1),
        (0, 1),
        (0, 1),
    )

    def __post_init__(self) -> None:
        if len(self.levels) != 3:
            raise ValueError("encoding needs one entry per qudit")
        for zero, one in self.levels:
            if zero == one or not (0 <= zero < LEVELS and 0 <= one < LEVELS):
                raise ValueError(f"invalid encoding pair {(zero, one)}")

    def level(self, qudit: int, bit: int) -> int:
        if bit not in (0, 1):
            raise ValueError(f"logical bit must be 0 or 1, got {bit}")
        return self.levels[qudit - 1][bit]


@dataclass(frozen=True)
class CompositeSpace:
    """Three ququarts tensored with a cavity truncated to ``n_max`` Fock states."""

    n_max: int = 3
    encoding: LogicalEncoding = field(default_factory=LogicalEncoding)

    def __post_init__(self) -> None:
        if self.n_max < 2:
            raise ValueError(f"cavity truncation n_max must be >= 2, got {self.n_max}")

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (LEVELS, LEVELS, LEVELS, self.n_max)

    @property
    def total_dim(self) -> int:
        return LEVELS**3 * self.n_max

    def basis_index(self, l1: int, l2: int, l3: int, n: int) -> int:
        for name, level in (("l1", l1), ("l2", l2), ("l3", l3)):
            if not 0 <= level < LEVELS:
                raise ValueError(f"{name}={level} outside 0..{LEVELS - 1}")
        if not 0 <= n < self.n_max:
            raise ValueError(f"photon number {n} outside 0..{self.n_max - 1}")
        return ((l1 * LEVELS + l2) * LEVELS + l3) * self.n_max + n

    def basis_tuple(self, index: int) -> tuple[int, int, int, int]:
        if not 0 <= index < self.total_dim:
            raise ValueError(f"index {index} outside 0..{self.total_dim - 1}")
        rest, n = divmod(index, self.n_max)
        rest, l3 = divmod(rest, LEVELS)
        l1, l2 = divmod(rest, LEVELS)
        return l1, l2, l3, n

    def basis_state(self, l1: int, l2: int, l3: int, n: int = 0) -> np.ndarray:
        psi = np.zeros(self.total_dim, dtype=complex)
        psi[self.basis_index(l1, l2, l3, n)] = 1.0
        return psi

    def identity(self) -> np.ndarray:
        return np.eye(self.total_dim, dtype=complex)

    def _kron(self, factors: Sequence[np.ndarray]) -> np.ndarray:
        return reduce(np.kron, factors)

    def embed_qudit(self, target: int, local: np.ndarray) -> np.ndarray:
        """``I ⊗ ... ⊗ local ⊗ ... ⊗ I_cavity`` with ``local`` on qudit ``target``."""
        if target not in QUDITS:
            raise ValueError(f"qudit id must be 1, 2 or 3, got {target}")
        local = np.asarray(local, dtype=complex)
        if local.shape != (LEVELS, LEVELS):
            raise ValueError(f"qudit operator must be 4x4, got {local.shape}")
        factors = [np.eye(LEVELS, dtype=complex) for _ in QUDITS]
        factors[target - 1] = local
        factors.append(np.eye(self.n_max, dtype=complex))
        return self._kron(factors)

    def embed_cavity(self, local: np.ndarray) -> np.ndarray:
        local = np.asarray(local, dtype=complex)
        if local.shape != (self.n_max, self.n_max):
            raise ValueError(f"cavity operator must be {self.n_max}x{self.n_max}, got {local.shape}")
        return np.kron(np.eye(LEVELS**3, dtype=complex), local)

    def embed(self, qudit_ops: dict[int, np.ndarray], cavity_op: np.ndarray | None = None) -> np.ndarray:
        """Product operator with the given local factors and identity elsewhere."""
        factors = [np.eye(LEVELS, dtype=complex) for _ in QUDITS]
        for target, local in qudit_ops.items():
            if target not in QUDITS:
                raise ValueError(f"qudit id must be 1, 2 or 3, got {target}")
            factors[target - 1] = np.asarray(local, dtype=complex)
        factors.append(np.eye(self.n_max, dtype=complex) if cavity_op is None else np.asarray(cavity_op, dtype=complex))
        return self._kron(factors)

    def annihilation(self) -> np.ndarray:
        return self.embed_cavity(annihilation(self.n_max))

    def number(self) -> np.ndarray:
        a = annihilation(self.n_max)
        return self.embed_cavity(a.conj().T @ a)

    # logical subspace

    def logical_index(self, bits: Sequence[int]) -> int:
        b1, b2, b3 = bits
        enc = self.encoding
        return self.basis_index(enc.level(1, b1), enc.level(2, b2), enc.level(3, b3), 0)

    def logical_basis_state(self, bits: Sequence[int]) -> np.ndarray:
        psi = np.zeros(self.total_dim, dtype=complex)
        psi[self.logical_index(bits)] = 1.0
        return psi

    def logical_indices(self) -> list[int]:
        """Flat indices of ``|000>|0>c ... |111>|0>c`` in logical order."""
        return [self.logical_index(bits) for bits in logical_bits()]

    def logical_isometry(self) -> np.ndarray:
        """``total_dim x 8`` matrix whose columns are the logical basis kets."""
        V = np.zeros((self.total_dim, 8), dtype=complex)
        V[self.logical_indices(), np.arange(8)] = 1.0
        return V

    def logical_projector(self) -> np.ndarray:
        V = self.logical_isometry()
        return V @ V.conj().T

    def product_state(self, kets: Iterable[np.ndarray]) -> np.ndarray:
        """Tensor product of three 4-level kets and one cavity ket."""
        kets = [np.asarray(k, dtype=complex) for k in kets]
        if [k.shape[0] for k in kets] != list(self.dims):
            raise ValueError("need three 4-level kets and one cavity ket")
        return self._kron(kets)

    def reduced_qudit(self, psi: np.ndarray, qudit: int) -> np.ndarray:
        """4x4 reduced density matrix of one qudit from a pure state."""
        t = np.moveaxis(np.asarray(psi).reshape(self.dims), qudit - 1, 0).reshape(LEVELS, -1)
        return t @ t.conj().T

    def reduced_cavity(self, psi: np.ndarray) -> np.ndarray:
        t = np.asarray(psi).reshape(-1, self.n_max)
        return t.T @ t.conj()


def logical_bits() -> list[tuple[int, int, int]]:
    """All 3-bit inputs in order ``000, 001, ..., 111`` (qubit 1 is the MSB)."""
    return [((k >> 2) & 1, (k >> 1) & 1, k & 1) for k in range(8)]
