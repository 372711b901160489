"""Five-step CCZ pulse program, its execution, and the reference state tables."""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from .dynamics import (
    CollapseKind,
    CollapseOperator,
    EvolutionMode,
    JcCoupling,
    PulseDrive,
    collapse_matrices,
    evolve_lindblad,
    evolve_lindblad_rk4,
    evolve_numeric,
    jc_total_hamiltonian,
    pulse_hamiltonian,
    pulse_propagator_closed,
    unitary_propagator,
)
from .hilbert import CompositeSpace, LogicalEncoding

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class ProtocolConfig:
    """Physical parameters of one gate run (angular rates in rad/s).

    ``pulse_rabi`` optionally overrides the Rabi frequency of each of the ten
    pulses, in schedule order. Decoherence rates of zero switch the channel off.
    """

    g1: float
    g2: float
    g3: float
    omega: float
    mode: EvolutionMode = EvolutionMode.IDEALIZED
    n_max: int = 3
    encoding: LogicalEncoding = field(default_factory=LogicalEncoding)
    gamma3r: float = 0.0
    gamma3p: float = 0.0
    kappa: float = 0.0
    relax_to: int = 2
    pulse_rabi: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        for name in ("g1", "g2", "g3", "omega"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("gamma3r", "gamma3p", "kappa"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.pulse_rabi is not None:
            if len(self.pulse_rabi) != 10 or min(self.pulse_rabi) <= 0:
                raise ValueError("pulse_rabi needs ten positive Rabi frequencies")
        if self.mode is EvolutionMode.SIMULTANEOUS:
            g_max = max(self.couplings_tuple())
            rabi_min = min(self.pulse_rabi) if self.pulse_rabi else self.omega
            if rabi_min <= g_max:
                raise ValueError("simultaneous mode needs the Rabi frequency above every coupling")
            if rabi_min < 5 * g_max:
                warnings.warn(
                    f"Rabi frequency is only {rabi_min / g_max:.2g}x the largest coupling; "
                    "pulse/cavity crosstalk will be large",
                    stacklevel=2,
                )

    def couplings_tuple(self) -> tuple[float, float, float]:
        return (self.g1, self.g2, self.g3)

    def couplings(self) -> list[JcCoupling]:
        return [JcCoupling(q, g) for q, g in zip((1, 2, 3), self.couplings_tuple())]

    def space(self) -> CompositeSpace:
        return CompositeSpace(self.n_max, self.encoding)

    def collapses(self) -> list[CollapseOperator]:
        ops = []
        for q in (1, 2, 3):
            ops.append(CollapseOperator(CollapseKind.RELAXATION, self.gamma3r, q, self.relax_to))
            ops.append(CollapseOperator(CollapseKind.DEPHASING, self.gamma3p, q))
        ops.append(CollapseOperator(CollapseKind.CAVITY_DECAY, self.kappa))
        return [op for op in ops if op.rate > 0]


@dataclass(frozen=True)
class Pulse:
    drive: PulseDrive
    step: int | None = None
    sub: str | None = None

    @property
    def duration(self) -> float:
        return self.drive.duration


@dataclass(frozen=True)
class Wait:
    duration: float
    step: int | None = None
    sub: str | None = None

    def __post_init__(self) -> None:
        if self.duration < 0:
            raise ValueError(f"wait duration must be >= 0, got {self.duration}")


Segment = Union[Pulse, Wait]


@dataclass(frozen=True)
class Schedule:
    segments: tuple[Segment, ...]

    @property
    def total_duration(self) -> float:
        return math.fsum(s.duration for s in self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def step(self, index: int) -> tuple[Segment, ...]:
        return tuple(s for s in self.segments if s.step == index)


# (qudit, lower, upper, phase) for the (a) and (c) pulses, and (qudit, quarter turns) for the (b) wait
_STEPS = (
    ((1, 1, 3, -HALF_PI), (1, 1), (1, 0, 2, -HALF_PI)),
    ((2, 0, 2, -HALF_PI), (2, 1), (2, 0, 3, math.pi)),
    ((3, 1, 2, -HALF_PI), (3, 2), (3, 1, 2, HALF_PI)),
    ((2, 0, 3, math.pi), (2, 1), (2, 0, 2, HALF_PI)),
    ((1, 0, 2, HALF_PI), (1, 1), (1, 1, 3, -HALF_PI)),
)


def compile_ccz_schedule(cfg: ProtocolConfig) -> Schedule:
    """Fifteen annotated segments: per step a pulse, a cavity wait and a pulse.

    Every pulse is a quarter Rabi cycle (``t = pi / 2 Omega``); the waits are
    ``pi / 2 g`` for qudits 1 and 2 and ``pi / g3`` for qudit 3.
    """
    rabis = iter(cfg.pulse_rabi or [cfg.omega] * 10)
    g = cfg.couplings_tuple()
    segments: list[Segment] = []
    for step, (first, wait, last) in enumerate(_STEPS, start=1):
        for sub, spec in (("a", first), ("b", wait), ("c", last)):
            if sub == "b":
                qudit, quarters = spec
                segments.append(Wait(quarters * HALF_PI / g[qudit - 1], step, sub))
            else:
                qudit, lower, upper, phase = spec
                rabi = next(rabis)
                drive = PulseDrive(qudit, lower, upper, rabi, phase, HALF_PI / rabi)
                segments.append(Pulse(drive, step, sub))
    return Schedule(tuple(segments))


def total_operation_time(cfg: ProtocolConfig) -> float:
    """``pi/g1 + pi/g2 + pi/g3 + 5 pi/Omega`` (per-pulse Rabi overrides honoured)."""
    waits = math.pi / cfg.g1 + math.pi / cfg.g2 + math.pi / cfg.g3
    if cfg.pulse_rabi is None:
        return waits + 5 * math.pi / cfg.omega
    return waits + math.fsum(HALF_PI / r for r in cfg.pulse_rabi)


# execution


class _Propagators:
    """Per-run cache of segment propagators and Hamiltonians."""

    def __init__(self, cfg: ProtocolConfig):
        self.cfg = cfg
        self.space = cfg.space()
        self.h_jc = jc_total_hamiltonian(self.space, cfg.couplings())
        self._cache: dict[Segment, np.ndarray] = {}

    def hamiltonian(self, seg: Segment) -> np.ndarray:
        if isinstance(seg, Wait):
            return self.h_jc
        h = pulse_hamiltonian(self.space, seg.drive)
        if self.cfg.mode is EvolutionMode.SIMULTANEOUS:
            h = h + self.h_jc
        return h

    def unitary(self, seg: Segment) -> np.ndarray:
        if seg not in self._cache:
            if isinstance(seg, Wait):
                U = unitary_propagator(self.h_jc, seg.duration)
            elif self.cfg.mode is EvolutionMode.IDEALIZED:
                U = pulse_propagator_closed(self.space, seg.drive)
            else:
                U = evolve_numeric(self.hamiltonian(seg), seg.duration)
            self._cache[seg] = U
        return self._cache[seg]


def _check_dim(arr: np.ndarray, dim: int) -> None:
    if arr.shape[0] != dim:
        raise ValueError(f"state dimension {arr.shape[0]} does not match space dimension {dim}")


def iter_schedule(initial: np.ndarray, sched: Schedule, cfg: ProtocolConfig) -> Iterator[tuple[Segment, np.ndarray]]:
    """Yield ``(segment, state after segment)`` for every segment in order.

    ``initial`` is a ket or a ``(dim, k)`` matrix of kets evolved column-wise.
    """
    props = _Propagators(cfg)
    psi = np.asarray(initial, dtype=complex)
    _check_dim(psi, props.space.total_dim)
    for seg in sched.segments:
        psi = props.unitary(seg) @ psi
        yield seg, psi


def run_schedule(initial: np.ndarray, sched: Schedule, cfg: ProtocolConfig) -> np.ndarray:
    psi = np.asarray(initial, dtype=complex)
    for _, psi in iter_schedule(initial, sched, cfg):
        pass
    return psi


def schedule_unitary(sched: Schedule, cfg: ProtocolConfig) -> np.ndarray:
    """Full-space propagator of the whole schedule."""
    return run_schedule(cfg.space().identity(), sched, cfg)


def iter_schedule_density(
    rho: np.ndarray, sched: Schedule, cfg: ProtocolConfig, integrator: str = "expm"
) -> Iterator[tuple[Segment, np.ndarray]]:
    """Yield ``(segment, rho after segment)``.

    ``integrator="rk4"`` switches to fixed-step RK4 (single ``(d, d)`` input only).
    """
    if integrator not in ("expm", "rk4"):
        raise ValueError(f"unknown integrator {integrator!r}")
    evolve = evolve_lindblad if integrator == "expm" else evolve_lindblad_rk4
    props = _Propagators(cfg)
    Ls = collapse_matrices(props.space, cfg.collapses())
    rho = np.asarray(rho, dtype=complex)
    _check_dim(rho.T, props.space.total_dim)
    for seg in sched.segments:
        rho = evolve(rho, props.hamiltonian(seg), Ls, seg.duration)
        yield seg, rho


def run_schedule_density(rho: np.ndarray, sched: Schedule, cfg: ProtocolConfig, integrator: str = "expm") -> np.ndarray:
    """Lindblad evolution of ``rho`` (or a ``(B, d, d)`` batch) through the schedule."""
    out = np.asarray(rho, dtype=complex)
    for _, out in iter_schedule_density(rho, sched, cfg, integrator):
        pass
    return out


# reference state tables


@dataclass(frozen=True)
class Ket:
    """``coef * |level>_q |n>_c`` for a single qudit and the cavity."""

    coef: complex
    level: int
    n: int


@dataclass(frozen=True)
class StepExpectation:
    """One row of a per-step table: the input ket and its images after (a), (b), (c)."""

    step: int
    qudit: int
    start: Ket
    after: tuple[Ket, Ket, Ket]


def _row(step: int, qudit: int, *kets: tuple[complex, int, int]) -> StepExpectation:
    k = [Ket(*entry) for entry in kets]
    return StepExpectation(step, qudit, k[0], (k[1], k[2], k[3]))


def step_expectations() -> list[StepExpectation]:
    """Every single-qudit ket mapping of the five step tables.

    Step (iv), first row: the final ket is ``|0>_2 |1>_c`` (the pulse leaves the
    photon in place), which is what the whole-system table requires.
    """
    i = 1j
    return [
        _row(1, 1, (1, 1, 0), (1, 3, 0), (-i, 2, 1), (i, 0, 1)),
        _row(1, 1, (1, 0, 0), (1, 0, 0), (1, 0, 0), (1, 2, 0)),
        _row(2, 2, (1, 0, 1), (1, 2, 1), (-i, 3, 0), (1, 0, 0)),
        _row(2, 2, (1, 1, 1), (1, 1, 1), (1, 1, 1), (1, 1, 1)),
        _row(2, 2, (1, 0, 0), (1, 2, 0), (1, 2, 0), (1, 2, 0)),
        _row(2, 2, (1, 1, 0), (1, 1, 0), (1, 1, 0), (1, 1, 0)),
        _row(3, 3, (1, 0, 0), (1, 0, 0), (1, 0, 0), (1, 0, 0)),
        _row(3, 3, (1, 1, 0), (1, 2, 0), (1, 2, 0), (1, 1, 0)),
        _row(3, 3, (1, 0, 1), (1, 0, 1), (1, 0, 1), (1, 0, 1)),
        _row(3, 3, (1, 1, 1), (1, 2, 1), (-1, 2, 1), (-1, 1, 1)),
        _row(4, 2, (1, 0, 0), (i, 3, 0), (1, 2, 1), (1, 0, 1)),
        _row(4, 2, (1, 1, 1), (1, 1, 1), (1, 1, 1), (1, 1, 1)),
        _row(4, 2, (1, 2, 0), (1, 2, 0), (1, 2, 0), (1, 0, 0)),
        _row(4, 2, (1, 1, 0), (1, 1, 0), (1, 1, 0), (1, 1, 0)),
        _row(5, 1, (1, 0, 1), (-1, 2, 1), (i, 3, 0), (-i, 1, 0)),
        _row(5, 1, (1, 2, 0), (1, 0, 0), (1, 0, 0), (1, 0, 0)),
    ]


@dataclass(frozen=True)
class SystemKet:
    coef: complex
    levels: tuple[int, int, int]
    n: int


@dataclass(frozen=True)
class SystemTrajectory:
    """Whole-register state after each of the five steps for one logical input."""

    start: SystemKet
    after_steps: tuple[SystemKet, ...]


def system_trajectories() -> list[SystemTrajectory]:
    """Step-by-step evolution of all eight logical inputs."""
    i = 1j

    def traj(start, *after):
        return SystemTrajectory(SystemKet(1, start, 0), tuple(SystemKet(c, lv, n) for c, lv, n in after))

    return [
        traj((1, 0, 0), (i, (0, 0, 0), 1), (i, (0, 0, 0), 0), (i, (0, 0, 0), 0), (i, (0, 0, 0), 1), (1, (1, 0, 0), 0)),
        traj((1, 0, 1), (i, (0, 0, 1), 1), (i, (0, 0, 1), 0), (i, (0, 0, 1), 0), (i, (0, 0, 1), 1), (1, (1, 0, 1), 0)),
        traj((1, 1, 0), (i, (0, 1, 0), 1), (i, (0, 1, 0), 1), (i, (0, 1, 0), 1), (i, (0, 1, 0), 1), (1, (1, 1, 0), 0)),
        traj((1, 1, 1), (i, (0, 1, 1), 1), (i, (0, 1, 1), 1), (-i, (0, 1, 1), 1), (-i, (0, 1, 1), 1), (-1, (1, 1, 1), 0)),
        traj((0, 0, 0), (1, (2, 0, 0), 0), (1, (2, 2, 0), 0), (1, (2, 2, 0), 0), (1, (2, 0, 0), 0), (1, (0, 0, 0), 0)),
        traj((0, 0, 1), (1, (2, 0, 1), 0), (1, (2, 2, 1), 0), (1, (2, 2, 1), 0), (1, (2, 0, 1), 0), (1, (0, 0, 1), 0)),
        traj((0, 1, 0), (1, (2, 1, 0), 0), (1, (2, 1, 0), 0), (1, (2, 1, 0), 0), (1, (2, 1, 0), 0), (1, (0, 1, 0), 0)),
        traj((0, 1, 1), (1, (2, 1, 1), 0), (1, (2, 1, 1), 0), (1, (2, 1, 1), 0), (1, (2, 1, 1), 0), (1, (0, 1, 1), 0)),
    ]


# text format

_FLOAT = "{:.17g}".format
_ANNOTATION = re.compile(r"#\s*step\s+([1-9])([a-z])\s*$")
_PULSE_KEYS = ("q", "lo", "hi", "phase", "rabi", "t")


class ScheduleParseError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def emit_schedule(sched: Schedule) -> str:
    lines = []
    for seg in sched.segments:
        if isinstance(seg, Pulse):
            d = seg.drive
            text = (
                f"pulse q={d.qudit} lo={d.lower} hi={d.upper} phase={_FLOAT(d.phase)} "
                f"rabi={_FLOAT(d.rabi)} t={_FLOAT(d.duration)}"
            )
        else:
            text = f"wait t={_FLOAT(seg.duration)}"
        if seg.step is not None and seg.sub is not None:
            text += f"  # step {seg.step}{seg.sub}"
        lines.append(text)
    return "\n".join(lines) + "\n"


def parse_schedule(text: str) -> Schedule:
    """Parse the line format produced by :func:`emit_schedule`.

    Trailing ``# step <i><sub>`` comments restore the step annotations; any
    other comment is ignored.
    """
    segments: list[Segment] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, hash_, comment = raw.partition("#")
        step = sub = None
        if hash_:
            m = _ANNOTATION.match("#" + comment)
            if m:
                step, sub = int(m.group(1)), m.group(2)
        tokens = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", body)]
        if not tokens:
            continue
        col, kind = tokens[0]
        fields: dict[str, tuple[int, str]] = {}
        for col_tok, tok in tokens[1:]:
            key, eq, value = tok.partition("=")
            if not eq or not value:
                raise ScheduleParseError(lineno, col_tok, f"expected key=value, got {tok!r}")
            if key in fields:
                raise ScheduleParseError(lineno, col_tok, f"duplicate key {key!r}")
            fields[key] = (col_tok, value)
        expected = _PULSE_KEYS if kind == "pulse" else ("t",) if kind == "wait" else None
        if expected is None:
            raise ScheduleParseError(lineno, col, f"unknown segment kind {kind!r}")
        for key, (col_tok, _) in fields.items():
            if key not in expected:
                raise ScheduleParseError(lineno, col_tok, f"unexpected key {key!r} for {kind}")
        missing = [k for k in expected if k not in fields]
        if missing:
            raise ScheduleParseError(lineno, col, f"{kind} is missing {', '.join(missing)}")

        def number(key: str, cast=float):
            col_tok, value = fields[key]
            try:
                return cast(value)
            except ValueError:
                raise ScheduleParseError(lineno, col_tok, f"bad value for {key}: {value!r}") from None

        try:
            if kind == "wait":
                segments.append(Wait(number("t"), step, sub))
            else:
                drive = PulseDrive(
                    number("q", int), number("lo", int), number("hi", int),
                    number("rabi"), number("phase"), number("t"),
                )
                segments.append(Pulse(drive, step, sub))
        except ScheduleParseError:
            raise
        except ValueError as exc:
            raise ScheduleParseError(lineno, col, str(exc)) from None
    return Schedule(tuple(segments))
