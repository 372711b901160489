"""Exit criteria; each test prints one PASS/FAIL line in the terminal summary."""

import math
import time

import numpy as np
import pytest

from cczsim.analysis import (
    CCZ,
    align_global_phase,
    build_ccz_decomposition,
    cavity_lifetime,
    channel_fidelities,
    circuit_unitary,
    extract_gate,
    gate_counts,
    gate_fidelities,
    sweep_point,
)
from cczsim.dynamics import (
    JcCoupling,
    PulseDrive,
    evolve_numeric,
    jc_hamiltonian,
    jc_propagator_closed,
    pulse_hamiltonian,
    pulse_propagator_closed,
)
from cczsim.hilbert import CompositeSpace, logical_bits
from cczsim.protocol import (
    ProtocolConfig,
    Schedule,
    compile_ccz_schedule,
    iter_schedule,
    iter_schedule_density,
    run_schedule,
    step_expectations,
    system_trajectories,
    total_operation_time,
)

TWO_PI = 2 * math.pi
G = TWO_PI * 220e6


def _truth_table_deviation(cfg):
    space = cfg.space()
    sched = compile_ccz_schedule(cfg)
    worst = vacuum = 0.0
    for bits in logical_bits():
        psi = space.logical_basis_state(bits)
        out = run_schedule(psi, sched, cfg)
        sign = -1 if all(bits) else 1
        worst = max(worst, float(np.max(np.abs(out - sign * psi))))
        vacuum = max(vacuum, abs(space.reduced_cavity(out)[0, 0].real - 1))
    return worst, vacuum


@pytest.mark.acceptance("AC1 truth table |b1b2b3> -> (-1)^(b1 b2 b3)|b1b2b3>|0>c, dev < 1e-10, < 1 s")
def test_ac1_truth_table():
    cfg = ProtocolConfig(G, G, G, 10 * G)
    start = time.perf_counter()
    worst, vacuum = _truth_table_deviation(cfg)
    elapsed = time.perf_counter() - start
    print(f"AC1 max deviation {worst:.3e}, vacuum defect {vacuum:.3e}, {elapsed:.3f} s")
    assert worst < 1e-10
    assert vacuum < 1e-10
    assert elapsed < 1.0


@pytest.mark.acceptance("AC2 per-step tables incl. (a)/(b)/(c) sub-ops, coefficient match < 1e-10, < 1 s")
def test_ac2_step_tables():
    cfg = ProtocolConfig(G, G, G, 10 * G)
    space = cfg.space()
    sched = compile_ccz_schedule(cfg)
    start = time.perf_counter()
    worst = 0.0
    checked = 0
    for row in step_expectations():
        step_sched = Schedule(sched.step(row.step))
        for spectator in (0, 1):
            levels = [spectator] * 3
            levels[row.qudit - 1] = row.start.level
            psi = row.start.coef * space.basis_state(*levels, row.start.n)
            for (_, out), ket in zip(iter_schedule(psi, step_sched, cfg), row.after):
                levels[row.qudit - 1] = ket.level
                expected = ket.coef * space.basis_state(*levels, ket.n)
                worst = max(worst, float(np.max(np.abs(out - expected))))
                checked += 1
    for traj in system_trajectories():
        psi = space.basis_state(*traj.start.levels, traj.start.n)
        ends = [out for seg, out in iter_schedule(psi, sched, cfg) if seg.sub == "c"]
        for out, ket in zip(ends, traj.after_steps):
            worst = max(worst, float(np.max(np.abs(out - ket.coef * space.basis_state(*ket.levels, ket.n)))))
            checked += 1
    elapsed = time.perf_counter() - start
    print(f"AC2 {checked} ket mappings, max deviation {worst:.3e}, {elapsed:.3f} s")
    assert checked == 16 * 2 * 3 + 8 * 5
    assert worst < 1e-10
    assert elapsed < 1.0


@pytest.mark.acceptance("AC3 closed-form JC and pulse propagators vs numerical exponential, >= 20 draws each, < 1e-9, < 5 s")
def test_ac3_closed_form_vs_oracle():
    rng = np.random.default_rng(20240601)
    space = CompositeSpace(3)
    start = time.perf_counter()
    worst_jc = worst_pulse = 0.0
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    for _ in range(20):
        q = int(rng.integers(1, 4))
        g = TWO_PI * rng.uniform(50e6, 500e6)
        t = rng.uniform(0, 2 * math.pi) / g
        c = JcCoupling(q, g)
        worst_jc = max(worst_jc, float(np.max(np.abs(jc_propagator_closed(space, c, t) - evolve_numeric(jc_hamiltonian(space, c), t)))))
        lo, hi = pairs[int(rng.integers(len(pairs)))]
        rabi = TWO_PI * rng.uniform(0.5e9, 5e9)
        drive = PulseDrive(q, lo, hi, rabi, rng.uniform(-math.pi, math.pi), rng.uniform(0, 2 * math.pi) / rabi)
        U = pulse_propagator_closed(space, drive)
        worst_pulse = max(worst_pulse, float(np.max(np.abs(U - evolve_numeric(pulse_hamiltonian(space, drive), drive.duration)))))
    elapsed = time.perf_counter() - start
    print(f"AC3 JC {worst_jc:.3e}, pulse {worst_pulse:.3e}, {elapsed:.3f} s")
    assert worst_jc < 1e-9
    assert worst_pulse < 1e-9
    assert elapsed < 5.0


@pytest.mark.acceptance("AC4 tau = 7.95 ns +- 1% (g/2pi = 220 MHz, Omega = 10 g); 1/kappa = 1.59 us +- 1% (Q = 5e4, nu_c = 5 GHz)")
def test_ac4_timing():
    tau = total_operation_time(ProtocolConfig(G, G, G, 10 * G))
    life = cavity_lifetime(5e4, 5e9)
    print(f"AC4 tau = {tau:.6e} s, 1/kappa = {life:.6e} s")
    assert tau == pytest.approx(7.95e-9, rel=0.01)
    assert life == pytest.approx(1.59e-6, rel=0.01)


@pytest.mark.acceptance("AC5 truth table with (g1, g2, g3)/2pi = (200, 220, 240) MHz, dev < 1e-10, < 1 s")
def test_ac5_inhomogeneous_couplings():
    cfg = ProtocolConfig(TWO_PI * 200e6, TWO_PI * 220e6, TWO_PI * 240e6, 10 * G)
    start = time.perf_counter()
    worst, vacuum = _truth_table_deviation(cfg)
    elapsed = time.perf_counter() - start
    print(f"AC5 max deviation {worst:.3e}, vacuum defect {vacuum:.3e}, {elapsed:.3f} s")
    assert worst < 1e-10
    assert vacuum < 1e-10
    assert elapsed < 1.0


@pytest.mark.acceptance("AC6 simultaneous-mode infidelity strictly decreasing over Omega/g = 5, 10, 20, 40 and < 1e-6 at 1e4, < 2 min")
def test_ac6_rabi_convergence():
    template = ProtocolConfig(G, G, G, 10 * G, n_max=3)
    start = time.perf_counter()
    rows = [sweep_point(template, r) for r in (5, 10, 20, 40, 1e4)]
    elapsed = time.perf_counter() - start
    for r in rows:
        print(f"AC6 Omega/g = {r.ratio:g}: infidelity {r.infidelity:.3e}, leakage {r.leakage:.3e}")
    inf = [r.infidelity for r in rows]
    assert inf[0] > inf[1] > inf[2] > inf[3]
    assert inf[4] < 1e-6
    assert elapsed < 120.0


@pytest.mark.slow
@pytest.mark.acceptance("AC7 Lindblad run (1/kappa = 1.6 us, 1/gamma3r = 1/gamma3p = 1 us) average gate fidelity >= 0.99, < 5 min")
def test_ac7_decoherence_margin():
    cfg = ProtocolConfig(G, G, G, 10 * G, n_max=2, kappa=1 / 1.6e-6, gamma3r=1e6, gamma3p=1e6)
    space = cfg.space()
    V = space.logical_isometry()
    inputs = np.einsum("ai,bj->ijab", V, V.conj()).reshape(64, space.total_dim, space.total_dim)
    diagonal = [9 * k for k in range(8)]
    amps = np.full(8, 1 / math.sqrt(8))
    start = time.perf_counter()
    min_eig = 0.0
    out = inputs
    for _, out in iter_schedule_density(inputs, compile_ccz_schedule(cfg), cfg):
        states = [out[k] for k in diagonal]
        states.append(np.einsum("i,j,ijab->ab", amps, amps.conj(), out.reshape(8, 8, *out.shape[1:])))
        for rho in states:
            min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)))))
            assert abs(np.trace(rho) - 1) < 1e-8
    elapsed = time.perf_counter() - start
    report = channel_fidelities((V.conj().T @ out @ V).reshape(8, 8, 8, 8))
    print(
        f"AC7 avg gate fidelity {report.avg_gate_fidelity:.6f}, process fidelity {report.process_fidelity:.6f}, "
        f"leakage {report.leakage:.3e}, min eigenvalue {min_eig:.2e}, {elapsed:.1f} s"
    )
    assert report.avg_gate_fidelity >= 0.99
    assert min_eig >= -1e-8
    assert elapsed < 300.0


@pytest.mark.acceptance("AC8 25-gate circuit: CZ=6 H=12 T-type=7, equals CCZ up to phase < 1e-12, matches protocol gate < 1e-9, < 1 s")
def test_ac8_decomposition_oracle():
    start = time.perf_counter()
    circuit = build_ccz_decomposition()
    counts = gate_counts(circuit)
    U = circuit_unitary(circuit)
    dev_ccz = float(np.max(np.abs(align_global_phase(U, CCZ) - CCZ)))
    protocol = extract_gate(ProtocolConfig(G, G, G, 10 * G))
    dev_protocol = float(np.max(np.abs(align_global_phase(U, protocol) - protocol)))
    elapsed = time.perf_counter() - start
    print(f"AC8 {len(circuit)} gates {counts}, vs CCZ {dev_ccz:.3e}, vs protocol {dev_protocol:.3e}, {elapsed:.3f} s")
    assert len(circuit) == 25
    assert counts == {"CZ": 6, "H": 12, "T-type": 7}
    assert dev_ccz < 1e-12
    assert dev_protocol < 1e-9
    assert gate_fidelities(protocol).avg_gate_fidelity == pytest.approx(1, abs=1e-10)
    assert elapsed < 1.0
