"""Command-line front end: ``cczsim run|sweep|feasibility|decompose|schedule``.

Exit codes: 0 success, 1 bad input, 2 truth table failed (``run``),
3 feasibility margin violated (``feasibility``).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import analysis
from .config import DEFAULT_TOML, ConfigError, RunConfig, load_config
from .hilbert import logical_bits
from .protocol import ScheduleParseError, compile_ccz_schedule, emit_schedule, parse_schedule

EXIT_OK, EXIT_INPUT, EXIT_TRUTH, EXIT_FEASIBILITY = 0, 1, 2, 3
TRUTH_TOL = 1e-10


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def to_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats at 17 significant digits; non-finite floats become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {to_json(v, indent, _level + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def truth_table(gate: np.ndarray, tol: float = TRUTH_TOL) -> list[dict[str, Any]]:
    rows = []
    for k, bits in enumerate(logical_bits()):
        sign = -1 if all(bits) else 1
        expected = np.zeros(8, dtype=complex)
        expected[k] = sign
        deviation = float(np.max(np.abs(gate[:, k] - expected)))
        rows.append({
            "input": "".join(map(str, bits)),
            "expected_sign": sign,
            "amplitude": [float(gate[k, k].real), float(gate[k, k].imag)],
            "max_deviation": deviation,
            "pass": deviation < tol,
        })
    return rows


def _report_run(cfg: RunConfig) -> dict[str, Any]:
    pcfg = cfg.protocol(with_decoherence=False)
    gate = analysis.extract_gate(pcfg)
    fid = analysis.gate_fidelities(gate)
    table = truth_table(gate)
    report: dict[str, Any] = {
        "mode": cfg.mode,
        "n_max": cfg.n_max,
        "tau_s": analysis.total_operation_time(pcfg),
        "process_fidelity": fid.process_fidelity,
        "avg_gate_fidelity": fid.avg_gate_fidelity,
        "leakage": fid.leakage,
        "max_elementwise_error": fid.max_elementwise_error,
        "truth_table_pass": all(r["pass"] for r in table),
        "truth_table": table,
        "gate": {"real": gate.real.tolist(), "imag": gate.imag.tolist()},
    }
    if cfg.decoherence is not None and cfg.decoherence.simulate:
        open_fid = analysis.channel_fidelities(analysis.extract_channel(cfg.protocol(with_decoherence=True)))
        report["open_system"] = {
            "process_fidelity": open_fid.process_fidelity,
            "avg_gate_fidelity": open_fid.avg_gate_fidelity,
            "leakage": open_fid.leakage,
        }
    return report


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    report = _report_run(cfg)
    fmt = args.format or cfg.output_format
    if fmt == "json":
        text = to_json(report) + "\n"
    else:
        rows = [[k, v] for k, v in report.items() if isinstance(v, (int, float, str, bool))]
        rows += [[f"truth_{r['input']}", r["pass"]] for r in report["truth_table"]]
        text = to_csv(["key", "value"], rows)
    _write(text, args.out)
    return EXIT_OK if report["truth_table_pass"] else EXIT_TRUTH


def parse_ratios(spec: str) -> list[float]:
    try:
        ratios = [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--ratios: cannot parse {spec!r}") from None
    if len(ratios) < 2:
        raise ConfigError("--ratios: a sweep needs at least 2 ratios")
    for r in ratios:
        if not r >= 2:
            raise ConfigError(f"--ratios: every ratio must be >= 2, got {r}")
    return ratios


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    ratios = parse_ratios(args.ratios)
    template = cfg.protocol(with_decoherence=False)
    rows = [analysis.sweep_point(template, r) for r in ratios]
    if (args.format or "csv") == "csv":
        text = to_csv(
            ["ratio", "infidelity", "leakage", "tau_s"],
            [["inf" if math.isinf(r.ratio) else r.ratio, r.infidelity, r.leakage, r.tau] for r in rows],
        )
    else:
        text = to_json([
            {"ratio": "inf" if math.isinf(r.ratio) else r.ratio, "infidelity": r.infidelity,
             "leakage": r.leakage, "tau_s": r.tau}
            for r in rows
        ]) + "\n"
    _write(text, args.out)
    return EXIT_OK


def cmd_feasibility(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    dec = cfg.decoherence
    if dec is None:
        raise ConfigError("missing required section [decoherence]")
    rep = analysis.feasibility_check(
        cfg.protocol(with_decoherence=False),
        gamma3r_inv=dec.gamma3r_inv_s,
        gamma3p_inv=dec.gamma3p_inv_s,
        kappa_inv=dec.kappa_inv,
    )
    report = {
        "tau_s": rep.tau,
        "kappa_inv_s": rep.kappa_inv,
        "gamma3r_inv_s": rep.gamma3r_inv,
        "gamma3p_inv_s": rep.gamma3p_inv,
        "margins": rep.margins(),
        "fail_flags": rep.flags(),
        "pass": rep.passed,
    }
    if (args.format or "json") == "json":
        text = to_json(report) + "\n"
    else:
        rows = [[k, v, rep.flags()[k]] for k, v in rep.margins().items()]
        text = to_csv(["margin", "value", "fail"], rows)
    _write(text, args.out)
    return EXIT_OK if rep.passed else EXIT_FEASIBILITY


def cmd_decompose(args: argparse.Namespace) -> int:
    circuit = analysis.build_ccz_decomposition()
    counts = analysis.gate_counts(circuit)
    U = analysis.align_global_phase(analysis.circuit_unitary(circuit), analysis.CCZ)
    ok = float(np.max(np.abs(U - analysis.CCZ))) < 1e-12
    lines = [str(g) for g in circuit]
    lines.append(f"gates={len(circuit)} CZ={counts['CZ']} H={counts['H']} T-type={counts['T-type']}")
    lines.append(f"equivalent to CCZ up to global phase: {'yes' if ok else 'no'}")
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_schedule(args: argparse.Namespace) -> int:
    if args.input:
        try:
            with open(args.input, encoding="utf-8") as fh:
                sched = parse_schedule(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read {args.input}: {exc.strerror}") from None
        except ScheduleParseError as exc:
            raise ConfigError(f"{args.input}: {exc}") from None
    elif args.config:
        sched = compile_ccz_schedule(load_config(args.config).protocol(with_decoherence=False))
    else:
        raise ConfigError("schedule needs --config or --in")
    _write(emit_schedule(sched), args.out)
    return EXIT_OK


def cmd_default_config(args: argparse.Namespace) -> int:
    _write(DEFAULT_TOML, args.out)
    return EXIT_OK


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cczsim", description="Cavity-mediated CCZ gate simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help: str, config: bool = True, fmt: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        if config:
            p.add_argument("--config", required=True, help="TOML run configuration")
        if fmt:
            p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--out", help="write to this file instead of stdout")
        p.set_defaults(func=func)
        return p

    add("run", cmd_run, "extract and score the gate")
    add("sweep", cmd_sweep, "simultaneous-mode error versus Rabi/coupling ratio").add_argument(
        "--ratios", required=True, help="comma-separated Omega/g values; 'inf' for the idealized limit"
    )
    add("feasibility", cmd_feasibility, "gate time versus coherence times")
    add("decompose", cmd_decompose, "25-gate conventional CCZ circuit", config=False, fmt=False)
    sched = add("schedule", cmd_schedule, "emit or normalize a pulse schedule", config=False, fmt=False)
    sched.add_argument("--config", help="compile the CCZ schedule for this configuration")
    sched.add_argument("--in", dest="input", help="parse and re-emit a schedule file")
    add("default-config", cmd_default_config, "print the default configuration", config=False, fmt=False)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
