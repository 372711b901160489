"""TOML run configuration: loading, validation, normalization.

Frequencies in the file are ordinary frequencies (Hz); :meth:`RunConfig.protocol`
is the single place where they become angular rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import tomli
import tomli_w

from .dynamics import EvolutionMode
from .protocol import ProtocolConfig

TWO_PI = 2 * math.pi

DEFAULT_TOML = """\
mode = "idealized"

[couplings]
g1 = 220e6
g2 = 220e6
g3 = 220e6

[pulse]
rabi_over_g = 10.0

[cavity]
n_max = 3

[decoherence]
gamma3r_inv_s = 1e-6
gamma3p_inv_s = 1e-6
Q = 5e4
nu_c_hz = 5e9

[output]
format = "json"
"""


class ConfigError(ValueError):
    """Invalid or unreadable configuration; the message names the offending key."""


@dataclass(frozen=True)
class DecoherenceConfig:
    gamma3r_inv_s: float = math.inf
    gamma3p_inv_s: float = math.inf
    kappa_inv_s: float | None = None
    Q: float | None = None
    nu_c_hz: float | None = None
    relax_to: int = 2
    simulate: bool = False

    @property
    def kappa_inv(self) -> float:
        if self.kappa_inv_s is not None:
            return self.kappa_inv_s
        return self.Q / (TWO_PI * self.nu_c_hz)


@dataclass(frozen=True)
class RunConfig:
    g1: float
    g2: float
    g3: float
    rabi_over_g: float | None = None
    rabi_hz: float | None = None
    mode: str = "idealized"
    n_max: int = 3
    decoherence: DecoherenceConfig | None = None
    output_format: str = "json"

    @property
    def rabi(self) -> float:
        """Rabi frequency in Hz."""
        if self.rabi_hz is not None:
            return self.rabi_hz
        return self.rabi_over_g * max(self.g1, self.g2, self.g3)

    def protocol(self, with_decoherence: bool | None = None) -> ProtocolConfig:
        dec = self.decoherence
        use_dec = dec is not None and (dec.simulate if with_decoherence is None else with_decoherence)
        rates = {}
        if use_dec:
            rates = dict(
                gamma3r=1 / dec.gamma3r_inv_s,
                gamma3p=1 / dec.gamma3p_inv_s,
                kappa=1 / dec.kappa_inv,
                relax_to=dec.relax_to,
            )
        return ProtocolConfig(
            TWO_PI * self.g1,
            TWO_PI * self.g2,
            TWO_PI * self.g3,
            TWO_PI * self.rabi,
            mode=EvolutionMode(self.mode),
            n_max=self.n_max,
            **rates,
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "mode": self.mode,
            "couplings": {"g1": self.g1, "g2": self.g2, "g3": self.g3},
            "pulse": {"rabi_over_g": self.rabi_over_g} if self.rabi_over_g is not None else {"rabi_hz": self.rabi_hz},
            "cavity": {"n_max": self.n_max},
            "output": {"format": self.output_format},
        }
        dec = self.decoherence
        if dec is not None:
            section: dict[str, Any] = {}
            for key in ("gamma3r_inv_s", "gamma3p_inv_s"):
                if math.isfinite(getattr(dec, key)):
                    section[key] = getattr(dec, key)
            if dec.kappa_inv_s is not None:
                section["kappa_inv_s"] = dec.kappa_inv_s
            else:
                section["Q"] = dec.Q
                section["nu_c_hz"] = dec.nu_c_hz
            section["relax_to"] = dec.relax_to
            section["simulate"] = dec.simulate
            out["decoherence"] = section
        return out

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())


def _number(table: dict, section: str, key: str, *, required: bool = True, default=None) -> float | None:
    name = f"{section}.{key}"
    if key not in table:
        if required:
            raise ConfigError(f"missing required key {name}")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(f"{name} must be positive and finite, got {value!r}")
    return float(value)


def _table(doc: dict, name: str, required: bool) -> dict | None:
    if name not in doc:
        if required:
            raise ConfigError(f"missing required section [{name}]")
        return None
    if not isinstance(doc[name], dict):
        raise ConfigError(f"{name} must be a table")
    return doc[name]


def parse_config(text: str) -> RunConfig:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None

    couplings = _table(doc, "couplings", required=True)
    g = [_number(couplings, "couplings", k) for k in ("g1", "g2", "g3")]

    pulse = _table(doc, "pulse", required=True)
    ratio = _number(pulse, "pulse", "rabi_over_g", required=False)
    rabi_hz = _number(pulse, "pulse", "rabi_hz", required=False)
    if (ratio is None) == (rabi_hz is None):
        raise ConfigError("set exactly one of pulse.rabi_over_g and pulse.rabi_hz")

    mode = doc.get("mode", "idealized")
    if mode not in ("idealized", "simultaneous"):
        raise ConfigError(f"mode must be 'idealized' or 'simultaneous', got {mode!r}")

    cavity = _table(doc, "cavity", required=False) or {}
    n_max = cavity.get("n_max", 3)
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 2:
        raise ConfigError(f"cavity.n_max must be an integer >= 2, got {n_max!r}")

    output = _table(doc, "output", required=False) or {}
    fmt = output.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError(f"output.format must be 'json' or 'csv', got {fmt!r}")

    dec_table = _table(doc, "decoherence", required=False)
    decoherence = None
    if dec_table is not None:
        kappa_inv = _number(dec_table, "decoherence", "kappa_inv_s", required=False)
        Q = _number(dec_table, "decoherence", "Q", required=False)
        nu_c = _number(dec_table, "decoherence", "nu_c_hz", required=False)
        if kappa_inv is not None and (Q is not None or nu_c is not None):
            raise ConfigError("decoherence.kappa_inv_s conflicts with decoherence.Q / decoherence.nu_c_hz")
        if kappa_inv is None and (Q is None or nu_c is None):
            missing = "decoherence.Q" if Q is None else "decoherence.nu_c_hz"
            raise ConfigError(f"missing required key {missing} (or give decoherence.kappa_inv_s)")
        relax_to = dec_table.get("relax_to", 2)
        if relax_to not in (0, 1, 2) or isinstance(relax_to, bool):
            raise ConfigError(f"decoherence.relax_to must be 0, 1 or 2, got {relax_to!r}")
        simulate = dec_table.get("simulate", False)
        if not isinstance(simulate, bool):
            raise ConfigError(f"decoherence.simulate must be true or false, got {simulate!r}")
        decoherence = DecoherenceConfig(
            gamma3r_inv_s=_number(dec_table, "decoherence", "gamma3r_inv_s", required=False, default=math.inf),
            gamma3p_inv_s=_number(dec_table, "decoherence", "gamma3p_inv_s", required=False, default=math.inf),
            kappa_inv_s=kappa_inv,
            Q=Q,
            nu_c_hz=nu_c,
            relax_to=relax_to,
            simulate=simulate,
        )

    cfg = RunConfig(g[0], g[1], g[2], ratio, rabi_hz, mode, n_max, decoherence, fmt)
    if mode == "simultaneous" and cfg.rabi <= max(g):
        key = "pulse.rabi_over_g" if ratio is not None else "pulse.rabi_hz"
        raise ConfigError(f"{key}: simultaneous mode needs the Rabi frequency above every coupling")
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
