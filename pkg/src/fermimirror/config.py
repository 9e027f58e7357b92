"""JSON run configuration.

Frequencies are written in Hz under keys ending in ``_hz`` and converted to
rad/s (one factor of 2 pi) when the config is parsed; nothing downstream
converts again. Unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .effmodel import EffectiveModel, PhysicalParams, build_effective_model
from .errors import ConfigError

__all__ = ["RunConfig", "SCHEMA", "parse_config", "load_config", "TWO_PI"]

TWO_PI = 2.0 * math.pi

# stems that name a frequency and therefore need the _hz suffix
FREQUENCY_STEMS = {
    "kappa", "U0", "g0", "pump_atom_detuning", "eta", "pump_cavity_detuning",
    "delta", "omega_m", "g",
}

_pos = {"type": "number", "exclusiveMinimum": 0}
_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_posint = {"type": "integer", "minimum": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["physical"],
    "properties": {
        "physical": {
            "type": "object",
            "additionalProperties": False,
            "required": ["cavity_length_m", "atom_number", "atom_mass_kg", "kappa_hz"],
            "properties": {
                "cavity_length_m": _pos,
                "atom_number": _posint,
                "atom_mass_kg": _pos,
                "kappa_hz": _pos,
                "wavenumber_per_m": _pos,
                "wavelength_m": _pos,
                "U0_hz": _num,
                "g0_hz": _pos,
                "pump_atom_detuning_hz": _num,
                "eta_hz": _nonneg,
                "pump_cavity_detuning_hz": _num,
                "kF_over_K": _pos,
            },
            "oneOf": [
                {"required": ["wavenumber_per_m"], "not": {"required": ["wavelength_m"]}},
                {"required": ["wavelength_m"], "not": {"required": ["wavenumber_per_m"]}},
            ],
        },
        "regime": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"warn_K_over_kF": _pos, "warn_recoil": _pos},
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "variable": {"enum": ["eta", "detuning"]},
                "from_over_kappa": _num,
                "to_over_kappa": _num,
                "steps": {"type": "integer", "minimum": 2},
                "eta_over_kappa": _nonneg,
            },
        },
        "spectrum": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "eta_over_kappa": _nonneg,
                "omega_from_over_kappa": _num,
                "omega_to_over_kappa": _num,
                "points": {"type": "integer", "minimum": 2},
                "convention": {"enum": ["printed-vacuum", "paper-stated", "symmetric-classical"]},
                "branch": {"enum": ["lowest", "highest"]},
            },
        },
        "simulate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["linear", "meanfield"]},
                "eta_over_kappa": _nonneg,
                "branch": {"enum": ["lowest", "highest"]},
                "dt_over_kappa_inv": _pos,
                "periods": _pos,
                "ensemble": _posint,
                "burn_in": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "noise": {"enum": ["printed-vacuum", "paper-stated", "symmetric-classical"]},
                "record_every": _posint,
                "segments": {"type": "integer", "minimum": 4},
                "perturbation": _num,
            },
        },
        "edcheck": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "j_min": {"type": "integer"},
                "j_max": {"type": "integer"},
                "n_fermions": _posint,
                "n_photon_max": {"type": "integer", "minimum": 0},
                "kick": _posint,
                "U0_hz": _num,
                "delta_hz": _num,
                "mass_kg": _pos,
                "length_m": _pos,
                "dim_cap": _posint,
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output_dir": {"type": "string"},
    },
}

DEFAULTS = {
    "regime": {"warn_K_over_kF": 0.2, "warn_recoil": 0.2},
    "sweep": {"variable": "eta", "from_over_kappa": 0.0, "to_over_kappa": 8.0, "steps": 401},
    "spectrum": {
        "omega_from_over_kappa": -3.0, "omega_to_over_kappa": 3.0, "points": 1001,
        "convention": "printed-vacuum", "branch": "lowest",
    },
    "simulate": {
        "mode": "linear", "branch": "lowest", "dt_over_kappa_inv": 0.005, "periods": 500.0,
        "ensemble": 200, "burn_in": 0.1, "noise": "symmetric-classical", "record_every": 4,
        "segments": 8, "perturbation": 0.01,
    },
    "edcheck": {
        "j_min": -5, "j_max": 6, "n_fermions": 6, "n_photon_max": 2, "kick": 1,
        "U0_hz": 5.0, "delta_hz": 0.0, "mass_kg": 1.5e-25, "length_m": 1e-5,
        "dim_cap": 100_000,
    },
}


@dataclass
class RunConfig:
    physical: PhysicalParams
    regime: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    spectrum: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    edcheck: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "out"
    raw: dict = field(default_factory=dict)
    source: str | None = None

    @property
    def model(self) -> EffectiveModel:
        return build_effective_model(self.physical)


def _path(parts) -> str:
    return ".".join(str(p) for p in parts) or "<root>"


def _suffix_errors(doc: dict) -> None:
    for block, body in doc.items():
        if not isinstance(body, dict):
            continue
        for key in body:
            stem = key
            for unit in ("_rad_s", "_mhz", "_khz", "_ghz", "_hz_per", "_rad"):
                if key.lower().endswith(unit):
                    stem = key[: -len(unit)]
            if stem in FREQUENCY_STEMS and key != f"{stem}_hz":
                raise ConfigError(
                    f"{block}.{key}: frequency keys must be given in Hz with the '_hz' suffix "
                    f"(use '{stem}_hz')"
                )


def _schema_error(err: jsonschema.ValidationError) -> ConfigError:
    where = list(err.absolute_path)
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else err.message
        return ConfigError(f"{_path(where + [missing])}: required field missing")
    if err.validator == "additionalProperties":
        return ConfigError(f"{_path(where)}: {err.message}")
    if err.validator == "oneOf" and where == ["physical"]:
        return ConfigError("physical: give exactly one of wavenumber_per_m or wavelength_m")
    return ConfigError(f"{_path(where)}: {err.message}")


def parse_config(doc: dict, source: str | None = None) -> RunConfig:
    """Validate a config mapping and convert it to SI angular units."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _suffix_errors(doc)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), e.path))
    if errors:
        raise _schema_error(errors[0])

    ph = doc["physical"]

    def hz(key):
        return None if key not in ph else TWO_PI * float(ph[key])

    params = PhysicalParams(
        cavity_length=float(ph["cavity_length_m"]),
        atom_number=int(ph["atom_number"]),
        atom_mass=float(ph["atom_mass_kg"]),
        kappa=hz("kappa_hz"),
        wavenumber=ph.get("wavenumber_per_m"),
        wavelength=ph.get("wavelength_m"),
        U0=hz("U0_hz"),
        g0=hz("g0_hz"),
        pump_atom_detuning=hz("pump_atom_detuning_hz"),
        eta=hz("eta_hz") or 0.0,
        pump_cavity_detuning=hz("pump_cavity_detuning_hz") or 0.0,
        kF_over_K=ph.get("kF_over_K"),
    )
    blocks = {}
    for name, dflt in DEFAULTS.items():
        merged = dict(dflt)
        merged.update(doc.get(name, {}))
        blocks[name] = merged
    ed = blocks["edcheck"]
    ed["U0"] = TWO_PI * ed.pop("U0_hz")
    ed["delta"] = TWO_PI * ed.pop("delta_hz")
    return RunConfig(
        physical=params,
        seed=int(doc.get("seed", 0)),
        output_dir=str(doc.get("output_dir", "out")),
        raw=json.loads(json.dumps(doc)),
        source=source,
        **blocks,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config(doc, source=str(path))
