"""Output files and run metadata.

CSV values are written with ``%.17g`` so identical inputs give
byte-identical files. Every run also writes ``run_record.json`` holding
the config snapshot, model hash, seeds, kernel backend and a manifest of
the emitted files (size and sha256).
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import platform
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

__all__ = ["CSV_SCHEMA_VERSION", "HEADERS", "RunRecord", "write_csv", "write_json", "file_entry"]

CSV_SCHEMA_VERSION = 1

HEADERS = {
    "model": ["quantity", "value"],
    "steady": ["branch_index", "n", "c_s", "X_M", "delta_tilde", "residual", "stability",
               "max_re_lambda", "fold_flag"],
    "sweep": ["sweep_value", "branch_index", "n", "X_M", "delta_tilde", "stability", "fold_flag"],
    "spectrum": ["omega", "S_XM", "S_Xc_transfer", "S_Pc_transfer", "S_Xc_printed",
                 "S_Pc_printed"],
    "periodogram": ["omega", "S_XM_empirical", "S_XM_transfer"],
    "trajectory_linear": ["t", "X_M", "P_M", "X", "P"],
    "trajectory_meanfield": ["t", "X_M", "P_M", "re_c", "im_c", "n"],
}


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool,)):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    return "%.17g" % float(v)


def write_csv(path: Path, kind: str, rows) -> Path:
    """Write rows under the fixed header for ``kind``."""
    header = HEADERS[kind]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"{kind} row has {len(row)} fields, expected {len(header)}")
            w.writerow([_fmt(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def write_json(path: Path, obj) -> Path:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def file_entry(path: Path) -> dict:
    data = Path(path).read_bytes()
    return {"name": Path(path).name, "size": len(data),
            "sha256": hashlib.sha256(data).hexdigest()}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunRecord:
    command: str
    config: dict
    model_hash: str | None
    seeds: list = field(default_factory=list)
    backend: str | None = None
    rng: str | None = None
    argv: list = field(default_factory=list)
    started: str = field(default_factory=_now)
    finished: str | None = None
    files: list = field(default_factory=list)
    status: str = "ok"
    exit_code: int = 0
    version: str = field(default_factory=version)
    csv_schema_version: int = CSV_SCHEMA_VERSION

    def add(self, path: Path) -> None:
        self.files.append(file_entry(path))

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "status": self.status,
            "exit_code": self.exit_code,
            "config": self.config,
            "model_hash": self.model_hash,
            "seeds": self.seeds,
            "kernel_backend": self.backend,
            "rng": self.rng,
            "argv": self.argv,
            "timestamps": {"started": self.started, "finished": self.finished},
            "tool_version": self.version,
            "python": platform.python_version(),
            "csv_schema_version": self.csv_schema_version,
            "manifest": self.files,
        }

    def write(self, out_dir: Path) -> Path:
        self.finished = _now()
        return write_json(Path(out_dir) / "run_record.json", self.to_dict())
