"""Configuration, time-series CSV and binary checkpoints."""

from __future__ import annotations

import csv
import difflib
import io
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from .diagnostics import DiagnosticsRecord
from .dissipation import DissipationSpec
from .solver import SolverState
from .spectral import Grid, SpectralField


class ConfigError(ValueError):
    pass


class CheckpointError(IOError):
    pass


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

MODES = ("simulate", "cascade", "verify", "sweep")


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit_open(v):
    return 0 < v < 1


def _pow2(v):
    return v >= 16 and v & (v - 1) == 0


# section -> key -> (type, default, check)
SCHEMA: dict[str, dict[str, tuple]] = {
    "output": {
        "dir": (str, "out", None),
        "cadence": (int, 10, _positive),
        "checkpoint_every": (int, 0, _nonneg),
    },
    "grid": {
        "n": (int, 128, _pow2),
    },
    "dissipation": {
        "gamma": (float, 0.25, _nonneg),
        "d": (int, 2, _positive),
    },
    "solver": {
        "cfl_safety": (float, 0.5, _unit_open),
        "dt_min": (float, 1e-8, _positive),
        "dt_max": (float, 1e-2, _positive),
        "t_end": (float, 1.0, _nonneg),
        "dealias_fraction": (float, 2.0 / 3.0, lambda v: 0 < v <= 1),
        "advection": (bool, True, None),
        "dissipation": (bool, True, None),
    },
    "init": {
        "family": (str, "random", lambda v: v in ("random", "shell", "taylor_green")),
        "seed": (int, 0, None),
        "energy": (float, 1.0, _positive),
        "k_peak": (float, 4.0, _positive),
        "shell": (int, 2, _nonneg),
    },
    "diagnostics": {
        "barrier_C": (float, 1.0, _positive),
    },
    "cascade": {
        "C": (float, 1.0, _nonneg),
        "jmax": (int, 20, lambda v: v >= 10),
        "diss_form": (str, "shifted_j", lambda v: v in ("shifted_j", "symbol_log")),
        "t_end": (float, 1.0, _nonneg),
        "family": (str, "bump", lambda v: v in ("bump", "single")),
        "amplitude": (float, 0.1, _nonneg),
        "center": (int, 2, _nonneg),
        "atol": (float, 1e-10, _positive),
        "rtol": (float, 1e-8, _positive),
        "h_min": (float, 1e-14, _positive),
        "max_steps": (int, 200_000, _positive),
        "blowup_threshold": (float, 1e12, _positive),
    },
    "verify": {
        "n": (int, 64, _pow2),
        "ensemble": (int, 20, _positive),
    },
    "sweep": {
        "gammas": (list, [0.0, 0.25, 0.5, 1.0], lambda v: len(v) > 0 and all(g >= 0 for g in v)),
        "horizon": (float, 1.0, _positive),
    },
}

TOP_LEVEL = ("mode", "seed")


def valid_keys() -> list[str]:
    keys = list(TOP_LEVEL)
    for section, entries in SCHEMA.items():
        keys += [f"{section}.{k}" for k in entries]
    return keys


@dataclass
class RunConfig:
    mode: str
    seed: int = 0
    sections: dict[str, dict[str, Any]] = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.sections[section]

    @property
    def output_dir(self) -> Path:
        return Path(self.sections["output"]["dir"])

    def grid(self) -> Grid:
        return Grid(self["grid"]["n"])

    def spec(self) -> DissipationSpec:
        return DissipationSpec(self["dissipation"]["gamma"], self["dissipation"]["d"])

    def solver_config(self):
        from .solver import SolverConfig

        s = self["solver"]
        return SolverConfig(
            grid=self.grid(), spec=self.spec(), cfl_safety=s["cfl_safety"], dt_min=s["dt_min"],
            dt_max=s["dt_max"], dealias_fraction=s["dealias_fraction"], t_end=s["t_end"],
            cadence=self["output"]["cadence"], advection=s["advection"], dissipation=s["dissipation"],
            checkpoint_every=self["output"]["checkpoint_every"],
        )

    def cascade_params(self, gamma: float | None = None):
        from .cascade import CascadeParams

        c = self["cascade"]
        return CascadeParams(C=c["C"], gamma=self["dissipation"]["gamma"] if gamma is None else gamma,
                             d=self["dissipation"]["d"], jmax=c["jmax"], diss_form=c["diss_form"])

    def cascade_controller(self):
        from .cascade import CascadeController

        c = self["cascade"]
        return CascadeController(atol=c["atol"], rtol=c["rtol"], h_min=c["h_min"], max_steps=c["max_steps"],
                                 blowup_threshold=c["blowup_threshold"])


def _unknown(key: str) -> ConfigError:
    close = difflib.get_close_matches(key, valid_keys(), n=1, cutoff=0.5)
    hint = f"; did you mean {close[0]!r}?" if close else ""
    return ConfigError(f"unknown config key {key!r}{hint}")


def _coerce(path: str, value, kind: type):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        try:
            return [float(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected a list of numbers") from None
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def parse_config(raw: Any) -> RunConfig:
    if not isinstance(raw, dict) or not raw:
        raise ConfigError("config is empty or not a mapping")
    for key, value in raw.items():
        if key not in TOP_LEVEL and key not in SCHEMA:
            raise _unknown(str(key))
        if key in SCHEMA:
            if not isinstance(value, dict):
                raise ConfigError(f"{key}: expected a mapping")
            for sub in value:
                if sub not in SCHEMA[key]:
                    raise _unknown(f"{key}.{sub}")
    if "mode" not in raw:
        raise ConfigError("mode: required (one of simulate, cascade, verify, sweep)")
    mode = raw["mode"]
    if mode not in MODES:
        raise ConfigError(f"mode: must be one of {', '.join(MODES)}, got {mode!r}")
    seed = _coerce("seed", raw.get("seed", 0), int)

    sections = {}
    for section, entries in SCHEMA.items():
        given = raw.get(section) or {}
        values = {}
        for key, (kind, default, check) in entries.items():
            path = f"{section}.{key}"
            value = _coerce(path, given[key], kind) if key in given else (list(default) if kind is list else default)
            if check is not None and not check(value):
                raise ConfigError(f"{path}: invalid value {value!r}")
            values[key] = value
        sections[section] = values
    s = sections["solver"]
    if s["dt_min"] > s["dt_max"]:
        raise ConfigError("solver.dt_min: must not exceed solver.dt_max")
    if sections["dissipation"]["d"] != 2 and mode == "simulate":
        raise ConfigError("dissipation.d: the PDE solver supports d = 2 only")
    return RunConfig(mode, seed, sections)


def load_config(path) -> RunConfig:
    """Read and validate a YAML run configuration; unknown keys are errors."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(raw)


# --------------------------------------------------------------------------
# time series
# --------------------------------------------------------------------------

SCALAR_COLUMNS = ("t", "energy", "c", "diss_cum", "k_current", "j_ku", "barrier_breach")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_timeseries(records: Sequence[DiagnosticsRecord], dest) -> None:
    """CSV with one row per record; floats carry 17 significant digits."""
    if not records:
        raise ValueError("no diagnostics records to write")
    nb = len(records[0].b)
    header = list(SCALAR_COLUMNS) + [f"b_{j}" for j in range(nb)]

    def rows():
        yield header
        for r in records:
            yield ([_fmt(r.t), _fmt(r.energy), _fmt(r.c), _fmt(r.diss_cum),
                    "" if r.k_current is None else str(r.k_current), _fmt(r.j_ku), str(int(r.barrier_breach))]
                   + [_fmt(v) for v in r.b])

    if hasattr(dest, "write"):
        csv.writer(dest, lineterminator="\n").writerows(rows())
        return
    with open(dest, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows())


def read_timeseries(src) -> list[DiagnosticsRecord]:
    fh = src if hasattr(src, "read") else open(src, newline="")
    try:
        reader = csv.reader(fh)
        header = next(reader)
        nb = len(header) - len(SCALAR_COLUMNS)
        out = []
        for row in reader:
            t, energy, c, diss, k, jku, breach = row[:7]
            out.append(DiagnosticsRecord(float(t), float(energy), float(c), float(diss),
                                         None if k == "" else int(k), float(jku), bool(int(breach)),
                                         np.array([float(v) for v in row[7:7 + nb]])))
        return out
    finally:
        if fh is not src:
            fh.close()


def write_table(rows: Iterable[Sequence], header: Sequence[str], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------

MAGIC = b"SSNS"
VERSION = 1
# magic, version, d, n, gamma, t, step_count, dt, energy0, diss_cum
_HEADER = struct.Struct("<4sIIIddQddd")


@dataclass
class Checkpoint:
    state: SolverState
    gamma: float
    d: int = 2
    energy0: float = math.nan


def write_checkpoint(dest, state: SolverState, spec: DissipationSpec, energy0: float = math.nan) -> None:
    grid = state.omega.grid
    header = _HEADER.pack(MAGIC, VERSION, spec.d, grid.n, spec.gamma, state.t, state.step_count, state.dt,
                          energy0, state.diss_cum)
    payload = np.ascontiguousarray(state.omega.coeffs, dtype="<c16").tobytes()
    if hasattr(dest, "write"):
        dest.write(header + payload)
        return
    tmp = f"{dest}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header + payload)
    os.replace(tmp, dest)


def read_checkpoint(src) -> Checkpoint:
    if hasattr(src, "read"):
        data = src.read()
    else:
        with open(src, "rb") as fh:
            data = fh.read()
    if len(data) < _HEADER.size:
        raise CheckpointError("checkpoint truncated inside the header")
    magic, version, d, n, gamma, t, steps, dt, energy0, diss_cum = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (this build reads {VERSION})")
    try:
        grid = Grid(n)
    except ValueError as exc:
        raise CheckpointError(f"checkpoint header holds an invalid grid size: {exc}") from None
    expected = n * (n // 2 + 1) * 16
    payload = data[_HEADER.size:]
    if len(payload) != expected:
        raise CheckpointError(f"checkpoint payload has {len(payload)} bytes, expected {expected}")
    coeffs = np.frombuffer(payload, dtype="<c16").reshape(grid.shape).astype(complex)
    state = SolverState(SpectralField(grid, coeffs, "vorticity"), t, steps, dt, diss_cum)
    return Checkpoint(state, gamma, d, energy0)


def checkpoint_roundtrip(state: SolverState, spec: DissipationSpec | None = None, energy0: float = math.nan) -> SolverState:
    buf = io.BytesIO()
    write_checkpoint(buf, state, spec or DissipationSpec(), energy0)
    buf.seek(0)
    return read_checkpoint(buf).state
