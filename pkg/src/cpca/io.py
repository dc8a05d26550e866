"""File formats and run manifests.

Binary frame records (magic ``CPCAFRM1``), mode-function CSVs, JSON
artifacts with deterministic float rendering (17 significant digits), and
state-config files that rebuild a modal state from named constructor
parameters.  All numeric JSON keys carry SI unit suffixes where a unit
applies.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import states as _states
from .errors import ConfigError, DataFormatError
from .fock import FockState1
from .modes import (
    DEFAULT_BIN_DELAY,
    DEFAULT_DECAY_RATE,
    TMF,
    TimeGrid,
    normalize,
    timebin_pair,
)
from .simulate import DetectorFilter, FrameSet
from .states import ModalState, apply_loss

FRAME_MAGIC = b"CPCAFRM1"
_HEADER = struct.Struct("<8sIId")  # magic, N, M, T_seconds

TOOL_VERSION = "0.1.0"


# ---------------------------------------------------------------------------
# deterministic JSON


def format_float(value: float) -> str:
    """Render a float with 17 significant digits (round-trip exact)."""
    if not np.isfinite(value):
        raise ConfigError(f"cannot serialize non-finite value {value!r}")
    return f"{float(value):.17g}"


def _render_json(obj: Any) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{format_float(obj.real)}, {format_float(obj.imag)}]"
    if isinstance(obj, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {_render_json(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_render_json(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _render_json(obj.tolist())
    raise ConfigError(f"cannot serialize object of type {type(obj).__name__}")


def dump_json(obj: Any, path: str | Path) -> None:
    Path(path).write_text(_render_json(obj) + "\n")


def load_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON in {path}: {exc}") from exc


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# binary frame records


def write_frames(path: str | Path, frames: FrameSet, sidecar: bool = True) -> None:
    """Write the ``CPCAFRM1`` binary layout.

    Header: magic, little-endian u32 frame count, u32 bin count, f64
    duration in seconds; body: N*M (re, im) f64 pairs, frame-major.
    Unless disabled, frame metadata goes into a ``<path>.json`` sidecar.
    """
    header = _HEADER.pack(FRAME_MAGIC, frames.n_frames, frames.grid.M, frames.grid.T)
    body = np.ascontiguousarray(frames.data, dtype="<c16").tobytes()
    Path(path).write_bytes(header + body)
    if sidecar:
        dump_json(frames.meta, Path(str(path) + ".json"))


def read_frames(path: str | Path, meta: dict | None = None) -> FrameSet:
    if meta is None:
        sidecar = Path(str(path) + ".json")
        if sidecar.exists():
            meta = load_json(sidecar)
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DataFormatError(f"{path}: too short to hold a frame-record header")
    magic, n, m, duration = _HEADER.unpack_from(raw)
    if magic != FRAME_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}, expected {FRAME_MAGIC!r}")
    expected = _HEADER.size + n * m * 16
    if len(raw) != expected:
        raise DataFormatError(
            f"{path}: corrupt length {len(raw)}, header promises {expected} bytes"
        )
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(n, m)
    return FrameSet(TimeGrid(duration, m), data.astype(np.complex128), meta or {})


# ---------------------------------------------------------------------------
# mode-function CSV


def write_tmf_csv(path: str | Path, tmf: TMF, manifest_ref: str | None = None) -> None:
    """Columns: bin_index, time_s, re, im.  Optional manifest reference comment."""
    lines = []
    if manifest_ref:
        lines.append(f"# manifest: {manifest_ref}")
    lines.append("bin_index,time_s,re,im")
    times = tmf.grid.times()
    for j, (t, a) in enumerate(zip(times, tmf.amp)):
        lines.append(f"{j},{format_float(t)},{format_float(a.real)},{format_float(a.imag)}")
    Path(path).write_text("\n".join(lines) + "\n")


def tmf_to_json_dict(tmf: TMF) -> dict[str, Any]:
    """JSON form of a mode function: grid block plus [re, im] amplitude pairs."""
    return {
        "grid": {"duration_s": tmf.grid.T, "bins": tmf.grid.M},
        "amp": [complex(a) for a in tmf.amp],
    }


def tmf_from_json_dict(raw: dict[str, Any]) -> TMF:
    try:
        grid = TimeGrid(float(raw["grid"]["duration_s"]), int(raw["grid"]["bins"]))
        amp = np.array([complex(re, im) for re, im in raw["amp"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"malformed mode-function JSON: {exc}") from exc
    return TMF(grid, amp)


def read_tmf_csv(path: str | Path) -> TMF:
    rows = []
    time_last = None
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("bin_index"):
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise DataFormatError(f"{path}: malformed row {line!r}")
        rows.append(complex(float(parts[2]), float(parts[3])))
        time_last = float(parts[1])
    if not rows or time_last is None:
        raise DataFormatError(f"{path}: no mode samples found")
    grid = TimeGrid(time_last, len(rows))  # last sample sits at t = T
    return TMF(grid, np.array(rows))


# ---------------------------------------------------------------------------
# state configuration

_SMALL = _states.DEFAULT_CUTOFF_SMALL
_SQUEEZED = _states.DEFAULT_CUTOFF_SQUEEZED


def _as_complex(value: Any, name: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"parameter {name!r} must be a number or [re, im] pair, got {value!r}")


@dataclass(frozen=True)
class StateConfig:
    """Declarative state description consumed by the simulate command.

    ``constructor`` names a state-model constructor; ``parameters`` its
    numeric arguments (complex values as ``[re, im]`` pairs).  Time-bin
    wave packets are generated from the ``timebins`` block.
    """

    constructor: str
    parameters: dict[str, Any] = field(default_factory=dict)
    duration_s: float = 1.5e-6
    bins: int = 64
    gamma_per_s: float = DEFAULT_DECAY_RATE
    delta_t_s: float = DEFAULT_BIN_DELAY
    center1_s: float | None = None
    loss_p: float = 0.0
    cutoff: int | None = None

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "StateConfig":
        if not isinstance(raw, dict) or "constructor" not in raw:
            raise ConfigError("state config must be an object with a 'constructor' key")
        grid = raw.get("grid", {})
        bins_ = raw.get("timebins", {})
        known = {"constructor", "parameters", "grid", "timebins", "loss_p", "cutoff"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown state-config keys: {sorted(extra)}")
        return cls(
            constructor=str(raw["constructor"]),
            parameters=dict(raw.get("parameters", {})),
            duration_s=float(grid.get("duration_s", 1.5e-6)),
            bins=int(grid.get("bins", 64)),
            gamma_per_s=float(bins_.get("gamma_per_s", DEFAULT_DECAY_RATE)),
            delta_t_s=float(bins_.get("delta_t_s", DEFAULT_BIN_DELAY)),
            center1_s=(None if bins_.get("center1_s") is None else float(bins_["center1_s"])),
            loss_p=float(raw.get("loss_p", 0.0)),
            cutoff=(None if raw.get("cutoff") is None else int(raw["cutoff"])),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "StateConfig":
        return cls.from_dict(load_json(path))

    def to_dict(self) -> dict[str, Any]:
        return {
            "constructor": self.constructor,
            "parameters": self.parameters,
            "grid": {"duration_s": self.duration_s, "bins": self.bins},
            "timebins": {
                "gamma_per_s": self.gamma_per_s,
                "delta_t_s": self.delta_t_s,
                "center1_s": self.center1_s,
            },
            "loss_p": self.loss_p,
            "cutoff": self.cutoff,
        }

    def build(self) -> tuple[ModalState, TimeGrid]:
        """Validate and construct the modal state this config describes."""
        grid = TimeGrid(self.duration_s, self.bins)
        w1, w2 = timebin_pair(grid, self.gamma_per_s, self.center1_s, self.delta_t_s)
        p = self.parameters
        name = self.constructor
        try:
            if name == "vacuum_state":
                state = _states.vacuum_state(grid)
            elif name == "fock_mode_state":
                n = int(p.get("n", 1))
                c1 = _as_complex(p.get("c1", 1.0), "c1")
                c2 = _as_complex(p.get("c2", 0.0), "c2")
                carrier = normalize(TMF(grid, c1 * w1.amp + c2 * w2.amp))
                state = _states.fock_mode_state(carrier, n, self.cutoff)
            elif name == "single_photon_qubit":
                state = _states.single_photon_qubit(
                    _as_complex(p["p1"], "p1"), _as_complex(p["p2"], "p2"), w1, w2
                )
            elif name == "two_photon_state":
                r = [_as_complex(p[k], k) for k in ("r1", "r2", "r3", "r4")]
                f1 = normalize(TMF(grid, r[0] * w1.amp + r[1] * w2.amp))
                f2 = normalize(TMF(grid, r[2] * w1.amp + r[3] * w2.amp))
                state = _states.two_photon_state(f1, f2)
            elif name == "squeezed_vacuum":
                sq = _states.squeezed_vacuum(float(p["r"]), self.cutoff or _SQUEEZED)
                state = ModalState(
                    carriers=(w1,),
                    rho=sq.to_density(),
                    provenance={"constructor": name, "r": float(p["r"])},
                )
            elif name == "photon_subtracted_dualrail":
                state = _states.photon_subtracted_dualrail(
                    _as_complex(p["s1"], "s1"),
                    _as_complex(p["s2"], "s2"),
                    float(p["r"]),
                    w1,
                    w2,
                    self.cutoff or _SQUEEZED,
                )
            elif name == "photon_subtracted_epr":
                isq2 = 1.0 / np.sqrt(2.0)
                state = _states.photon_subtracted_dualrail(
                    isq2, -1j * isq2, float(p["r"]), w1, w2, self.cutoff or _SQUEEZED
                )
            else:
                raise ConfigError(f"unknown state constructor {name!r}")
        except KeyError as exc:
            raise ConfigError(f"state constructor {name!r} needs parameter {exc}") from exc
        if self.loss_p:
            state = apply_loss(state, self.loss_p)
        return state, grid


# ---------------------------------------------------------------------------
# run manifest


@dataclass
class RunManifest:
    """Provenance record written alongside every command's outputs."""

    command: str
    seed: int | None = None
    grid: dict[str, Any] | None = None
    n_frames: int | None = None
    filters: dict[str, Any] | None = None
    state: dict[str, Any] | None = None
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    tool_version: str = TOOL_VERSION

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path: str | Path) -> None:
        self.outputs[str(path)] = sha256_file(path)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool_version": self.tool_version,
            "command": self.command,
            "seed": self.seed,
            "grid": self.grid,
            "n_frames": self.n_frames,
            "filters": self.filters,
            "state": self.state,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }

    def write(self, path: str | Path) -> None:
        dump_json(self.to_dict(), path)


def grid_meta(grid: TimeGrid) -> dict[str, Any]:
    return {"duration_s": grid.T, "bins": grid.M, "dt_s": grid.dt}


def provenance_meta(value: Any) -> Any:
    """Make state provenance JSON-friendly (complex -> [re, im] done by dump)."""
    if isinstance(value, dict):
        return {k: provenance_meta(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [provenance_meta(v) for v in value]
    return value
