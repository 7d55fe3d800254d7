"""Declarative run files.

A run file is one JSON object. Sites are labelled from 1. Example::

    {"network": "paper-trimer-quantum", "mode": "two_master",
     "initial_state": {"kind": "separable_boson", "sites": [1, 2]},
     "z_max": 100, "z_points": 201}

``initial_state`` is an integer site (one particle), an object with
``kind`` and ``sites`` (two particles), or ``{"kind": "custom",
"matrix": [[{"re": .., "im": ..}, ...], ...]}``. Plain numbers are
accepted for matrix entries.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import ValidationError
from .network import PRESETS, NetworkSpec
from .noise import PIECEWISE, WIENER
from .states import KINDS, InitialStateKind, make_initial, single_excitation
from .trajectory import DEFAULT_STEP, SCHEMES

__all__ = ["MODES", "FORMATS", "RunConfig", "load_config"]

MODES = ("single_master", "two_master", "trajectories", "steady_state",
         "dephasing_sweep", "compare")
FORMATS = ("json", "csv")
SECTORS = ("single", "boson", "fermion", "distinguishable")
MAX_SEED = 2**64 - 1

_KNOWN_KEYS = {
    "network", "mode", "initial_state", "z_max", "z_points", "z_grid", "ensemble_size",
    "seed", "sweep_factors", "noise_mode", "step", "scheme", "reference_z", "sector",
    "output_dir", "formats",
}


@dataclass
class RunConfig:
    network: Union[str, dict]
    mode: str
    initial_state: Union[int, dict, None] = None
    z_max: float = 12.0
    z_points: int = 121
    z_grid: Optional[list] = None
    ensemble_size: int = 1000
    seed: int = 0
    sweep_factors: list = field(default_factory=lambda: [1.0])
    noise_mode: str = WIENER
    step: float = DEFAULT_STEP
    scheme: str = "exponential"
    reference_z: Optional[float] = None
    sector: Optional[str] = None
    output_dir: str = "out"
    formats: list = field(default_factory=lambda: list(FORMATS))

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        unknown = sorted(set(data) - _KNOWN_KEYS)
        problems = [f"unknown key '{k}'" for k in unknown]
        for key in ("network", "mode"):
            if key not in data:
                problems.append(f"missing required key '{key}'")
        if problems:
            raise ValidationError("invalid config: " + "; ".join(problems), problems)
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    # ------------------------------------------------------------------

    def validate(self) -> None:
        problems = []
        if self.mode not in MODES:
            problems.append(f"mode must be one of {list(MODES)}")
        network_ok = True
        try:
            self.network_spec()
        except ValidationError as exc:
            network_ok = False
            problems.append(str(exc))
        if self.z_grid is None:
            if not isinstance(self.z_points, int) or self.z_points < 2:
                problems.append("z_points must be an integer >= 2")
            if not self.z_max > 0:
                problems.append("z_max must be positive")
        else:
            z = np.asarray(self.z_grid, dtype=float)
            if z.ndim != 1 or z.size < 2 or z[0] != 0 or np.any(np.diff(z) <= 0):
                problems.append("z_grid must be strictly ascending, start at 0 and have >= 2 points")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            problems.append("seed must be an unsigned 64-bit integer")
        if self.mode in ("trajectories", "compare"):
            if not isinstance(self.ensemble_size, int) or self.ensemble_size < 1:
                problems.append("ensemble_size must be an integer >= 1")
            if self.noise_mode not in (WIENER, PIECEWISE):
                problems.append(f"noise_mode must be '{WIENER}' or '{PIECEWISE}'")
            if self.scheme not in SCHEMES:
                problems.append(f"scheme must be one of {list(SCHEMES)}")
            if not self.step > 0:
                problems.append("step must be positive")
            elif self.noise_mode == WIENER and not problems:
                ticks = self.grid() / self.step
                if np.any(np.abs(ticks - np.round(ticks)) > 1e-6):
                    problems.append("with wiener noise every grid point must be a multiple of step")
        if self.mode == "dephasing_sweep":
            factors = self.sweep_factors
            if not factors or any(not isinstance(f, (int, float)) or f <= 0 for f in factors):
                problems.append("sweep_factors must be a non-empty list of positive numbers")
            if self.reference_z is not None and not 0 <= self.reference_z <= self.grid_end():
                problems.append("reference_z must lie within the grid")
        if self.sector is not None and self.sector not in SECTORS:
            problems.append(f"sector must be one of {list(SECTORS)}")
        if not self.formats or any(f not in FORMATS for f in self.formats):
            problems.append(f"formats must be a non-empty subset of {list(FORMATS)}")
        if network_ok and (self.mode != "steady_state" or self.initial_state is not None):
            try:
                self.initial_matrix()
            except ValidationError as exc:
                problems.append(str(exc))
        if problems:
            raise ValidationError("invalid config: " + "; ".join(problems), problems)

    def network_spec(self) -> NetworkSpec:
        if isinstance(self.network, str):
            if self.network not in PRESETS:
                raise ValidationError(f"unknown network preset '{self.network}'")
            return PRESETS[self.network]()
        if isinstance(self.network, dict):
            return NetworkSpec.from_dict(self.network)
        raise ValidationError("network must be a preset name or a network object")

    def grid_end(self) -> float:
        return float(self.z_grid[-1]) if self.z_grid is not None else float(self.z_max)

    def grid(self) -> np.ndarray:
        if self.z_grid is not None:
            return np.asarray(self.z_grid, dtype=float)
        return np.linspace(0.0, self.z_max, self.z_points)

    @property
    def single_particle(self) -> bool:
        if self.initial_state is None:
            return self.mode == "single_master" or self.sector == "single"
        return isinstance(self.initial_state, int) or (
            isinstance(self.initial_state, dict) and "site" in self.initial_state
        )

    def initial_kind(self) -> Optional[InitialStateKind]:
        state = self.initial_state
        if not isinstance(state, dict) or "kind" not in state:
            return None
        return InitialStateKind(state["kind"], tuple(s - 1 for s in state.get("sites", (1, 2))))

    def initial_matrix(self) -> np.ndarray:
        """Initial density matrix with sites converted to 0-based positions."""
        n = self.network_spec().num_sites
        state = self.initial_state
        if state is None:
            raise ValidationError("initial_state is required for this mode")
        if isinstance(state, bool):
            raise ValidationError("initial_state must be a site number or an object")
        if isinstance(state, int):
            return single_excitation(state - 1, n)
        if not isinstance(state, dict):
            raise ValidationError("initial_state must be a site number or an object")
        if "site" in state:
            return single_excitation(int(state["site"]) - 1, n)
        kind = state.get("kind")
        if kind not in KINDS:
            raise ValidationError(f"initial_state kind must be one of {list(KINDS)}")
        if kind == "custom":
            if "matrix" not in state:
                raise ValidationError("custom initial_state needs 'matrix'")
            mat = np.array([[_entry(x) for x in row] for row in state["matrix"]])
            return make_initial(InitialStateKind("custom", matrix=mat), n)
        sites = state.get("sites", [1, 2])
        if len(sites) != 2 or any(not isinstance(s, int) for s in sites):
            raise ValidationError("initial_state sites must be two integers")
        return make_initial(kind, n, tuple(s - 1 for s in sites))

    def statistics(self) -> Optional[str]:
        if self.single_particle:
            return None
        kind = self.initial_kind()
        if self.sector is not None:
            return self.sector
        if kind is not None and kind.kind != "custom":
            return kind.statistics
        return "distinguishable"


def _entry(x) -> complex:
    if isinstance(x, dict):
        return complex(x["re"], x["im"])
    return complex(x)


def load_config(path) -> RunConfig:
    import json

    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data)
