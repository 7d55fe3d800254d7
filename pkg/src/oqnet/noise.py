"""Reproducible samples of the site-energy fluctuations.

Two kinds of realization are produced:

``piecewise_constant``
    each site's detuning is redrawn from N(0, sigma_n**2) on consecutive
    segments of the calibration's correlation length, as in a segmented
    fabrication protocol.
``wiener``
    white-noise limit sampled on a fixed step ``h``; the stored detuning on
    step s is ``sqrt(gamma_n) * dW_n / h`` with ``dW_n ~ N(0, h)``.

Every trajectory draws from its own generator keyed by
``(seed, trajectory)``; within a trajectory values are consumed in
(segment, site) row-major order. A realization therefore depends only on
its key and never on how trajectories are scheduled.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .network import NetworkSpec

__all__ = [
    "PIECEWISE",
    "WIENER",
    "NoiseRealization",
    "WienerIncrement",
    "trajectory_rng",
    "num_segments",
    "sample_piecewise",
    "sample_wiener",
    "sample_wiener_step",
]

PIECEWISE = "piecewise_constant"
WIENER = "wiener"

# grid lengths within this relative slack of a whole number of segments are not padded
_SEGMENT_SLACK = 1e-9


def trajectory_rng(seed: int, trajectory: int = 0) -> np.random.Generator:
    """Independent generator for one trajectory of a seeded ensemble."""
    if seed < 0 or trajectory < 0:
        raise ValueError("seed and trajectory index must be non-negative")
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(trajectory),)))
    )


def num_segments(total_length: float, segment_length: float) -> int:
    """Number of segments covering ``total_length``; a final partial segment counts."""
    if total_length <= 0:
        raise ValidationError("total_length must be positive")
    if segment_length <= 0:
        raise ValidationError("segment length must be positive")
    ratio = total_length / segment_length
    return max(1, math.ceil(ratio - _SEGMENT_SLACK * max(1.0, ratio)))


@dataclass(frozen=True, eq=False)
class WienerIncrement:
    dW: np.ndarray
    gamma: np.ndarray

    @property
    def scaled(self) -> np.ndarray:
        """Noise term ``sqrt(gamma_n) * dW_n`` entering the amplitude equation."""
        return np.sqrt(self.gamma) * self.dW


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    mode: str
    segment_length: float
    detunings: np.ndarray
    seed: int
    total_length: float
    trajectory: int = 0

    def __post_init__(self):
        if self.mode not in (PIECEWISE, WIENER):
            raise ValidationError(f"unknown noise mode {self.mode!r}")
        det = np.array(self.detunings, dtype=float)
        if det.ndim != 2:
            raise ValidationError("detunings must be a (segments, sites) matrix")
        expected = num_segments(self.total_length, self.segment_length)
        if det.shape[0] != expected:
            raise ValidationError(
                f"{det.shape[0]} segments stored but {expected} needed for "
                f"length {self.total_length} at segment length {self.segment_length}"
            )
        det.setflags(write=False)
        object.__setattr__(self, "detunings", det)

    @property
    def num_sites(self) -> int:
        return self.detunings.shape[1]

    @property
    def num_segments(self) -> int:
        return self.detunings.shape[0]

    def segment_edges(self) -> np.ndarray:
        """Segment boundaries, the last one truncated to ``total_length``."""
        edges = np.arange(self.num_segments + 1) * self.segment_length
        edges[-1] = self.total_length
        return edges

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(
                f"# mode={self.mode} segment_length={self.segment_length!r} "
                f"total_length={self.total_length!r} seed={self.seed} "
                f"trajectory={self.trajectory}\n"
            )
            writer = csv.writer(fh)
            writer.writerow(["segment", "site", "detuning"])
            for s, row in enumerate(self.detunings):
                for n, value in enumerate(row):
                    writer.writerow([s, n + 1, format(float(value), ".17g")])

    @classmethod
    def from_csv(cls, path) -> "NoiseRealization":
        path = Path(path)
        with path.open(newline="") as fh:
            header = fh.readline().lstrip("#").split()
            meta = dict(item.split("=", 1) for item in header)
            rows = list(csv.DictReader(fh))
        n_seg = max(int(r["segment"]) for r in rows) + 1
        n_sites = max(int(r["site"]) for r in rows)
        det = np.zeros((n_seg, n_sites))
        for r in rows:
            det[int(r["segment"]), int(r["site"]) - 1] = float(r["detuning"])
        return cls(
            mode=meta["mode"],
            segment_length=float(meta["segment_length"]),
            detunings=det,
            seed=int(meta["seed"]),
            total_length=float(meta["total_length"]),
            trajectory=int(meta["trajectory"]),
        )


def sample_piecewise(spec: NetworkSpec, total_length: float, seed: int,
                     trajectory: int = 0) -> NoiseRealization:
    """Segmented Gaussian disorder drawn with the network's calibration."""
    if spec.calibration is None:
        raise ValidationError("piecewise sampling needs a network with a noise calibration")
    calib = spec.calibration
    n_seg = num_segments(total_length, calib.correlation_length)
    rng = trajectory_rng(seed, trajectory)
    draws = rng.standard_normal((n_seg, spec.num_sites))
    return NoiseRealization(
        PIECEWISE, calib.correlation_length, draws * calib.sigma, seed,
        float(total_length), trajectory,
    )


def sample_wiener_step(gamma, h: float, rng: np.random.Generator) -> WienerIncrement:
    """One increment ``dW ~ N(0, h)`` per site, advancing ``rng``."""
    if h <= 0:
        raise ValidationError("step must be positive")
    gamma = np.asarray(gamma, dtype=float)
    return WienerIncrement(rng.standard_normal(gamma.shape) * math.sqrt(h), gamma)


def sample_wiener(gamma, total_length: float, step: float, seed: int,
                  trajectory: int = 0) -> NoiseRealization:
    """White-noise realization on a grid of ``step``; see module docstring."""
    gamma = np.asarray(gamma, dtype=float)
    n_steps = num_segments(total_length, step)
    if step <= 0:
        raise ValidationError("step must be positive")
    rng = trajectory_rng(seed, trajectory)
    # one block draw consumes the stream exactly like n_steps calls of sample_wiener_step
    dW = rng.standard_normal((n_steps, gamma.shape[0])) * math.sqrt(step)
    return NoiseRealization(WIENER, float(step), np.sqrt(gamma) * dW / step, seed,
                            float(total_length), trajectory)
