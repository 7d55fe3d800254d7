"""Coupled-site networks with white-noise dephasing.

A network is described by its mean site energies (propagation constants)
``beta_mean``, a real symmetric hopping matrix ``kappa`` and per-site
dephasing rates ``gamma``. All quantities are in cm^-1; lengths in cm.

Rates can be given directly or derived from the standard deviation of a
segmented Gaussian disorder through ``gamma = sigma**2 * correlation_length``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError

__all__ = [
    "NoiseCalibration",
    "NetworkSpec",
    "calibrate_dephasing",
    "paper_trimer",
    "validate",
    "require_valid",
    "PRESETS",
]

#: relative agreement required when both gamma and a calibration are supplied
GAMMA_CONSISTENCY_RTOL = 1e-12

TRIMER_BETA = (1.0, 1.0, -1.0)
TRIMER_STRONG_COUPLING = 2.0
TRIMER_WEAK_COUPLING = 0.6
TRIMER_SIGMA = {
    "classical": (1.3143, 1.3204, 1.3283),
    "quantum": (1.1407, 1.112, 1.1371),
}


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NoiseCalibration:
    """Per-site disorder strength ``sigma`` over segments of ``correlation_length``."""

    sigma: np.ndarray
    correlation_length: float = 1.0

    def __post_init__(self):
        sigma = _frozen(self.sigma)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "correlation_length", float(self.correlation_length))
        problems = []
        if sigma.ndim != 1:
            problems.append("sigma must be a vector")
        elif not np.all(np.isfinite(sigma)):
            problems.append("non-finite sigma")
        elif np.any(sigma < 0):
            bad = [int(i) + 1 for i in np.flatnonzero(sigma < 0)]
            problems.append(f"negative sigma at site(s) {bad}")
        dz = self.correlation_length
        if not np.isfinite(dz) or dz <= 0:
            problems.append("correlation_length must be positive")
        if problems:
            raise ValidationError("; ".join(problems), problems)

    @property
    def gamma(self) -> np.ndarray:
        return calibrate_dephasing(self)


def calibrate_dephasing(calib: NoiseCalibration) -> np.ndarray:
    """Dephasing rates ``sigma**2 * correlation_length`` (cm^-1)."""
    return _frozen(calib.sigma**2 * calib.correlation_length)


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """Immutable description of an N-site network.

    Construction only coerces shapes and dtypes; use :func:`validate` to
    list invariant violations or :func:`require_valid` to raise on them.
    When ``gamma`` is omitted it is derived from ``calibration``.
    """

    beta_mean: np.ndarray
    kappa: np.ndarray
    gamma: Optional[np.ndarray] = None
    calibration: Optional[NoiseCalibration] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "beta_mean", _frozen(self.beta_mean))
        object.__setattr__(self, "kappa", _frozen(self.kappa))
        if self.gamma is None:
            if self.calibration is None:
                raise ValidationError("either gamma or a noise calibration is required")
            object.__setattr__(self, "gamma", calibrate_dephasing(self.calibration))
        else:
            object.__setattr__(self, "gamma", _frozen(self.gamma))

    @property
    def num_sites(self) -> int:
        return int(self.beta_mean.shape[0])

    @property
    def hamiltonian(self) -> np.ndarray:
        """Mean generator ``diag(beta_mean) + kappa``."""
        return np.diag(self.beta_mean) + self.kappa

    def with_gamma(self, gamma) -> "NetworkSpec":
        """Copy with new dephasing rates; any calibration is dropped."""
        return NetworkSpec(self.beta_mean, self.kappa, gamma=gamma, name=self.name)

    def scaled(self, factor: float) -> "NetworkSpec":
        """Copy with all dephasing rates multiplied by ``factor``.

        A calibration is kept consistent by scaling sigma by sqrt(factor).
        """
        if factor < 0:
            raise ValidationError("dephasing scale factor must be non-negative")
        calib = None
        if self.calibration is not None:
            calib = NoiseCalibration(
                self.calibration.sigma * np.sqrt(factor),
                self.calibration.correlation_length,
            )
        return NetworkSpec(
            self.beta_mean, self.kappa, gamma=self.gamma * factor,
            calibration=calib, name=self.name,
        )

    def without_coupling(self) -> "NetworkSpec":
        return NetworkSpec(
            self.beta_mean, np.zeros_like(self.kappa), gamma=self.gamma,
            calibration=self.calibration, name=self.name,
        )

    def to_dict(self) -> dict:
        out = {
            "num_sites": self.num_sites,
            "beta_mean": self.beta_mean.tolist(),
            "kappa": self.kappa.tolist(),
        }
        if self.calibration is not None:
            out["sigma"] = self.calibration.sigma.tolist()
            out["correlation_length"] = self.calibration.correlation_length
        else:
            out["gamma"] = self.gamma.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkSpec":
        has_gamma = "gamma" in data
        has_calib = "sigma" in data or "correlation_length" in data
        if has_gamma == has_calib:
            raise ValidationError(
                "network document needs exactly one of 'gamma' or "
                "{'sigma', 'correlation_length'}"
            )
        for key in ("num_sites", "beta_mean", "kappa"):
            if key not in data:
                raise ValidationError(f"network document is missing '{key}'")
        if has_calib:
            if "sigma" not in data or "correlation_length" not in data:
                raise ValidationError("calibration needs both 'sigma' and 'correlation_length'")
            spec = cls(
                data["beta_mean"], data["kappa"],
                calibration=NoiseCalibration(data["sigma"], data["correlation_length"]),
                name=data.get("name", ""),
            )
        else:
            spec = cls(data["beta_mean"], data["kappa"], gamma=data["gamma"],
                       name=data.get("name", ""))
        if int(data["num_sites"]) != spec.num_sites:
            raise ValidationError(
                f"num_sites={data['num_sites']} does not match beta_mean length {spec.num_sites}"
            )
        require_valid(spec)
        return spec


def validate(spec: NetworkSpec) -> list[str]:
    """Return every violated invariant (1-based site labels); empty means valid."""
    out = []
    n = spec.num_sites
    if spec.beta_mean.ndim != 1 or n < 1:
        return ["beta_mean must be a non-empty vector"]
    if spec.kappa.shape != (n, n):
        out.append(f"kappa has shape {spec.kappa.shape}, expected {(n, n)}")
    if spec.gamma.shape != (n,):
        out.append(f"gamma has shape {spec.gamma.shape}, expected {(n,)}")
    for label, arr in (("beta_mean", spec.beta_mean), ("kappa", spec.kappa), ("gamma", spec.gamma)):
        if not np.all(np.isfinite(arr)):
            out.append(f"non-finite entries in {label}")
    if out:
        return out
    for i in range(n):
        if spec.kappa[i, i] != 0:
            out.append(f"nonzero self-coupling at site {i + 1}")
        for j in range(i + 1, n):
            if spec.kappa[i, j] != spec.kappa[j, i]:
                out.append(f"asymmetric coupling ({i + 1},{j + 1})")
    for i in np.flatnonzero(spec.gamma < 0):
        out.append(f"negative dephasing rate at site {i + 1}")
    if spec.calibration is not None:
        derived = calibrate_dephasing(spec.calibration)
        if derived.shape != spec.gamma.shape:
            out.append("calibration sigma length does not match num_sites")
        elif not np.allclose(spec.gamma, derived, rtol=GAMMA_CONSISTENCY_RTOL, atol=0.0):
            out.append("gamma disagrees with sigma**2 * correlation_length")
    return out


def require_valid(spec: NetworkSpec) -> NetworkSpec:
    problems = validate(spec)
    if problems:
        raise ValidationError("invalid network: " + "; ".join(problems), problems)
    return spec


def paper_trimer(profile: str = "classical") -> NetworkSpec:
    """Three-site network with two strongly coupled upper sites and a weakly coupled lower one.

    ``profile`` selects the disorder strengths used for the laser-light
    ("classical") or photon-pair ("quantum") samples; segments are 1 cm long.
    """
    if profile not in TRIMER_SIGMA:
        raise ValidationError(f"unknown trimer profile {profile!r}")
    s, w = TRIMER_STRONG_COUPLING, TRIMER_WEAK_COUPLING
    kappa = [[0.0, s, w], [s, 0.0, w], [w, w, 0.0]]
    calib = NoiseCalibration(TRIMER_SIGMA[profile], 1.0)
    return NetworkSpec(TRIMER_BETA, kappa, calibration=calib,
                       name=f"paper-trimer-{profile}")


PRESETS = {
    "paper-trimer-classical": lambda: paper_trimer("classical"),
    "paper-trimer-quantum": lambda: paper_trimer("quantum"),
}
