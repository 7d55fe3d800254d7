"""Time-stamped density-matrix sequences and the observables derived from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = ["EvolutionRecord", "pair_index", "exchange_operator"]

SINGLE = "single"
TWO = "two"


def pair_index(p: int, q: int, num_sites: int) -> int:
    """Row-major position of the ordered site pair (p, q), 0-based."""
    return p * num_sites + q


def exchange_operator(num_sites: int) -> np.ndarray:
    """Permutation matrix swapping the two particles, |p,q> -> |q,p>."""
    d = num_sites * num_sites
    swap = np.zeros((d, d))
    for p in range(num_sites):
        for q in range(num_sites):
            swap[pair_index(q, p, num_sites), pair_index(p, q, num_sites)] = 1.0
    return swap


@dataclass
class EvolutionRecord:
    """Density matrices ``states[k]`` at propagation distances ``z[k]``.

    ``order`` is ``"single"`` (N x N matrices) or ``"two"`` (N^2 x N^2 over
    ordered site pairs). ``stderr`` is set for ensemble estimates and holds
    per-entry standard errors (real and imaginary parts separately).
    """

    z: np.ndarray
    states: np.ndarray
    order: str
    num_sites: int
    statistics: Optional[str] = None
    stderr: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.states = np.asarray(self.states, dtype=complex)
        dim = self.num_sites if self.order == SINGLE else self.num_sites**2
        if self.order not in (SINGLE, TWO):
            raise ValueError(f"unknown order {self.order!r}")
        if self.states.shape != (self.z.shape[0], dim, dim):
            raise ValueError(
                f"states have shape {self.states.shape}, expected {(self.z.shape[0], dim, dim)}"
            )

    def __len__(self):
        return self.z.shape[0]

    def index_of(self, z: float, atol: float = 1e-9) -> int:
        k = int(np.argmin(np.abs(self.z - z)))
        if abs(self.z[k] - z) > atol:
            raise KeyError(f"z={z} is not on the record grid")
        return k

    def at(self, z: float) -> np.ndarray:
        return self.states[self.index_of(z)]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def populations(self) -> np.ndarray:
        """Site occupation probabilities, shape (Z, N).

        For two-particle records this is the mean number of particles per
        site, which sums to 2.
        """
        diag = np.real(np.diagonal(self.states, axis1=1, axis2=2))
        if self.order == SINGLE:
            return diag
        g2 = diag.reshape(-1, self.num_sites, self.num_sites)
        return g2.sum(axis=2) + g2.sum(axis=1)

    def g2(self) -> np.ndarray:
        """Joint detection probabilities G2[k, p, q] (two-particle records only)."""
        if self.order != TWO:
            raise ValueError("G2 is defined for two-particle records only")
        diag = np.real(np.diagonal(self.states, axis1=1, axis2=2))
        return diag.reshape(-1, self.num_sites, self.num_sites)

    def coherence_norm(self) -> np.ndarray:
        """Frobenius norm of the off-diagonal part at every grid point."""
        off = self.states.copy()
        idx = np.arange(off.shape[1])
        off[:, idx, idx] = 0
        return np.linalg.norm(off, axis=(1, 2))

    def max_offdiagonal(self) -> np.ndarray:
        off = np.abs(self.states)
        idx = np.arange(off.shape[1])
        off[:, idx, idx] = 0
        return off.max(axis=(1, 2))

    def conservation(self) -> dict:
        """Worst trace drift, Hermiticity defect and smallest eigenvalue over the record."""
        traces = np.trace(self.states, axis1=1, axis2=2)
        herm = np.linalg.norm(self.states - np.conj(np.swapaxes(self.states, 1, 2)), axis=(1, 2))
        hermitian_part = 0.5 * (self.states + np.conj(np.swapaxes(self.states, 1, 2)))
        eigs = np.linalg.eigvalsh(hermitian_part)
        return {
            "trace_drift": float(np.max(np.abs(traces - 1.0))),
            "hermiticity_defect": float(np.max(herm)),
            "min_eigenvalue": float(np.min(eigs)),
        }
