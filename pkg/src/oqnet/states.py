"""Two-particle launch states over ordered site pairs.

Sites are 0-based here. ``separable_boson(a, b)`` for instance is the pure
state ``(|a,b> + |b,a>)/sqrt(2)``; its density matrix has four entries of
1/2 on the rows and columns of the pairs (a, b) and (b, a).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .records import pair_index

__all__ = ["KINDS", "InitialStateKind", "make_initial", "single_excitation", "pure_two_particle"]

KINDS = (
    "separable_boson",
    "separable_fermion",
    "path_entangled_boson",
    "path_entangled_boson_minus",
    "classically_correlated",
    "incoherent_distinguishable",
    "custom",
)

_STATISTICS = {
    "separable_boson": "boson",
    "separable_fermion": "fermion",
    "path_entangled_boson": "boson",
    "path_entangled_boson_minus": "boson",
    "classically_correlated": "boson",
    "incoherent_distinguishable": "distinguishable",
}


@dataclass(frozen=True)
class InitialStateKind:
    kind: str
    sites: tuple = (0, 1)
    matrix: Optional[np.ndarray] = None

    @property
    def statistics(self) -> str:
        if self.kind == "custom":
            return "distinguishable"
        return _STATISTICS[self.kind]


def single_excitation(site: int, num_sites: int) -> np.ndarray:
    """Projector onto one particle at ``site``."""
    if not 0 <= site < num_sites:
        raise ValidationError(f"site {site} outside 0..{num_sites - 1}")
    rho = np.zeros((num_sites, num_sites), dtype=complex)
    rho[site, site] = 1.0
    return rho


def pure_two_particle(amplitudes: dict, num_sites: int) -> np.ndarray:
    """Projector onto ``sum amplitudes[(p, q)] |p,q>`` (normalized here)."""
    vec = np.zeros(num_sites * num_sites, dtype=complex)
    for (p, q), amp in amplitudes.items():
        vec[pair_index(p, q, num_sites)] += amp
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValidationError("two-particle state has no amplitude")
    vec /= norm
    return np.outer(vec, vec.conj())


def _mixture(pairs, num_sites):
    rho = np.zeros((num_sites**2,) * 2, dtype=complex)
    for p, q in pairs:
        i = pair_index(p, q, num_sites)
        rho[i, i] += 1.0 / len(pairs)
    return rho


def make_initial(kind, num_sites: int, sites=(0, 1)) -> np.ndarray:
    """Two-particle density matrix for a launch configuration.

    ``kind`` is an :class:`InitialStateKind` or one of :data:`KINDS`.
    ``path_entangled_boson_minus`` is the relative-minus variant
    ``(|a,a> - |b,b>)/sqrt(2)``; ``custom`` returns the supplied matrix.
    """
    if isinstance(kind, InitialStateKind):
        if kind.kind == "custom":
            return _custom(kind.matrix, num_sites)
        sites = kind.sites
        kind = kind.kind
    if kind not in KINDS:
        raise ValidationError(f"unknown initial state kind {kind!r}")
    if kind == "custom":
        raise ValidationError("custom states need an explicit matrix")
    a, b = (int(s) for s in sites)
    for s in (a, b):
        if not 0 <= s < num_sites:
            raise ValidationError(f"site {s} outside 0..{num_sites - 1}")
    if a == b and kind in ("separable_fermion", "path_entangled_boson",
                           "path_entangled_boson_minus"):
        raise ValidationError(f"{kind} needs two distinct sites")
    if kind == "separable_boson":
        if a == b:
            return pure_two_particle({(a, a): 1.0}, num_sites)
        return pure_two_particle({(a, b): 1.0, (b, a): 1.0}, num_sites)
    if kind == "separable_fermion":
        return pure_two_particle({(a, b): 1.0, (b, a): -1.0}, num_sites)
    if kind == "path_entangled_boson":
        return pure_two_particle({(a, a): 1.0, (b, b): 1.0}, num_sites)
    if kind == "path_entangled_boson_minus":
        return pure_two_particle({(a, a): 1.0, (b, b): -1.0}, num_sites)
    if kind == "classically_correlated":
        return _mixture([(a, a), (b, b)], num_sites)
    return _mixture([(a, b), (b, a)], num_sites)


def _custom(matrix, num_sites):
    rho = np.asarray(matrix, dtype=complex)
    d = num_sites * num_sites
    if rho.shape != (d, d):
        raise ValidationError(f"custom state must be {d}x{d}")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise ValidationError("custom state is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-8:
        raise ValidationError("custom state must have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -1e-8:
        raise ValidationError("custom state is not positive semidefinite")
    return rho
