"""Observables and diagnostics built on evolution records and steady states."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .records import TWO, EvolutionRecord, pair_index

__all__ = [
    "g2_extract",
    "similarity",
    "DecayFit",
    "coherence_decay_fit",
    "SteadyStateDecomposition",
    "decompose_steady_state",
    "product_of_singles",
    "exchange_coherences",
    "ensemble_agreement",
]

IMAG_TOL = 1e-10
FIT_FLOOR = 1e-6
#: absolute slack for entries whose ensemble variance vanishes (round-off only)
SCORE_FLOOR = 1e-12


def g2_extract(rho2, num_sites: int = None) -> np.ndarray:
    """Joint detection probabilities ``G2[p, q] = rho[(p,q),(p,q)]``."""
    rho2 = np.asarray(rho2)
    d = rho2.shape[0]
    n = num_sites or int(round(np.sqrt(d)))
    if n * n != d or rho2.shape != (d, d):
        raise ValidationError("expected an N^2 x N^2 two-particle density matrix")
    diag = np.diagonal(rho2)
    if np.iscomplexobj(diag) and np.max(np.abs(diag.imag)) > IMAG_TOL:
        raise ValidationError("diagonal of the density matrix has an imaginary part")
    return np.real(diag).reshape(n, n).copy()


def similarity(g2_a, g2_b) -> float:
    """Overlap ``(sum sqrt(a b))^2 / (sum a * sum b)`` of two correlation maps."""
    a = np.asarray(g2_a, dtype=float)
    b = np.asarray(g2_b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError("correlation matrices differ in shape")
    if np.any(a < 0) or np.any(b < 0):
        raise ValidationError("correlation matrices must be non-negative")
    sa, sb = a.sum(), b.sum()
    if sa == 0 or sb == 0:
        raise ValidationError("correlation matrix is identically zero")
    return float(np.sum(np.sqrt(a * b)) ** 2 / (sa * sb))


@dataclass
class DecayFit:
    rate: float
    frequency: float
    residual: float
    points: int


def _element_index(record: EvolutionRecord, element):
    row, col = element
    if record.order == TWO and isinstance(row, tuple):
        n = record.num_sites
        return pair_index(*row, n), pair_index(*col, n)
    return int(row), int(col)


def coherence_decay_fit(record: EvolutionRecord, element) -> DecayFit:
    """Exponential rate and oscillation frequency of one matrix element.

    ``element`` is ``(row, col)``; for two-particle records rows and columns
    may be given as site pairs, e.g. ``((0, 1), (1, 0))``. A line is fitted to
    ``log|rho|`` over grid points where ``|rho| > 1e-6``; the rate is minus its
    slope. The frequency is the slope of the unwrapped phase.
    """
    if len(record) < 10:
        raise ValidationError("a decay fit needs at least 10 grid points")
    i, j = _element_index(record, element)
    values = record.states[:, i, j]
    if not np.any(values):
        raise ValidationError(f"element {element} is identically zero")
    mask = np.abs(values) > FIT_FLOOR
    if mask.sum() < 2:
        raise ValidationError(f"element {element} is below {FIT_FLOOR} almost everywhere")
    z = record.z[mask]
    logs = np.log(np.abs(values[mask]))
    slope, intercept = np.polyfit(z, logs, 1)
    phase = np.unwrap(np.angle(values[mask]))
    freq = np.polyfit(z, phase, 1)[0]
    resid = float(np.sqrt(np.mean((logs - (slope * z + intercept)) ** 2)))
    return DecayFit(-float(slope), float(freq), resid, int(mask.sum()))


@dataclass
class SteadyStateDecomposition:
    """Split of a two-particle state into bunched populations and exchange blocks.

    ``mix_part`` keeps the entries ``rho[(n,n),(n,n)]``; ``sep_parts[(p, q)]``
    (p < q) keeps the 2x2 block on rows/columns ``(p,q)`` and ``(q,p)``.
    Weights are the traces of these parts and ``sep_coherences`` the
    exchange-conjugate entries ``rho[(p,q),(q,p)]``.
    """

    mix_part: np.ndarray
    mix_weight: float
    sep_parts: dict
    sep_weights: dict
    sep_coherences: dict
    remainder: np.ndarray
    residual: float = field(init=False)

    def __post_init__(self):
        self.residual = float(np.linalg.norm(self.remainder))

    def reconstruct(self) -> np.ndarray:
        return self.mix_part + sum(self.sep_parts.values()) + self.remainder


def decompose_steady_state(rho2, num_sites: int = None) -> SteadyStateDecomposition:
    rho2 = np.asarray(rho2, dtype=complex)
    d = rho2.shape[0]
    n = num_sites or int(round(np.sqrt(d)))
    if n * n != d:
        raise ValidationError("expected an N^2 x N^2 two-particle density matrix")
    mix = np.zeros_like(rho2)
    for k in range(n):
        i = pair_index(k, k, n)
        mix[i, i] = rho2[i, i]
    seps, weights, cohs = {}, {}, {}
    for p in range(n):
        for q in range(p + 1, n):
            idx = [pair_index(p, q, n), pair_index(q, p, n)]
            part = np.zeros_like(rho2)
            part[np.ix_(idx, idx)] = rho2[np.ix_(idx, idx)]
            seps[(p, q)] = part
            weights[(p, q)] = float(np.trace(part).real)
            cohs[(p, q)] = complex(rho2[idx[0], idx[1]])
    remainder = rho2 - mix - sum(seps.values())
    return SteadyStateDecomposition(mix, float(np.trace(mix).real), seps, weights, cohs, remainder)


def exchange_coherences(rho2, num_sites: int) -> np.ndarray:
    """Magnitudes ``|rho[(p,q),(q,p)]|`` for all p < q."""
    rho2 = np.asarray(rho2)
    return np.array([
        abs(rho2[pair_index(p, q, num_sites), pair_index(q, p, num_sites)])
        for p in range(num_sites) for q in range(p + 1, num_sites)
    ])


def product_of_singles(rho_a, rho_b) -> np.ndarray:
    """Two-particle state of independent particles, ``rho[(p,q),(p',q')] = a[p,p'] b[q,q']``."""
    rho_a = np.asarray(rho_a, dtype=complex)
    rho_b = np.asarray(rho_b, dtype=complex)
    if rho_a.ndim != 2 or rho_a.shape != rho_b.shape or rho_a.shape[0] != rho_a.shape[1]:
        raise ValidationError("single-particle matrices must be square and of equal size")
    return np.kron(rho_a, rho_b)


def ensemble_agreement(mean, stderr, reference, k: float = 4.0) -> tuple:
    """Compare an ensemble estimate with a reference entry by entry.

    Real and imaginary parts are tested separately against ``k`` standard
    errors plus :data:`SCORE_FLOOR`. Returns ``(all_within, max_score)``
    where the score is ``|difference| / (stderr + SCORE_FLOOR)``.
    """
    diff = np.asarray(mean) - np.asarray(reference)
    stderr = np.asarray(stderr)
    within = True
    score = 0.0
    for d, se in ((diff.real, stderr.real), (diff.imag, stderr.imag)):
        within &= bool(np.all(np.abs(d) <= k * se + SCORE_FLOOR))
        score = max(score, float(np.max(np.abs(d) / (se + SCORE_FLOOR))))
    return within, score
