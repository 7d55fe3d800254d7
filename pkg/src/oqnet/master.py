"""Averaged dynamics: dephasing Liouvillians, their integration and null spaces.

Density matrices are vectorized row-major. Single-particle matrices are
indexed by site, two-particle matrices by the ordered pair (p, q) at
position ``p * N + q``; both orderings of a pair are stored explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NonPhysicalStateError, ValidationError
from .network import NetworkSpec, require_valid
from .records import SINGLE, TWO, EvolutionRecord, exchange_operator

__all__ = [
    "Liouvillian",
    "SteadyState",
    "single_coefficients",
    "two_coefficients",
    "build_single_liouvillian",
    "build_two_liouvillian",
    "integrate",
    "steady_state",
    "sector_projector",
]

SECTORS = ("single", "boson", "fermion", "distinguishable")
NULL_RTOL = 1e-10
CLIP_TOL = 1e-12
POSITIVITY_TOL = 1e-8
RK4_STEP = 1e-3


@dataclass(frozen=True, eq=False)
class Liouvillian:
    matrix: np.ndarray
    order: str
    num_sites: int

    @property
    def dim(self) -> int:
        """Side length of the density matrices it acts on."""
        return self.num_sites if self.order == SINGLE else self.num_sites**2

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return (self.matrix @ rho.reshape(-1)).reshape(rho.shape)

    def trace_defect(self) -> float:
        """Largest entry of ``t^T L`` where ``t`` is the vectorized identity."""
        t = np.eye(self.dim).reshape(-1)
        return float(np.max(np.abs(t @ self.matrix)))


def single_coefficients(spec: NetworkSpec) -> np.ndarray:
    """Diagonal generator entries ``i(b_n - b_m) - (g_n + g_m)/2 + g_n delta_nm``."""
    b, g = spec.beta_mean, spec.gamma
    coeff = 1j * (b[:, None] - b[None, :]) - 0.5 * (g[:, None] + g[None, :])
    coeff[np.diag_indices_from(coeff)] += g
    return coeff


def two_coefficients(spec: NetworkSpec) -> np.ndarray:
    """Diagonal generator entries ``c[p, q, p', q']`` of the two-particle equation.

    Phase ``i(b_p + b_q - b_p' - b_q')``, decay ``-(g_p + g_q + g_p' + g_q')/2``
    and the six Kronecker-delta restoring terms.
    """
    n = spec.num_sites
    b, g = spec.beta_mean, spec.gamma
    s = np.sqrt(g)
    p, q, pp, qq = np.meshgrid(*(np.arange(n),) * 4, indexing="ij")
    coeff = 1j * (b[p] + b[q] - b[pp] - b[qq]) - 0.5 * (g[p] + g[q] + g[pp] + g[qq])
    coeff = coeff + (
        s[p] * s[pp] * (p == pp)
        + s[p] * s[qq] * (p == qq)
        + s[q] * s[pp] * (q == pp)
        + s[q] * s[qq] * (q == qq)
        - s[p] * s[q] * (p == q)
        - s[pp] * s[qq] * (pp == qq)
    )
    return coeff


def _commutator_generator(h) -> np.ndarray:
    """Superoperator of ``rho -> i (h rho - rho h)`` in row-major vectorization."""
    eye = np.eye(h.shape[0])
    return 1j * (np.kron(h, eye) - np.kron(eye, h.T))


def build_single_liouvillian(spec: NetworkSpec) -> Liouvillian:
    require_valid(spec)
    n = spec.num_sites
    coeff = single_coefficients(spec)
    # coupling part only; the diagonal coefficients carry the beta phases
    mat = _commutator_generator(spec.kappa.astype(complex))
    mat[np.diag_indices_from(mat)] += coeff.reshape(-1)
    return Liouvillian(mat, SINGLE, n)


def build_two_liouvillian(spec: NetworkSpec) -> Liouvillian:
    require_valid(spec)
    n = spec.num_sites
    eye = np.eye(n)
    hop = np.kron(spec.kappa, eye) + np.kron(eye, spec.kappa)
    mat = _commutator_generator(hop.astype(complex))
    mat[np.diag_indices_from(mat)] += two_coefficients(spec).reshape(-1)
    return Liouvillian(mat, TWO, n)


def _propagator_cache(matrix):
    cache = {}

    def get(dz):
        key = round(dz, 12)
        if key not in cache:
            cache[key] = scipy.linalg.expm(matrix * dz)
        return cache[key]

    return get


def _rk4(matrix, vec, dz, h):
    steps = max(1, math.ceil(dz / h - 1e-9))
    h = dz / steps
    for _ in range(steps):
        k1 = matrix @ vec
        k2 = matrix @ (vec + 0.5 * h * k1)
        k3 = matrix @ (vec + 0.5 * h * k2)
        k4 = matrix @ (vec + h * k3)
        vec = vec + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return vec


def integrate(L: Liouvillian, rho0, z_grid, method: str = "expm", statistics=None,
              rk4_step: float = RK4_STEP) -> EvolutionRecord:
    """Evolve ``rho0`` and record it at every grid point.

    ``method="expm"`` applies the exact propagator ``exp(L dz)`` between
    consecutive grid points (one exponential per distinct spacing);
    ``method="rk4"`` is a fixed-step cross-check.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (L.dim, L.dim):
        raise ValidationError(
            f"initial state has shape {rho0.shape}; the Liouvillian acts on {L.dim}x{L.dim}"
        )
    z = np.asarray(z_grid, dtype=float)
    if z.ndim != 1 or abs(z[0]) > 1e-12 or np.any(np.diff(z) <= 0):
        raise ValidationError("z_grid must be strictly ascending and start at 0")
    out = np.empty((z.size, L.dim, L.dim), dtype=complex)
    vec = rho0.reshape(-1)
    out[0] = rho0
    if method == "expm":
        prop = _propagator_cache(L.matrix)
        for k in range(1, z.size):
            vec = prop(z[k] - z[k - 1]) @ vec
            out[k] = vec.reshape(L.dim, L.dim)
    elif method == "rk4":
        for k in range(1, z.size):
            vec = _rk4(L.matrix, vec, z[k] - z[k - 1], rk4_step)
            out[k] = vec.reshape(L.dim, L.dim)
    else:
        raise ValidationError(f"unknown integration method {method!r}")
    return EvolutionRecord(z, out, L.order, L.num_sites, statistics)


def sector_projector(num_sites: int, sector: str) -> np.ndarray:
    """Projector onto the state space of a statistics sector (N^2 x N^2 or N x N)."""
    if sector == "single":
        return np.eye(num_sites)
    d = num_sites * num_sites
    if sector == "distinguishable":
        return np.eye(d)
    swap = exchange_operator(num_sites)
    if sector == "boson":
        return 0.5 * (np.eye(d) + swap)
    if sector == "fermion":
        return 0.5 * (np.eye(d) - swap)
    raise ValidationError(f"unknown sector {sector!r}; expected one of {SECTORS}")


@dataclass
class SteadyState:
    rho: np.ndarray
    null_dimension: int
    sector_null_dimension: int
    residual: float
    sector: str


def _null_spaces(matrix):
    u, s, vh = np.linalg.svd(matrix)
    tol = NULL_RTOL * s[0] if s[0] > 0 else NULL_RTOL
    null = s <= tol
    return vh[null].conj().T, u[:, null]


def steady_state(L: Liouvillian, sector: str = "boson", rho0=None) -> SteadyState:
    """Physical stationary state of ``L`` in an exchange sector.

    The null space comes from a singular-value decomposition. The returned
    state is the long-distance limit reached from ``rho0``, obtained with the
    spectral projector onto the null space; by default ``rho0`` is the
    normalized projector onto the sector. When the null space inside the
    sector has dimension one this is the unique steady state; otherwise the
    dimension is reported and the state depends on ``rho0``.
    """
    if L.order == SINGLE and sector != "single":
        raise ValidationError("single-particle Liouvillians only have the 'single' sector")
    if L.order == TWO and sector == "single":
        raise ValidationError("choose boson, fermion or distinguishable for two particles")
    proj = sector_projector(L.num_sites, sector)
    right, left = _null_spaces(L.matrix)
    dim_total = right.shape[1]
    sector_map = np.kron(proj, proj.T)
    if dim_total:
        sector_rank = int(np.linalg.matrix_rank(sector_map @ right, tol=1e-8))
    else:
        sector_rank = 0
    if sector_rank == 0:
        raise NonPhysicalStateError(f"the Liouvillian has no stationary state in the {sector} sector")

    if rho0 is None:
        rho0 = proj / np.trace(proj)
    rho0 = np.asarray(rho0, dtype=complex)
    overlap = left.conj().T @ right
    vec = right @ np.linalg.solve(overlap, left.conj().T @ rho0.reshape(-1))
    rho = (sector_map @ vec).reshape(L.dim, L.dim)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if tr <= POSITIVITY_TOL:
        raise NonPhysicalStateError("stationary component has vanishing trace in this sector")
    rho /= tr
    w, v = np.linalg.eigh(rho)
    if w[0] < -POSITIVITY_TOL:
        raise NonPhysicalStateError(f"stationary state has eigenvalue {w[0]:.3e}")
    w = np.where(w < CLIP_TOL, 0.0, w)
    rho = (v * w) @ v.conj().T
    rho /= np.trace(rho).real
    residual = float(np.linalg.norm(L.matrix @ rho.reshape(-1)))
    return SteadyState(rho, dim_total, sector_rank, residual, sector)
