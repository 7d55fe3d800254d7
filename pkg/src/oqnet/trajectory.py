"""Single-realization propagation and Monte Carlo ensemble averages.

One realization of the noise fixes a propagator ``U(z)`` (amplitude at site
r for a particle launched at site s). Single-particle amplitudes are
columns of ``U``; two- and k-particle amplitudes are (anti)symmetrized
products of its entries. Averaging outer products of amplitudes over many
realizations estimates the density matrices that the master equations
evolve deterministically.

Propagation schemes:

* piecewise-constant noise: exact exponential ``exp(i H_s dz)`` of the
  frozen generator ``H_s = diag(beta + phi_s) + kappa`` on each segment,
  split at output grid points.
* white noise, ``scheme="exponential"`` (default): Strang splitting
  ``exp(i H0 h/2) exp(i sqrt(gamma) dW) exp(i H0 h/2)`` per step. Exactly
  unitary; its average obeys the Ito equation with the -gamma/2 drift.
* white noise, ``scheme="ito_euler"``: the explicit Ito-Euler step
  ``U += (i H0 - gamma/2) U h + i sqrt(gamma) dW U``. First order in ``h``
  and not norm preserving; ``renormalize=True`` rescales columns to unit
  norm after every step for sensitivity studies.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateInputError, UnsupportedSizeError, ValidationError
from .network import NetworkSpec, require_valid
from .noise import (
    PIECEWISE,
    WIENER,
    NoiseRealization,
    num_segments,
    sample_piecewise,
    sample_wiener,
)
from .records import SINGLE, TWO, EvolutionRecord

__all__ = [
    "DEFAULT_STEP",
    "AmplitudePath",
    "PropagatorPath",
    "TwoParticleAmplitude",
    "DensityEstimate",
    "evolve_propagator",
    "evolve_amplitude",
    "two_particle_amplitude",
    "n_particle_amplitude",
    "ensemble_reduce",
    "run_ensemble",
]

DEFAULT_STEP = 1e-3
SCHEMES = ("exponential", "ito_euler")
MAX_PARTICLES = 4
NORM_TOL = 1e-10
_GRID_TOL = 1e-9
# per-chunk buffer budget (bytes); chunk boundaries never depend on the thread count
_CHUNK_BYTES = 1 << 26
_MAX_CHUNK = 256


@dataclass
class PropagatorPath:
    z: np.ndarray
    U: np.ndarray  # (Z, N, N)

    def unitarity_defect(self) -> np.ndarray:
        eye = np.eye(self.U.shape[-1])
        prod = np.conj(np.swapaxes(self.U, -1, -2)) @ self.U
        return np.linalg.norm(prod - eye, axis=(-2, -1))


@dataclass
class AmplitudePath:
    z: np.ndarray
    psi: np.ndarray  # (Z, N)

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.psi, axis=-1)


@dataclass
class TwoParticleAmplitude:
    """Joint amplitude ``Psi[p, q]``; ``norm0`` is its total probability at z=0."""

    Psi: np.ndarray
    statistics: str
    norm0: float

    def probability(self):
        return np.sum(np.abs(self.Psi) ** 2, axis=(-2, -1))

    def normalized(self) -> "TwoParticleAmplitude":
        """Amplitude rescaled so the launch profile carries unit probability."""
        return TwoParticleAmplitude(self.Psi / math.sqrt(self.norm0), self.statistics, 1.0)


@dataclass
class DensityEstimate:
    """Ensemble mean of outer products and per-entry standard errors."""

    z: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    count: int
    order: str

    def to_record(self, num_sites: int, statistics=None, meta=None) -> EvolutionRecord:
        return EvolutionRecord(self.z, self.mean, self.order, num_sites, statistics,
                               stderr=self.stderr, meta=dict(meta or {}))


# ----------------------------------------------------------------------------
# propagation kernels; state layout is (N, K, M): K columns for M trajectories


def _check_grid(z_grid) -> np.ndarray:
    z = np.asarray(z_grid, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValidationError("z_grid must be a non-empty vector")
    if abs(z[0]) > _GRID_TOL:
        raise ValidationError("z_grid must start at 0")
    if np.any(np.diff(z) <= 0):
        raise ValidationError("z_grid must be strictly ascending")
    return z


def _propagate_piecewise(h0, detunings, seg_len, z, state):
    """Exact segment-wise exponentials; detunings (M, S, N), state (N, K, M)."""
    M, S, N = detunings.shape
    out = np.empty((z.size,) + state.shape, dtype=complex)
    out[0] = state
    edges = np.arange(1, S) * seg_len
    cuts = np.union1d(z, edges[edges < z[-1]])
    k_out = 1
    cache = {}
    for a, b in zip(cuts[:-1], cuts[1:]):
        s = min(int(math.floor(a / seg_len + _GRID_TOL)), S - 1)
        if s not in cache:
            hs = h0[None, :, :] + detunings[:, s, :][:, :, None] * np.eye(N)[None]
            cache = {s: np.linalg.eigh(hs)}
        w, v = cache[s]
        step = (v * np.exp(1j * w * (b - a))[:, None, :]) @ np.conj(np.swapaxes(v, 1, 2))
        # step: (M, N, N); state: (N, K, M) -> apply per trajectory
        state = np.einsum("mij,jkm->ikm", step, state)
        if k_out < z.size and abs(b - z[k_out]) <= _GRID_TOL * max(1.0, z[-1]):
            out[k_out] = state
            k_out += 1
    return out


def _propagate_wiener(h0, gamma, detunings, step, z, state, scheme, renormalize):
    """Fixed-step white-noise propagation; grid points must lie on the step lattice."""
    M, S, N = detunings.shape
    ticks = z / step
    k_grid = np.rint(ticks).astype(int)
    if np.any(np.abs(ticks - k_grid) > 1e-6):
        raise ValidationError("z_grid points must be integer multiples of the wiener step")
    if k_grid[-1] > S:
        raise ValidationError("noise realization is shorter than the requested grid")
    phase = np.ascontiguousarray(np.transpose(detunings, (1, 2, 0))) * step  # (S, N, M)
    out = np.empty((z.size,) + state.shape, dtype=complex)
    out[0] = state
    K = state.shape[1]
    flat = (N, K * M)
    if scheme == "exponential":
        half = _expm_hermitian(h0, step / 2)
        full = half @ half
        # track W = U with the trailing half step pending: U_k = half @ W_k
        work = state.copy()
        first = True
        k_out = 1
        for k in range(1, k_grid[-1] + 1):
            work = ((half if first else full) @ work.reshape(flat)).reshape(state.shape)
            first = False
            work *= np.exp(1j * phase[k - 1])[:, None, :]
            while k_out < z.size and k_grid[k_out] == k:
                out[k_out] = (half @ work.reshape(flat)).reshape(state.shape)
                k_out += 1
        return out
    if scheme != "ito_euler":
        raise ValidationError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    drift = (1j * h0 - 0.5 * np.diag(gamma)) * step
    work = state.copy()
    k_out = 1
    for k in range(1, k_grid[-1] + 1):
        work = work + (drift @ work.reshape(flat)).reshape(state.shape) \
            + 1j * phase[k - 1][:, None, :] * work
        if renormalize:
            work /= np.linalg.norm(work, axis=0, keepdims=True)
        while k_out < z.size and k_grid[k_out] == k:
            out[k_out] = work
            k_out += 1
    return out


def _expm_hermitian(h, dz):
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w * dz)) @ v.conj().T


def _propagate(spec, mode, seg_len, detunings, z, initial, scheme="exponential",
               renormalize=False):
    """Propagate ``initial`` (N, K) for a stack of realizations (M, S, N).

    Returns an array of shape (M, Z, N, K).
    """
    M = detunings.shape[0]
    state = np.repeat(np.asarray(initial, dtype=complex)[:, :, None], M, axis=2)
    if mode == PIECEWISE:
        out = _propagate_piecewise(spec.hamiltonian, detunings, seg_len, z, state)
    elif mode == WIENER:
        out = _propagate_wiener(spec.hamiltonian, spec.gamma, detunings, seg_len, z, state,
                                scheme, renormalize)
    else:
        raise ValidationError(f"unknown noise mode {mode!r}")
    return np.transpose(out, (3, 0, 1, 2))


def _check_noise(spec, noise, z):
    if noise.num_sites != spec.num_sites:
        raise ValidationError("noise realization and network disagree on the number of sites")
    if z[-1] > noise.total_length * (1 + _GRID_TOL) + _GRID_TOL:
        raise ValidationError(
            f"noise covers z <= {noise.total_length} but the grid extends to {z[-1]}"
        )


def evolve_propagator(spec: NetworkSpec, noise: NoiseRealization, z_grid,
                      scheme: str = "exponential", renormalize: bool = False) -> PropagatorPath:
    """Propagator ``U(z)`` of one realization at every grid point."""
    require_valid(spec)
    z = _check_grid(z_grid)
    _check_noise(spec, noise, z)
    n = spec.num_sites
    U = _propagate(spec, noise.mode, noise.segment_length, noise.detunings[None], z,
                   np.eye(n), scheme, renormalize)[0]
    return PropagatorPath(z, U)


def evolve_amplitude(spec: NetworkSpec, noise: NoiseRealization, psi0, z_grid,
                     scheme: str = "exponential", renormalize: bool = False) -> AmplitudePath:
    """Single-particle amplitudes of one realization launched from ``psi0``."""
    require_valid(spec)
    z = _check_grid(z_grid)
    _check_noise(spec, noise, z)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (spec.num_sites,):
        raise ValidationError("psi0 must have one amplitude per site")
    if abs(np.linalg.norm(psi0) - 1) > NORM_TOL:
        raise ValidationError("psi0 must be normalized")
    out = _propagate(spec, noise.mode, noise.segment_length, noise.detunings[None], z,
                     psi0[:, None], scheme, renormalize)[0]
    return AmplitudePath(z, out[:, :, 0])


# ----------------------------------------------------------------------------
# multi-particle amplitudes

_SIGNS = {"boson": 1.0, "fermion": -1.0}


def two_particle_amplitude(U, phi0, statistics: str = "boson") -> TwoParticleAmplitude:
    """Two-particle amplitude built from propagator entries.

    ``Psi[p, q] = sum_{m,n} phi0[m, n] (U[p, n] U[q, m] +/- U[p, m] U[q, n])``
    with + for bosons and - for fermions. ``statistics="distinguishable"``
    keeps only the direct term ``U[p, m] U[q, n]``. ``U`` may carry leading
    batch axes. The result is not renormalized; ``norm0`` reports the total
    probability the symmetrized profile carries at z=0.
    """
    phi0 = np.asarray(phi0, dtype=complex)
    U = np.asarray(U, dtype=complex)
    n = U.shape[-1]
    if phi0.shape != (n, n):
        raise ValidationError("phi0 must be an N x N profile")
    if abs(np.sum(np.abs(phi0) ** 2) - 1) > 1e-8:
        raise ValidationError("phi0 must carry unit total probability")
    exchanged = np.einsum("mn,...pn,...qm->...pq", phi0, U, U)
    # the direct term U[p, m] U[q, n] is the exchanged term with p and q swapped;
    # reusing it makes the (anti)symmetry exact in floating point
    direct = np.swapaxes(exchanged, -1, -2)
    if statistics == "distinguishable":
        return TwoParticleAmplitude(direct, statistics, float(np.sum(np.abs(phi0) ** 2)))
    if statistics not in _SIGNS:
        raise ValidationError(f"unknown statistics {statistics!r}")
    sign = _SIGNS[statistics]
    psi0 = phi0.T + sign * phi0
    norm0 = float(np.sum(np.abs(psi0) ** 2))
    if norm0 < 1e-28:
        raise DegenerateInputError(
            f"{statistics} symmetrization of this profile vanishes identically"
        )
    return TwoParticleAmplitude(exchanged + sign * direct, statistics, norm0)


def n_particle_amplitude(U, phi0, statistics: str = "boson") -> np.ndarray:
    """Bosonic k-particle amplitude, summed over all k! output permutations.

    ``Psi[p1..pk] = sum_a phi0[a1..ak] sum_sigma prod_i U[p_sigma(i), a_i]``;
    for k=2 this coincides with :func:`two_particle_amplitude`.
    """
    if statistics != "boson":
        raise ValidationError("only bosonic amplitudes are supported beyond two particles")
    phi0 = np.asarray(phi0, dtype=complex)
    U = np.asarray(U, dtype=complex)
    k = phi0.ndim
    if k > MAX_PARTICLES:
        raise UnsupportedSizeError(f"{k} particles requested; at most {MAX_PARTICLES} supported")
    if k < 1 or any(dim != U.shape[0] for dim in phi0.shape):
        raise ValidationError("phi0 must have one axis of length N per particle")
    direct = phi0
    for axis in range(k):
        direct = np.moveaxis(np.tensordot(U, direct, axes=([1], [axis])), 0, axis)
    return sum(np.transpose(direct, perm) for perm in itertools.permutations(range(k)))


# ----------------------------------------------------------------------------
# ensemble statistics


@dataclass
class _Partial:
    """Count, mean and summed squared deviations (real and imaginary parts)."""

    count: int
    mean: np.ndarray
    m2_re: np.ndarray
    m2_im: np.ndarray

    @classmethod
    def from_samples(cls, samples):
        mean = samples.mean(axis=0)
        dev = samples - mean
        return cls(samples.shape[0], mean, np.sum(dev.real**2, axis=0),
                   np.sum(dev.imag**2, axis=0))

    def merge(self, other):
        n = self.count + other.count
        delta = other.mean - self.mean
        w = self.count * other.count / n
        return _Partial(
            n,
            self.mean + delta * (other.count / n),
            self.m2_re + other.m2_re + delta.real**2 * w,
            self.m2_im + other.m2_im + delta.imag**2 * w,
        )

    def stderr(self):
        if self.count < 2:
            return np.zeros_like(self.mean)
        scale = 1.0 / (self.count * (self.count - 1))
        return np.sqrt(self.m2_re * scale) + 1j * np.sqrt(self.m2_im * scale)


def _tree_merge(partials):
    """Pairwise reduction in a fixed order of chunk indices."""
    items = list(partials)
    while len(items) > 1:
        nxt = [items[i].merge(items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def ensemble_reduce(results: Sequence[AmplitudePath], order: str = SINGLE) -> DensityEstimate:
    """Average ``psi psi^dagger`` over trajectories.

    Each result carries amplitudes of shape (Z, N) for ``order="single"``
    or (Z, N, N) two-particle amplitude matrices for ``order="two"``
    (flattened row-major over ordered pairs).
    """
    if not results:
        raise ValidationError("at least one trajectory is required")
    z = np.asarray(results[0].z)
    for r in results[1:]:
        if r.z.shape != z.shape or not np.array_equal(r.z, z):
            raise ValidationError("trajectories were recorded on different z grids")
    amps = np.stack([np.asarray(r.psi) for r in results])
    if order == TWO:
        amps = amps.reshape(amps.shape[0], amps.shape[1], -1)
    elif order != SINGLE:
        raise ValidationError(f"unknown order {order!r}")
    samples = amps[..., :, None] * np.conj(amps[..., None, :])
    part = _Partial.from_samples(samples)
    return DensityEstimate(z, part.mean, part.stderr(), part.count, order)


def _pure_components(rho0, tol=1e-12):
    rho0 = 0.5 * (rho0 + rho0.conj().T)
    w, v = np.linalg.eigh(rho0)
    keep = w > tol
    if np.any(w < -1e-8):
        raise ValidationError("initial density matrix is not positive semidefinite")
    return w[keep], v[:, keep].T


def _classify(vec, n):
    mat = vec.reshape(n, n)
    if np.allclose(mat, mat.T, atol=1e-12):
        return "boson"
    if np.allclose(mat, -mat.T, atol=1e-12):
        return "fermion"
    return "distinguishable"


def _chunk_size(noise_bytes, sample_bytes):
    """Trajectories per chunk, bounded by the noise and sample buffers of one trajectory."""
    per_traj = max(noise_bytes, sample_bytes, 1)
    return max(1, min(_MAX_CHUNK, _CHUNK_BYTES // per_traj))


def run_ensemble(spec: NetworkSpec, rho0, z_grid, ensemble_size: int, seed: int,
                 mode: str = WIENER, step: float = DEFAULT_STEP, scheme: str = "exponential",
                 renormalize: bool = False, threads: int = 1) -> DensityEstimate:
    """Monte Carlo estimate of the averaged density matrix launched from ``rho0``.

    ``rho0`` is N x N (single particle) or N^2 x N^2 (two particles over
    ordered pairs). Mixed inputs are split into weighted pure components,
    each propagated with the same noise realization. Trajectory ``j`` uses
    the noise keyed by ``(seed, j)``; chunk boundaries and the reduction
    tree depend only on the problem size, so results are bit-identical
    for every ``threads`` value.
    """
    require_valid(spec)
    z = _check_grid(z_grid)
    n = spec.num_sites
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape == (n, n):
        order = SINGLE
    elif rho0.shape == (n * n, n * n):
        order = TWO
    else:
        raise ValidationError(f"initial state of shape {rho0.shape} does not fit {n} sites")
    if abs(np.trace(rho0) - 1) > 1e-8:
        raise ValidationError("initial density matrix must have unit trace")
    if ensemble_size < 1:
        raise ValidationError("ensemble_size must be at least 1")
    weights, vecs = _pure_components(rho0)

    if mode == PIECEWISE:
        if spec.calibration is None:
            raise ValidationError("piecewise noise needs a calibrated network")
        seg_len = spec.calibration.correlation_length

        def sample(j):
            return sample_piecewise(spec, z[-1], seed, j).detunings
    elif mode == WIENER:
        seg_len = step

        def sample(j):
            return sample_wiener(spec.gamma, z[-1], step, seed, j).detunings
    else:
        raise ValidationError(f"unknown noise mode {mode!r}")
    if z[-1] <= 0:
        raise ValidationError("z_grid must extend beyond 0")
    dim = n if order == SINGLE else n * n
    chunk = _chunk_size(num_segments(z[-1], seg_len) * n * 8, z.size * dim * dim * 16)
    bounds = [(a, min(a + chunk, ensemble_size)) for a in range(0, ensemble_size, chunk)]

    def work(bound):
        lo, hi = bound
        det = np.stack([sample(j) for j in range(lo, hi)])
        U = _propagate(spec, mode, seg_len, det, z, np.eye(n), scheme, renormalize)
        samples = 0
        for w, v in zip(weights, vecs):
            if order == SINGLE:
                amp = U @ v
            else:
                amp = two_particle_amplitude(U, v.reshape(n, n), _classify(v, n))
                amp = amp.normalized().Psi.reshape(U.shape[0], U.shape[1], -1)
            samples = samples + w * (amp[..., :, None] * np.conj(amp[..., None, :]))
        return _Partial.from_samples(samples)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(work, bounds))
    else:
        partials = [work(b) for b in bounds]
    total = _tree_merge(partials)
    return DensityEstimate(z, total.mean, total.stderr(), total.count, order)
