"""Quench evolution under a constant driving, charging power, and the parallel baseline.

Units have hbar = 1; times are in inverse energy.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .operators import SpectralData, as_matrix, eigendecompose

STATE_TOL = 1e-10
DEFAULT_STEPS = 2000
TIME_CAP_FACTOR = 20.0
GOLDEN_TOL = 1e-10
_CHUNK = 256


@dataclass
class QuenchResult:
    times: np.ndarray
    energy: np.ndarray
    power: np.ndarray
    p_max: float
    t_at_max: float
    power_at_max: float
    energy_at_max: float

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kind", "t", "energy", "power"])
            for t, e, p in zip(self.times, self.energy, self.power):
                w.writerow(["grid", repr(float(t)), repr(float(e)), repr(float(p))])
            w.writerow(
                ["max", repr(self.t_at_max), repr(self.energy_at_max), repr(self.power_at_max)]
            )


@dataclass(frozen=True)
class AdvantageReport:
    p_quantum_max: float
    p_parallel_max: float
    gamma: float
    k_locality: Optional[int]
    c0_satisfied: bool


def ground_state(H) -> np.ndarray:
    """Lowest eigenvector; for degenerate ground spaces the first column LAPACK returns."""
    return eigendecompose(H).vectors[:, 0].copy()


def _density(rho0) -> np.ndarray:
    rho = np.asarray(as_matrix(rho0))
    if rho.ndim == 1:
        nrm = np.vdot(rho, rho).real
        if abs(nrm - 1.0) > STATE_TOL:
            raise ValueError(f"state vector is not normalized (norm^2 = {nrm})")
        return np.outer(rho, rho.conj())
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > STATE_TOL:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > STATE_TOL:
        raise ValueError(f"density matrix has trace {tr}")
    if np.linalg.eigvalsh(rho)[0] < -STATE_TOL:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def _pure_components(rho0):
    """Decompose a state into ``(weights, vectors)`` of its nonzero eigen-components."""
    rho0 = np.asarray(as_matrix(rho0))
    if rho0.ndim == 1:
        _density(rho0)
        return np.ones(1), rho0[:, None].astype(np.complex128)
    rho = _density(rho0)
    p, psi = np.linalg.eigh(rho)
    keep = p > 1e-14
    return p[keep], psi[:, keep]


def evolve(rho0, V, t: float, spectral: Optional[SpectralData] = None) -> np.ndarray:
    """``exp(-iVt) rho0 exp(iVt)`` via the eigendecomposition of ``V``."""
    rho = _density(rho0)
    if spectral is None:
        spectral = eigendecompose(V)
    u = spectral.vectors
    phase = np.exp(-1j * spectral.values * t)
    w = (u * phase) @ u.conj().T
    return w @ rho @ w.conj().T


def instantaneous_power(H, V, rho) -> float:
    """``dE/dt = tr(rho i[V, H])`` for the quench ``d rho/dt = -i[V, rho]``."""
    h = as_matrix(H)
    v = as_matrix(V)
    k = 1j * (v @ h - h @ v)
    r = np.asarray(as_matrix(rho))
    val = np.vdot(r, k @ r) if r.ndim == 1 else np.trace(r @ k)
    scale = max(1.0, float(np.max(np.abs(k))))
    if abs(val.imag) > STATE_TOL * scale:
        raise RuntimeError(f"power has imaginary residue {val.imag:.3e}")
    return float(val.real)


def min_gap(values: np.ndarray, rtol: float = 1e-9) -> float:
    """Smallest positive spacing between distinct eigenvalues (0 if all coincide)."""
    w = np.sort(np.asarray(values, dtype=float))
    scale = max(1.0, float(np.max(np.abs(w))))
    d = np.diff(w)
    d = d[d > rtol * scale]
    return float(d.min()) if d.size else 0.0


def default_t_max(values: np.ndarray) -> float:
    spread = float(values[-1] - values[0])
    if spread <= 0:
        return 1.0
    cap = TIME_CAP_FACTOR / spread
    gap = min_gap(values)
    return min(2 * math.pi / gap, cap) if gap > 0 else cap


class _QuenchEvaluator:
    """Energy and power along the quench, evaluated in the eigenbasis of ``V``."""

    def __init__(self, H, V, rho0, spectral_v: Optional[SpectralData] = None):
        self.spec = spectral_v if spectral_v is not None else eigendecompose(V)
        u = self.spec.vectors
        d = self.spec.values
        self.d = d
        self.ht = u.conj().T @ as_matrix(H) @ u
        # i[D, H~] in V's eigenbasis
        self.kt = 1j * (d[:, None] - d[None, :]) * self.ht
        self.weights, psi = _pure_components(rho0)
        self.coeffs = u.conj().T @ psi

    def evaluate(self, times: np.ndarray):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        energy = np.zeros(times.size)
        power = np.zeros(times.size)
        for start in range(0, times.size, _CHUNK):
            tt = times[start:start + _CHUNK]
            ph = np.exp(-1j * np.outer(self.d, tt))
            for w, c in zip(self.weights, self.coeffs.T):
                phi = c[:, None] * ph
                energy[start:start + tt.size] += w * np.einsum(
                    "at,at->t", phi.conj(), self.ht @ phi
                ).real
                power[start:start + tt.size] += w * np.einsum(
                    "at,at->t", phi.conj(), self.kt @ phi
                ).real
        return energy, power


def golden_section_max(f, a: float, b: float, tol: float = GOLDEN_TOL):
    """Maximize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    inv_phi = (math.sqrt(5) - 1) / 2
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def quench_scan(H, V, rho0, t_max: Optional[float] = None, n_steps: int = DEFAULT_STEPS,
                spectral_v: Optional[SpectralData] = None) -> QuenchResult:
    """Scan ``E(t)`` and ``P(t)`` on a uniform grid and refine the maximum of ``|P|``."""
    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    ev = _QuenchEvaluator(H, V, rho0, spectral_v)
    if t_max is None:
        t_max = default_t_max(ev.d)
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    times = np.linspace(0.0, t_max, n_steps)
    energy, power = ev.evaluate(times)
    i = int(np.argmax(np.abs(power)))
    lo, hi = times[max(i - 1, 0)], times[min(i + 1, n_steps - 1)]
    t_best, p_best = times[i], abs(power[i])
    t_ref, p_ref = golden_section_max(lambda t: abs(ev.evaluate(t)[1][0]), lo, hi)
    if p_ref > p_best:
        t_best, p_best = t_ref, p_ref
    e_at, p_at = ev.evaluate(t_best)
    return QuenchResult(times, energy, power, float(p_best), float(t_best), float(p_at[0]), float(e_at[0]))


def parallel_baseline(num_sites: int, h: float, total_potential: float) -> float:
    """Maximum power of ``L`` independent cells ``h sigma^z`` sharing potential ``W``.

    Each cell gets potential ``w = W / L``; transverse driving from the cell
    ground state reaches ``|h| w``, so the total is ``|h| W``.
    """
    if not total_potential > 0:
        raise ValueError("total potential must be positive")
    w = total_potential / num_sites
    return num_sites * abs(h) * w


def advantage_ratio(p_quantum: float, num_sites: int, h: float, w_quantum: float,
                    w_parallel: float, k_locality: Optional[int] = None) -> AdvantageReport:
    p_par = parallel_baseline(num_sites, h, w_parallel)
    if p_par == 0:
        raise ZeroDivisionError("parallel baseline has zero power")
    return AdvantageReport(
        p_quantum_max=float(p_quantum),
        p_parallel_max=p_par,
        gamma=float(p_quantum) / p_par,
        k_locality=k_locality,
        c0_satisfied=bool(w_quantum <= w_parallel),
    )

