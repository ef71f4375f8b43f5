"""Charging-power bounds and the h(e)/v(e) construction behind them.

The commutator ``[H, V]`` is rebuilt as a piecewise-constant integral over
``e in (0, Delta E]`` of ``[h(e), v(e)]``, where ``h(e)`` has eigenvalues
``+-1/2`` in the eigenbasis of ``H`` and ``v(e)`` is ``V`` with some entries
sign-flipped. Everything here is evaluated exactly (breakpoint enumeration),
so the identities can be checked to rounding error.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from typing import Mapping, NamedTuple, Optional

import numpy as np

from . import kernels
from .hamiltonians import DELTA_E_RTOL
from .hamiltonians import delta_e as _delta_e
from .hamiltonians import k_local_parts
from .operators import (
    HermitianOperator,
    PauliSum,
    SpectralData,
    as_matrix,
    commutator_norm,
    eigendecompose,
    eigenvalues,
    operator_norm,
    shifted_norm,
    to_dense,
)

SLACK = 1e-9


class BoundViolation(AssertionError):
    """An observed quantity exceeded a bound that must hold."""


@dataclass(frozen=True)
class HofE:
    e: float
    diag_signs: np.ndarray


class Theorem1Bound(NamedTuple):
    delta_e: float
    theorem1: float
    theorem1_unshifted: float


@dataclass
class BoundReport:
    general_bound: float
    delta_e: float
    theorem1: float
    theorem1_unshifted: float
    observed_commutator_norm: float
    corollary_klocal: Optional[float] = None
    decomposition_bound: Optional[float] = None
    observed_p_max: Optional[float] = None
    driving_spread: Optional[float] = None

    def violations(self, slack: float = SLACK) -> list:
        """Names of the inequalities in the bound chain that fail."""
        out = []
        c = self.observed_commutator_norm
        if c > self.theorem1 + slack:
            out.append("commutator_norm <= theorem1")
        if self.theorem1 > self.theorem1_unshifted + slack:
            out.append("theorem1 <= theorem1_unshifted")
        if self.theorem1_unshifted > self.general_bound + slack:
            out.append("theorem1_unshifted <= general_bound")
        if self.observed_p_max is not None and self.observed_p_max > c + slack:
            out.append("p_max <= commutator_norm")
        if self.corollary_klocal is not None and self.theorem1 > self.corollary_klocal + slack:
            out.append("theorem1 <= corollary_klocal")
        if self.decomposition_bound is not None and c > self.decomposition_bound + slack:
            out.append("commutator_norm <= decomposition_bound")
        return out


@dataclass(frozen=True)
class LatticeInfo:
    """What the lattice corollaries need: the cell Hamiltonian and the driving's Pauli form."""

    single_site: np.ndarray
    k_locality: int
    pauli_sum: Optional[PauliSum] = None


def theorem1_bound(H, V, tol: Optional[float] = None,
                   spectral: Optional[SpectralData] = None,
                   v_values: Optional[np.ndarray] = None) -> Theorem1Bound:
    """``Delta E * ||V - v_min|| / 2`` together with ``Delta E`` and ``Delta E * ||V||``.

    ``spectral`` (of ``H``) and ``v_values`` (ascending spectrum of ``V``) may be
    passed in to avoid recomputing them.
    """
    wv = eigenvalues(V) if v_values is None else v_values
    v_norm = float(np.max(np.abs(wv))) if wv.size else 0.0
    if tol is None:
        tol = DELTA_E_RTOL * v_norm
    de = _delta_e(H, V, tol=tol, spectral=spectral)
    if de == 0.0:
        cn = commutator_norm(H, V)
        scale = max(1.0, operator_norm(H) * v_norm)
        if cn > SLACK * scale:
            raise BoundViolation(f"Delta E = 0 but ||[H, V]|| = {cn:.3e}")
    return Theorem1Bound(de, de * float(wv[-1] - wv[0]) / 2, de * v_norm)


def _spread(a) -> float:
    if np.isscalar(a):
        return float(a)
    return shifted_norm(a)


def corollary_bound(k: int, single_site, V) -> float:
    """``k ||H_s - E_s,min|| ||V - v_min|| / 2``; ``V`` may be an operator or its potential."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return k * shifted_norm(single_site) * _spread(V) / 2


def decomposition_bound(parts: Mapping[int, PauliSum], single_site) -> float:
    """``sum_k k ||V_k - v_k,min|| ||H_s - E_s,min|| / 2`` over the k-local parts."""
    hs = shifted_norm(single_site)
    return float(sum(k * shifted_norm(to_dense(p)) * hs / 2 for k, p in parts.items()))


def mixed_nn_global_closed_form(num_sites: int, V: float = 1.0, h: float = 1.0) -> float:
    """Decomposition bound of the odd-bond + global-string driving on ``h sigma^z`` cells."""
    if num_sites < 2:
        raise ValueError("closed form needs at least two sites")
    m = num_sites // 2
    return (4 / (1 + 1 / m) + 2 * num_sites / (m + 1)) * V * h


def breakpoints(energies: np.ndarray, delta_e: float) -> np.ndarray:
    """Offsets ``x_j`` in ``[0, Delta E)`` with ``E_j = n_j Delta E + x_j``."""
    e = np.asarray(energies, dtype=float)
    return e - delta_e * np.floor(e / delta_e)


def _signs(energies: np.ndarray, delta_e: float, e) -> np.ndarray:
    n = np.floor((np.asarray(energies)[None, :] - np.atleast_1d(e)[:, None]) / delta_e)
    return np.where(np.mod(n, 2) == 1, 0.5, -0.5)


def _check_e(delta_e: float, e: float):
    if not delta_e > 0:
        raise ValueError("Delta E must be positive")
    if not 0 < e <= delta_e:
        raise ValueError(f"e = {e} outside (0, {delta_e}]")


def build_h_of_e(energies, delta_e: float, e: float) -> HofE:
    """Diagonal of ``h(e)``: ``+1/2`` where ``floor((E_j - e)/Delta E)`` is odd, else ``-1/2``."""
    _check_e(delta_e, e)
    return HofE(float(e), _signs(energies, delta_e, e)[0])


def _flip_signs(h: np.ndarray) -> np.ndarray:
    n = h.size
    idx = np.arange(n)
    order = idx[:, None] - idx[None, :]
    return np.where(order * (h[:, None] - h[None, :]) < 0, -1.0, 1.0)


def v_of_e_eigenbasis(spectral: SpectralData, V, delta_e: float, e: float) -> np.ndarray:
    """``v(e)`` expressed in the eigenbasis of ``H``."""
    h = build_h_of_e(spectral.values, delta_e, e).diag_signs
    return _flip_signs(h) * spectral.to_eigenbasis(V)


def build_v_of_e(spectral: SpectralData, V, delta_e: float, e: float) -> HermitianOperator:
    """``v(e)`` in the original basis; ``(j, m)`` entry flipped iff ``(j-m)(h_j-h_m) < 0``."""
    return HermitianOperator(spectral.from_eigenbasis(v_of_e_eigenbasis(spectral, V, delta_e, e)))


def build_h_matrix(spectral: SpectralData, delta_e: float, e: float) -> HermitianOperator:
    h = build_h_of_e(spectral.values, delta_e, e).diag_signs
    return HermitianOperator((spectral.vectors * h) @ spectral.vectors.conj().T)


def integration_grid(energies, delta_e: float):
    """Subinterval widths and midpoints of ``(0, Delta E]`` cut at every ``x_j``."""
    pts = np.unique(np.concatenate([[0.0, delta_e], breakpoints(energies, delta_e)]))
    pts = pts[(pts >= 0) & (pts <= delta_e)]
    widths = np.diff(pts)
    mids = 0.5 * (pts[:-1] + pts[1:])
    keep = widths > 0
    return widths[keep], mids[keep]


def integral_commutator(H, V, delta_e: Optional[float] = None,
                        spectral: Optional[SpectralData] = None) -> np.ndarray:
    """Exact ``int_0^Delta E [h(e), v(e)] de``, which reproduces ``[H, V]``.

    The integrand is constant between consecutive breakpoints, so the integral
    is a width-weighted sum of commutators evaluated at interval midpoints.
    """
    if spectral is None:
        spectral = eigendecompose(H)
    if delta_e is None:
        delta_e = _delta_e(H, V, spectral=spectral)
        if delta_e == 0.0:
            return np.zeros_like(as_matrix(V))
    if not delta_e > 0:
        raise ValueError("Delta E must be positive")
    widths, mids = integration_grid(spectral.values, delta_e)
    signs = np.ascontiguousarray(_signs(spectral.values, delta_e, mids))
    vt = np.ascontiguousarray(spectral.to_eigenbasis(V))
    return spectral.from_eigenbasis(kernels.sign_integral(vt, signs, np.ascontiguousarray(widths)))


def full_report(H, V, lattice: Optional[LatticeInfo] = None, p_max: Optional[float] = None,
                check: bool = True, tol: Optional[float] = None) -> BoundReport:
    """Every bound available for ``(H, V)`` next to the observed commutator norm."""
    spectral = eigendecompose(H)
    wv = eigenvalues(V)
    t1 = theorem1_bound(H, V, tol=tol, spectral=spectral, v_values=wv)
    report = BoundReport(
        general_bound=2 * float(np.max(np.abs(spectral.values))) * float(np.max(np.abs(wv))),
        delta_e=t1.delta_e,
        theorem1=t1.theorem1,
        theorem1_unshifted=t1.theorem1_unshifted,
        observed_commutator_norm=commutator_norm(H, V),
        observed_p_max=p_max,
        driving_spread=float(wv[-1] - wv[0]),
    )
    if lattice is not None:
        report.corollary_klocal = corollary_bound(
            max(lattice.k_locality, 1), lattice.single_site, report.driving_spread
        )
        if lattice.pauli_sum is not None:
            report.decomposition_bound = decomposition_bound(
                k_local_parts(lattice.pauli_sum), lattice.single_site
            )
    if check:
        bad = report.violations()
        if bad:
            raise BoundViolation(f"bound chain violated: {bad}; report {asdict(report)}")
    return report


RECORD_COLUMNS = (
    "L", "seed", "realization", "k", "delta_e", "general_bound", "theorem1",
    "corollary_klocal", "decomposition_bound", "commutator_norm", "p_max",
)


def report_row(report: BoundReport, L: int, seed, realization: int, k: int) -> dict:
    return {
        "L": L,
        "seed": seed,
        "realization": realization,
        "k": k,
        "delta_e": report.delta_e,
        "general_bound": report.general_bound,
        "theorem1": report.theorem1,
        "corollary_klocal": report.corollary_klocal,
        "decomposition_bound": report.decomposition_bound,
        "commutator_norm": report.observed_commutator_norm,
        "p_max": report.observed_p_max,
    }


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_cell(r.get(c)) for c in columns])

