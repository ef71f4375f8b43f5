"""Disorder ensembles over random drivings, norm-scaling fits and spectral statistics."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import kernels
from .bounds import (
    RECORD_COLUMNS,
    SLACK,
    LatticeInfo,
    corollary_bound,
    full_report,
    mixed_nn_global_closed_form,
    report_row,
)
from .dynamics import DEFAULT_STEPS, ground_state, quench_scan
from .hamiltonians import (
    BatterySpec,
    DrivingSpec,
    FixedShiftedNorm,
    MixedNNGlobal,
    SYRandom,
    build_battery,
    build_driving,
    realization_rng,
    sy_couplings,
    sy_pauli_sum,
)
from .operators import eigenvalues, pauli_masks, to_dense

VARIANTS = ("sy_random", "mixed_nn_global")
STOCHASTIC = {"sy_random"}

EXTRA_COLUMNS = ("raw_half_norm", "c_applied", "nominal_bound", "t_at_max", "violations")
ENSEMBLE_COLUMNS = RECORD_COLUMNS + EXTRA_COLUMNS
OBSERVABLES = ("p_max", "commutator_norm", "raw_half_norm")
STATS_COLUMNS = ("L", "n", "failures") + tuple(
    f"{o}_{s}" for o in OBSERVABLES for s in ("mean", "std", "max")
)
HIST_COLUMNS = ("L", "bin_lo", "count")


@dataclass(frozen=True)
class EnsembleConfig:
    L_values: tuple
    realizations: int = 100
    master_seed: int = 0
    driving: str = "sy_random"
    h: float = 1.0
    potential: float = 2.0
    V: float = 1.0
    n_steps: int = DEFAULT_STEPS
    t_max: Optional[float] = None
    bin_width: float = 0.1
    scan: bool = True
    workers: int = 1
    driving_scale: float = 1.0

    def __post_init__(self):
        Ls = tuple(int(l) for l in self.L_values)
        if not Ls:
            raise ValueError("L_values must be nonempty")
        if list(Ls) != sorted(set(Ls)):
            raise ValueError("L_values must be strictly ascending")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.driving not in VARIANTS:
            raise ValueError(f"unknown driving {self.driving!r}; expected one of {VARIANTS}")
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        object.__setattr__(self, "L_values", Ls)

    def realizations_for(self, L: int) -> int:
        # deterministic drivings need a single scan per L
        return self.realizations if self.driving in STOCHASTIC else 1

    def driving_spec(self, L: int, index: int) -> DrivingSpec:
        if self.driving == "sy_random":
            return DrivingSpec(
                SYRandom(seed=(self.master_seed, L, index)), FixedShiftedNorm(self.potential)
            )
        return DrivingSpec(MixedNNGlobal(self.V))

    def nominal_bound(self, L: int, k: int, single_site) -> float:
        """Bound implied by the configured driving, independent of the matrix actually built.

        Random drivings use the k-local corollary at the nominal potential; the
        bond + global driving uses its exact finite-L decomposition bound.
        """
        if self.driving == "sy_random":
            return corollary_bound(k, single_site, self.potential)
        return mixed_nn_global_closed_form(L, self.V, abs(self.h))


@dataclass
class EnsembleResult:
    config: EnsembleConfig
    records: list
    stats: list
    histogram: list
    failures: list = field(default_factory=list)

    @property
    def violation_count(self) -> int:
        return sum(1 for r in self.records if r["violations"])


def run_realization(cfg: EnsembleConfig, L: int, index: int) -> dict:
    """Build, scan and bound one disorder realization."""
    battery = BatterySpec(L, cfg.h)
    H = build_battery(battery)
    V, info = build_driving(cfg.driving_spec(L, index), L)
    if cfg.driving_scale != 1.0:
        V = cfg.driving_scale * V
        info = type(info)(info.k_locality, info.c_applied * cfg.driving_scale,
                          info.raw_shifted_norm, info.pauli_sum.scaled(cfg.driving_scale))
    p_max = t_at = None
    if cfg.scan:
        res = quench_scan(H, V, ground_state(H), t_max=cfg.t_max, n_steps=cfg.n_steps)
        p_max, t_at = res.p_max, res.t_at_max
    lattice = LatticeInfo(battery.single_site_matrix(), info.k_locality, info.pauli_sum)
    report = full_report(H, V, lattice, p_max=p_max, check=False)
    row = report_row(report, L, cfg.master_seed, index, info.k_locality)
    nominal = cfg.nominal_bound(L, info.k_locality, lattice.single_site)
    bad = report.violations()
    if report.observed_commutator_norm > nominal + SLACK:
        bad.append("commutator_norm <= nominal_bound")
    if p_max is not None and p_max > nominal + SLACK:
        bad.append("p_max <= nominal_bound")
    if cfg.driving == "sy_random" and abs(report.driving_spread - cfg.potential) > SLACK * max(1.0, cfg.potential):
        bad.append("potential == configured potential")
    row.update(
        raw_half_norm=info.raw_shifted_norm / 2,
        c_applied=info.c_applied,
        nominal_bound=nominal,
        t_at_max=t_at,
        violations=";".join(bad),
    )
    return row


def _work(item):
    cfg, L, i = item
    try:
        return run_realization(cfg, L, i)
    except Exception as exc:  # recorded, not raised: one bad draw must not sink the ensemble
        return {"L": L, "realization": i, "error": f"{type(exc).__name__}: {exc}"}


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _summary(values) -> tuple:
    a = np.asarray([v for v in values if v is not None], dtype=float)
    if a.size == 0:
        return None, None, None
    return float(a.mean()), float(a.std()), float(a.max())


def histogram_counts(values, bin_width: float = 0.1):
    """Counts per bin ``[x, x + bin_width)``; returns ``(bin_lo, counts)``."""
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        raise ValueError("cannot histogram an empty sample")
    # rounding guards values that sit on a bin edge up to float noise
    idx = np.floor(np.round(a / bin_width, 9)).astype(np.int64)
    lo, hi = idx.min(), idx.max()
    counts = np.bincount(idx - lo, minlength=hi - lo + 1)
    return (np.arange(lo, hi + 1) * bin_width), counts


def aggregate(cfg: EnsembleConfig, records: Sequence[dict], failures: Sequence[dict]):
    stats, hist = [], []
    for L in cfg.L_values:
        rows = [r for r in records if r["L"] == L]
        entry = {"L": L, "n": len(rows), "failures": sum(1 for f in failures if f["L"] == L)}
        for o in OBSERVABLES:
            m, s, mx = _summary(r[o] for r in rows)
            entry.update({f"{o}_mean": m, f"{o}_std": s, f"{o}_max": mx})
        stats.append(entry)
        if rows:
            lo, counts = histogram_counts([r["commutator_norm"] for r in rows], cfg.bin_width)
            hist.extend(
                {"L": L, "bin_lo": round(float(b), 12), "count": int(c)}
                for b, c in zip(lo, counts)
            )
    return stats, hist


def run_ensemble(cfg: EnsembleConfig) -> EnsembleResult:
    items = [(cfg, L, i) for L in cfg.L_values for i in range(cfg.realizations_for(L))]
    out = _map(_work, items, cfg.workers)
    records = [r for r in out if "error" not in r]
    failures = [r for r in out if "error" in r]
    stats, hist = aggregate(cfg, records, failures)
    return EnsembleResult(cfg, records, stats, hist, failures)


# raw norm of the un-normalized random driving

def _parity_blocks(couplings: np.ndarray, num_sites: int):
    """Symmetry blocks of the un-normalized random two-body driving.

    Every term commutes with the global Z and X parities. For even ``L`` both
    are used (four blocks of ``2^(L-2)``); for odd ``L`` they anticommute, the
    X parity maps the two Z sectors onto each other, and one block of
    ``2^(L-1)`` carries the whole spectrum.
    """
    L = num_sites
    x, z, amps = pauli_masks(sy_pauli_sum(couplings, L))
    n = 1 << L
    states = np.arange(n, dtype=np.int64)
    zpar = np.bitwise_count(states) & 1
    full = n - 1
    blocks = []
    if L % 2:
        even = states[zpar == 0]
        index = np.full(n, -1, dtype=np.int64)
        index[even] = np.arange(even.size)
        a = np.zeros((even.size, even.size), dtype=np.complex128)
        kernels.pauli_accumulate(a, even, index, x, z, amps)
        return [a.real]
    for parity in (0, 1):
        sector = states[zpar == parity]
        reps = sector[sector < (sector ^ full)]
        index = np.full(n, -1, dtype=np.int64)
        index[reps] = np.arange(reps.size)
        cols = np.concatenate([reps, reps ^ full])
        a = np.zeros((reps.size, cols.size), dtype=np.complex128)
        kernels.pauli_accumulate(a, cols, index, x, z, amps)
        direct, flipped = a.real[:, :reps.size], a.real[:, reps.size:]
        blocks.extend([direct + flipped, direct - flipped])
    return blocks


def sy_raw_half_norm(couplings: np.ndarray, num_sites: int) -> float:
    """``||V0 - v0_min|| / 2`` of the un-normalized driving, via parity blocks."""
    if num_sites < 2:
        raise ValueError("need at least two sites")
    lo, hi = math.inf, -math.inf
    for b in _parity_blocks(couplings, num_sites):
        w = np.linalg.eigvalsh(b)
        lo, hi = min(lo, w[0]), max(hi, w[-1])
    return float(hi - lo) / 2


def _raw_norm_item(item):
    master_seed, L, i, std = item
    return sy_raw_half_norm(sy_couplings(realization_rng(master_seed, L, i), L, std), L)


def norm_scaling_data(L_values, realizations, master_seed: int, workers: int = 1,
                      coupling_std: float = 1.0) -> dict:
    """Raw half-norms per ``L``; ``realizations`` may be an int or a per-L mapping."""
    counts = {L: (realizations[L] if isinstance(realizations, dict) else realizations) for L in L_values}
    items = [(master_seed, L, i, coupling_std) for L in L_values for i in range(counts[L])]
    vals = _map(_raw_norm_item, items, workers)
    out, pos = {}, 0
    for L in L_values:
        out[L] = np.asarray(vals[pos:pos + counts[L]])
        pos += counts[L]
    return out


class ScalingFit(NamedTuple):
    alpha: float
    residuals: np.ndarray
    residual_norm: float
    analytic_constant: float
    loglog_slope: float


def ansatz(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    return np.sqrt(L**2 * (L - 1))


def norm_scaling_fit(L_values, means) -> ScalingFit:
    """Least-squares ``alpha`` in ``mean(L) ~ alpha sqrt(L^2 (L-1))``."""
    L = np.asarray(L_values, dtype=float)
    y = np.asarray(means, dtype=float)
    if np.unique(L).size < 3:
        raise ValueError("need at least three distinct L values")
    f = ansatz(L)
    (alpha,), *_ = np.linalg.lstsq(f[:, None], y, rcond=None)
    res = y - alpha * f
    slope = float(np.polyfit(np.log(L), np.log(y), 1)[0])
    return ScalingFit(float(alpha), res, float(np.linalg.norm(res)), math.sqrt(3 * math.log(2)), slope)


def analytic_vmax_estimate(num_sites: int) -> float:
    """Gaussian extreme-value estimate ``sigma sqrt(2 ln 2^L)`` with ``sigma^2 = 3L(L-1)/2``."""
    if num_sites < 2:
        raise ValueError("estimate needs L >= 2")
    L = num_sites
    return math.sqrt(3 * L * L * (L - 1) * math.log(2))


class VarianceCheck(NamedTuple):
    mean: float
    variance: float
    mean_se: float
    variance_se: float
    target: float


def spectral_variance_check(num_sites: int, realizations: int, seed: int,
                            coupling_std: float = 1.0) -> VarianceCheck:
    """Pooled eigenvalue mean and variance of the un-normalized random driving.

    The variance standard error comes from the spread of per-realization second
    moments, since eigenvalues of one draw are strongly correlated.
    """
    L = num_sites
    m1 = np.empty(realizations)
    m2 = np.empty(realizations)
    total = 0
    for i in range(realizations):
        c = sy_couplings(realization_rng(seed, L, i), L, coupling_std)
        w = eigenvalues(to_dense(sy_pauli_sum(c, L)))
        m1[i] = w.mean()
        m2[i] = np.mean(w**2)
        total += w.size
    mean = float(m1.mean())
    var = float(m2.mean() - mean**2)
    var_se = float(m2.std(ddof=1) / math.sqrt(realizations)) if realizations > 1 else math.inf
    mean_se = math.sqrt(var / total)
    return VarianceCheck(mean, var, mean_se, var_se, 1.5 * L * (L - 1) * coupling_std**2)
