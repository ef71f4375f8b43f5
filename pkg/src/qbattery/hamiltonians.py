"""Battery and driving Hamiltonians, and the coupling range Delta E."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Union

import numpy as np

from .operators import (
    MAX_SITES,
    SIGMA_Z,
    DimensionLimitError,
    HermitianOperator,
    PauliSum,
    PauliTerm,
    SpectralData,
    as_matrix,
    eigendecompose,
    kron_lift,
    operator_norm,
    shifted_norm,
    to_dense,
)

DELTA_E_RTOL = 1e-12


def realization_rng(master_seed: int, num_sites: int, index: int) -> np.random.Generator:
    """PCG64 stream keyed by ``(master_seed, L, realization index)``.

    Streams are independent of evaluation order, so ensembles can be split
    across workers or resumed without changing any draw.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, num_sites, index])))


@dataclass(frozen=True)
class BatterySpec:
    num_sites: int
    field_strength: float = 1.0
    single_site: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.num_sites < 1:
            raise ValueError("battery needs at least one cell")
        if self.single_site is not None:
            hs = HermitianOperator(self.single_site)
            if hs.dim < 2:
                raise ValueError("single-cell Hamiltonian must have dimension >= 2")

    def single_site_matrix(self) -> np.ndarray:
        if self.single_site is None:
            return self.field_strength * SIGMA_Z
        return HermitianOperator(self.single_site).matrix


def build_battery(spec: BatterySpec, max_sites: int = MAX_SITES) -> HermitianOperator:
    """Sum of identical non-interacting cells, one ``H_s`` per site."""
    L = spec.num_sites
    if spec.single_site is None:
        if L > max_sites:
            raise DimensionLimitError(f"{L} sites exceeds the dense limit of {max_sites}")
        n = 1 << L
        bits = (np.arange(n)[:, None] >> (L - 1 - np.arange(L))[None, :]) & 1
        return HermitianOperator(np.diag(spec.field_strength * (L - 2 * bits.sum(axis=1))))
    hs = spec.single_site_matrix()
    d = hs.shape[0]
    if d**L > 2**max_sites:
        raise DimensionLimitError(f"dimension {d}^{L} exceeds the dense limit 2^{max_sites}")
    return HermitianOperator(sum(kron_lift(hs, l, L) for l in range(L)))


# driving variants

@dataclass(frozen=True)
class SYRandom:
    """Random all-to-all two-body ``sum_{i<j,a} J_ij^a s_i^a s_j^a`` with normal couplings."""

    seed: Union[int, tuple]
    coupling_std: float = 1.0


@dataclass(frozen=True)
class MixedNNGlobal:
    """Odd-bond nearest-neighbour XX pairs plus one global X string, total weight ``V``."""

    V: float = 1.0


@dataclass(frozen=True)
class ExplicitPauliSum:
    pauli_sum: PauliSum


@dataclass(frozen=True)
class SingleQubitParallel:
    amplitude: float


@dataclass(frozen=True)
class FixedShiftedNorm:
    target: float = 2.0

    def __post_init__(self):
        if not self.target > 0:
            raise ValueError("normalization target must be positive")


@dataclass(frozen=True)
class DrivingSpec:
    variant: Union[SYRandom, MixedNNGlobal, ExplicitPauliSum, SingleQubitParallel]
    normalization: Optional[FixedShiftedNorm] = None


@dataclass(frozen=True)
class DrivingInfo:
    k_locality: int
    c_applied: float
    raw_shifted_norm: float
    pauli_sum: PauliSum


def sy_couplings(rng: np.random.Generator, num_sites: int, std: float = 1.0) -> np.ndarray:
    """Couplings of shape ``(n_pairs, 3)``; pairs ``i<j`` in lexicographic order, columns x, y, z."""
    npairs = num_sites * (num_sites - 1) // 2
    return std * rng.standard_normal((npairs, 3))


def sy_pauli_sum(couplings: np.ndarray, num_sites: int) -> PauliSum:
    terms = []
    for (i, j), row in zip(combinations(range(num_sites), 2), np.asarray(couplings)):
        for letter, c in zip("XYZ", row):
            terms.append(PauliTerm(c, {i: letter, j: letter}))
    return PauliSum(num_sites, tuple(terms))


def mixed_nn_global_sum(num_sites: int, V: float = 1.0) -> PauliSum:
    # bonds (1,2), (3,4), ... in 1-based labels; an odd last site sits only in the global string
    c = V / (num_sites // 2 + 1)
    terms = [PauliTerm(c, {l: "X", l + 1: "X"}) for l in range(0, num_sites - 1, 2)]
    terms.append(PauliTerm(c, {l: "X" for l in range(num_sites)}))
    return PauliSum(num_sites, tuple(terms))


def driving_pauli_sum(variant, num_sites: int) -> PauliSum:
    if isinstance(variant, SYRandom):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(variant.seed)))
        return sy_pauli_sum(sy_couplings(rng, num_sites, variant.coupling_std), num_sites)
    if isinstance(variant, MixedNNGlobal):
        return mixed_nn_global_sum(num_sites, variant.V)
    if isinstance(variant, ExplicitPauliSum):
        if variant.pauli_sum.num_sites != num_sites:
            raise ValueError("explicit Pauli sum is defined on a different number of sites")
        return variant.pauli_sum
    if isinstance(variant, SingleQubitParallel):
        return PauliSum(
            num_sites, tuple(PauliTerm(variant.amplitude, {l: "X"}) for l in range(num_sites))
        )
    raise TypeError(f"unknown driving variant {variant!r}")


def build_driving(spec: DrivingSpec, num_sites: int, max_sites: int = MAX_SITES):
    """Return ``(V, DrivingInfo)``; with ``FixedShiftedNorm`` the spread of ``V`` is the target."""
    psum = driving_pauli_sum(spec.variant, num_sites)
    V = to_dense(psum, max_sites=max_sites)
    raw = shifted_norm(V)
    c = 1.0
    if spec.normalization is not None:
        if raw == 0.0:
            raise ValueError(
                f"driving has zero spectral spread on {num_sites} sites; cannot normalize"
            )
        c = spec.normalization.target / raw
        V = HermitianOperator(c * V.matrix)
        psum = psum.scaled(c)
    return V, DrivingInfo(psum.k_locality, c, raw, psum)


def delta_e(H, V, tol: Optional[float] = None, spectral: Optional[SpectralData] = None) -> float:
    """Largest ``|E_j - E_m|`` over nonzero entries of ``V`` in the eigenbasis of ``H``.

    Entries with ``|V_jm| <= tol`` count as zero; the default tolerance is
    ``1e-12 * ||V||``. Returns 0 when ``V`` is diagonal in that basis.
    """
    if spectral is None:
        spectral = eigendecompose(H)
    vm = as_matrix(V)
    if vm.shape != spectral.vectors.shape:
        raise ValueError("H and V dimensions differ")
    if tol is None:
        tol = DELTA_E_RTOL * operator_norm(vm)
    vt = spectral.to_eigenbasis(vm)
    e = spectral.values
    gaps = np.abs(e[:, None] - e[None, :])
    mask = np.abs(vt) > tol
    return float(gaps[mask].max()) if mask.any() else 0.0


def k_local_parts(p: PauliSum) -> dict:
    """Group the terms of ``p`` by locality, ``{k: PauliSum}`` with ascending keys."""
    groups: dict = {}
    for term in p.terms:
        groups.setdefault(term.locality, []).append(term)
    return {k: PauliSum(p.num_sites, tuple(groups[k])) for k in sorted(groups)}
