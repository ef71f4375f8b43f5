"""Randomized lattice instances and the proof-identity checks run over them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import (
    build_h_of_e,
    full_report,
    integral_commutator,
    LatticeInfo,
    v_of_e_eigenbasis,
)
from .hamiltonians import BatterySpec, build_battery, delta_e
from .operators import (
    PAULI_LETTERS,
    PAULI_MATRICES,
    HermitianOperator,
    PauliSum,
    PauliTerm,
    commutator,
    eigendecompose,
    eigenvalues,
    operator_norm,
    to_dense,
)

FIELDS = (0.5, 1.0, 2.0)


@dataclass
class Instance:
    num_sites: int
    h: float
    single_site: np.ndarray
    H: HermitianOperator
    V: HermitianOperator
    pauli_sum: PauliSum

    def to_dict(self) -> dict:
        return {
            "num_sites": self.num_sites,
            "h": self.h,
            "single_site_real": np.real(self.single_site).tolist(),
            "single_site_imag": np.imag(self.single_site).tolist(),
            "driving": self.pauli_sum.to_dict(),
        }


def random_pauli_sum(rng: np.random.Generator, num_sites: int, k: int, max_terms: int) -> PauliSum:
    """Random terms of locality ``1..k``; at least one term has locality exactly ``k``."""
    n_terms = int(rng.integers(1, max_terms + 1))
    terms = []
    for t in range(n_terms):
        n = k if t == 0 else int(rng.integers(1, k + 1))
        sites = rng.choice(num_sites, size=n, replace=False)
        letters = {int(s): PAULI_LETTERS[int(rng.integers(3))] for s in sites}
        terms.append(PauliTerm(float(rng.standard_normal()), letters))
    return PauliSum(num_sites, tuple(terms))


def random_instance(rng: np.random.Generator, max_sites: int = 6, fields=FIELDS,
                    rotate_cells: bool = True) -> Instance:
    """Lattice battery ``sum_l H_s`` with a random k-local Pauli driving.

    With ``rotate_cells`` a third of the instances use ``H_s = h n.sigma`` along
    a random axis, so the battery eigenbasis is not the computational one.
    """
    L = int(rng.integers(1, max_sites + 1))
    h = float(fields[int(rng.integers(len(fields)))])
    if rotate_cells and rng.random() < 1 / 3:
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        hs = h * sum(a * PAULI_MATRICES[p] for a, p in zip(axis, PAULI_LETTERS))
    else:
        hs = h * PAULI_MATRICES["Z"]
    H = build_battery(BatterySpec(L, h, None if np.allclose(hs, h * PAULI_MATRICES["Z"]) else hs))
    k = int(rng.integers(1, L + 1))
    psum = random_pauli_sum(rng, L, k, max_terms=2 * L + 2)
    return Instance(L, h, hs, H, to_dense(psum), psum)


def lemma1_deviation(inst: Instance) -> float:
    """Max-entry gap between the integral representation and ``[H, V]``, relative to ``||H|| ||V||``."""
    direct = commutator(inst.H, inst.V)
    integral = integral_commutator(inst.H, inst.V)
    scale = max(operator_norm(inst.H) * operator_norm(inst.V), 1e-300)
    return float(np.max(np.abs(integral - direct)) / scale)


def lemma2_deviation(inst: Instance, rng: np.random.Generator, n_e: int = 10):
    """Worst spectrum mismatch between ``v(e)`` and ``V`` (relative to ``||V||``) and worst ``| ||h(e)|| - 1/2 |``."""
    spec = eigendecompose(inst.H)
    de = delta_e(inst.H, inst.V, spectral=spec)
    if de == 0.0:
        return 0.0, 0.0
    wv = eigenvalues(inst.V)
    vn = max(operator_norm(inst.V), 1e-300)
    worst_v = worst_h = 0.0
    for e in de * (1.0 - rng.random(n_e)):  # samples in (0, de]
        h = build_h_of_e(spec.values, de, e).diag_signs
        worst_h = max(worst_h, abs(float(np.max(np.abs(h))) - 0.5), float(np.max(np.abs(np.abs(h) - 0.5))))
        ve = v_of_e_eigenbasis(spec, inst.V, de, e)
        we = np.linalg.eigvalsh(0.5 * (ve + ve.conj().T))
        worst_v = max(worst_v, float(np.max(np.abs(we - wv))) / vn)
    return worst_v, worst_h


def chain_report(inst: Instance, p_max=None):
    lattice = LatticeInfo(inst.single_site, inst.pauli_sum.k_locality, inst.pauli_sum)
    return full_report(inst.H, inst.V, lattice, p_max=p_max, check=False)
