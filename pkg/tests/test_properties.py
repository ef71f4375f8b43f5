"""Property-based checks of the structural invariants."""
import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from qbattery.bounds import (
    SLACK,
    breakpoints,
    build_h_of_e,
    corollary_bound,
    full_report,
    integral_commutator,
    theorem1_bound,
    LatticeInfo,
)
from qbattery.corpus import lemma1_deviation, lemma2_deviation, random_instance
from qbattery.dynamics import evolve, ground_state, quench_scan
from qbattery.ensembles import histogram_counts
from qbattery.hamiltonians import (
    DrivingSpec,
    FixedShiftedNorm,
    SYRandom,
    build_driving,
    delta_e,
    k_local_parts,
)
from qbattery.operators import (
    PauliSum,
    PauliTerm,
    commutator_norm,
    eigendecompose,
    eigenvalues,
    kron_lift,
    operator_norm,
    random_hermitian,
    shifted_norm,
    to_dense,
    PAULI_MATRICES,
)

from conftest import dense_oracle

SEEDS = st.integers(0, 2**32 - 1)
CORPUS = settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
FAST = settings(max_examples=60, deadline=None)


@st.composite
def pauli_sums(draw, max_sites=5, max_terms=6):
    L = draw(st.integers(1, max_sites))
    terms = []
    for _ in range(draw(st.integers(0, max_terms))):
        sites = draw(st.sets(st.integers(0, L - 1), min_size=1, max_size=L))
        letters = {s: draw(st.sampled_from("XYZ")) for s in sites}
        coeff = draw(st.floats(-3, 3, allow_nan=False).filter(lambda c: abs(c) > 1e-3))
        terms.append(PauliTerm(coeff, letters))
    return PauliSum(L, tuple(terms))


def _instance(seed, max_sites=6):
    return random_instance(np.random.default_rng(seed), max_sites)


# operator core

@FAST
@given(SEEDS, st.sampled_from([2, 4, 8, 16, 64, 256]))
def test_spectral_round_trip(seed, dim):
    a = random_hermitian(dim, np.random.default_rng(seed))
    s = eigendecompose(a)
    assert np.all(np.diff(s.values) >= 0)
    rad = max(operator_norm(a), 1.0)
    assert np.max(np.abs(s.reconstruct() - a.matrix)) <= 1e-10 * rad
    assert np.max(np.abs(s.vectors.conj().T @ s.vectors - np.eye(dim))) <= 1e-10


@FAST
@given(SEEDS, st.integers(1, 5))
def test_norm_inequalities(seed, L):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(1 << L, rng), random_hermitian(1 << L, rng)
    assert shifted_norm(a) <= 2 * operator_norm(a) + 1e-12
    assert operator_norm(a + b) <= operator_norm(a) + operator_norm(b) + 1e-12
    # spread is twice the best scalar shift
    lam = 0.5 * (eigenvalues(a)[0] + eigenvalues(a)[-1])
    assert abs(shifted_norm(a) - 2 * operator_norm(a.matrix - lam * np.eye(1 << L))) < 1e-10


@FAST
@given(st.integers(1, 4), st.data())
def test_disjoint_single_site_terms_are_kron_lifts(L, data):
    letters = data.draw(st.lists(st.sampled_from("XYZ"), min_size=L, max_size=L))
    coeffs = data.draw(st.lists(st.floats(-2, 2, allow_nan=False), min_size=L, max_size=L))
    p = PauliSum(L, tuple(PauliTerm(c, {l: s}) for l, (c, s) in enumerate(zip(coeffs, letters))))
    direct = sum(c * kron_lift(PAULI_MATRICES[s], l, L) for l, (c, s) in enumerate(zip(coeffs, letters)))
    np.testing.assert_allclose(to_dense(p).matrix, direct, atol=1e-14)


@FAST
@given(pauli_sums())
def test_to_dense_matches_tensor_oracle(p):
    np.testing.assert_allclose(to_dense(p).matrix, dense_oracle(p), atol=1e-13)
    assert p.k_locality == max((t.locality for t in p.terms), default=0)


@FAST
@given(pauli_sums())
def test_json_round_trip(p):
    assert PauliSum.from_json(p.to_json()) == p


# hamiltonians

@CORPUS
@given(SEEDS)
def test_delta_e_obeys_locality(seed):
    inst = _instance(seed)
    k = inst.pauli_sum.k_locality
    assert delta_e(inst.H, inst.V) <= k * shifted_norm(inst.single_site) + 1e-9


@FAST
@given(SEEDS, st.floats(-5, 5, allow_nan=False), st.floats(0.1, 10) | st.floats(-10, -0.1))
def test_delta_e_shift_and_scale_invariant(seed, lam, c):
    inst = _instance(seed, 5)
    base = delta_e(inst.H, inst.V)
    vm = inst.V.matrix
    tol = 1e-10 * max(operator_norm(inst.V), 1e-300)
    assert delta_e(inst.H, vm + lam * np.eye(vm.shape[0]), tol=tol) == base
    assert delta_e(inst.H, c * vm, tol=abs(c) * tol) == base


@FAST
@given(SEEDS, st.integers(2, 6), st.floats(0.5, 5))
def test_normalization_exact(seed, L, target):
    spec = DrivingSpec(SYRandom(seed), FixedShiftedNorm(target))
    V, info = build_driving(spec, L)
    assert math.isclose(info.c_applied * info.raw_shifted_norm, target, rel_tol=1e-15)
    assert abs(shifted_norm(V) - target) <= 1e-9
    V2, _ = build_driving(spec, L)
    assert np.array_equal(V.matrix, V2.matrix)


@FAST
@given(pauli_sums())
def test_k_local_parts_partition(p):
    parts = k_local_parts(p)
    assert all(t.locality == k for k, q in parts.items() for t in q.terms)
    assert sum(len(q) for q in parts.values()) == len(p)
    total = sum((to_dense(q).matrix for q in parts.values()), np.zeros((1 << p.num_sites,) * 2))
    np.testing.assert_allclose(total, to_dense(p).matrix, atol=1e-13)


# bounds

@CORPUS
@given(SEEDS)
def test_bound_chain(seed):
    inst = _instance(seed)
    r = full_report(inst.H, inst.V, LatticeInfo(inst.single_site, inst.pauli_sum.k_locality, inst.pauli_sum),
                    check=False)
    assert r.violations() == []
    assert r.theorem1_unshifted <= r.general_bound + SLACK


@CORPUS
@given(SEEDS)
def test_lemma1_identity(seed):
    assert lemma1_deviation(_instance(seed)) <= 1e-9


@CORPUS
@given(SEEDS)
def test_lemma2_spectra(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 6)
    worst_v, worst_h = lemma2_deviation(inst, rng, 10)
    assert worst_v <= 1e-9
    assert worst_h == 0.0


@CORPUS
@given(SEEDS)
def test_corollary_dominates_theorem1(seed):
    inst = _instance(seed)
    k = max(inst.pauli_sum.k_locality, 1)
    t1 = theorem1_bound(inst.H, inst.V).theorem1
    assert t1 <= corollary_bound(k, inst.single_site, inst.V) + SLACK


@FAST
@given(SEEDS, st.floats(0.1, 10) | st.floats(-10, -0.1))
def test_theorem1_scale_covariance(seed, c):
    inst = _instance(seed, 5)
    base = theorem1_bound(inst.H, inst.V).theorem1
    assert math.isclose(theorem1_bound(inst.H, c * inst.V.matrix).theorem1, abs(c) * base, rel_tol=1e-9, abs_tol=1e-12)
    assert math.isclose(theorem1_bound(c * inst.H.matrix, inst.V).theorem1, abs(c) * base, rel_tol=1e-9, abs_tol=1e-12)


@FAST
@given(st.lists(st.integers(-4, 4), min_size=2, max_size=10), SEEDS)
def test_degenerate_spectra_integral(levels, seed):
    # integer levels with repeats: heavy degeneracy and breakpoints at 0
    E = np.sort(np.asarray(levels, dtype=float))
    rng = np.random.default_rng(seed)
    n = E.size
    q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    H = (q * E) @ q.conj().T
    g = rng.standard_normal((n, n))
    V = g + g.T
    Hs = 0.5 * (H + H.conj().T)
    got = integral_commutator(Hs, V)
    scale = max(operator_norm(Hs) * operator_norm(V), 1e-300)
    assert np.max(np.abs(got - (Hs @ V - V @ Hs))) <= 1e-9 * scale


@FAST
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=12), st.floats(0.1, 5),
       st.floats(0.001, 0.999))
def test_h_signs_flip_once(energies, de, frac):
    E = np.sort(np.asarray(energies))
    h = build_h_of_e(E, de, frac * de).diag_signs
    assert set(np.abs(h)) == {0.5}
    x = breakpoints(E, de)
    grid = np.linspace(1e-6, de, 400) * (1 - 1e-9)
    signs = np.array([build_h_of_e(E, de, e).diag_signs for e in grid])
    flips = np.sum(signs[1:] != signs[:-1], axis=0)
    interior = (x > grid[0]) & (x < grid[-1])
    assert np.all(flips[interior] == 1)
    assert np.all(flips[~interior] == 0)


# dynamics

@CORPUS
@given(SEEDS)
def test_scan_respects_bounds(seed):
    inst = _instance(seed, 5)
    scan = quench_scan(inst.H, inst.V, ground_state(inst.H), n_steps=300)
    t1 = theorem1_bound(inst.H, inst.V)
    gen = 2 * operator_norm(inst.H) * operator_norm(inst.V)
    peak = max(float(np.max(np.abs(scan.power))), scan.p_max)
    assert peak <= commutator_norm(inst.H, inst.V) + SLACK
    assert peak <= t1.theorem1 + SLACK
    assert peak <= gen + SLACK


@FAST
@given(SEEDS, st.floats(0, 20))
def test_state_stays_physical(seed, t):
    inst = _instance(seed, 4)
    rho = evolve(ground_state(inst.H), inst.V, t)
    assert abs(np.trace(rho) - 1) <= 1e-10
    assert eigenvalues(0.5 * (rho + rho.conj().T))[0] >= -1e-10


@FAST
@given(SEEDS)
def test_power_is_energy_derivative(seed):
    inst = _instance(seed, 4)
    scan = quench_scan(inst.H, inst.V, ground_state(inst.H), n_steps=2000)
    t, E, P = scan.times, scan.energy, scan.power
    dt = t[1] - t[0]
    fd = (E[2:] - E[:-2]) / (2 * dt)
    d3 = (E[3:] - 3 * E[2:-1] + 3 * E[1:-2] - E[:-3]) / dt**3
    c = float(np.max(np.abs(d3))) / 6 if d3.size else 0.0
    assert np.max(np.abs(P[1:-1] - fd)) <= 2 * c * dt**2 + 1e-9


@FAST
@given(pauli_sums(max_sites=4, max_terms=1).filter(lambda p: len(p) == 1), st.floats(0.3, 2))
def test_periodic_driving(p, h):
    from qbattery.hamiltonians import BatterySpec, build_battery
    H = build_battery(BatterySpec(p.num_sites, h))
    V = to_dense(p)
    period = math.pi / abs(p.terms[0].coefficient)
    one = quench_scan(H, V, ground_state(H), t_max=period, n_steps=1001)
    two = quench_scan(H, V, ground_state(H), t_max=2 * period, n_steps=2001)
    assert abs(one.p_max - two.p_max) <= 1e-10


# ensembles

@FAST
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=200))
def test_histogram_counts_sum(values):
    lo, counts = histogram_counts(values, 0.1)
    assert counts.sum() == len(values)
    assert np.all(counts >= 0)
    a = np.asarray(values)
    cum = np.cumsum(counts)
    for b, c in zip(lo + 0.1, cum):
        # cumulative count matches the number of values below each upper edge, up to edge ties
        below = np.sum(a < b - 1e-8)
        assert below <= c <= np.sum(a < b + 1e-8)
