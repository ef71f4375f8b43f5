"""Pauli-string algebra and dense Hermitian linear algebra.

Site ``l`` of an ``L``-site register is the ``l``-th Kronecker factor, i.e. bit
``L - 1 - l`` of a computational basis index.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

from . import kernels

MAX_SITES = 14
HERMITIAN_RTOL = 1e-12

PAULI_LETTERS = ("X", "Y", "Z")

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY = np.eye(2, dtype=np.complex128)
PAULI_MATRICES = {"X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}


class DimensionLimitError(ValueError):
    """Requested register exceeds the configured dense-matrix limit."""


@dataclass(frozen=True)
class PauliTerm:
    """``coefficient`` times a tensor product of Pauli letters; unlisted sites are identity."""

    coefficient: float
    letters: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        letters = {}
        for site, letter in dict(self.letters).items():
            site = int(site)
            letter = str(letter).upper()
            if letter not in PAULI_LETTERS:
                raise ValueError(f"unknown Pauli letter {letter!r} on site {site}")
            if site < 0:
                raise ValueError(f"negative site index {site}")
            letters[site] = letter
        object.__setattr__(self, "letters", dict(sorted(letters.items())))
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def locality(self) -> int:
        return len(self.letters)

    def scaled(self, factor: float) -> "PauliTerm":
        return PauliTerm(self.coefficient * factor, self.letters)

    def label(self, num_sites: int) -> str:
        return "".join(self.letters.get(site, "I") for site in range(num_sites))


@dataclass(frozen=True)
class PauliSum:
    """A real linear combination of Pauli strings on ``num_sites`` qubits."""

    num_sites: int
    terms: tuple = ()

    def __post_init__(self):
        if int(self.num_sites) < 1:
            raise ValueError("num_sites must be a positive integer")
        terms = tuple(self.terms)
        for term in terms:
            for site in term.letters:
                if site >= self.num_sites:
                    raise ValueError(
                        f"site index {site} out of range for {self.num_sites} sites"
                    )
        object.__setattr__(self, "num_sites", int(self.num_sites))
        object.__setattr__(self, "terms", terms)

    @property
    def k_locality(self) -> int:
        return max((t.locality for t in self.terms), default=0)

    def scaled(self, factor: float) -> "PauliSum":
        return PauliSum(self.num_sites, tuple(t.scaled(factor) for t in self.terms))

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.num_sites != self.num_sites:
            raise ValueError("cannot add Pauli sums on different registers")
        return PauliSum(self.num_sites, self.terms + other.terms)

    def __len__(self):
        return len(self.terms)

    def to_dict(self) -> dict:
        return {
            "num_sites": self.num_sites,
            "terms": [
                {"coeff": t.coefficient, "paulis": [[s, p] for s, p in t.letters.items()]}
                for t in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PauliSum":
        unknown = set(data) - {"num_sites", "terms"}
        if unknown:
            raise ValueError(f"unknown PauliSum fields: {sorted(unknown)}")
        terms = []
        for raw in data.get("terms", []):
            extra = set(raw) - {"coeff", "paulis"}
            if extra:
                raise ValueError(f"unknown Pauli term fields: {sorted(extra)}")
            letters = {}
            for site, letter in raw.get("paulis", []):
                if int(site) in letters:
                    raise ValueError(f"site {site} listed twice in one term")
                letters[int(site)] = letter
            terms.append(PauliTerm(raw["coeff"], letters))
        return cls(int(data["num_sites"]), tuple(terms))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "PauliSum":
        return cls.from_dict(json.loads(text))


class HermitianOperator:
    """Dense Hermitian matrix; near-Hermitian input is symmetrized, anything else rejected."""

    __slots__ = ("_matrix",)

    def __init__(self, matrix):
        a = np.array(matrix, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        scale = np.max(np.abs(a)) if a.size else 0.0
        asym = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
        if asym > HERMITIAN_RTOL * scale:
            raise ValueError(f"matrix is not Hermitian (asymmetry {asym:.3e}, scale {scale:.3e})")
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        self._matrix = a

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self._matrix if dtype is None else self._matrix.astype(dtype)

    def __add__(self, other):
        return HermitianOperator(self._matrix + as_matrix(other))

    def __sub__(self, other):
        return HermitianOperator(self._matrix - as_matrix(other))

    def __mul__(self, c):
        return HermitianOperator(float(c) * self._matrix)

    __rmul__ = __mul__

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"


@dataclass(frozen=True)
class SpectralData:
    """Ascending eigenvalues and the unitary whose columns are the eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray
    # set when the eigenvectors are basis states: column j is e_{permutation[j]}
    permutation: Optional[np.ndarray] = None

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T

    def to_eigenbasis(self, a) -> np.ndarray:
        if self.permutation is not None:
            p = self.permutation
            return as_matrix(a)[np.ix_(p, p)]
        u = self.vectors
        return u.conj().T @ as_matrix(a) @ u

    def from_eigenbasis(self, a) -> np.ndarray:
        if self.permutation is not None:
            p = self.permutation
            a = np.asarray(a)
            out = np.empty_like(a)
            out[np.ix_(p, p)] = a
            return out
        u = self.vectors
        return u @ np.asarray(a) @ u.conj().T


def as_matrix(a) -> np.ndarray:
    if isinstance(a, HermitianOperator):
        return a.matrix
    return np.asarray(a, dtype=np.complex128)


def _check_sites(num_sites: int, max_sites: int):
    if num_sites > max_sites:
        raise DimensionLimitError(
            f"{num_sites} sites exceeds the dense limit of {max_sites} (dim 2^{num_sites})"
        )


def pauli_masks(p: PauliSum):
    """Return ``(x_masks, z_masks, amplitudes)`` with ``amplitude = coeff * i**n_Y``."""
    L = p.num_sites
    x_masks = np.zeros(len(p.terms), dtype=np.int64)
    z_masks = np.zeros(len(p.terms), dtype=np.int64)
    amps = np.zeros(len(p.terms), dtype=np.complex128)
    for t, term in enumerate(p.terms):
        n_y = 0
        for site, letter in term.letters.items():
            bit = 1 << (L - 1 - site)
            if letter in ("X", "Y"):
                x_masks[t] |= bit
            if letter in ("Z", "Y"):
                z_masks[t] |= bit
            n_y += letter == "Y"
        amps[t] = term.coefficient * 1j**n_y
    return x_masks, z_masks, amps


def to_dense(p: PauliSum, max_sites: int = MAX_SITES) -> HermitianOperator:
    """Assemble the dense ``2^L x 2^L`` matrix of a Pauli sum."""
    _check_sites(p.num_sites, max_sites)
    n = 1 << p.num_sites
    out = np.zeros((n, n), dtype=np.complex128)
    states = np.arange(n, dtype=np.int64)
    kernels.pauli_accumulate(out, states, states, *pauli_masks(p))
    return HermitianOperator(out)


def kron_lift(local, site: int, num_sites: int) -> np.ndarray:
    """``I x ... x local x ... x I`` with ``local`` on ``site``."""
    local = np.asarray(local, dtype=np.complex128)
    d = local.shape[0]
    left = np.eye(d**site, dtype=np.complex128)
    right = np.eye(d ** (num_sites - site - 1), dtype=np.complex128)
    return np.kron(np.kron(left, local), right)


def _is_diagonal(m: np.ndarray) -> bool:
    return m.ndim == 2 and not np.any(m[~np.eye(m.shape[0], dtype=bool)])


def eigendecompose(a) -> SpectralData:
    """Ascending spectrum and eigenvectors.

    Diagonal input (the usual battery Hamiltonian) skips LAPACK: a stable sort
    of the diagonal gives the values, and ties keep their basis order.
    """
    m = as_matrix(a)
    if _is_diagonal(m):
        d = m.diagonal().real
        order = np.argsort(d, kind="stable")
        vectors = np.zeros(m.shape, dtype=np.complex128)
        vectors[order, np.arange(d.size)] = 1.0
        return SpectralData(d[order], vectors, order)
    if not np.any(m.imag):
        m = np.ascontiguousarray(m.real)  # real symmetric LAPACK path, several times faster
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"eigensolver failed on {m.shape[0]}x{m.shape[0]} Hermitian matrix: {exc}"
        ) from exc
    return SpectralData(values, vectors.astype(np.complex128, copy=False))


def eigenvalues(a) -> np.ndarray:
    m = as_matrix(a)
    if _is_diagonal(m):
        return np.sort(m.diagonal().real)
    if not np.any(m.imag):
        return np.linalg.eigvalsh(np.ascontiguousarray(m.real))
    return np.linalg.eigvalsh(m)


def operator_norm(a) -> float:
    """Largest absolute eigenvalue of a Hermitian operator."""
    w = eigenvalues(a)
    return float(np.max(np.abs(w))) if w.size else 0.0


def shifted_norm(a) -> float:
    """``||a - lambda_min||``, the spectral spread ``lambda_max - lambda_min``."""
    w = eigenvalues(a)
    return float(w[-1] - w[0])


def commutator(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if _is_diagonal(a):
        d = a.diagonal()
        return (d[:, None] - d[None, :]) * b
    return a @ b - b @ a


def commutator_norm(a, b) -> float:
    # i[a, b] is Hermitian for Hermitian a, b
    k = commutator(a, b)
    if not np.any(k.imag):
        # real antisymmetric k: the spectrum of ik is +-(singular values of k)
        k = np.ascontiguousarray(k.real)
        w = np.linalg.eigvalsh(k.T @ k)
        return float(np.sqrt(max(w[-1], 0.0))) if w.size else 0.0
    c = 1j * k
    c = 0.5 * (c + c.conj().T)
    return operator_norm(c)


def random_hermitian(dim: int, rng: np.random.Generator) -> HermitianOperator:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return HermitianOperator(0.5 * (g + g.conj().T))


def single_site_sum(num_sites: int, letter: str, coefficients: Iterable[float]) -> PauliSum:
    coefficients = list(coefficients)
    if len(coefficients) != num_sites:
        raise ValueError("need one coefficient per site")
    return PauliSum(num_sites, tuple(PauliTerm(c, {l: letter}) for l, c in enumerate(coefficients)))
