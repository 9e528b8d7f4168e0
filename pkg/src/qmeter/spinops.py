"""Spin-operator algebra on small tensor-product spaces.

Sites are ordered as declared in :class:`SpinSystem`; the product basis is
lexicographic with each site's ``Sz`` eigenvalues in descending order. All
spin operators are dimensionless (eigenvalues +-1/2 for spin-1/2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

ELECTRON = "electron"
NUCLEUS = "nucleus"
SUPPORTED_MULTIPLICITIES = (2, 3)

HERMITIAN_ATOL = 1e-12


@dataclass(frozen=True)
class Site:
    label: str
    role: str
    multiplicity: int = 2

    def __post_init__(self):
        if self.role not in (ELECTRON, NUCLEUS):
            raise ValueError(f"site {self.label!r}: role must be 'electron' or 'nucleus', got {self.role!r}")
        if int(self.multiplicity) != self.multiplicity or self.multiplicity < 2:
            raise ValueError(f"site {self.label!r}: multiplicity must be an integer >= 2, got {self.multiplicity!r}")


@dataclass(frozen=True)
class SpinSystem:
    """Ordered collection of spins defining the Hilbert space."""

    sites: tuple[Site, ...]

    def __post_init__(self):
        sites = tuple(self.sites)
        object.__setattr__(self, "sites", sites)
        if not sites:
            raise ValueError("a spin system needs at least one site")
        labels = [s.label for s in sites]
        if len(set(labels)) != len(labels):
            raise ValueError(f"site labels must be unique, got {labels}")

    @classmethod
    def radical_pair(cls, nuclei: Iterable[int] = (2,), labels: Sequence[str] = ("F", "T")) -> "SpinSystem":
        """Two spin-1/2 electrons followed by nuclei of the given multiplicities."""
        sites = [Site(labels[0], ELECTRON), Site(labels[1], ELECTRON)]
        sites += [Site(f"n{i + 1}", NUCLEUS, m) for i, m in enumerate(nuclei)]
        return cls(tuple(sites))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.multiplicity for s in self.sites)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def electrons(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.sites) if s.role == ELECTRON)

    @property
    def nuclei(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.sites) if s.role == NUCLEUS)

    def index(self, ref: int | str) -> int:
        """Resolve a site reference given as an index or a label."""
        if isinstance(ref, str):
            for i, s in enumerate(self.sites):
                if s.label == ref:
                    return i
            raise ValueError(f"unknown site label {ref!r}")
        if isinstance(ref, (bool, np.bool_)) or int(ref) != ref:
            raise ValueError(f"site index must be an integer, got {ref!r}")
        i = int(ref)
        if not 0 <= i < len(self.sites):
            raise IndexError(f"site index {i} out of range for {len(self.sites)} sites")
        return i

    def electron_pair(self) -> tuple[int, int]:
        e = self.electrons
        if len(e) != 2:
            raise ValueError(f"radical-pair operations need exactly 2 electrons, system has {len(e)}")
        return e[0], e[1]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@lru_cache(maxsize=None)
def spin_operators(multiplicity: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(Sx, Sy, Sz)`` for a single spin of the given multiplicity.

    The arrays are cached and read-only; copy before modifying.
    """
    if multiplicity not in SUPPORTED_MULTIPLICITIES:
        raise ValueError(f"unsupported multiplicity {multiplicity!r}; supported: {SUPPORTED_MULTIPLICITIES}")
    s = (multiplicity - 1) / 2
    m = np.arange(s, -s - 1, -1)
    sz = np.diag(m).astype(complex)
    sp = np.zeros((multiplicity, multiplicity), dtype=complex)
    for i in range(multiplicity - 1):
        sp[i, i + 1] = np.sqrt(s * (s + 1) - m[i + 1] * (m[i + 1] + 1))
    sm = sp.conj().T
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    return _frozen(sx), _frozen(sy), _frozen(sz)


def embed(op: np.ndarray, site_index: int | str, system: SpinSystem) -> np.ndarray:
    """Act with ``op`` on one site and as the identity on all others."""
    k = system.index(site_index)
    op = np.asarray(op)
    m = system.dims[k]
    if op.shape != (m, m):
        raise ValueError(f"operator shape {op.shape} does not match multiplicity {m} of site {k}")
    left = int(np.prod(system.dims[:k]))
    right = int(np.prod(system.dims[k + 1:]))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def site_spin(system: SpinSystem, site_index: int | str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three spin components of one site, embedded in the full space."""
    k = system.index(site_index)
    return tuple(embed(o, k, system) for o in spin_operators(system.dims[k]))


def _check_spin_half_electron(system: SpinSystem, ref) -> int:
    k = system.index(ref)
    site = system.sites[k]
    if site.role != ELECTRON or site.multiplicity != 2:
        raise ValueError(f"site {site.label!r} is not a spin-1/2 electron")
    return k


def singlet_projector(system: SpinSystem, e1: int | str, e2: int | str) -> np.ndarray:
    """Projector onto the singlet of electrons ``e1``, ``e2`` (identity elsewhere)."""
    a = _check_spin_half_electron(system, e1)
    b = _check_spin_half_electron(system, e2)
    if a == b:
        raise ValueError("singlet projector needs two distinct electrons")
    s1 = site_spin(system, a)
    s2 = site_spin(system, b)
    # S1.S2 = 1/4 - Q_S for a pair of spin-1/2
    dot = sum(x @ y for x, y in zip(s1, s2))
    return 0.25 * np.eye(system.dim) - dot


def triplet_projector(system: SpinSystem, e1: int | str, e2: int | str) -> np.ndarray:
    return np.eye(system.dim) - singlet_projector(system, e1, e2)


def is_hermitian(op: np.ndarray, rtol: float = HERMITIAN_ATOL) -> bool:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(op), initial=0.0)))
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= rtol * scale)


def spectral_norm(op: np.ndarray) -> float:
    """Largest absolute eigenvalue of a Hermitian operator."""
    if not is_hermitian(op):
        raise ValueError("spectral_norm expects a Hermitian operator")
    op = np.asarray(op)
    herm = (op + op.conj().T) / 2
    return float(np.max(np.abs(np.linalg.eigvalsh(herm))))
