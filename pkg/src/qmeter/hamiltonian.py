"""Spin Hamiltonians for the radical-pair meter.

Couplings are given in microtesla and converted to angular frequency
(rad/s) with the electron gyromagnetic ratio when the matrix is built, so
every term reads ``H = gamma_e * coupling * (spin-operator product)``.

Term types:

* :class:`Exchange`  ``J S1.S2``
* :class:`Hyperfine` ``sum_ab A_ab S_a I_b`` (3-vector means diagonal A)
* :class:`Zeeman`    ``B.(S1 + S2 + ...)`` on electrons only
* :class:`Dipolar`   ``V (S1.S2 - 3 (S1.n)(S2.n))``
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NumericalError
from .spinops import ELECTRON, NUCLEUS, SpinSystem, is_hermitian, site_spin, spectral_norm

UT = 1e-6  # tesla per microtesla
FIELD_UNIT = "uT"


@dataclass(frozen=True)
class PhysicalConstants:
    gamma_e: float = 1.760859630e11  # rad s^-1 T^-1

    def __post_init__(self):
        if not self.gamma_e > 0:
            raise ValueError("gamma_e must be positive")

    def omega(self, field_uT: float) -> float:
        """Angular frequency (rad/s) of a field given in microtesla."""
        return self.gamma_e * field_uT * UT


DEFAULT_CONSTANTS = PhysicalConstants()


def _vec3(v, name: str) -> tuple[float, float, float]:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {a.shape}")
    return tuple(float(x) for x in a)


@dataclass(frozen=True)
class Exchange:
    J: float
    e1: int | str = 0
    e2: int | str = 1


@dataclass(frozen=True)
class Hyperfine:
    A: tuple
    electron: int | str = 0
    nucleus: int | str = 2

    def __post_init__(self):
        a = np.asarray(self.A)
        if np.iscomplexobj(a) and np.any(np.imag(a) != 0):
            raise ValueError("hyperfine tensor must be real")
        a = np.real(a).astype(float)
        if a.shape == (3,):
            value = tuple(float(x) for x in a)
        elif a.shape == (3, 3):
            value = tuple(tuple(float(x) for x in row) for row in a)
        else:
            raise ValueError(f"hyperfine A must be a 3-vector or 3x3 tensor, got shape {a.shape}")
        object.__setattr__(self, "A", value)

    @property
    def tensor(self) -> np.ndarray:
        a = np.asarray(self.A, dtype=float)
        return np.diag(a) if a.ndim == 1 else a


@dataclass(frozen=True)
class Zeeman:
    B: tuple
    electrons: tuple | None = None  # None means every electron

    def __post_init__(self):
        object.__setattr__(self, "B", _vec3(self.B, "Zeeman B"))
        if self.electrons is not None:
            object.__setattr__(self, "electrons", tuple(self.electrons))


@dataclass(frozen=True)
class Dipolar:
    V: float
    e1: int | str = 0
    e2: int | str = 1
    axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        axis = _vec3(self.axis, "dipolar axis")
        if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise ValueError(f"dipolar axis must have unit norm, got |n| = {np.linalg.norm(axis)!r}")
        object.__setattr__(self, "axis", axis)


Term = Exchange | Hyperfine | Zeeman | Dipolar


def _site(system: SpinSystem, ref, role: str, what: str) -> int:
    k = system.index(ref)
    if system.sites[k].role != role:
        site = system.sites[k]
        raise ValueError(f"{what}: site {site.label!r} has role {site.role!r}, expected {role!r}")
    return k


def _pair(system: SpinSystem, e1, e2, what: str) -> tuple[int, int]:
    a = _site(system, e1, ELECTRON, what)
    b = _site(system, e2, ELECTRON, what)
    if a == b:
        raise ValueError(f"{what}: needs two distinct electrons")
    return a, b


def _term_matrix(term: Term, system: SpinSystem) -> np.ndarray:
    """Dimensionless-operator part of a term, scaled by its coupling in uT."""
    if isinstance(term, Exchange):
        a, b = _pair(system, term.e1, term.e2, "Exchange")
        s1, s2 = site_spin(system, a), site_spin(system, b)
        return term.J * sum(x @ y for x, y in zip(s1, s2))
    if isinstance(term, Hyperfine):
        e = _site(system, term.electron, ELECTRON, "Hyperfine")
        n = _site(system, term.nucleus, NUCLEUS, "Hyperfine")
        s, i = site_spin(system, e), site_spin(system, n)
        A = term.tensor
        out = np.zeros((system.dim, system.dim), dtype=complex)
        for p in range(3):
            for q in range(3):
                if A[p, q] != 0.0:
                    out += A[p, q] * (s[p] @ i[q])
        return out
    if isinstance(term, Zeeman):
        refs = system.electrons if term.electrons is None else term.electrons
        out = np.zeros((system.dim, system.dim), dtype=complex)
        for ref in refs:
            s = site_spin(system, _site(system, ref, ELECTRON, "Zeeman"))
            out += sum(b * op for b, op in zip(term.B, s) if b != 0.0)
        return out
    if isinstance(term, Dipolar):
        a, b = _pair(system, term.e1, term.e2, "Dipolar")
        s1, s2 = site_spin(system, a), site_spin(system, b)
        n = term.axis
        dot = sum(x @ y for x, y in zip(s1, s2))
        s1n = sum(c * op for c, op in zip(n, s1))
        s2n = sum(c * op for c, op in zip(n, s2))
        return term.V * (dot - 3 * s1n @ s2n)
    raise TypeError(f"unknown Hamiltonian term {term!r}")


def build(terms: Iterable[Term], system: SpinSystem, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> np.ndarray:
    """Assemble the Hamiltonian in rad/s from a list of terms."""
    scale = constants.gamma_e * UT
    H = np.zeros((system.dim, system.dim), dtype=complex)
    # scale per term so that splitting a spec into parts is linear to the bit
    for term in terms:
        H += scale * _term_matrix(term, system)
    if not is_hermitian(H, rtol=1e-12):
        raise NumericalError("assembled Hamiltonian is not Hermitian")
    return H


def commutator_norm(Ha: np.ndarray, Hb: np.ndarray) -> float:
    """Spectral norm of ``[Ha, Hb]``."""
    Ha, Hb = np.asarray(Ha), np.asarray(Hb)
    if Ha.shape != Hb.shape:
        raise ValueError(f"dimension mismatch: {Ha.shape} vs {Hb.shape}")
    return float(np.linalg.norm(Ha @ Hb - Hb @ Ha, 2))


@dataclass(frozen=True)
class CoherenceCheck:
    satisfied: bool
    margin: float


def coherence_condition(H_ex: np.ndarray, tau_c: float) -> CoherenceCheck:
    """Whether a coherence time ``tau_c`` outlasts the dynamics of ``H_ex``.

    ``margin = tau_c * ||H_ex||``; the condition holds when it exceeds 1.
    """
    if not tau_c > 0:
        raise ValueError(f"tau_c must be positive, got {tau_c!r}")
    norm = spectral_norm(H_ex)
    margin = 0.0 if norm == 0.0 else tau_c * norm
    return CoherenceCheck(satisfied=margin > 1.0, margin=margin)


# -- JSON form -------------------------------------------------------------

_TERM_TYPES = {"exchange": Exchange, "hyperfine": Hyperfine, "zeeman": Zeeman, "dipolar": Dipolar}


def term_from_json(obj: dict) -> Term:
    """Parse one term object, e.g. ``{"type": "zeeman", "B": [0, 0, 50], "unit": "uT"}``."""
    obj = dict(obj)
    kind = obj.pop("type", None)
    unit = obj.pop("unit", None)
    if kind not in _TERM_TYPES:
        raise ValueError(f"unknown term type {kind!r}; expected one of {sorted(_TERM_TYPES)}")
    if unit != FIELD_UNIT:
        raise ValueError(f"{kind} term: unit must be {FIELD_UNIT!r}, got {unit!r}")
    try:
        return _TERM_TYPES[kind](**obj)
    except TypeError as exc:
        raise ValueError(f"{kind} term: {exc}") from None


def term_to_json(term: Term) -> dict:
    name = {v: k for k, v in _TERM_TYPES.items()}[type(term)]
    out = {"type": name, "unit": FIELD_UNIT}
    for key, value in term.__dict__.items():
        if isinstance(value, tuple):
            value = [list(v) if isinstance(v, tuple) else v for v in value]
        out[key] = value
    return out


def terms_from_json(items: Sequence[dict]) -> list[Term]:
    return [term_from_json(o) for o in items]
