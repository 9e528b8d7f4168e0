"""Radical-pair density-matrix dynamics and reaction yields.

The master equation integrated here is

    drho/dt = -i[H, rho] + D(rho) - (k_back/2){Q_S, rho} - k_prot rho

with ``D`` an electron-spin relaxation channel of coherence time ``tau_c``:

* ``"local-z"``: independent Sz dephasing on each electron,
  ``D = 1/(2 tau_c) sum_e (sz_e rho sz_e - rho)`` (Pauli ``sz``).
* ``"isotropic"``: random-field relaxation on each electron,
  ``D = 1/(4 tau_c) sum_e sum_a (s_a rho s_a - rho)``.

Both are normalised so a single electron's transverse coherence decays as
``exp(-t / tau_c)``. Singlet back-transfer (``k_back``) takes the
anticommutator form; protonation (``k_prot``) drains every state equally.

Time stepping is classical fixed-step RK4. Yields are carried as extra
state components integrated by the same RK4 stages.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .errors import HorizonWarning, NumericalError
from .hamiltonian import DEFAULT_CONSTANTS, PhysicalConstants, Term, Zeeman, build
from .spinops import SpinSystem, embed, is_hermitian, singlet_projector, site_spin, spectral_norm

CHANNELS = ("local-z", "isotropic")
STEP_SAFETY = 0.05  # largest accepted dt, as a fraction of 1/max_rate
DEFAULT_STEP = 0.005  # default dt; keeps RK4 drift below the positivity floor
BLOCK = 256
POSITIVITY_FLOOR = -1e-8
HERMITICITY_TOL = 1e-10
RESIDUAL_WARN = 1e-3
# Liouville-space stepping for small systems; matrix-form RK4 above this.
SUPEROP_MAX_DIM = 32

GEOMETRIES = {"parallel": (0.0, 0.0, 1.0), "perpendicular": (1.0, 0.0, 0.0)}


@dataclass(frozen=True)
class OpenSystemModel:
    tau_c: float = math.inf
    k_back: float = 0.0
    k_prot: float = 0.0
    channel: str = "local-z"

    def __post_init__(self):
        if not self.tau_c > 0:
            raise ValueError(f"tau_c must be positive (or inf), got {self.tau_c!r}")
        if self.k_back < 0 or self.k_prot < 0:
            raise ValueError("recombination rates must be non-negative")
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown dephasing channel {self.channel!r}; expected one of {CHANNELS}")

    @property
    def dephasing(self) -> bool:
        return math.isfinite(self.tau_c)


@dataclass(frozen=True)
class YieldRecord:
    yield_ground: float
    yield_prot_S: float
    yield_prot_T: float
    residual_trace: float
    t_final: float
    dt: float
    initial_trace: float = 1.0

    @property
    def yield_prot(self) -> float:
        return self.yield_prot_S + self.yield_prot_T

    @property
    def singlet_fraction(self) -> float:
        """Share of the protonated product formed with singlet character."""
        return self.yield_prot_S / self.yield_prot if self.yield_prot > 0 else math.nan

    @property
    def triplet_yield(self) -> float:
        return self.yield_prot_T


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dt: float

    def __iter__(self) -> Iterator[tuple[float, np.ndarray]]:
        return zip(self.times, self.states)

    def __len__(self) -> int:
        return len(self.times)

    def expectation(self, op: np.ndarray) -> np.ndarray:
        """``Tr(op rho(t))`` at each stored time (real part)."""
        return np.einsum("ij,tji->t", op, self.states).real

    @property
    def traces(self) -> np.ndarray:
        return np.einsum("tii->t", self.states).real


def singlet_state(system: SpinSystem, nuclear: str = "mixed") -> np.ndarray:
    """Electron pair in the singlet; nuclei maximally mixed or all spin-up."""
    e1, e2 = system.electron_pair()
    rho = singlet_projector(system, e1, e2)
    if nuclear == "up":
        for n in system.nuclei:
            m = system.dims[n]
            up = np.zeros((m, m))
            up[0, 0] = 1.0
            rho = rho @ embed(up, n, system)
    elif nuclear != "mixed":
        raise ValueError(f"nuclear state must be 'mixed' or 'up', got {nuclear!r}")
    return rho / np.trace(rho).real


def evolve_exact(rho0: np.ndarray, H: np.ndarray, t: float) -> np.ndarray:
    """Closed-system evolution ``U rho0 U^dag`` with ``U = exp(-iHt)``."""
    if not is_hermitian(H):
        raise ValueError("evolve_exact needs a Hermitian Hamiltonian")
    w, V = np.linalg.eigh((H + H.conj().T) / 2)
    U = (V * np.exp(-1j * w * t)) @ V.conj().T
    return U @ rho0 @ U.conj().T


class _Generator:
    """Right-hand side of the master equation plus the yield rate functionals."""

    def __init__(self, system: SpinSystem, H: np.ndarray, model: OpenSystemModel, need_pair: bool):
        if not is_hermitian(H):
            raise ValueError("Hamiltonian must be Hermitian")
        self.d = system.dim
        self.H = np.asarray(H, dtype=complex)
        self.model = model
        self.QS = None
        if need_pair or model.k_back > 0:
            self.QS = singlet_projector(system, *system.electron_pair())
        self.zdiag = []
        self.paulis = []
        if model.dephasing:
            for e in system.electrons:
                if model.channel == "local-z":
                    self.zdiag.append(2 * np.diag(site_spin(system, e)[2]).real)
                else:
                    self.paulis += [2 * op for op in site_spin(system, e)]
            self.gamma = 1 / (2 * model.tau_c) if model.channel == "local-z" else 1 / (4 * model.tau_c)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        m = self.model
        out = -1j * (self.H @ rho - rho @ self.H)
        for z in self.zdiag:
            out += self.gamma * (np.outer(z, z) * rho - rho)
        for s in self.paulis:
            out += self.gamma * (s @ rho @ s - rho)
        if m.k_back:
            out -= (m.k_back / 2) * (self.QS @ rho + rho @ self.QS)
        if m.k_prot:
            out -= m.k_prot * rho
        return out

    def yield_rates(self, rho: np.ndarray) -> np.ndarray:
        """Instantaneous (ground, prot-S, prot-T) product formation rates."""
        m = self.model
        ps = np.trace(self.QS @ rho)
        tr = np.trace(rho)
        return np.array([m.k_back * ps, m.k_prot * ps, m.k_prot * (tr - ps)])

    def superoperator(self) -> np.ndarray:
        """Generator in Liouville space, row-major ``vec(rho)``."""
        d = self.d
        I = np.eye(d)
        # vec(A rho B) = kron(A, B.T) vec(rho)
        L = -1j * (np.kron(self.H, I) - np.kron(I, self.H.T))
        for z in self.zdiag:
            L += self.gamma * np.diag(np.outer(z, z).ravel() - 1)
        for s in self.paulis:
            L += self.gamma * (np.kron(s, s.T) - np.eye(d * d))
        m = self.model
        if m.k_back:
            L -= (m.k_back / 2) * (np.kron(self.QS, I) + np.kron(I, self.QS.T))
        if m.k_prot:
            L -= m.k_prot * np.eye(d * d)
        return L

    def yield_functionals(self) -> np.ndarray:
        """Rows ``r`` with ``r @ vec(rho)`` equal to :meth:`yield_rates`."""
        m = self.model
        qs = self.QS.T.ravel()
        tr = np.eye(self.d).ravel()
        return np.array([m.k_back * qs, m.k_prot * qs, m.k_prot * (tr - qs)])


def rk4_increment(G: np.ndarray, dt: float) -> np.ndarray:
    """``P - I`` for one classical RK4 step ``y <- P y`` of ``dy/dt = G y``.

    For a constant generator the four RK4 stages collapse to the degree-4
    Taylor polynomial of ``exp(G dt)``. Keeping ``P - I`` instead of ``P``
    avoids rounding the small per-step change against the identity.
    """
    X = G * dt
    I = np.eye(G.shape[0], dtype=X.dtype)
    return X @ (I + X @ (I + X @ (I + X / 4) / 3) / 2)


def rk4_propagator(G: np.ndarray, dt: float) -> np.ndarray:
    return np.eye(G.shape[0]) + rk4_increment(G, dt)


def _compose(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # (I + A)(I + B) - I
    return A + B + A @ B


def _increment_power(D: np.ndarray, m: int) -> np.ndarray:
    """``(I + D)^m - I`` by binary powering on the increments."""
    result = None
    base = D
    while m:
        if m & 1:
            result = base if result is None else _compose(result, base)
        m >>= 1
        if m:
            base = _compose(base, base)
    return result


class _Integrator:
    def __init__(self, gen: _Generator, rho0: np.ndarray, dt: float, with_yields: bool):
        self.gen = gen
        self.dt = dt
        self.d = d = gen.d
        self.with_yields = with_yields
        self._diag = np.arange(d) * (d + 1)
        self.super = d <= SUPEROP_MAX_DIM
        rho0 = np.asarray(rho0, dtype=complex)
        if self.super:
            G = gen.superoperator()
            if with_yields:
                n = d * d
                Ga = np.zeros((n + 3, n + 3), dtype=complex)
                Ga[:n, :n] = G
                Ga[n:, :n] = gen.yield_functionals()
                G = Ga
            self._D = rk4_increment(G, dt)
            self._powers = {1: self._D}
            self._v = np.concatenate([rho0.ravel(), np.zeros(3 if with_yields else 0, dtype=complex)])
        else:
            self._rho = rho0.copy()
            self._Y = np.zeros(3, dtype=complex)

    def step(self):
        if self.super:
            self._v = self._v + self._D @ self._v
            return
        f, h, rho = self.gen, self.dt, self._rho
        k1 = f(rho)
        r2 = rho + (h / 2) * k1
        k2 = f(r2)
        r3 = rho + (h / 2) * k2
        k3 = f(r3)
        r4 = rho + h * k3
        k4 = f(r4)
        if self.with_yields:
            g = f.yield_rates
            self._Y = self._Y + (h / 6) * (g(rho) + 2 * g(r2) + 2 * g(r3) + g(r4))
        self._rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)

    def advance(self, m: int):
        """Take ``m`` RK4 steps (one cached matrix power in Liouville space)."""
        if not self.super:
            for _ in range(m):
                self.step()
            return
        D = self._powers.get(m)
        if D is None:
            D = self._powers[m] = _increment_power(self._D, m)
        self._v = self._v + D @ self._v

    def save(self):
        return self._v.copy() if self.super else (self._rho.copy(), self._Y.copy())

    def restore(self, state):
        if self.super:
            self._v = state
        else:
            self._rho, self._Y = state

    @property
    def trace(self) -> float:
        if self.super:
            return float(self._v[self._diag].sum().real)
        return float(np.trace(self._rho).real)

    @property
    def rho(self) -> np.ndarray:
        if self.super:
            return self._v[: self.d * self.d].reshape(self.d, self.d).copy()
        return self._rho.copy()

    @property
    def yields(self) -> np.ndarray:
        Y = self._v[self.d * self.d:] if self.super else self._Y
        return Y.real.copy()


def check_state(rho: np.ndarray, t: float) -> None:
    """Raise :class:`NumericalError` if ``rho`` is not Hermitian PSD within floors."""
    scale = max(1.0, float(np.max(np.abs(rho))))
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL * scale:
        raise NumericalError(f"density matrix lost Hermiticity at t={t:.6g} s")
    lo = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
    if lo < POSITIVITY_FLOOR:
        raise NumericalError(f"density matrix eigenvalue {lo:.3g} below {POSITIVITY_FLOOR} at t={t:.6g} s")


def max_rate(H: np.ndarray, model: OpenSystemModel) -> float:
    """The fastest timescale entering the step-size bound."""
    return max(spectral_norm(H), 1 / model.tau_c, model.k_back, model.k_prot)


def step_bound(H: np.ndarray, model: OpenSystemModel) -> float:
    r = max_rate(H, model)
    return math.inf if r == 0 else STEP_SAFETY / r


def default_t_max(model: OpenSystemModel) -> float:
    rates = [k for k in (model.k_back, model.k_prot) if k > 0]
    if not rates:
        raise ValueError("t_max is required when there is no recombination")
    return 20 / min(rates)


def _grid(H, model, dt, t_max) -> tuple[float, int]:
    if not t_max > 0:
        raise ValueError(f"t_max must be positive, got {t_max!r}")
    bound = step_bound(H, model)
    if dt is None:
        dt = bound * DEFAULT_STEP / STEP_SAFETY if math.isfinite(bound) else t_max / 1000
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if dt > bound * (1 + 1e-12):
        raise ValueError(f"dt={dt:.4g} s exceeds the stability bound {bound:.4g} s "
                         f"(= {STEP_SAFETY}/max(||H||, 1/tau_c, k_back, k_prot))")
    n = max(1, math.ceil(t_max / dt - 1e-9))
    return t_max / n, n


def propagate(system: SpinSystem, rho0: np.ndarray, H: np.ndarray, model: OpenSystemModel,
              dt: float | None, t_max: float, store_every: int = 1) -> Trajectory:
    """Integrate the master equation on a fixed grid up to ``t_max``.

    Every ``store_every``-th state is kept (plus ``t=0`` and the last one)
    and checked for Hermiticity and positivity.
    """
    dt, n = _grid(H, model, dt, t_max)
    integ = _Integrator(_Generator(system, H, model, need_pair=False), rho0, dt, with_yields=False)
    times, states = [0.0], [np.asarray(rho0, dtype=complex).copy()]
    i = 0
    while i < n:
        m = min(store_every, n - i)
        integ.advance(m)
        i += m
        rho = integ.rho
        check_state(rho, i * dt)
        times.append(i * dt)
        states.append(rho)
    return Trajectory(np.array(times), np.array(states), dt)


def compute_yields(system: SpinSystem, rho0: np.ndarray, H: np.ndarray, model: OpenSystemModel,
                   dt: float | None = None, t_max: float | None = None, trace_floor: float = 1e-6,
                   block: int = BLOCK) -> YieldRecord:
    """Integrate product yields until the pair has decayed below ``trace_floor``.

    Steps are taken in blocks of ``block``; the block that crosses the floor
    is replayed one step at a time so the stopping step is exact.
    """
    if not 0 < trace_floor < 1:
        raise ValueError(f"trace_floor must lie in (0, 1), got {trace_floor!r}")
    if t_max is None:
        t_max = default_t_max(model)
    dt, n = _grid(H, model, dt, t_max)
    integ = _Integrator(_Generator(system, H, model, need_pair=True), rho0, dt, with_yields=True)
    i = 0
    while i < n:
        m = min(block, n - i)
        saved = integ.save()
        integ.advance(m)
        if integ.trace >= trace_floor:
            i += m
            check_state(integ.rho, i * dt)
            continue
        integ.restore(saved)
        while i < n:
            integ.step()
            i += 1
            if integ.trace < trace_floor:
                break
        break
    check_state(integ.rho, i * dt)
    Y = integ.yields
    residual = integ.trace
    if residual > RESIDUAL_WARN:
        warnings.warn(f"integration horizon {i * dt:.3g} s leaves trace {residual:.3g} undecayed",
                      HorizonWarning, stacklevel=2)
    return YieldRecord(yield_ground=float(Y[0]), yield_prot_S=float(Y[1]), yield_prot_T=float(Y[2]),
                       residual_trace=residual, t_final=i * dt, dt=dt,
                       initial_trace=float(np.trace(rho0).real))


# -- orientation experiments ----------------------------------------------

def field_direction(geometry: str | Sequence[float]) -> tuple[float, float, float]:
    if isinstance(geometry, str):
        try:
            return GEOMETRIES[geometry]
        except KeyError:
            raise ValueError(f"geometry must be one of {sorted(GEOMETRIES)}, got {geometry!r}") from None
    n = np.asarray(geometry, dtype=float)
    return tuple(n / np.linalg.norm(n))


def polar_direction(theta_deg: float) -> tuple[float, float, float]:
    """Unit vector in the xz plane, ``theta`` measured from z."""
    th = math.radians(theta_deg)
    return (math.sin(th), 0.0, math.cos(th))


@dataclass(frozen=True)
class YieldSettings:
    """Numerical and initial-state settings shared by the orientation runs."""

    dt: float | None = None
    t_max: float | None = None
    trace_floor: float = 1e-6
    nuclear: str = "mixed"
    constants: PhysicalConstants = field(default=DEFAULT_CONSTANTS)


def orientation_yields(system: SpinSystem, terms: Sequence[Term], B_uT: float, direction,
                       model: OpenSystemModel, settings: YieldSettings = YieldSettings()) -> YieldRecord:
    """Yields with a field of magnitude ``B_uT`` added along ``direction``."""
    n = field_direction(direction)
    H = build(list(terms) + [Zeeman(tuple(B_uT * c for c in n))], system, settings.constants)
    rho0 = singlet_state(system, settings.nuclear)
    return compute_yields(system, rho0, H, model, settings.dt, settings.t_max, settings.trace_floor)


@dataclass(frozen=True)
class OrientationContrast:
    parallel: YieldRecord
    perpendicular: YieldRecord

    @property
    def difference(self) -> float:
        return abs(self.perpendicular.triplet_yield - self.parallel.triplet_yield)


def orientation_contrast(system, terms, B_uT, model, settings: YieldSettings = YieldSettings()) -> OrientationContrast:
    return OrientationContrast(
        parallel=orientation_yields(system, terms, B_uT, "parallel", model, settings),
        perpendicular=orientation_yields(system, terms, B_uT, "perpendicular", model, settings),
    )


def triplet_yield_difference(system, terms, B_uT, model, settings: YieldSettings = YieldSettings()) -> float:
    """``|Phi_T(B along x) - Phi_T(B along z)|``."""
    if B_uT == 0:
        return 0.0
    return orientation_contrast(system, terms, B_uT, model, settings).difference


def coherence_sweep(system, terms, B_uT, model_base: OpenSystemModel, tau_c_list: Sequence[float],
                    settings: YieldSettings = YieldSettings()) -> list[tuple[float, float]]:
    """Triplet-yield difference at each coherence time, all else held fixed."""
    if len(tau_c_list) == 0:
        raise ValueError("tau_c_list must not be empty")
    return [(tau, triplet_yield_difference(system, terms, B_uT, replace(model_base, tau_c=tau), settings))
            for tau in tau_c_list]
