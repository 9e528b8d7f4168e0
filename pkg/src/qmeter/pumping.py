"""Rate-equation engine for optical-pumping level schemes.

A :class:`KineticScheme` is a set of classical levels joined by directed
rate edges. The optional pump edge carries ``n_bar * base_rate``; recycle
entries instantly return population reaching an absorbing level to
another level (edges into the absorbing level are redirected).

Generator convention: ``M[j, i]`` is the rate from level ``i`` to level
``j`` and ``dp/dt = M p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np
from scipy.linalg import expm
from scipy.sparse.csgraph import connected_components


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    rate: float


@dataclass(frozen=True)
class Pump:
    source: str
    target: str
    base_rate: float
    n_bar: float = 0.0

    @property
    def rate(self) -> float:
        return self.n_bar * self.base_rate


@dataclass(frozen=True)
class Recycle:
    absorbing_level: str
    to: str


@dataclass(frozen=True)
class KineticScheme:
    levels: tuple[str, ...]
    edges: tuple[Edge, ...]
    pump: Pump | None = None
    recycle: tuple[Recycle, ...] = ()
    signal: str | None = None  # level whose arrival signals detection

    def __post_init__(self):
        for name in ("levels", "edges", "recycle"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"level labels must be unique, got {list(self.levels)}")
        for e in self.edges:
            self._check(e.source), self._check(e.target)
            if not e.rate >= 0:
                raise ValueError(f"edge {e.source}->{e.target}: rate must be >= 0, got {e.rate!r}")
        if self.pump is not None:
            self._check(self.pump.source), self._check(self.pump.target)
            if not (self.pump.base_rate >= 0 and self.pump.n_bar >= 0):
                raise ValueError("pump base_rate and n_bar must be >= 0")
        for r in self.recycle:
            self._check(r.absorbing_level), self._check(r.to)
            if any(e.source == r.absorbing_level for e in self.edges):
                raise ValueError(f"recycled level {r.absorbing_level!r} must not have outgoing edges")
        if self.signal is not None:
            self._check(self.signal)

    def _check(self, label: str) -> int:
        try:
            return self.levels.index(label)
        except ValueError:
            raise ValueError(f"unknown level label {label!r}") from None

    def index(self, label: str) -> int:
        return self._check(label)

    @property
    def ground(self) -> str:
        return self.pump.source if self.pump is not None else self.levels[0]

    def all_edges(self) -> list[Edge]:
        """Declared edges plus the pump edge (if any)."""
        out = list(self.edges)
        if self.pump is not None:
            out.append(Edge(self.pump.source, self.pump.target, self.pump.rate))
        return out

    def with_n_bar(self, n_bar: float) -> "KineticScheme":
        if self.pump is None:
            raise ValueError("scheme has no pump")
        return replace(self, pump=replace(self.pump, n_bar=n_bar))

    def with_rate(self, source: str, target: str, rate: float) -> "KineticScheme":
        if self.pump is not None and (source, target) == (self.pump.source, self.pump.target):
            raise ValueError("set the pump through with_n_bar or the pump block")
        if not any(e.source == source and e.target == target for e in self.edges):
            raise ValueError(f"no edge {source}->{target}")
        edges = tuple(Edge(e.source, e.target, rate) if (e.source, e.target) == (source, target) else e
                      for e in self.edges)
        return replace(self, edges=edges)

    def with_branching(self, level: str, target: str, fraction: float) -> "KineticScheme":
        """Rescale the edges leaving ``level`` so ``fraction`` goes to ``target``.

        The total outflow of ``level`` is kept; the remaining edges keep
        their relative weights.
        """
        if not 0 <= fraction <= 1:
            raise ValueError(f"fraction must lie in [0, 1], got {fraction!r}")
        out = [e for e in self.edges if e.source == level]
        total = sum(e.rate for e in out)
        hit = sum(e.rate for e in out if e.target == target)
        rest = total - hit
        if hit == 0 or (rest == 0 and fraction < 1):
            raise ValueError(f"cannot set branching {level}->{target} with the existing edges")
        edges = []
        for e in self.edges:
            if e.source != level:
                edges.append(e)
            elif e.target == target:
                edges.append(Edge(e.source, e.target, e.rate / hit * fraction * total))
            else:
                edges.append(Edge(e.source, e.target, e.rate / rest * (1 - fraction) * total))
        return replace(self, edges=tuple(edges))

    def to_json(self) -> dict:
        out = {
            "levels": list(self.levels),
            "edges": [{"from": e.source, "to": e.target, "rate_per_s": e.rate} for e in self.edges],
            "recycle": [{"absorbing_level": r.absorbing_level, "to": r.to} for r in self.recycle],
        }
        if self.pump is not None:
            p = self.pump
            out["pump"] = {"from": p.source, "to": p.target, "base_rate_per_s": p.base_rate, "n_bar": p.n_bar}
        if self.signal is not None:
            out["signal"] = self.signal
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "KineticScheme":
        pump = obj.get("pump")
        return cls(
            levels=tuple(obj["levels"]),
            edges=tuple(Edge(e["from"], e["to"], float(e["rate_per_s"])) for e in obj.get("edges", ())),
            pump=None if pump is None else Pump(pump["from"], pump["to"], float(pump["base_rate_per_s"]),
                                                float(pump.get("n_bar", 0.0))),
            recycle=tuple(Recycle(r["absorbing_level"], r["to"]) for r in obj.get("recycle", ())),
            signal=obj.get("signal"),
        )


@dataclass(frozen=True)
class Populations:
    labels: tuple[str, ...]
    values: np.ndarray
    time: float | None = None

    def __getitem__(self, label: str) -> float:
        return float(self.values[self.labels.index(label)])

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.labels, self.values)}


# -- presets ---------------------------------------------------------------

def geometric_midpoint(lo: float, hi: float) -> float:
    return math.sqrt(lo * hi)


def light_harvesting_scheme(n_bar: float = 0.0, *, gamma_31: float = 1e9, gamma_21: float = 1e9,
                            gamma_2x: float = 1 / geometric_midpoint(1e-12, 4e-12),
                            gamma_32: float = 1 / geometric_midpoint(100e-12, 800e-12),
                            recycle: bool = True) -> KineticScheme:
    """Three-level pumping with a product channel, as in the light-harvesting diagram.

    Ranged lifetimes default to the geometric midpoint of the quoted range.
    """
    return KineticScheme(
        levels=("1", "2", "3", "X"),
        edges=(Edge("3", "1", gamma_31), Edge("3", "2", gamma_32),
               Edge("2", "1", gamma_21), Edge("2", "X", gamma_2x)),
        pump=Pump("1", "3", gamma_31, n_bar),
        recycle=(Recycle("X", "1"),) if recycle else (),
        signal="2",
    )


def rhodopsin_scheme(n_bar: float = 0.0, *, gamma_31: float = 1 / 20e-12, gamma_32: float = 1 / 80e-15,
                     gamma_2t: float = 1 / 140e-15, gamma_2c: float = 1 / 280e-12,
                     gamma_tx: float = 1 / 1e-12, branch_to_trans: float | None = None) -> KineticScheme:
    """Cis/trans photo-isomerisation scheme of rhodopsin (ground ``c``).

    ``branch_to_trans`` overrides the 2 -> t branching fraction while keeping
    the total decay rate of level 2.
    """
    scheme = KineticScheme(
        levels=("c", "3", "2", "t", "X"),
        edges=(Edge("3", "c", gamma_31), Edge("3", "2", gamma_32), Edge("2", "c", gamma_2c),
               Edge("2", "t", gamma_2t), Edge("t", "X", gamma_tx)),
        pump=Pump("c", "3", gamma_31, n_bar),
        signal="t",
    )
    if branch_to_trans is not None:
        scheme = scheme.with_branching("2", "t", branch_to_trans)
    return scheme


PRESETS = {
    "fig1a-light-harvesting": light_harvesting_scheme,
    "fig1b-rhodopsin": rhodopsin_scheme,
}


def preset(name: str, **kwargs) -> KineticScheme:
    try:
        return PRESETS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown scheme preset {name!r}; expected one of {sorted(PRESETS)}") from None


# -- operations ------------------------------------------------------------

def _redirect(scheme: KineticScheme, label: str) -> str:
    for r in scheme.recycle:
        if r.absorbing_level == label:
            return r.to
    return label


def rate_matrix(scheme: KineticScheme) -> np.ndarray:
    """Generator ``M`` with recycling applied (``M[j, i]`` = rate ``i -> j``)."""
    n = len(scheme.levels)
    M = np.zeros((n, n))
    for e in scheme.all_edges():
        i = scheme.index(e.source)
        j = scheme.index(_redirect(scheme, e.target))
        if i == j:
            continue
        M[j, i] += e.rate
        M[i, i] -= e.rate
    return M


def _as_vector(scheme: KineticScheme, p0) -> np.ndarray:
    if isinstance(p0, Populations):
        p0 = p0.as_dict()
    if isinstance(p0, Mapping):
        v = np.zeros(len(scheme.levels))
        for k, x in p0.items():
            v[scheme.index(k)] = x
    else:
        v = np.asarray(p0, dtype=float)
        if v.shape != (len(scheme.levels),):
            raise ValueError(f"p0 must have {len(scheme.levels)} entries")
    if np.any(v < 0) or abs(v.sum() - 1) > 1e-9:
        raise ValueError(f"p0 must be a normalised, non-negative distribution (sum = {v.sum()!r})")
    return v


def transient(scheme: KineticScheme, p0, t: float) -> Populations:
    """Populations at time ``t`` from ``p0``: ``exp(M t) p0``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    v = _as_vector(scheme, p0)
    p = expm(rate_matrix(scheme) * t) @ v
    return Populations(scheme.levels, p, t)


def _gth(Q: np.ndarray) -> np.ndarray:
    """Stationary distribution of an irreducible chain, Grassmann-Taksar-Heyman.

    ``Q[i, j]`` is the rate ``i -> j`` (diagonal ignored). Subtraction-free,
    so tiny populations keep full relative accuracy.
    """
    A = np.array(Q, dtype=float)
    np.fill_diagonal(A, 0.0)
    n = A.shape[0]
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ A[:k, k]
    return pi / pi.sum()


def steady_state(scheme: KineticScheme) -> Populations:
    """Unique stationary populations of a scheme closed by recycling.

    Raises if the chain has more than one closed class, or if its only
    closed class is an absorbing product level (use :func:`transient`).
    """
    M = rate_matrix(scheme)
    recycled = {r.absorbing_level for r in scheme.recycle}
    active = [i for i, lab in enumerate(scheme.levels) if lab not in recycled]
    Q = M.T[np.ix_(active, active)].copy()
    np.fill_diagonal(Q, 0.0)
    adj = (Q > 0).astype(int)
    ncomp, comp = connected_components(adj, directed=True, connection="strong")
    closed = [c for c in range(ncomp)
              if not any(adj[i, j] and comp[j] != c for i in np.flatnonzero(comp == c) for j in range(len(active)))]
    labels = [scheme.levels[active[i]] for i in range(len(active))]
    if len(closed) > 1:
        groups = [[labels[i] for i in np.flatnonzero(comp == c)] for c in closed]
        raise ValueError(f"reducible scheme: {len(closed)} closed classes {groups}; no unique steady state")
    members = np.flatnonzero(comp == closed[0])
    if len(members) == 1 and labels[members[0]] != scheme.ground:
        raise ValueError(f"level {labels[members[0]]!r} is absorbing and not recycled; "
                         "add a recycle entry or use transient()")
    pi = np.zeros(len(scheme.levels))
    sub = _gth(Q[np.ix_(members, members)]) if len(members) > 1 else np.ones(1)
    for k, i in enumerate(members):
        pi[active[i]] = sub[k]
    return Populations(scheme.levels, pi)


def branching_ratios(scheme: KineticScheme, level: str) -> dict[str, float]:
    """Fraction of the decay of ``level`` going to each destination."""
    scheme.index(level)
    out: dict[str, float] = {}
    for e in scheme.all_edges():
        if e.source == level:
            out[e.target] = out.get(e.target, 0.0) + e.rate
    total = sum(out.values())
    if total == 0:
        raise ValueError(f"level {level!r} has no outgoing edges")
    return {k: v / total for k, v in out.items()}


def absorption_probability(scheme: KineticScheme, start: str, target: str) -> float:
    """Probability that population leaving ``start`` (pump off) ever reaches ``target``."""
    M = rate_matrix(scheme.with_n_bar(0.0) if scheme.pump is not None else scheme)
    n = len(scheme.levels)
    s, t = scheme.index(start), scheme.index(target)
    if s == t:
        return 1.0
    out = -np.diag(M)
    trans = [i for i in range(n) if i != t and out[i] > 0]
    if s not in trans:
        return 0.0
    # jump-chain probabilities among transient levels
    P = M.T / np.where(out > 0, out, 1.0)[:, None]
    np.fill_diagonal(P, 0.0)
    A = np.eye(len(trans)) - P[np.ix_(trans, trans)]
    b = P[trans, t]
    h = np.linalg.solve(A, b)
    return float(h[trans.index(s)])


def detection_probability(absorb_prob: float, scheme: KineticScheme) -> float:
    """Chance a photon is detected: absorption times the yield of the signal level."""
    if not 0 <= absorb_prob <= 1:
        raise ValueError(f"absorb_prob must lie in [0, 1], got {absorb_prob!r}")
    if scheme.pump is None or scheme.signal is None:
        raise ValueError("detection needs a scheme with a pump and a signal level")
    return absorb_prob * absorption_probability(scheme, scheme.pump.target, scheme.signal)
