"""Built-in run configurations reproducing the published experiments."""

from __future__ import annotations

import copy

RADICAL_PAIR_SYSTEM = {
    "sites": [
        {"label": "F", "role": "electron", "multiplicity": 2},
        {"label": "T", "role": "electron", "multiplicity": 2},
        {"label": "n1", "role": "nucleus", "multiplicity": 2},
    ]
}
ANISOTROPIC_HYPERFINE = [{"type": "hyperfine", "unit": "uT", "A": [0, 0, 1000], "electron": "F", "nucleus": "n1"}]
ISOTROPIC_PLUS_DIPOLAR = [
    {"type": "hyperfine", "unit": "uT", "A": [1000, 1000, 1000], "electron": "F", "nucleus": "n1"},
    {"type": "dipolar", "unit": "uT", "V": 1000, "e1": "F", "e2": "T", "axis": [0, 0, 1]},
]
TAU_GRID = [1e-9, 2e-9, 5e-9, 1e-8, 2e-8, 5e-8, 1e-7]
# coherence experiments use random-field relaxation; see README
RECOMBINATION_1US = {"k_back_per_s": 1e6, "k_prot_per_s": 1e6, "channel": "isotropic"}


def _zeeman(B):
    return {"type": "zeeman", "unit": "uT", "B": B}


PRESETS = {
    "singlet-yield-parallel": {
        "schema_version": 1, "mode": "radical-pair",
        "system": RADICAL_PAIR_SYSTEM,
        "hamiltonian": {"terms": ANISOTROPIC_HYPERFINE + [_zeeman([0, 0, 50])]},
        "open_system": {"tau_c_s": None, "k_back_per_s": 0.0, "k_prot_per_s": 1e6},
    },
    "singlet-yield-perpendicular": {
        "schema_version": 1, "mode": "radical-pair",
        "system": RADICAL_PAIR_SYSTEM,
        "hamiltonian": {"terms": ANISOTROPIC_HYPERFINE + [_zeeman([50, 0, 0])]},
        "open_system": {"tau_c_s": None, "k_back_per_s": 0.0, "k_prot_per_s": 1e5},
    },
    "orientation-sweep": {
        "schema_version": 1, "mode": "sweep-orientation",
        "system": RADICAL_PAIR_SYSTEM,
        "hamiltonian": {"terms": ANISOTROPIC_HYPERFINE},
        "field": {"magnitude": 50, "unit": "uT"},
        "open_system": dict(RECOMBINATION_1US, tau_c_s=1e-7),
        "sweep": {"theta_deg": [0, 15, 30, 45, 60, 75, 90]},
    },
    "coherence-sweep": {
        "schema_version": 1, "mode": "sweep-coherence",
        "system": RADICAL_PAIR_SYSTEM,
        "hamiltonian": {"terms": ANISOTROPIC_HYPERFINE},
        "field": {"magnitude": 50, "unit": "uT"},
        "open_system": dict(RECOMBINATION_1US),
        "sweep": {"tau_c_s": TAU_GRID},
    },
    "dipolar-coherence-sweep": {
        "schema_version": 1, "mode": "sweep-coherence",
        "system": RADICAL_PAIR_SYSTEM,
        "hamiltonian": {"terms": ISOTROPIC_PLUS_DIPOLAR},
        "field": {"magnitude": 50, "unit": "uT"},
        "open_system": dict(RECOMBINATION_1US),
        "sweep": {"tau_c_s": TAU_GRID},
    },
    "fig1a-linearity": {
        "schema_version": 1, "mode": "pump-steady",
        "scheme": {"preset": "fig1a-light-harvesting"},
        "sweep": {"n_bar": [1e-6, 2e-6, 5e-6, 1e-5, 2e-5, 5e-5, 1e-4, 2e-4, 5e-4, 1e-3]},
    },
    "fig1b-transient": {
        "schema_version": 1, "mode": "pump-transient",
        "scheme": {"preset": "fig1b-rhodopsin"},
        "p0": {"3": 1.0},
        "sweep": {"t_s": [0.0, 1e-13, 2e-13, 5e-13, 1e-12, 2e-12, 5e-12, 1e-11, 1e-10, 1e-9]},
    },
    "scenario-magnetoreception": {
        "schema_version": 1, "mode": "classify-scenario",
        "system": RADICAL_PAIR_SYSTEM,
        "scenario": {
            "h0": {"terms": [{"type": "exchange", "unit": "uT", "J": 1000, "e1": "F", "e2": "T"}]},
            "h_ex": {"terms": ANISOTROPIC_HYPERFINE},
            "h_int": {"terms": [_zeeman([50, 0, 0])]},
            "tau_c_s": 1e-7,
        },
    },
}


def get(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None
