"""Execution of each run mode, producing a :class:`ResultTable`."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

from .. import dynamics, pumping
from ..hamiltonian import PhysicalConstants, build, commutator_norm, coherence_condition, terms_from_json
from ..spinops import Site, SpinSystem, spectral_norm
from .config import config_hash
from .table import ResultTable

# relative size below which a commutator counts as zero
COMMUTE_RTOL = 1e-9


def system_from_json(obj: dict) -> SpinSystem:
    return SpinSystem(tuple(Site(s["label"], s["role"], s["multiplicity"]) for s in obj["sites"]))


def model_from_json(obj: dict) -> dynamics.OpenSystemModel:
    tau = obj["tau_c_s"]
    return dynamics.OpenSystemModel(
        tau_c=math.inf if tau is None else float(tau),
        k_back=float(obj["k_back_per_s"]),
        k_prot=float(obj["k_prot_per_s"]),
        channel=obj["channel"],
    )


def scheme_from_json(obj: dict) -> pumping.KineticScheme:
    if "preset" not in obj:
        return pumping.KineticScheme.from_json(obj)
    scheme = pumping.preset(obj["preset"], n_bar=float(obj.get("n_bar", 0.0)))
    for o in obj.get("rate_overrides", ()):
        scheme = scheme.with_rate(o["from"], o["to"], float(o["rate_per_s"]))
    if "branching" in obj:
        b = obj["branching"]
        scheme = scheme.with_branching(b["level"], b["to"], float(b["fraction"]))
    return scheme


def _constants(config) -> PhysicalConstants:
    return PhysicalConstants(gamma_e=float(config["constants"]["gamma_e_rad_per_s_T"]))


def _settings(config) -> dynamics.YieldSettings:
    num = config["numerics"]
    return dynamics.YieldSettings(dt=num["dt_s"], t_max=num["t_max_s"], trace_floor=num["trace_floor"],
                                  nuclear=config["initial_state"]["nuclear"], constants=_constants(config))


def _provenance(config, **extra) -> dict[str, str]:
    prov = {"config_sha256": config_hash(config),
            "schema_version": str(config["schema_version"]),
            "mode": config["mode"],
            "gamma_e_rad_per_s_T": repr(float(config["constants"]["gamma_e_rad_per_s_T"]))}
    num = config.get("numerics")
    if num is None:
        prov["dt_s"] = "n/a (exact matrix exponential / linear solve)"
        prov["trace_floor"] = "n/a"
    else:
        prov["dt_s"] = repr(num["dt_s"]) if num["dt_s"] is not None else \
            f"auto ({dynamics.DEFAULT_STEP}/max rate; per-row dt columns)"
        prov["trace_floor"] = repr(num["trace_floor"])
        prov["t_max_s"] = repr(num["t_max_s"]) if num["t_max_s"] is not None else "auto (20/slowest recombination rate)"
    if "open_system" in config:
        prov["dephasing_channel"] = config["open_system"]["channel"]
    prov.update({k: str(v) for k, v in extra.items()})
    return prov


def _map(fn, items, jobs: int):
    """Order-preserving map, in a process pool when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


YIELD_COLUMNS = ["yield_ground", "yield_prot_S", "yield_prot_T", "yield_prot", "singlet_fraction",
                 "residual_trace", "t_final_s", "dt_s"]
YIELD_UNITS = ["1", "1", "1", "1", "1", "1", "s", "s"]


def _yield_row(r: dynamics.YieldRecord) -> tuple:
    return (r.yield_ground, r.yield_prot_S, r.yield_prot_T, r.yield_prot, r.singlet_fraction,
            r.residual_trace, r.t_final, r.dt)


def run_radical_pair(config, jobs: int = 1) -> ResultTable:
    system = system_from_json(config["system"])
    s = _settings(config)
    H = build(terms_from_json(config["hamiltonian"]["terms"]), system, s.constants)
    rho0 = dynamics.singlet_state(system, s.nuclear)
    rec = dynamics.compute_yields(system, rho0, H, model_from_json(config["open_system"]),
                                  s.dt, s.t_max, s.trace_floor)
    table = ResultTable(list(YIELD_COLUMNS), list(YIELD_UNITS), provenance=_provenance(config))
    table.add_row(_yield_row(rec))
    return table


def _orientation_point(theta, system, terms, B, model, settings):
    return dynamics.orientation_yields(system, terms, B, dynamics.polar_direction(theta), model, settings)


def run_sweep_orientation(config, jobs: int = 1) -> ResultTable:
    system = system_from_json(config["system"])
    terms = terms_from_json(config["hamiltonian"]["terms"])
    B = float(config["field"]["magnitude"])
    fn = partial(_orientation_point, system=system, terms=terms, B=B,
                 model=model_from_json(config["open_system"]), settings=_settings(config))
    thetas = config["sweep"]["theta_deg"]
    table = ResultTable(["theta_deg"] + YIELD_COLUMNS, ["deg"] + YIELD_UNITS,
                        provenance=_provenance(config, field_uT=B, field_plane="xz, theta from z"))
    for theta, rec in zip(thetas, _map(fn, thetas, jobs)):
        table.add_row((float(theta),) + _yield_row(rec))
    return table


def _coherence_point(tau, system, terms, B, model, settings):
    m = dynamics.OpenSystemModel(tau_c=tau, k_back=model.k_back, k_prot=model.k_prot, channel=model.channel)
    return dynamics.orientation_contrast(system, terms, B, m, settings)


def run_sweep_coherence(config, jobs: int = 1) -> ResultTable:
    system = system_from_json(config["system"])
    terms = terms_from_json(config["hamiltonian"]["terms"])
    B = float(config["field"]["magnitude"])
    fn = partial(_coherence_point, system=system, terms=terms, B=B,
                 model=model_from_json(config["open_system"]), settings=_settings(config))
    taus = [float(t) for t in config["sweep"]["tau_c_s"]]
    table = ResultTable(
        ["tau_c_s", "phi_T_parallel", "phi_T_perpendicular", "difference", "dt_parallel_s", "dt_perpendicular_s"],
        ["s", "1", "1", "1", "s", "s"],
        provenance=_provenance(config, field_uT=B, parallel="B along z", perpendicular="B along x"))
    for tau, c in zip(taus, _map(fn, taus, jobs)):
        table.add_row((tau, c.parallel.triplet_yield, c.perpendicular.triplet_yield, c.difference,
                       c.parallel.dt, c.perpendicular.dt))
    return table


def run_pump_steady(config, jobs: int = 1) -> ResultTable:
    scheme = scheme_from_json(config["scheme"])
    if scheme.pump is None:
        raise ValueError("pump-steady needs a scheme with a pump block")
    table = ResultTable(["n_bar"] + [f"rho_{lab}" for lab in scheme.levels], ["1"] * (1 + len(scheme.levels)),
                        provenance=_provenance(config, levels=" ".join(scheme.levels)))
    for n in config["sweep"]["n_bar"]:
        p = pumping.steady_state(scheme.with_n_bar(float(n)))
        table.add_row((float(n),) + tuple(float(x) for x in p.values))
    return table


def run_pump_transient(config, jobs: int = 1) -> ResultTable:
    scheme = scheme_from_json(config["scheme"])
    p0 = config.get("p0") or {scheme.ground: 1.0}
    table = ResultTable(["t_s"] + [f"rho_{lab}" for lab in scheme.levels], ["s"] + ["1"] * len(scheme.levels),
                        provenance=_provenance(config, p0=" ".join(f"{k}:{v}" for k, v in sorted(p0.items()))))
    for t in config["sweep"]["t_s"]:
        p = pumping.transient(scheme, p0, float(t))
        table.add_row((float(t),) + tuple(float(x) for x in p.values))
    return table


@dataclass
class ScenarioReport:
    comm_h0_hint: float
    comm_hex_hint: float
    comm_h0_hex: float
    norm_hex: float
    scenario: str
    coherence_margin: float | None = None
    coherence_satisfied: bool | None = None
    warnings: list[str] = field(default_factory=list)

    def text(self) -> str:
        lines = [
            f"||[H0, H_int]||  = {self.comm_h0_hint:.6g} (rad/s)^2",
            f"||[H_ex, H_int]|| = {self.comm_hex_hint:.6g} (rad/s)^2",
            f"||[H0, H_ex]||   = {self.comm_h0_hex:.6g} (rad/s)^2",
            f"scenario: ({self.scenario})",
        ]
        if self.coherence_margin is not None:
            verdict = "satisfied" if self.coherence_satisfied else "not satisfied"
            lines.append(f"coherence condition tau_c*||H_ex|| = {self.coherence_margin:.6g}: {verdict}")
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines)


def _commutes(c: float, A, B) -> bool:
    scale = spectral_norm(A) * spectral_norm(B)
    return c <= COMMUTE_RTOL * scale


def classify(H0, H_ex, H_int, tau_c: float | None = None) -> ScenarioReport:
    """Label the measurement scenario from the commutators of the three Hamiltonians.

    (i): the field couples to the ground-state meter, ``[H0, H_int] != 0``,
    or there is no separate interaction term at all.
    (ii): ``[H0, H_int] = 0`` and the signal is written into the excited-state
    dynamics.
    """
    c0i = commutator_norm(H0, H_int)
    cxi = commutator_norm(H_ex, H_int)
    c0x = commutator_norm(H0, H_ex)
    warnings = []
    if spectral_norm(H_int) == 0.0:
        label = "i"
        warnings.append("H_int = 0: the meter only registers the radiation field")
    elif not _commutes(c0i, H0, H_int):
        label = "i"
    else:
        label = "ii"
        if _commutes(cxi, H_ex, H_int):
            warnings.append("[H_ex, H_int] = 0: the excited-state dynamics is insensitive to the field")
    if _commutes(c0x, H0, H_ex):
        warnings.append("[H0, H_ex] = 0: meter cannot acquire information about the system")
    report = ScenarioReport(c0i, cxi, c0x, spectral_norm(H_ex), label, warnings=warnings)
    if tau_c is not None:
        chk = coherence_condition(H_ex, tau_c)
        report.coherence_margin, report.coherence_satisfied = chk.margin, chk.satisfied
    return report


def classify_scenario(config) -> ScenarioReport:
    system = system_from_json(config["system"])
    const = _constants(config)
    sc = config["scenario"]
    H = {k: build(terms_from_json(sc[k]["terms"]), system, const) for k in ("h0", "h_ex", "h_int")}
    return classify(H["h0"], H["h_ex"], H["h_int"], sc.get("tau_c_s"))


def run_classify_scenario(config, jobs: int = 1) -> ResultTable:
    rep = classify_scenario(config)
    extra = {"scenario": rep.scenario}
    for i, w in enumerate(rep.warnings):
        extra[f"warning_{i}"] = w
    table = ResultTable(
        ["comm_H0_Hint", "comm_Hex_Hint", "comm_H0_Hex", "norm_Hex", "coherence_margin", "coherence_satisfied"],
        ["rad2/s2", "rad2/s2", "rad2/s2", "rad/s", "1", "bool"],
        provenance=_provenance(config, **extra))
    margin = math.nan if rep.coherence_margin is None else rep.coherence_margin
    sat = math.nan if rep.coherence_satisfied is None else float(rep.coherence_satisfied)
    table.add_row((rep.comm_h0_hint, rep.comm_hex_hint, rep.comm_h0_hex, rep.norm_hex, margin, sat))
    table.report = rep
    return table


RUNNERS = {
    "radical-pair": run_radical_pair,
    "sweep-orientation": run_sweep_orientation,
    "sweep-coherence": run_sweep_coherence,
    "pump-steady": run_pump_steady,
    "pump-transient": run_pump_transient,
    "classify-scenario": run_classify_scenario,
}


def run(config: dict, jobs: int | None = None) -> ResultTable:
    """Execute a normalised config."""
    if jobs is None:
        jobs = os.cpu_count() or 1
    return RUNNERS[config["mode"]](config, jobs=jobs)


MODES = tuple(RUNNERS)
