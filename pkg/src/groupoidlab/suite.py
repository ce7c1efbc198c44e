"""Acceptance matrix: one entry per verifiable claim, each with a config and
explicit expectations.  The default manifest reproduces the full desk-scale
battery; custom manifests swap tolerances or drop criteria, and each entry
passes or fails in isolation.
"""

from __future__ import annotations

import math

import numpy as np

from . import averaging as av
from . import liegroup as lg
from . import momentum as mm
from . import scenarios as sc
from .groupoid import PerturbationField


def default_manifest() -> dict:
    su2_scenario = {
        "group": {"kind": "su", "n": 2},
        "action": {"family": "su2_adjoint"},
        "base_radius": 1.0,
        "base_seed": 5,
        "perturbation": {"amplitude": 0.016, "band": 2, "seed": 11},
    }
    so3_scenario = {
        "group": {"kind": "so", "n": 3},
        "action": {"family": "so3_standard", "twist": 0.4},
        "base_radius": 1.0,
        "base_seed": 9,
        "perturbation": {"amplitude": 0.015, "band": 2, "seed": 21},
    }
    torus1_scenario = {
        "group": {"kind": "torus", "n": 1},
        "action": {"family": "rotation2d"},
        "base_radius": 1.0,
        "base_seed": 5,
        "perturbation": {"amplitude": 0.05, "band": 2, "seed": 11},
    }
    torus2_scenario = {
        "group": {"kind": "torus", "n": 2},
        "action": {"family": "bitorus4d"},
        "base_radius": 1.0,
        "base_seed": 6,
        "perturbation": {"amplitude": 0.025, "band": 2, "seed": 12},
    }
    return {
        "criteria": [
            {
                "name": "quadratic-contraction-su2",
                "kind": "contraction",
                "config": {
                    "scenario": su2_scenario,
                    "rule": {"type": "subgroup", "order": 48},
                    "amplitudes": [0.1, 0.05, 0.02, 0.01],
                    "tol": 1e-9,
                    "max_iter": 6,
                    "n_orbits": 3,
                },
                "expect": {
                    "slope_range": [1.7, 2.3],
                    "max_start_defect": 0.05,
                    "final_defect": 1e-9,
                    "max_iterations": 6,
                },
            },
            {
                "name": "abelian-one-step-torus1",
                "kind": "one-step",
                "config": {
                    "scenario": torus1_scenario,
                    "rule": {"type": "grid", "resolution": 16},
                    "n_orbits": 2,
                },
                "expect": {"stepped_defect": 1e-10},
            },
            {
                "name": "abelian-one-step-torus2",
                "kind": "one-step",
                "config": {
                    "scenario": torus2_scenario,
                    "rule": {"type": "grid", "resolution": 8},
                    "n_orbits": 2,
                },
                "expect": {"stepped_defect": 1e-10},
            },
            {
                "name": "telescoping-and-stability",
                "kind": "average-suite",
                "config": {
                    "runs": [
                        {"scenario": su2_scenario,
                         "rule": {"type": "subgroup", "order": 48},
                         "tol": 1e-9, "max_iter": 8, "n_orbits": 3},
                        {"scenario": so3_scenario,
                         "rule": {"type": "subgroup", "order": 24},
                         "tol": 1e-9, "max_iter": 8, "n_orbits": 2},
                        {"scenario": torus1_scenario,
                         "rule": {"type": "grid", "resolution": 16},
                         "tol": 1e-9, "max_iter": 8, "n_orbits": 2},
                        {"scenario": torus2_scenario,
                         "rule": {"type": "grid", "resolution": 8},
                         "tol": 1e-9, "max_iter": 8, "n_orbits": 2},
                    ]
                },
                "expect": {"telescoping": 1e-10, "stability_factor": 5.0},
            },
            {
                "name": "linearization-so3",
                "kind": "linearization",
                "config": {
                    "scenario": so3_scenario,
                    "rule": {"type": "subgroup", "order": 24},
                    "tol": 1e-10,
                    "max_iter": 8,
                    "n_orbits": 2,
                },
                "expect": {"sphere_deviation": 1e-5, "min_points": 1000},
            },
            {
                "name": "gkr-su2-identity",
                "kind": "gkr",
                "config": {
                    "group": {"kind": "su", "n": 2},
                    "rule": {"type": "subgroup", "order": 48},
                    "map": {"amplitude": 0.05, "band": 2, "seed": 31},
                    "tol": 1e-9,
                    "max_iter": 8,
                    "c0_gate": 0.5,
                },
                "expect": {"final_defect": 1e-9, "bijective_on_nodes": True},
            },
            {
                "name": "gkr-torus-winding2",
                "kind": "gkr",
                "config": {
                    "group": {"kind": "torus", "n": 1},
                    "rule": {"type": "grid", "resolution": 16},
                    "map": {"winding": 2, "amplitude": 0.03, "band": 3, "seed": 41},
                    "tol": 1e-12,
                    "max_iter": 6,
                },
                "expect": {"final_defect": 1e-12, "winding": 2, "exact_match": 1e-10},
            },
            {
                "name": "mineur-arnold-actions",
                "kind": "action",
                "config": {"energies": [0.1, 0.5, 1.0], "quartic_energy": 1.0},
                "expect": {"harmonic_tol": 1e-6, "quartic_tol": 1e-5},
            },
            {
                "name": "momentum-image-cp2",
                "kind": "momentum",
                "config": {"system": "cp2", "samples": 10000, "seed": 3,
                           "resolution": 0.02},
                "expect": {"hausdorff": 0.02, "certificate": True},
            },
            {
                "name": "phi-set-k1",
                "kind": "phi-set",
                "config": {"lam": [1.0], "gam": [1.0], "samples": 200000, "seed": 7,
                           "window": [2.0, 6.0], "resolution": 0.05},
                "expect": {"min_offset": 1e-3, "min_target": 2.0, "gap_free": True},
            },
            {
                "name": "phi-set-k2",
                "kind": "phi-set",
                "config": {"lam": [1.0, 2.0], "gam": [1.0, 3.0], "samples": 100000,
                           "seed": 7, "window": [[2.5, 5.5], [4.5, 8.0]],
                           "resolution": 0.05},
                "expect": {"certificate": True},
            },
            {
                "name": "affine-lemma-corpus",
                "kind": "affine",
                "config": {
                    "positive": ["unit_square", "strip", "weyl_sector", "half_strip"],
                    "negative": ["l_complex", "overlap_fan", "cylinder"],
                },
                "expect": {"witnesses_verify": True},
            },
            {
                "name": "determinism",
                "kind": "determinism",
                "config": {
                    "target": {
                        "scenario": torus1_scenario,
                        "rule": {"type": "grid", "resolution": 16},
                        "tol": 1e-9, "max_iter": 4, "n_orbits": 2,
                    }
                },
                "expect": {},
            },
        ]
    }


# ---------------------------------------------------------------------------
# Criterion handlers
# ---------------------------------------------------------------------------

def _check_contraction(config, expect):
    groupoid, _ = sc.build_groupoid_scenario(config["scenario"])
    rule = sc.build_rule(groupoid.group, config["rule"])

    def make_map(amp):
        pert = dict(config["scenario"]["perturbation"])
        pert["amplitude"] = amp
        scenario = dict(config["scenario"], perturbation=pert)
        _, phi = sc.build_groupoid_scenario(scenario)
        return phi

    deltas, stepped, slope, c0 = av.contraction_sweep(
        make_map, rule, config["amplitudes"], n_orbits=config.get("n_orbits", 3)
    )
    lo, hi = expect.get("slope_range", [1.7, 2.3])
    ok = lo <= slope <= hi
    _, phi = sc.build_groupoid_scenario(config["scenario"])
    limit, rep = av.iterate(phi, rule, tol=config.get("tol", 1e-9),
                            max_iter=config.get("max_iter", 6),
                            n_orbits=config.get("n_orbits", 3))
    start_ok = rep.defect_sequence[0] <= expect.get("max_start_defect", 0.05)
    conv_ok = (rep.status == "converged"
               and rep.defect_sequence[-1] <= expect.get("final_defect", 1e-9)
               and rep.iterations_used <= expect.get("max_iterations", 6))
    return ok and start_ok and conv_ok, {
        "slope": slope,
        "c0_estimate": c0,
        "deltas": deltas,
        "stepped": stepped,
        "start_defect": rep.defect_sequence[0],
        "final_defect": rep.defect_sequence[-1],
        "iterations": rep.iterations_used,
    }


def _check_one_step(config, expect):
    _, phi = sc.build_groupoid_scenario(config["scenario"])
    rule = sc.build_rule(phi.groupoid.group, config["rule"])
    tab = av.tabulate(phi, rule, n_orbits=config.get("n_orbits", 2))
    before = tab.defect().sampled_sup
    stepped, _, _ = tab.average_step()
    after = stepped.defect().sampled_sup
    tol = expect.get("stepped_defect", 1e-10)
    return after <= tol and before > tol, {"defect_before": before, "defect_after": after}


def _check_average_suite(config, expect):
    details = []
    ok = True
    for run_cfg in config["runs"]:
        report, _ = sc.run_average(run_cfg)
        entry = {
            "rule": report.get("rule_tag"),
            "status": report.get("status"),
            "telescoping_max": report.get("telescoping_max"),
            "distance_to_start": report.get("distance_to_start"),
            "start_defect": report.get("defect_sequence", [None])[0],
            "held_out_defect": report.get("held_out_defect"),
            "form_agreement_max": report.get("form_agreement_max"),
        }
        details.append(entry)
        if report.get("status") != "converged":
            ok = False
            continue
        if report["telescoping_max"] > expect.get("telescoping", 1e-10):
            ok = False
        bound = expect.get("stability_factor", 5.0) * report["defect_sequence"][0]
        if report["distance_to_start"] > bound:
            ok = False
    return ok, {"runs": details}


def _check_linearization(config, expect):
    _, phi = sc.build_groupoid_scenario(config["scenario"])
    rule = sc.build_rule(phi.groupoid.group, config["rule"])
    limit, rep = av.iterate(phi, rule, tol=config.get("tol", 1e-10),
                            max_iter=config.get("max_iter", 8),
                            n_orbits=config.get("n_orbits", 2))
    extraction = av.extract_action(limit, tol=config.get("tol", 1e-10))
    n_points = sum(idx.size for idx in extraction.point_index)
    ok = (rep.status == "converged"
          and extraction.orbit_sphere_deviation <= expect.get("sphere_deviation", 1e-5)
          and n_points >= expect.get("min_points", 1000))
    return ok, {
        "status": rep.status,
        "sphere_deviation": extraction.orbit_sphere_deviation,
        "axiom_deviation": extraction.axiom_deviation,
        "orbit_hausdorff": extraction.orbit_hausdorff,
        "sampled_points": n_points,
    }


def _check_gkr(config, expect):
    report, _ = sc.run_gkr(config)
    if report.get("status") != "converged":
        return False, report
    ok = report["defect_sequence"][-1] <= expect.get("final_defect", 1e-9)
    details = {
        "final_defect": report["defect_sequence"][-1],
        "iterations": report["iterations_used"],
        "distance_to_input": report["distance_to_input"],
    }
    if expect.get("bijective_on_nodes"):
        bij = _gkr_bijective(config)
        details["bijective_on_nodes"] = bij
        ok = ok and bij
    if "winding" in expect:
        details["winding"] = report.get("winding")
        ok = ok and report.get("winding") == expect["winding"]
    if "exact_match" in expect:
        mismatch = _gkr_winding_mismatch(config)
        details["winding_map_mismatch"] = mismatch
        ok = ok and mismatch <= expect["exact_match"]
    return ok, details


def _gkr_limit(config):
    group = sc.build_group(config["group"])
    rule = sc.build_rule(group, config["rule"])
    map_cfg = config.get("map", {})
    field = PerturbationField.build(group, 1,
                                    amplitude=float(map_cfg.get("amplitude", 0.05)),
                                    band=int(map_cfg.get("band", 2)),
                                    seed=int(map_cfg.get("seed", 0)))
    probe = np.array([float(map_cfg.get("probe", 0.8))])
    winding = int(map_cfg.get("winding", 1))
    values = []
    for i in range(len(rule)):
        g = rule.node(i)
        base = np.mod(winding * np.asarray(g), 2 * math.pi) if group.kind == "torus" else g
        values.append(lg.multiply(group, base, lg.group_exp(group, field.value(g, probe))))
    rho = np.stack(values)
    limit, rep = av.gkr_average(rho, rule, tol=float(config.get("tol", 1e-9)),
                                max_iter=int(config.get("max_iter", 8)),
                                c0_gate=float(config.get("c0_gate", av.DEFAULT_C0_GATE)))
    return group, rule, limit


def _gkr_bijective(config) -> bool:
    group, rule, limit = _gkr_limit(config)
    kernel = lg.kernel_for(group)
    nodes = np.asarray(rule.nodes)
    d = kernel.log_norm(kernel.mul(kernel.inv(np.asarray(limit)[:, None]), nodes[None, :]))
    nearest = np.argmin(d, axis=1)
    return len(np.unique(nearest)) == len(rule)


def _gkr_winding_mismatch(config) -> float:
    group, rule, limit = _gkr_limit(config)
    winding = int(config["map"]["winding"])
    target = np.mod(winding * np.asarray(rule.nodes).reshape(-1), 2 * math.pi)
    diff = np.asarray(limit).reshape(-1) - target
    return float(np.max(np.abs(diff - 2 * math.pi * np.round(diff / (2 * math.pi)))))


def _check_action(config, expect):
    harmonic = mm.ActionIntegralProblem(lambda q, p: 0.5 * (q * q + p * p))
    worst = 0.0
    rows = []
    for energy in config.get("energies", [0.1, 0.5, 1.0]):
        value = mm.action_integral(harmonic, energy)
        err = abs(value - 2 * math.pi * energy)
        rows.append({"energy": energy, "value": value, "error": err})
        worst = max(worst, err)
    quartic = mm.ActionIntegralProblem(lambda q, p: 0.5 * (p * p + q**4))
    e_q = float(config.get("quartic_energy", 1.0))
    from scipy.integrate import quad

    edge = (2 * e_q) ** 0.25
    oracle = 2.0 * quad(lambda q: math.sqrt(max(2 * e_q - q**4, 0.0)),
                        -edge, edge, limit=200)[0]
    q_val = mm.action_integral(quartic, e_q)
    q_err = abs(q_val - oracle)
    ok = (worst <= expect.get("harmonic_tol", 1e-6)
          and q_err <= expect.get("quartic_tol", 1e-5))
    return ok, {"harmonic": rows, "harmonic_worst": worst,
                "quartic_value": q_val, "quartic_oracle": oracle, "quartic_error": q_err}


def _check_momentum(config, expect):
    report, _ = sc.run_momentum(config)
    ok = (report["hausdorff_to_known"] <= expect.get("hausdorff", 0.02)
          and report["certificate"]["passed"] == expect.get("certificate", True))
    return ok, {"hausdorff": report["hausdorff_to_known"],
                "certificate": report["certificate"]}


def _check_phi_set(config, expect):
    report, _ = sc.run_phi_set(config)
    ok = True
    details = {"min_sample": report["min_sample"],
               "commuting_sample": report["commuting_sample"]}
    if "min_target" in expect:
        off = abs(report["min_sample"][0] - expect["min_target"])
        details["min_offset"] = off
        ok = ok and off <= expect.get("min_offset", 1e-3)
    if "gap_free" in expect:
        details["gap_report"] = report.get("gap_report")
        ok = ok and report.get("gap_report", {}).get("gap_free") == expect["gap_free"]
    if "certificate" in expect:
        details["certificate"] = report.get("certificate")
        ok = ok and report.get("certificate", {}).get("passed") == expect["certificate"]
    return ok, details


def _check_affine(config, expect):
    details = {"positive": {}, "negative": {}}
    ok = True
    for name in config.get("positive", []):
        report, _ = sc.run_affine_check({"complex": name})
        good = (report.get("verdict") == "checked" and report["locally_convex"]
                and report["injective"] and report["image_convex"])
        details["positive"][name] = good
        ok = ok and good
    for name in config.get("negative", []):
        report, _ = sc.run_affine_check({"complex": name})
        rejected = False
        witnesses_ok = True
        if report.get("verdict") == "monodromy":
            rejected = len(report.get("holonomies", [])) > 0
        elif not report.get("locally_convex", True):
            rejected = True
            witnesses_ok = all(w["reverifies"] for w in report["local_witnesses"])
        elif not report.get("injective", True):
            rejected = True
            witnesses_ok = report.get("collision", {}).get("reverifies", False)
        elif not report.get("image_convex", True):
            rejected = True
        details["negative"][name] = {"rejected": rejected, "witnesses_verify": witnesses_ok}
        ok = ok and rejected and (witnesses_ok or not expect.get("witnesses_verify", True))
    return ok, details


def _check_determinism(config, expect):
    target = config["target"]
    report1, tables1 = sc.run_average(target)
    report2, tables2 = sc.run_average(target)
    same_report = sc.canonical_json(report1) == sc.canonical_json(report2)
    same_tables = tables1 == tables2
    return same_report and same_tables, {"reports_identical": same_report,
                                         "tables_identical": same_tables}


_HANDLERS = {
    "contraction": _check_contraction,
    "one-step": _check_one_step,
    "average-suite": _check_average_suite,
    "linearization": _check_linearization,
    "gkr": _check_gkr,
    "action": _check_action,
    "momentum": _check_momentum,
    "phi-set": _check_phi_set,
    "affine": _check_affine,
    "determinism": _check_determinism,
}


def run_suite(manifest: dict) -> dict:
    """Run every criterion in the manifest; one pass/fail entry each."""
    criteria = manifest.get("criteria")
    if not criteria:
        raise sc.ConfigError("manifest has no criteria")
    results = []
    for entry in criteria:
        kind = entry.get("kind")
        handler = _HANDLERS.get(kind)
        if handler is None:
            results.append({"name": entry.get("name", "?"), "passed": False,
                            "error": f"unknown criterion kind {kind!r}"})
            continue
        try:
            passed, details = handler(entry.get("config", {}), entry.get("expect", {}))
            results.append({"name": entry["name"], "passed": bool(passed),
                            "details": details})
        except Exception as exc:  # criterion isolation: failures never cascade
            results.append({"name": entry.get("name", "?"), "passed": False,
                            "error": f"{type(exc).__name__}: {exc}"})
    summary = {
        "criteria": results,
        "all_passed": all(r["passed"] for r in results),
        "manifest_hash": sc.config_hash(manifest),
        "tool_version": sc.__version__,
    }
    return summary
