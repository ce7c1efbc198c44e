"""Scenario construction, experiment drivers, and deterministic report I/O.

Every driver takes a plain config dict (parsed JSON), runs one experiment,
and returns (report dict, auxiliary CSV tables).  Reports embed the config
hash, seeds, and tool version; floats are serialized with 17 significant
digits and keys are sorted, so identical configs produce byte-identical
artifacts.  Wall-clock timing never enters report files (it would break
byte-level reproducibility); drivers log it to stderr instead.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from . import __version__
from . import affine as af
from . import averaging as av
from . import frequencies as fr
from . import liegroup as lg
from . import momentum as mm
from .groupoid import ActionGroupoid, ActionSpec, GroupoidMap, PerturbationField
from .haar import HaarQuadrature, haar_nodes, subgroup_rule


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------

def _canonical(obj):
    if isinstance(obj, dict):
        items = ", ".join(
            f"{json.dumps(str(k))}: {_canonical(v)}" for k, v in sorted(obj.items())
        )
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_canonical(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return '"nan"'
        if math.isinf(f):
            return '"inf"' if f > 0 else '"-inf"'
        return format(f, ".17g")
    return json.dumps(obj)


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    return _canonical(obj)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def format_csv(rows, header) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            format(float(v), ".17g") if isinstance(v, (float, np.floating)) else str(v)
            for v in row
        ))
    return "\n".join(lines) + "\n"


def _provenance(config: dict) -> dict:
    return {
        "config": config,
        "config_hash": config_hash(config),
        "tool_version": __version__,
    }


# ---------------------------------------------------------------------------
# Scenario assembly
# ---------------------------------------------------------------------------

def build_group(cfg: dict) -> lg.CompactGroup:
    try:
        kind, n = cfg["kind"], int(cfg["n"])
    except KeyError as exc:
        raise ConfigError(f"group config missing {exc}") from exc
    scale = cfg.get("metric_scale")
    if kind == "torus":
        return lg.torus(n, scale)
    if kind == "su":
        return lg.special_unitary(n, scale)
    if kind == "so":
        return lg.special_orthogonal(n, scale)
    raise ConfigError(f"unknown group kind {kind!r}")


def build_rule(group, cfg: dict) -> HaarQuadrature:
    kind = cfg.get("type")
    if kind == "subgroup":
        return subgroup_rule(group, int(cfg["order"]))
    if kind == "grid":
        return subgroup_rule(group, int(cfg["resolution"]))
    if kind == "lowdisc":
        return haar_nodes(group, int(cfg["resolution"]), int(cfg.get("seed", 0)))
    raise ConfigError(f"unknown rule type {kind!r}")


def build_groupoid_scenario(cfg: dict):
    group = build_group(cfg["group"])
    action_cfg = cfg.get("action", {})
    action = ActionSpec(action_cfg.get("family", "so3_standard"),
                        float(action_cfg.get("twist", 0.0)))
    groupoid = ActionGroupoid(
        group, action,
        base_radius=float(cfg.get("base_radius", 1.0)),
        base_seed=int(cfg.get("base_seed", 0)),
    )
    pert = cfg.get("perturbation")
    if pert is None:
        phi = GroupoidMap(groupoid, None)
    else:
        field = PerturbationField.build(
            group, groupoid.base_dim,
            amplitude=float(pert["amplitude"]),
            band=int(pert.get("band", 2)),
            seed=int(pert.get("seed", 0)),
            n_terms=int(pert.get("n_terms", 6)),
        )
        phi = GroupoidMap(groupoid, field)
    return groupoid, phi


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

def run_average(config: dict):
    """Drive the averaging iteration; returns (report, {name: csv_text})."""
    if "scenario" not in config:
        raise ConfigError("average config needs a 'scenario' section")
    groupoid, phi = build_groupoid_scenario(config["scenario"])
    rule = build_rule(groupoid.group, config.get("rule", {"type": "subgroup", "order": 48}))
    try:
        limit, rep = av.iterate(
            phi, rule,
            tol=float(config.get("tol", 1e-9)),
            max_iter=int(config.get("max_iter", 10)),
            n_orbits=int(config.get("n_orbits", 3)),
            c0_gate=float(config.get("c0_gate", av.DEFAULT_C0_GATE)),
            held_out_orbits=int(config.get("held_out_orbits", 2)),
            orbit_seed=config.get("seed"),
        )
    except av.DefectTooLarge as exc:
        report = _provenance(config)
        report.update({"status": "defect-too-large", "message": str(exc)})
        return report, {}
    report = _provenance(config)
    report.update(rep.to_json())
    rows = [
        (i + 1, d, rep.contraction_ratios[i] if i < len(rep.contraction_ratios) else "")
        for i, d in enumerate(rep.defect_sequence)
    ]
    curve = format_csv(rows, ["iteration", "defect", "ratio_to_previous_squared"])
    return report, {"defect_curve.csv": curve}


def run_gkr(config: dict):
    group = build_group(config["group"])
    rule = build_rule(group, config.get("rule", {"type": "subgroup", "order": 48}))
    map_cfg = config.get("map", {})
    winding = int(map_cfg.get("winding", 1))
    amplitude = float(map_cfg.get("amplitude", 0.05))
    field = PerturbationField.build(
        group, 1, amplitude=amplitude,
        band=int(map_cfg.get("band", 2)), seed=int(map_cfg.get("seed", 0)),
    )
    probe = np.array([float(map_cfg.get("probe", 0.8))])
    values = []
    for i in range(len(rule)):
        g = rule.node(i)
        base = np.mod(winding * np.asarray(g), 2 * math.pi) if group.kind == "torus" else g
        values.append(lg.multiply(group, base, lg.group_exp(group, field.value(g, probe))))
    rho = np.stack(values)
    try:
        limit, rep = av.gkr_average(
            rho, rule,
            tol=float(config.get("tol", 1e-9)),
            max_iter=int(config.get("max_iter", 10)),
            c0_gate=float(config.get("c0_gate", av.DEFAULT_C0_GATE)),
        )
    except av.DefectTooLarge as exc:
        report = _provenance(config)
        report.update({"status": "defect-too-large", "message": str(exc)})
        return report, {}
    report = _provenance(config)
    report.update(rep.to_json())
    kernel = lg.kernel_for(group)
    report["distance_to_input"] = float(np.max(kernel.log_norm(
        kernel.mul(kernel.inv(rho), limit))))
    if group.kind == "torus" and group.n == 1:
        report["winding"] = av.winding_number(rule, np.asarray(limit).reshape(-1))
    rows = [(i + 1, d) for i, d in enumerate(rep.defect_sequence)]
    return report, {"defect_curve.csv": format_csv(rows, ["iteration", "defect"])}


_SYSTEMS = {
    "cp2": mm.cp2_system,
    "sphere": mm.sphere_system,
    "sphere_x_sphere": lambda: mm.product_system(mm.sphere_system(), mm.sphere_system()),
}


def run_momentum(config: dict):
    name = config.get("system")
    if name not in _SYSTEMS:
        raise ConfigError(f"unknown system {name!r}; choose from {sorted(_SYSTEMS)}")
    sys = _SYSTEMS[name]()
    image = mm.momentum_image(
        sys,
        n=int(config.get("samples", 10000)),
        seed=int(config.get("seed", 0)),
        resolution=float(config.get("resolution", 0.02)),
    )
    report = _provenance(config)
    report.update({
        "system": name,
        "hull_vertices": image.hull.tolist(),
        "certificate": {
            "resolution": image.certificate.resolution,
            "n_grid": image.certificate.n_grid,
            "max_gap": image.certificate.max_gap,
            "passed": image.certificate.passed,
        },
        "hausdorff_to_known": image.hausdorff_to_known,
    })
    cloud = format_csv(image.points, [f"mu_{i}" for i in range(image.points.shape[1])])
    hull = format_csv(image.hull, [f"mu_{i}" for i in range(image.hull.shape[1])])
    return report, {"cloud.csv": cloud, "hull.csv": hull}


_WELLS = {
    "harmonic": lambda: mm.ActionIntegralProblem(lambda q, p: 0.5 * (q * q + p * p)),
    "quartic": lambda: mm.ActionIntegralProblem(lambda q, p: 0.5 * (p * p + q**4)),
}


def run_action(config: dict):
    name = config.get("well")
    if name not in _WELLS:
        raise ConfigError(f"unknown well {name!r}; choose from {sorted(_WELLS)}")
    prob = _WELLS[name]()
    energies = config.get("energies", [0.1, 0.5, 1.0])
    rows = []
    for energy in energies:
        res = mm.action_integral_report(prob, float(energy))
        rows.append((float(energy), res.value, res.error_estimate, res.n_points))
    report = _provenance(config)
    report.update({
        "well": name,
        "actions": [
            {"energy": r[0], "value": r[1], "error_estimate": r[2], "trace_points": r[3]}
            for r in rows
        ],
    })
    return report, {
        "actions.csv": format_csv(rows, ["energy", "action", "error_estimate", "trace_points"])
    }


def run_phi_set(config: dict):
    lam = fr.FrequencyTuple(tuple(config.get("lam", [1.0])))
    gam = fr.FrequencyTuple(tuple(config.get("gam", [1.0])))
    window = config.get("window")
    if window is not None:
        window = (window[0], window[1]) if len(lam) == 1 else (
            tuple(window[0]), tuple(window[1]))
    sample = fr.phi_set(
        lam, gam,
        n=int(config.get("samples", 100000)),
        seed=int(config.get("seed", 0)),
        coupling=float(config.get("coupling", 1.0)),
        window=window,
        resolution=float(config.get("resolution", 0.05)),
    )
    report = _provenance(config)
    report.update({
        "k": len(lam),
        "min_sample": sample.min_sample.tolist(),
        "componentwise_min": sample.componentwise_min.tolist(),
        "commuting_sample": sample.commuting_sample.tolist(),
    })
    if sample.gap_report is not None:
        report["gap_report"] = {
            "window": list(sample.gap_report.window),
            "resolution": sample.gap_report.resolution,
            "n_in_window": sample.gap_report.n_in_window,
            "max_gap": sample.gap_report.max_gap,
            "gap_free": sample.gap_report.gap_free,
        }
    if sample.certificate is not None:
        report["certificate"] = {
            "resolution": sample.certificate.resolution,
            "n_grid": sample.certificate.n_grid,
            "max_gap": sample.certificate.max_gap,
            "passed": sample.certificate.passed,
        }
    cloud = format_csv(sample.samples, [f"lambda_{i + 1}" for i in range(len(lam))])
    return report, {"phi_cloud.csv": cloud}


_BUILTIN_COMPLEXES = {
    "unit_square": af.unit_square_complex,
    "l_complex": af.l_complex,
    "weyl_sector": af.weyl_sector_complex,
    "cylinder": af.cylinder_complex,
    "strip": af.strip_complex,
    "overlap_fan": af.overlap_fan_complex,
    "half_strip": af.half_strip_complex,
}


def run_affine_check(config: dict):
    spec = config.get("complex")
    if isinstance(spec, str):
        if spec not in _BUILTIN_COMPLEXES:
            raise ConfigError(f"unknown builtin complex {spec!r}")
        complex_ = _BUILTIN_COMPLEXES[spec]()
    elif isinstance(spec, dict):
        complex_ = af.AffineComplex.from_json(spec)
    else:
        raise ConfigError("affine-check config needs a 'complex'")
    report = _provenance(config)
    tables = {}
    try:
        complex_.validate()
    except af.MalformedComplex as exc:
        report.update({"verdict": "malformed", "message": str(exc)})
        return report, tables

    local = af.check_local_convexity(complex_)
    report["locally_convex"] = local.locally_convex
    report["local_witnesses"] = [
        {
            "cell": w.cell, "vertex": w.vertex,
            "direction_a": w.direction_a.tolist(),
            "direction_b": w.direction_b.tolist(),
            "midpoint": w.midpoint.tolist(),
            "reverifies": af.verify_cone_witness(complex_, w),
        }
        for w in local.witnesses
    ]
    try:
        dev = af.develop(complex_)
    except af.Monodromy as exc:
        report["verdict"] = "monodromy"
        report["holonomies"] = [
            {"gluing": gi, "linear": h.linear.tolist(), "offset": h.offset.tolist()}
            for gi, h in exc.holonomies
        ]
        return report, tables
    verdict = af.global_convexity(
        complex_, dev,
        mode=config.get("mode", "compact"),
        grid_resolution=float(config.get("grid_resolution", 0.05)),
        radii=config.get("radii"),
        seed=int(config.get("seed", 0)),
    )
    report["verdict"] = "checked"
    report["injective"] = verdict.injective
    report["image_convex"] = verdict.image_convex
    report["star_coverage"] = verdict.star_coverage
    if verdict.collision is not None:
        report["collision"] = {
            "cell_a": verdict.collision.cell_a,
            "point_a": verdict.collision.point_a.tolist(),
            "cell_b": verdict.collision.cell_b,
            "point_b": verdict.collision.point_b.tolist(),
            "image": verdict.collision.image.tolist(),
            "reverifies": af.verify_collision_witness(complex_, dev, verdict.collision),
        }
    if verdict.image_hull is not None:
        tables["hull.csv"] = format_csv(
            verdict.image_hull, [f"x_{i}" for i in range(complex_.dimension)]
        )
        report["image_hull"] = verdict.image_hull.tolist()
    return report, tables


DRIVERS = {
    "average": run_average,
    "gkr": run_gkr,
    "momentum": run_momentum,
    "action": run_action,
    "phi-set": run_phi_set,
    "affine-check": run_affine_check,
}


def exit_code_for(report: dict) -> int:
    status = report.get("status")
    if status == "defect-too-large":
        return 2
    if status == "stalled":
        return 3
    return 0
