"""Configuration-driven command line front end.

Subcommands: spectrum, fit, resonance-map, floquet-map, dynamics-map,
calibrate, oracle, presets.  Experiments are described by a JSON config
whose field names carry unit suffixes (GHz, MHz, ns); defaults are filled in
and the effective config is echoed next to the outputs.  Exit codes: 0 ok,
2 config error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import circuit as cm
from . import dynamics as dyn
from . import fitting as ft
from . import floquet as fl
from . import presets as pr
from . import runner
from . import trajectories as qt
from . import transmon as tm
from .errors import ConfigError, NumericalError
from .units import ghz, mhz, to_ghz, to_mhz

_DEFAULTS = {
    "drive": {"omega_d_GHz": None, "t_up_ns": 200.0, "t_final_ns": 1200.0},
    "grids": {
        "n_g": {"start": 0.0, "stop": 0.5, "num": 11},
        "flux_phi0": {"start": 0.0, "stop": 0.45, "num": 91},
        "eps_d_MHz": {"start": 4.0, "stop": 16.5, "num": 12},
        "n_r_max": 165.0,
    },
    "numerics": {
        "n_levels": 20,
        "charge_cutoff": None,
        "steps_per_period": 512,
        "delta_eps_t_MHz": 5.0,
        "n_transmon": 10,
        "n_photon": 15,
        "max_order": 2,
        "spurious_GHz": None,
        "collapse": True,
        "initial_states": [0, 1],
        "n_traj": 500,
        "sample_every_periods": 16,
        "n_spectrum_levels": 4,
    },
    "fit": {"variant": "multiharmonic", "targets_file": None,
            "bounds_frac": 0.20, "n_seeds": 5},
    "output": {"dir": "out"},
    "seed": 0,
}


def _merge_defaults(config: dict) -> dict:
    merged = json.loads(json.dumps(_DEFAULTS))  # deep copy
    for key, value in config.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


def _require(condition, message, field):
    if not condition:
        raise ConfigError(message, field=field)


def _grid(spec, field) -> np.ndarray:
    if isinstance(spec, list):
        _require(len(spec) > 0, "grid list must be non-empty", field)
        return np.asarray(spec, dtype=float)
    if isinstance(spec, dict):
        for key in ("start", "stop", "num"):
            _require(key in spec, f"grid needs '{key}'", field)
        _require(int(spec["num"]) >= 1, "grid num must be >= 1", field)
        return np.linspace(spec["start"], spec["stop"], int(spec["num"]))
    raise ConfigError("grid must be a list or {start, stop, num}", field)


def _device(config: dict) -> cm.CircuitParams:
    dev = config.get("device")
    _require(isinstance(dev, dict), "missing device block", "device")
    if "preset" in dev:
        try:
            base = pr.preset(dev["preset"])
        except KeyError as exc:
            raise ConfigError(str(exc), field="device.preset")
        tweak = dev.get("transmon", {})
        t = base.transmon
        if "n_g" in tweak:
            t = t.at_gate_charge(float(tweak["n_g"]))
        if "flux_phi0" in tweak:
            t = t.at_flux(float(tweak["flux_phi0"]))
        return cm.CircuitParams(transmon=t, omega_r=base.omega_r, g=base.g,
                                kappa=base.kappa)
    _require("transmon" in dev and "resonator" in dev,
             "device needs 'preset' or 'transmon' + 'resonator' blocks", "device")
    tr, rs = dev["transmon"], dev["resonator"]
    for key in ("e_c_GHz", "e_j_GHz"):
        _require(key in tr, f"missing {key}", f"device.transmon.{key}")
    for key in ("omega_r_GHz", "g_MHz", "kappa_MHz"):
        _require(key in rs, f"missing {key}", f"device.resonator.{key}")
    try:
        t = tm.TransmonParams(
            e_c=ghz(float(tr["e_c_GHz"])),
            e_j=tuple(ghz(float(x)) for x in tr["e_j_GHz"]),
            n_g=float(tr.get("n_g", 0.0)),
            flux=float(tr.get("flux_phi0", 0.0)))
        return cm.CircuitParams(transmon=t, omega_r=ghz(float(rs["omega_r_GHz"])),
                                g=mhz(float(rs["g_MHz"])),
                                kappa=mhz(float(rs["kappa_MHz"])))
    except ValueError as exc:
        raise ConfigError(str(exc), field="device")


def _omega_d(config, device_block) -> float:
    value = config["drive"].get("omega_d_GHz")
    if value is None and "preset" in config.get("device", {}):
        value = pr.DRIVE_GHZ.get(config["device"]["preset"])
    _require(value is not None, "drive.omega_d_GHz is required", "drive.omega_d_GHz")
    return ghz(float(value))


def _apply_override(config: dict, assignment: str):
    if "=" not in assignment:
        raise ConfigError("override must look like key.path=value",
                          field="--override")
    path, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    parts = path.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot descend into {part}", field=path)
    node[parts[-1]] = value


def _load_config(args) -> dict:
    config = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}",
                              field="--config")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}", field="--config")
    if args.preset:
        config.setdefault("device", {})["preset"] = args.preset
    for assignment in args.override or []:
        _apply_override(config, assignment)
    config = _merge_defaults(config)
    if args.out:
        config["output"]["dir"] = args.out
    if args.seed is not None:
        config["seed"] = args.seed
    return config


def _prepare_output(config: dict, name: str):
    out_dir = config["output"]["dir"]
    os.makedirs(out_dir, exist_ok=True)
    meta = runner.run_metadata(config, config["seed"],
                               {"experiment": name})
    runner.write_sidecar(os.path.join(out_dir, f"{name}.meta.json"), config, meta)
    return out_dir, meta


# ---------------------------------------------------------------- spectrum

def cmd_spectrum(config: dict) -> int:
    device = _device(config)
    out_dir, meta = _prepare_output(config, "spectrum")
    ng_grid = _grid(config["grids"]["n_g"], "grids.n_g")
    flux_grid = _grid(config["grids"]["flux_phi0"], "grids.flux_phi0")
    n_levels = int(config["numerics"]["n_spectrum_levels"])
    columns = ["flux_phi0", "n_g"] + [f"w0{j}_GHz" for j in range(1, n_levels)]
    path = os.path.join(out_dir, "spectrum.csv")
    with open(path, "w") as fh:
        for line in runner.metadata_lines(meta):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for flux in flux_grid:
            for ng in ng_grid:
                params = device.transmon.at_flux(flux).at_gate_charge(ng)
                spec = tm.spectrum(params, n_levels,
                                   cutoff=config["numerics"]["charge_cutoff"])
                freqs = [to_ghz(tm.transition_frequency(spec, 0, j))
                         for j in range(1, n_levels)]
                fh.write(",".join([repr(float(flux)), repr(float(ng))]
                                  + [repr(f) for f in freqs]) + "\n")
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------- fit

def _read_targets(path) -> ft.SpectroscopyTargets:
    records = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(row for row in fh if not row.startswith("#"))
            for line in reader:
                if not line or line[0].strip() == "kind":
                    continue
                kind, level, n_g, freq = (x.strip() for x in line[:4])
                records.append(ft.Target(kind=kind, level=int(level),
                                         n_g=float(n_g), freq_ghz=float(freq)))
    except FileNotFoundError:
        raise ConfigError(f"targets file not found: {path}", field="fit.targets_file")
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad target record: {exc}", field="fit.targets_file")
    _require(records, "no targets in file", "fit.targets_file")
    return ft.SpectroscopyTargets(tuple(records))


def cmd_fit(config: dict) -> int:
    device = _device(config)
    out_dir, meta = _prepare_output(config, "fit")
    fit_cfg = config["fit"]
    if fit_cfg["targets_file"]:
        targets = _read_targets(fit_cfg["targets_file"])
    else:
        targets = ft.standard_targets(device)
    result = ft.fit(targets, fit_cfg["variant"], device,
                    bounds=float(fit_cfg["bounds_frac"]),
                    n_seeds=int(fit_cfg["n_seeds"]), seed=config["seed"])
    t = result.params.transmon
    e_j = t.e_j + (0.0,) * (3 - len(t.e_j))
    report = {
        "variant": result.variant,
        "loss_GHz": result.loss,
        "converged": result.converged,
        "iterations": result.iterations,
        "parameters": {
            "E_C_over_2pi_MHz": to_mhz(t.e_c),
            "E_J1_over_2pi_GHz": to_ghz(e_j[0]),
            "E_J1_over_E_C": e_j[0] / t.e_c,
            "E_J2_over_E_J1_percent": 100.0 * e_j[1] / e_j[0],
            "E_J3_over_E_J1_percent": 100.0 * e_j[2] / e_j[0],
            "omega_r_over_2pi_GHz": to_ghz(result.params.omega_r),
            "g_over_2pi_MHz": to_mhz(result.params.g),
        },
        "residuals_GHz": {f"{k[0]}_{k[1]}_ng{k[2]}": v
                          for k, v in result.residuals.items()},
        "seed_losses_GHz": result.seed_losses,
    }
    if result.extras:
        report["parameters"]["E_J_junction_over_2pi_GHz"] = to_ghz(
            result.extras["e_j_junction"])
        report["parameters"]["E_L_over_2pi_GHz"] = to_ghz(result.extras["e_l"])
    path = os.path.join(out_dir, "fit_result.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"wrote {path}")
    for key, value in report["parameters"].items():
        print(f"  {key}: {value:.6g}")
    return 0


# ---------------------------------------------------------------- maps

def cmd_resonance_map(config: dict) -> int:
    device = _device(config)
    omega_d = _omega_d(config, device)
    out_dir, meta = _prepare_output(config, "resonance-map")
    spurious = config["numerics"]["spurious_GHz"]
    lines = cm.resonance_condition_map(
        device, omega_d,
        flux_grid=_grid(config["grids"]["flux_phi0"], "grids.flux_phi0"),
        ng_grid=_grid(config["grids"]["n_g"], "grids.n_g"),
        max_order=int(config["numerics"]["max_order"]),
        spurious=ghz(spurious) if spurious else None)
    path = os.path.join(out_dir, "resonance_lines.csv")
    columns = ["transition", "order", "spurious_offset_GHz", "flux", "n_g"]
    with open(path, "w") as fh:
        for line in runner.metadata_lines(meta):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for line in lines:
            label = f"{line.transition[0]}->{line.transition[1]}"
            off = to_ghz(line.spurious_offset) if line.spurious_offset else 0.0
            for flux, ng in line.locus:
                fh.write(f"{label},{line.order},{repr(off)},{repr(flux)},"
                         f"{repr(ng)}\n")
    print(f"wrote {path}")
    return 0


def _branch_assets(device, omega_d, n_g, config):
    num = config["numerics"]
    eps_max = 2.0 * device.g * np.sqrt(float(config["grids"]["n_r_max"]))
    circuit = cm.CircuitParams(transmon=device.transmon.at_gate_charge(n_g),
                               omega_r=device.omega_r, g=device.g,
                               kappa=device.kappa)
    branches = fl.track_branches(
        circuit, omega_d, eps_max,
        delta_eps=mhz(float(num["delta_eps_t_MHz"])),
        n_levels=int(num["n_levels"]),
        steps_per_period=int(num["steps_per_period"]),
        charge_cutoff=num["charge_cutoff"])
    crossings = fl.detect_avoided_crossings(branches)
    return branches, crossings


def _floquet_group(args):
    device, omega_d, n_g, config = args
    branches, crossings = _branch_assets(device, omega_d, n_g, config)
    point_rows, crossing_rows, critical_rows = [], [], []
    n_r = branches.n_r_grid
    for k, eps in enumerate(branches.eps_grid):
        for b in range(branches.n_levels):
            point_rows.append({
                "group": n_g, "n_g": n_g, "eps_t_MHz": to_mhz(eps),
                "n_r": float(n_r[k]), "branch": b,
                "quasienergy_GHz": to_ghz(branches.quasienergies[k, b]),
                "population": float(branches.populations[k, b])})
    for c in crossings:
        crossing_rows.append({
            "group": n_g, "n_g": n_g, "branch_i": c.branch_i,
            "branch_j": c.branch_j, "n_r": c.n_r, "gap_MHz": to_mhz(c.gap),
            "resolved": c.resolved})
    for state in config["numerics"]["initial_states"]:
        track = fl.diabatic_track(branches, crossings, int(state))
        for n_c in track.critical_photon_numbers:
            critical_rows.append({"group": n_g, "n_g": n_g,
                                  "initial_state": int(state), "n_r": n_c})
    return {"points": point_rows, "crossings": crossing_rows,
            "critical": critical_rows}


def cmd_floquet_map(config: dict) -> int:
    device = _device(config)
    omega_d = _omega_d(config, device)
    out_dir, meta = _prepare_output(config, "floquet-map")
    ng_grid = _grid(config["grids"]["n_g"], "grids.n_g")
    sweep = runner.GroupedSweep(
        out_dir,
        files={
            "points": ("floquet_points.csv",
                       ["group", "n_g", "eps_t_MHz", "n_r", "branch",
                        "quasienergy_GHz", "population"]),
            "crossings": ("floquet_crossings.csv",
                          ["group", "n_g", "branch_i", "branch_j", "n_r",
                           "gap_MHz", "resolved"]),
            "critical": ("critical_photons.csv",
                         ["group", "n_g", "initial_state", "n_r"]),
        },
        metadata=meta)
    worker = _FloquetWorker(device, omega_d, config)
    n = sweep.run([float(ng) for ng in ng_grid], worker, config["workers"])
    print(f"computed {n} gate-charge groups in {out_dir}")
    return 0


class _FloquetWorker:
    def __init__(self, device, omega_d, config):
        self.device, self.omega_d, self.config = device, omega_d, config

    def __call__(self, n_g):
        return _floquet_group((self.device, self.omega_d, n_g, self.config))


class _DynamicsWorker:
    def __init__(self, device, omega_d, config):
        self.device, self.omega_d, self.config = device, omega_d, config

    def __call__(self, n_g):
        config = self.config
        device, omega_d = self.device, self.omega_d
        branches, crossings = _branch_assets(device, omega_d, n_g, config)
        num = config["numerics"]
        eps_d_grid = _grid(config["grids"]["eps_d_MHz"], "grids.eps_d_MHz")
        rows = []
        circuit = branches.circuit
        for state in num["initial_states"]:
            track = fl.diabatic_track(branches, crossings, int(state))
            curve = fl.dispersion_curve(branches, int(state), track)
            for eps_d_mhz in eps_d_grid:
                protocol = dyn.DriveProtocol(
                    eps_d=mhz(float(eps_d_mhz)), omega_d=omega_d,
                    t_up=float(config["drive"]["t_up_ns"]),
                    t_final=float(config["drive"]["t_final_ns"]),
                    initial_state=int(state))
                trajectory = dyn.resonator_trajectory(protocol, curve,
                                                      circuit.kappa)
                record = dyn.readout_transition_probability(
                    circuit, protocol, bool(num["collapse"]), branches,
                    trajectory=trajectory)
                rows.append({"group": n_g, "n_g": n_g,
                             "eps_d_MHz": float(eps_d_mhz),
                             "n_r_max": record.n_r_max,
                             "initial_state": int(state),
                             "survival": record.survival})
        return {"map": rows}


def cmd_dynamics_map(config: dict) -> int:
    device = _device(config)
    omega_d = _omega_d(config, device)
    out_dir, meta = _prepare_output(config, "dynamics-map")
    ng_grid = _grid(config["grids"]["n_g"], "grids.n_g")
    sweep = runner.GroupedSweep(
        out_dir,
        files={"map": ("transition_map.csv",
                       ["group", "n_g", "eps_d_MHz", "n_r_max",
                        "initial_state", "survival"])},
        metadata=meta)
    worker = _DynamicsWorker(device, omega_d, config)
    n = sweep.run([float(ng) for ng in ng_grid], worker, config["workers"])
    print(f"computed {n} gate-charge groups in {out_dir}")
    return 0


def cmd_calibrate(config: dict) -> int:
    device = _device(config)
    omega_d = _omega_d(config, device)
    out_dir, meta = _prepare_output(config, "calibrate")
    n_g = float(np.atleast_1d(_grid(config["grids"]["n_g"], "grids.n_g"))[0])
    branches, crossings = _branch_assets(device, omega_d, n_g, config)
    chi = (fl.dispersion_curve(branches, 1, fl.diabatic_track(branches, crossings, 1))(0.0)
           - fl.dispersion_curve(branches, 0, fl.diabatic_track(branches, crossings, 0))(0.0))
    curves = {state: fl.dispersion_curve(branches, state,
                                         fl.diabatic_track(branches, crossings,
                                                           state))
              for state in config["numerics"]["initial_states"]}
    pulse = dyn.DriveProtocol(eps_d=mhz(1.0), omega_d=omega_d,
                              t_up=float(config["drive"]["t_up_ns"]),
                              t_final=float(config["drive"]["t_final_ns"]))
    eps_grid_mhz = _grid(config["grids"]["eps_d_MHz"], "grids.eps_d_MHz")
    cal = dyn.calibrate_photon_axis(chi, device.kappa, omega_d, curves, pulse,
                                    [mhz(float(x)) for x in eps_grid_mhz])
    path = os.path.join(out_dir, "calibration.csv")
    states = sorted(cal.n_max)
    columns = ["eps_d_MHz"] + [f"n_r_max_state{s}" for s in states]
    with open(path, "w") as fh:
        for line in runner.metadata_lines({**meta, "chi_MHz": to_mhz(chi),
                                           "n_g": n_g}):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for k, eps_mhz in enumerate(eps_grid_mhz):
            vals = [float(cal.n_max[s][k]) for s in states]
            fh.write(",".join([repr(float(eps_mhz))] + [repr(v) for v in vals])
                     + "\n")
    print(f"wrote {path} (chi/2pi = {to_mhz(chi):.4f} MHz)")
    return 0


def cmd_oracle(config: dict) -> int:
    device = _device(config)
    omega_d = _omega_d(config, device)
    out_dir, meta = _prepare_output(config, "oracle")
    num = config["numerics"]
    n_g = float(np.atleast_1d(_grid(config["grids"]["n_g"], "grids.n_g"))[0])
    eps_d_mhz = float(np.atleast_1d(_grid(config["grids"]["eps_d_MHz"],
                                          "grids.eps_d_MHz"))[0])
    state = int(num["initial_states"][0])
    circuit = cm.CircuitParams(transmon=device.transmon.at_gate_charge(n_g),
                               omega_r=device.omega_r, g=device.g,
                               kappa=device.kappa)
    protocol = dyn.DriveProtocol(eps_d=mhz(eps_d_mhz), omega_d=omega_d,
                                 t_up=float(config["drive"]["t_up_ns"]),
                                 t_final=float(config["drive"]["t_final_ns"]),
                                 initial_state=state)
    branches, crossings = _branch_assets(device, omega_d, n_g, config)
    track = fl.diabatic_track(branches, crossings, state)
    curve = fl.dispersion_curve(branches, state, track)
    trajectory = dyn.resonator_trajectory(protocol, curve, circuit.kappa)
    projector = qt.build_branch_projector(
        circuit, branches, track, trajectory,
        n_transmon=int(num["n_transmon"]), n_photon=int(num["n_photon"]))
    ensemble = qt.evolve_trajectories(
        circuit, protocol, n_traj=int(num["n_traj"]),
        n_transmon=int(num["n_transmon"]), n_photon=int(num["n_photon"]),
        seed=int(config["seed"]),
        sample_every_periods=int(num["sample_every_periods"]),
        projector=projector, expected_n_max=trajectory.n_r_max)
    times, mean, err = qt.branch_survival(ensemble)
    path = os.path.join(out_dir, "oracle_survival.csv")
    with open(path, "w") as fh:
        for line in runner.metadata_lines(
                {**meta, "n_transmon": ensemble.n_transmon,
                 "n_photon": ensemble.n_photon,
                 "total_jumps": int(ensemble.jump_counts.sum()),
                 "mean_jumps": float(ensemble.jump_counts.mean())}):
            fh.write(line + "\n")
        fh.write("time_ns,survival,mc_error\n")
        for t, m, e in zip(times, mean, err):
            fh.write(f"{repr(float(t))},{repr(float(m))},{repr(float(e))}\n")
    print(f"wrote {path}")
    return 0


def cmd_presets(config: dict) -> int:
    for name in pr.PRESET_NAMES:
        device = pr.preset(name)
        t = device.transmon
        e_j = ", ".join(f"{to_ghz(x):.4f}" for x in t.e_j)
        print(f"{name}: E_C/2pi = {to_mhz(t.e_c):.1f} MHz, "
              f"E_J/2pi = [{e_j}] GHz, omega_r/2pi = "
              f"{to_ghz(device.omega_r):.5f} GHz, g/2pi = "
              f"{to_mhz(device.g):.1f} MHz, kappa/2pi = "
              f"{to_mhz(device.kappa):.2f} MHz, omega_d/2pi = "
              f"{pr.DRIVE_GHZ[name]} GHz")
    return 0


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "fit": cmd_fit,
    "resonance-map": cmd_resonance_map,
    "floquet-map": cmd_floquet_map,
    "dynamics-map": cmd_dynamics_map,
    "calibrate": cmd_calibrate,
    "oracle": cmd_oracle,
    "presets": cmd_presets,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mistsim",
        description="Measurement-induced transition simulator for driven "
                    "transmons")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: all cores)")
        p.add_argument("--preset", help="device preset name")
        p.add_argument("--override", action="append", metavar="KEY=VALUE",
                       help="override a config field (dotted path)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        config["workers"] = args.workers or runner.default_workers()
        return _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
