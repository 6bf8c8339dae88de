"""Command-line front end.

Every subcommand reads an optional flat config file (--config flag or
NVSIM_CONFIG environment variable), writes one or more CSVs plus a run
manifest into the configured output directory, and prints a short
summary. Exit codes: 0 success, 1 usage/configuration error, 2
numerical failure.
"""

import argparse
import os
import sys

import numpy as np

from .config import (Config, ConfigError, RunManifest, format_number,
                     load_config, sha256_file, write_csv)
from .fitting import FitError, FitModel, ObservedDefect, fit
from .linalg import EigenError
from .model import GPA_TO_GHZ, StrainVector, zero_strain_levels
from .motional import (BranchError, ExchangeModel, branch_esr_frequencies,
                       esr_contrast_vs_temperature, exchange_lineshape)
from .photodynamics import (RateModelError, excitation_spectrum,
                            rabi_trace, transition_lines)
from .sweep import SweepError, averaged_splitting, detect_crossings, sweep

USAGE_EXIT = 1
NUMERICAL_EXIT = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that raises instead of calling sys.exit."""

    def error(self, message):
        raise UsageError(message)


def _build_parser():
    p = _Parser(prog="nvsim", description=__doc__)
    p.add_argument("--config", default=None,
                   help="flat key=value config file "
                        "(default: $NVSIM_CONFIG if set)")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("levels", help="zero-strain fine-structure table")

    sp = sub.add_parser("sweep", help="energies vs transverse strain")
    sp.add_argument("--gap-threshold", type=float, default=0.5,
                    help="report gap minima below this (GHz)")

    sp = sub.add_parser("lines", help="optical transition table")
    _strain_flags(sp)

    sp = sub.add_parser("excitation", help="PL excitation spectrum")
    _strain_flags(sp)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--mw-on", dest="mw", action="store_true", default=True)
    g.add_argument("--mw-off", dest="mw", action="store_false")
    sp.add_argument("--detuning-min", type=float, default=-10.0)
    sp.add_argument("--detuning-max", type=float, default=10.0)
    sp.add_argument("--detuning-points", type=int, default=801)

    sp = sub.add_parser("rabi", help="MW nutation trace")
    _strain_flags(sp)
    sp.add_argument("--readout", choices=("sz", "sxy"), default="sz",
                    help="optical readout line family")
    sp.add_argument("--omega-mw", type=float, default=2.0 * np.pi / 200.0,
                    help="Rabi angular frequency (rad/ns)")
    sp.add_argument("--tau-max", type=float, default=400.0)
    sp.add_argument("--tau-points", type=int, default=81)

    sp = sub.add_parser("odmr", help="motional-exchange ESR lineshape")
    _strain_flags(sp, default=20.0)
    sp.add_argument("--temperature", type=float, default=300.0)
    sp.add_argument("--temperature-scan", action="store_true",
                    help="emit contrast vs temperature instead")
    sp.add_argument("--temp-min", type=float, default=6.0)
    sp.add_argument("--temp-max", type=float, default=300.0)
    sp.add_argument("--temp-points", type=int, default=60)
    sp.add_argument("--freq-min", type=float, default=0.4)
    sp.add_argument("--freq-max", type=float, default=2.6)
    sp.add_argument("--freq-points", type=int, default=441)

    sp = sub.add_parser("avg", help="orbit-averaged spin splitting")
    sp.add_argument("--max-strain", type=float, default=30.0)
    sp.add_argument("--points", type=int, default=301)

    sp = sub.add_parser("fit", help="fit parameters from a line CSV")
    sp.add_argument("input", help="CSV with defect_id,line_ghz columns")
    sp.add_argument("--free-lambda-perp", action="store_true")
    return p


def _strain_flags(sp, default=3.0):
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--strain", type=float, default=None,
                   help=f"transverse strain, GHz (default {default})")
    g.add_argument("--gpa", type=float, default=None,
                   help="transverse stress, GPa (converted at "
                        f"{GPA_TO_GHZ:g} GHz/GPa)")
    sp.set_defaults(default_strain=default)


def _resolve_strain(args):
    if args.gpa is not None:
        return args.gpa * GPA_TO_GHZ
    if args.strain is not None:
        return args.strain
    return args.default_strain


def _out(cfg, name):
    d = cfg["output_dir"]
    os.makedirs(d, exist_ok=True)
    return os.path.join(d, name)


def _finish(cfg, command, outputs, inputs=None):
    man = RunManifest(command=command, config=cfg,
                      inputs={p: sha256_file(p) for p in (inputs or [])},
                      outputs=[os.path.basename(p) for p in outputs])
    path = _out(cfg, "manifest.txt")
    man.write(path)
    for p in list(outputs) + [path]:
        print(f"wrote {p}")


def _cmd_levels(cfg, args, command):
    levels = zero_strain_levels(cfg.fine_structure())
    path = _out(cfg, "levels.csv")
    write_csv(path, ["label", "energy_ghz"],
              [(lab, e) for e, lab in levels])
    by_label = {lab: e for e, lab in levels}
    print("zero-strain levels (GHz):")
    for e, lab in levels:
        print(f"  {lab:4s} {format_number(e)}")
    print(f"A2 - A1 = {format_number(by_label['A2'] - by_label['A1'])} GHz")
    _finish(cfg, command, [path])


def _cmd_sweep(cfg, args, command):
    sr = sweep(cfg.fine_structure(), cfg.strain_grid())
    path = _out(cfg, "sweep.csv")
    write_csv(path, ["delta_perp_ghz"] + [f"track{k+1}_ghz"
                                          for k in range(6)],
              [(sr.grid[i], *sr.energies[i]) for i in range(sr.grid.size)])
    events = detect_crossings(sr, args.gap_threshold)
    cpath = _out(cfg, "crossings.csv")
    write_csv(cpath, ["delta_perp_ghz", "track_a", "track_b",
                      "min_gap_ghz", "avoided"],
              [(e.strain_at_min_gap, e.track_a + 1, e.track_b + 1,
                e.min_gap, int(e.avoided)) for e in events])
    print(f"swept {sr.grid.size} points, "
          f"{sum(e.avoided for e in events)} avoided crossings")
    _finish(cfg, command, [path, cpath])


def _cmd_lines(cfg, args, command):
    strain = StrainVector(_resolve_strain(args), 0.0)
    lines = transition_lines(cfg.fine_structure(), strain)
    path = _out(cfg, "lines.csv")
    write_csv(path, ["ground", "excited_index", "detuning_ghz",
                     "strength", "spin_conserving", "weak"],
              [(ln.ground_sublevel, ln.excited_index, ln.detuning,
                ln.strength, int(ln.spin_conserving), int(ln.weak))
               for ln in lines])
    strong = sum(1 for ln in lines if not ln.weak)
    print(f"{len(lines)} lines at delta_perp = "
          f"{format_number(strain.delta_perp)} GHz ({strong} strong)")
    _finish(cfg, command, [path])


def _cmd_excitation(cfg, args, command):
    if args.detuning_points < 2:
        raise UsageError("--detuning-points must be >= 2")
    strain = StrainVector(_resolve_strain(args), 0.0)
    grid = np.linspace(args.detuning_min, args.detuning_max,
                       args.detuning_points)
    spec = excitation_spectrum(cfg.fine_structure(), strain, cfg.rates(),
                               grid, mw_on=args.mw)
    path = _out(cfg, "excitation.csv")
    write_csv(path, ["detuning_ghz", "pl_rate"], [tuple(r) for r in spec])
    print(f"spectrum over [{args.detuning_min}, {args.detuning_max}] GHz, "
          f"MW {'on' if args.mw else 'off'}")
    _finish(cfg, command, [path])


def _pick_readout_line(lines, family):
    want = {"sz": ("gSz",), "sxy": ("gSx", "gSy")}[family]
    pool = [ln for ln in lines
            if ln.ground_sublevel in want and ln.spin_conserving]
    if not pool:
        raise RateModelError(f"no spin-conserving {family} readout line")
    return max(pool, key=lambda ln: ln.strength)


def _cmd_rabi(cfg, args, command):
    strain = StrainVector(_resolve_strain(args), 0.0)
    params, rp = cfg.fine_structure(), cfg.rates()
    line = _pick_readout_line(transition_lines(params, strain),
                              args.readout)
    taus = np.linspace(0.0, args.tau_max, args.tau_points)
    rows = rabi_trace(params, strain, rp, args.omega_mw, line, taus)
    path = _out(cfg, "rabi.csv")
    write_csv(path, ["tau_ns", "counts"], rows)
    print(f"rabi trace via {args.readout} line "
          f"(excited level {line.excited_index})")
    _finish(cfg, command, [path])


def _cmd_odmr(cfg, args, command):
    params = cfg.fine_structure()
    dperp = _resolve_strain(args)
    tmap = cfg.temperature_map()
    if args.temperature_scan:
        temps = np.linspace(args.temp_min, args.temp_max, args.temp_points)
        rows = esr_contrast_vs_temperature(
            tmap, params, dperp, temps, linewidth_0=cfg["linewidth"] * 5)
        path = _out(cfg, "odmr_contrast.csv")
        write_csv(path, ["temperature_k", "contrast"], rows)
        print(f"contrast scan {args.temp_min}-{args.temp_max} K")
        _finish(cfg, command, [path])
        return
    fa, fb, _, _ = branch_esr_frequencies(params, dperp)
    model = ExchangeModel(freq_a=fa, freq_b=fb,
                          linewidth_0=cfg["linewidth"] * 5,
                          hop_rate=float(tmap.hop_rate(args.temperature)))
    grid = np.linspace(args.freq_min, args.freq_max, args.freq_points)
    shape = exchange_lineshape(model, grid)
    path = _out(cfg, "odmr.csv")
    write_csv(path, ["freq_ghz", "intensity"], list(zip(grid, shape)))
    print(f"lineshape at T = {args.temperature} K "
          f"(hop rate {format_number(model.hop_rate)} GHz)")
    _finish(cfg, command, [path])


def _cmd_avg(cfg, args, command):
    if args.points < 2:
        raise UsageError("--points must be >= 2")
    params = cfg.fine_structure()
    grid = np.linspace(0.0, args.max_strain, args.points)
    rows = [(d, averaged_splitting(params, d)) for d in grid]
    path = _out(cfg, "avg.csv")
    write_csv(path, ["delta_perp_ghz", "avg_split_ghz"], rows)
    vals = [r[1] for r in rows]
    print(f"averaged splitting in [{format_number(min(vals))}, "
          f"{format_number(max(vals))}] GHz")
    _finish(cfg, command, [path])


def _read_defects(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read().splitlines()
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err}") from err
    if not raw or [c.strip() for c in raw[0].split(",")] != \
            ["defect_id", "line_ghz"]:
        raise UsageError(f"{path}: line 1: expected header "
                         "'defect_id,line_ghz'")
    grouped = {}
    for lineno, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        parts = [c.strip() for c in line.split(",")]
        if len(parts) != 2:
            raise UsageError(f"{path}: line {lineno}: expected 2 fields")
        try:
            value = float(parts[1])
        except ValueError as err:
            raise UsageError(f"{path}: line {lineno}: bad line_ghz "
                             f"{parts[1]!r}") from err
        grouped.setdefault(parts[0], []).append(value)
    if not grouped:
        raise UsageError(f"{path}: no data rows")
    try:
        return [ObservedDefect(id=k, lines=tuple(sorted(v)))
                for k, v in grouped.items()]
    except ValueError as err:
        raise UsageError(f"{path}: {err}") from err


def _cmd_fit(cfg, args, command):
    data = _read_defects(args.input)
    init = FitModel(params=cfg.fine_structure(),
                    fit_lambda_perp=args.free_lambda_perp)
    result = fit(data, init=init)
    p = result.params
    report = [
        f"defects = {len(data)}",
        f"lambda_z_ghz = {format_number(p.lambda_z)}",
        f"d_es_ghz = {format_number(p.d_es)}",
        f"delta_cap_ghz = {format_number(p.delta_cap)}",
        f"lambda_perp_ghz = {format_number(p.lambda_perp)}",
        f"residual_rms_ghz = {format_number(result.residual_rms)}",
        f"iterations = {result.iterations}",
        f"converged = {result.converged}",
    ]
    rpath = _out(cfg, "fit_report.txt")
    with open(rpath, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(report) + "\n")
    spath = _out(cfg, "fit_strains.csv")
    write_csv(spath, ["defect_id", "delta_perp_ghz", "offset_ghz"],
              [(d.id, result.strains[d.id], result.offsets[d.id])
               for d in data])
    print("\n".join(report))
    if not result.converged:
        raise FitError("optimizer did not converge; result flagged")
    _finish(cfg, command, [rpath, spath], inputs=[args.input])


_COMMANDS = {
    "levels": _cmd_levels,
    "sweep": _cmd_sweep,
    "lines": _cmd_lines,
    "excitation": _cmd_excitation,
    "rabi": _cmd_rabi,
    "odmr": _cmd_odmr,
    "avg": _cmd_avg,
    "fit": _cmd_fit,
}


def run(argv):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg_path = args.config or os.environ.get("NVSIM_CONFIG")
        cfg = load_config(cfg_path) if cfg_path else Config()
        _COMMANDS[args.command](cfg, args, " ".join(["nvsim"] + list(argv)))
        return 0
    except (UsageError, ConfigError, ValueError) as err:
        print(f"nvsim: error: {err}", file=sys.stderr)
        return USAGE_EXIT
    except (EigenError, SweepError, RateModelError, BranchError,
            FitError, ArithmeticError) as err:
        print(f"nvsim: numerical failure: {err}", file=sys.stderr)
        return NUMERICAL_EXIT


def main():
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
