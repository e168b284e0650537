"""Command-line entry point: ``roughfat {gen-surface,run,sweep,analyze}``.

Exit codes: 0 success, 1 configuration/input error, 2 I/O error,
3 margin of error not converged, 4 solver or ensemble error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCHEMA_VERSION, ConfigError, RunConfig, load_config
from .montecarlo import EnsembleConfig, EnsembleError, EnsembleResult, run_ensemble, sample_seed
from .pffatigue.material import ENDURANCE_CYCLES
from .pipeline import (BasquinFit, FitError, SNPoint, SweepSettings, basquin_fit,
                       extrapolate_endurance, planned_cases, read_map_csv, surface_factor,
                       sweep_surface_factor, write_map_csv)
from .roughsurf import (RNG_ALGORITHM, Criterion, build_autocorr_matrix, cholesky_factor,
                        compute_acf, compute_ra, compute_rq, export_profile,
                        extract_correlation_length, sample_profile)

logger = logging.getLogger("roughfat")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_UNCONVERGED, EXIT_SOLVER = 0, 1, 2, 3, 4
NEGLIGIBLE_RA_UM = 0.2


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _out_dir(args, cfg: RunConfig | None) -> Path:
    out = Path(args.out) if args.out else Path(cfg.get("output", "dir") if cfg else "roughfat_out")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create output directory {out}: {exc}") from exc
    return out


def _load(args, require=("roughness",)) -> RunConfig:
    try:
        return load_config(args.config, require)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config {args.config}: {exc}") from exc
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from exc


def write_manifest(path: Path, command: str, cfg: RunConfig | None, extra: dict | None = None):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "software": {"name": "roughfat", "version": __version__},
        "platform": {"python": platform.python_version(), "numpy": np.__version__},
        "rng": RNG_ALGORITHM,
        "command": command,
    }
    if cfg is not None:
        doc["config"] = cfg.echo()
        doc["resolved_config_ini"] = cfg.resolved_ini()
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)


def _plots_enabled(cfg: RunConfig | None, args) -> bool:
    if getattr(args, "no_plots", False):
        return False
    return True if cfg is None else bool(cfg.get("output", "plots"))


# gen-surface -----------------------------------------------------------------
def cmd_gen_surface(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    try:
        spec0 = cfg.roughness_spec()
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from exc
    count = args.count if args.count is not None else cfg.get("roughness", "count")
    if count < 1:
        raise CliError(EXIT_CONFIG, "count must be >= 1")
    base_seed = cfg.get("ensemble", "base_seed")
    x0 = spec0.abscissae()
    factor = None
    if spec0.target_rq > 0:
        factor, _ = cholesky_factor(build_autocorr_matrix(x0, spec0.corr_length))
    prof_dir = out / "profiles"
    rows = []
    first = None
    try:
        prof_dir.mkdir(exist_ok=True)
        for k in range(count):
            seed = sample_seed(base_seed, k)
            spec = type(spec0)(spec0.target_rq, spec0.corr_length, spec0.n_points,
                               spec0.window_dx, seed)
            prof = sample_profile(spec, x0, factor)
            export_profile(prof, prof_dir / f"profile_{k:04d}.csv", comment=f"seed {seed}")
            lcs = []
            acf = None
            if spec.target_rq > 0:
                acf = compute_acf(prof, spec.window_dx)
                for crit in Criterion:
                    try:
                        lcs.append(extract_correlation_length(acf, crit))
                    except ValueError:
                        lcs.append(math.nan)
            else:
                lcs = [math.nan] * 3
            if first is None:
                first = (prof, acf)
            rows.append([k, seed, compute_ra(prof), compute_rq(prof), *lcs])
        with open(out / "surface_metrics.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["profile", "seed", "ra_um", "rq_um", "lcor_ten_percent_um",
                        "lcor_one_over_e_um", "lcor_point_two_um"])
            for r in rows:
                w.writerow([r[0], r[1]] + [f"{v:.8g}" for v in r[2:]])
        if _plots_enabled(cfg, args) and first[1] is not None:
            from .plotting import plot_profile_acf
            plot_profile_acf(first[0], first[1], out / "profile_acf.png", spec0.corr_length)
        rq = np.array([r[3] for r in rows])
        summary = {"count": count, "mean_ra_um": float(np.mean([r[2] for r in rows])),
                   "mean_rq_um": float(rq.mean()), "target_rq_um": spec0.target_rq}
        write_manifest(out / "manifest.json", "gen-surface", cfg,
                       {"summary": summary, "base_seed": base_seed})
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc}") from exc
    print(json.dumps(summary))
    return EXIT_OK


# run -------------------------------------------------------------------------
def ensemble_config_from(cfg: RunConfig) -> EnsembleConfig:
    e = cfg.values["ensemble"]
    h, hi = cfg.mesh_sizes_mm()
    try:
        return EnsembleConfig(cfg.roughness_spec(), cfg.material(), cfg.load(), cfg.geometry(),
                              e["min_samples"], e["me_limit_percent"], e["max_samples"],
                              e["base_seed"], h, hi, cfg.get("load", "jump_tol"), e["strict_me"])
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_run(args) -> int:
    cfg = _load(args)
    try:
        ecfg = ensemble_config_from(cfg)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from exc
    out = _out_dir(args, cfg)

    def progress(rec):
        logger.info("sample %d: %s %s (%.1f s)", rec.index, rec.status, rec.nf, rec.wall_time)

    try:
        res = run_ensemble(ecfg, workers=args.workers, progress=progress)
    except EnsembleError as exc:
        try:
            with open(out / "errors.log", "w") as fh:
                for r in exc.records:
                    if r.error:
                        fh.write(f"sample {r.index} seed {r.seed}: {r.error}\n")
        except OSError:
            pass
        print(f"ensemble error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        res.to_csv(out / "results.csv")
        res.to_json(out / "results.json", ecfg)
        write_manifest(out / "manifest.json", "run", cfg,
                       {"sample_seeds": res.sample_seeds, "flag": res.flag})
        if _plots_enabled(cfg, args) and len(res.uncensored()) >= 2:
            from .plotting import plot_me_evolution
            plot_me_evolution(res.uncensored(), out / "me_evolution.png", ecfg.me_limit)
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc}") from exc
    print(json.dumps({"mean_nf": res.mean_nf, "me_percent": res.me_percent,
                      "samples": res.n_samples, "censored": res.n_censored, "flag": res.flag}))
    return EXIT_OK if res.converged else EXIT_UNCONVERGED


# sweep -----------------------------------------------------------------------
def cmd_sweep(args) -> int:
    cfg = _load(args, require=("roughness", "sweep"))
    sw = cfg.values["sweep"]
    try:
        mat = cfg.material()
        geom = cfg.geometry()
        load = cfg.load() if cfg.get("load", "sigma_a_mpa") is not None else None
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from exc
    sc_list = sw["sigma_c_mpa_list"] or [mat.sigma_c]
    cases = planned_cases(sw["ra_um_list"], sw["lcor_um_list"], sc_list)
    small = sorted({ra for ra in sw["ra_um_list"] if 0 < ra < NEGLIGIBLE_RA_UM})
    if small:
        logger.warning("Ra values %s um are below %.1f um, where roughness is conventionally "
                       "treated as negligible; running them anyway", small, NEGLIGIBLE_RA_UM)
    if args.dry_run:
        print(f"{len(cases)} planned case(s)")
        for sc, ra, lc in cases:
            print(f"ra_um={ra:g} lcor_um={lc:g} sigma_c_mpa={sc:g}")
        return EXIT_OK
    out = _out_dir(args, cfg)
    e = cfg.values["ensemble"]
    h, hi = cfg.mesh_sizes_mm()
    settings = SweepSettings(
        geom, mat, e["min_samples"], e["max_samples"], e["me_limit_percent"], e["base_seed"],
        sw["ref_nf"], load.cycle_cap if load else cfg.get("load", "cycle_cap"),
        cfg.get("load", "jump_tol"), h, hi,
        workers=args.workers)

    def progress(rec):
        logger.info("case Ra=%g lcor=%g sigma_c=%g: Ks=%.4f (%s)", rec.ra, rec.corr_length,
                    rec.sigma_c, rec.ks, rec.status)

    try:
        recs = sweep_surface_factor(sw["ra_um_list"], sw["lcor_um_list"], sc_list, settings,
                                    out / "sweep_store.jsonl", resume=args.resume,
                                    progress=progress)
        write_map_csv(recs, out / "ks_map.csv")
        write_manifest(out / "manifest.json", "sweep", cfg, {"cases": len(recs)})
        if _plots_enabled(cfg, args):
            from .plotting import plot_ks_map
            for sc in sc_list:
                sub = [r for r in recs if math.isclose(r.sigma_c, sc) and math.isfinite(r.ks)]
                if sub:
                    plot_ks_map(sub, out / f"ks_map_{sc:g}.png", sc)
    except OSError as exc:
        raise CliError(EXIT_IO, f"sweep I/O failed: {exc}") from exc
    if any(r.status == "ERROR" for r in recs):
        return EXIT_SOLVER
    if any(not r.me_converged for r in recs):
        return EXIT_UNCONVERGED
    return EXIT_OK


# analyze ---------------------------------------------------------------------
def _geometry_signature(conf: dict) -> str:
    g = conf.get("geometry", {})
    return json.dumps({"outline": g.get("outline_mm"), "tags": g.get("tags"),
                       "plane": g.get("plane")}, sort_keys=True)


def analyze_results(paths) -> dict:
    """Group ensemble result files by roughness and reduce them."""
    groups: dict = {}
    sigs = set()
    maps = []
    for p in paths:
        p = Path(p)
        if p.suffix == ".csv":
            maps.extend(read_map_csv(p))
            continue
        with open(p) as fh:
            doc = json.load(fh)
        conf = doc.get("config")
        if conf is None:
            raise ConfigError(f"{p} carries no config echo")
        sigs.add(_geometry_signature(conf))
        res = EnsembleResult.from_json(p)
        rough = conf["roughness"]
        label = ("polished" if rough["target_rq_um"] == 0 else
                 f"rq={rough['target_rq_um']:g}um lcor={rough['corr_length_um']:g}um")
        sigma = conf["load"]["sigma_a"]
        lives = res.uncensored()
        if lives:
            pt = SNPoint(sigma, float(np.mean(lives)), res.me_percent, False)
        else:
            pt = SNPoint(sigma, float(conf["load"]["cycle_cap"]), None, True)
        groups.setdefault(label, []).append(pt)
    if len(sigs) > 1:
        raise ConfigError("results come from different specimen geometries")
    report: dict = {"groups": {}, "fits": {}, "endurance_mpa": {}, "ks": {}}
    fits = {}
    for label, pts in groups.items():
        report["groups"][label] = [vars(p) for p in pts]
        try:
            fits[label] = basquin_fit(pts)
        except FitError:
            continue
        report["fits"][label] = {"a": fits[label].a, "b": fits[label].b}
        report["endurance_mpa"][label] = float(fits[label].stress(ENDURANCE_CYCLES))
    if not fits and groups:
        raise FitError("no group spans two stress levels with distinct lives: cannot fit")
    pol = fits.get("polished")
    if pol is not None:
        se_p = report["endurance_mpa"]["polished"]
        for label, pts in groups.items():
            if label == "polished":
                continue
            if label in fits:
                se_r = report["endurance_mpa"][label]
            else:  # parallel-curve shortcut with the polished slope
                ok = [p for p in pts if not p.censored]
                if not ok:
                    continue
                se_r = extrapolate_endurance(ok[0].stress_amplitude, ok[0].mean_nf, pol.b)
                report["endurance_mpa"][label] = se_r
            report["ks"][label] = surface_factor(se_r, se_p)
    if maps:
        report["map"] = [{"ra_um": r.ra, "lcor_um": r.corr_length, "sigma_c_mpa": r.sigma_c,
                          "ks": r.ks, "me_percent": r.me_percent} for r in maps]
    report["_groups"] = groups
    report["_fits"] = fits
    report["_maps"] = maps
    return report


def cmd_analyze(args) -> int:
    try:
        report = analyze_results(args.paths)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read results: {exc}") from exc
    except (ConfigError, FitError, KeyError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, f"analysis refused: {exc}") from exc
    out = _out_dir(args, None)
    groups, fits, maps = report.pop("_groups"), report.pop("_fits"), report.pop("_maps")
    try:
        with open(out / "sn_points.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["group", "stress_mpa", "mean_nf", "me_percent", "censored"])
            for label, pts in groups.items():
                for p in sorted(pts, key=lambda q: q.stress_amplitude):
                    w.writerow([label, f"{p.stress_amplitude:.6g}", f"{p.mean_nf:.6g}",
                                "" if p.me_percent is None else f"{p.me_percent:.6g}",
                                int(p.censored)])
        with open(out / "analysis.json", "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
        if not args.no_plots:
            from .plotting import plot_ks_map, plot_sn
            if groups:
                plot_sn(groups, out / "sn_curve.png", fits)
            if maps:
                for sc in sorted({r.sigma_c for r in maps}):
                    plot_ks_map(maps, out / f"ks_map_{sc:g}.png", sc)
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc}") from exc
    print(json.dumps({k: report[k] for k in ("fits", "endurance_mpa", "ks")}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roughfat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"roughfat {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, workers=False):
        sp.add_argument("--config", required=True, help="INI configuration file")
        sp.add_argument("--out", help="output directory (overrides [output] dir)")
        sp.add_argument("--no-plots", action="store_true", help="skip figure rendering")
        if workers:
            sp.add_argument("--workers", type=int, default=1, help="parallel sample workers")

    g = sub.add_parser("gen-surface", help="sample rough profiles and their metrics")
    common(g)
    g.add_argument("--count", type=int, help="number of profiles (overrides [roughness] count)")
    g.set_defaults(func=cmd_gen_surface)

    r = sub.add_parser("run", help="Monte-Carlo fatigue ensemble at one stress amplitude")
    common(r, workers=True)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="surface-factor map over an (Ra, lcor, sigma_c) grid")
    common(s, workers=True)
    s.add_argument("--resume", action="store_true", help="reuse finished cases in the store")
    s.add_argument("--dry-run", action="store_true", help="list planned cases and exit")
    s.set_defaults(func=cmd_sweep)

    a = sub.add_parser("analyze", help="S-N fits, endurance limits and Ks from result files")
    a.add_argument("paths", nargs="+", help="results.json files and/or ks_map.csv files")
    a.add_argument("--out", default="roughfat_analysis")
    a.add_argument("--no-plots", action="store_true")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
