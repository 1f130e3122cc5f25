"""Command-line experiment runner.

``geocurve simulate|fit-predict|select|report --config FILE [--set k=v]... [--seed N] [--out DIR]``

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(antipodal point or degenerate covariance), 3 failed acceptance check in
report mode.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import io
from . import plots
from . import regression as reg
from . import selection as sel
from . import simulation as sim
from .curve import integrated_sq_geodesic_distance, lipschitz_estimate, sup_geodesic_distance
from .errors import AntipodalPointError, ConfigError, DegenerateCovarianceError, GeocurveError

log = logging.getLogger("geocurve")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3
WEIGHT_IDENTITY_TOL = 1e-8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# simulate


def generate(cfg):
    """Sample ``(Y, X)`` and manifest for the configured generator."""
    s = cfg["simulation"]
    gen = s["generator"]
    if gen == "bivariate":
        bc = cfgmod.bivariate_config(cfg)
        Y, X = sim.generate_bivariate_sample(bc)
        arima_seed, sde_seed = sim.seed_children(bc.seed)
        seeds = {"master": bc.seed, "arima": arima_seed, "sde": sde_seed}
    elif gen == "cap":
        c = s["cap"]
        X = sim.cap_sample(s["n"], s["n_nodes"], c["radius"], s["seed"], c["rho"], c["n_modes"], c["decay"])
        Y = list(X)
        seeds = {"master": s["seed"]}
    else:
        Y, X = sim.planted_lag_sample(cfgmod.planted_config(cfg))
        seeds = {"master": s["seed"]}
    theta_y, _ = sim.spherical_angles(np.stack([y.points for y in Y]))
    theta_x, _ = sim.spherical_angles(np.stack([x.points for x in X]))
    manifest = {
        "generator": gen,
        "simulation": s,
        "seeds": seeds,
        "statistics": {"mean_polar_angle_Y": float(theta_y.mean()),
                       "mean_polar_angle_X": float(theta_x.mean())},
    }
    return Y, X, manifest


def cmd_simulate(cfg):
    out = Path(cfg["io"]["out"])
    Y, X, manifest = generate(cfg)
    io.save_sample(out, Y, X, manifest)
    if cfg["io"]["plots"]:
        idx = list(range(0, len(Y), max(1, len(Y) // 10)))[:10]
        svg = plots.sphere_plot({"response": [Y[i].points for i in idx],
                                 "regressor": [X[i].points for i in idx]},
                                title="Sample curves (orthographic view)")
        (out / "sphere.svg").write_text(svg)
    log.info("wrote %d curve pairs to %s", len(Y), out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit-predict


def choose_m(cfg, X):
    m = cfg["model"]["m"]
    if m != "auto":
        return int(m)
    from .frechet import frechet_mean_curve
    from .curve import downsample, log_map_curve

    res = cfg["model"]["resolution"]
    small = [downsample(x, res) for x in X]
    mean = frechet_mean_curve(small)
    logs = [log_map_curve(mean, x) for x in small]
    return max(1, sel.estimate_lag_range(logs, cfg["model"]["lag_threshold"]))


def cmd_fit_predict(cfg, sample_dir):
    Y, X, manifest = io.load_sample(sample_dir)
    n = len(Y)
    q = cfg["query"]
    end = n - 1 if q["end"] is None else int(q["end"])
    if not 0 <= end < n:
        raise ConfigError(f"query.end = {end} outside the sample (n = {n})")
    fit_n = end if q["holdout"] else n
    m = choose_m(cfg, X[:fit_n])
    if end < m or fit_n <= m:
        raise ConfigError(f"query window ending at {end} needs m = {m} earlier curves")
    model = reg.fit(Y[:fit_n], X[:fit_n], m, cfgmod.regression_config(cfg))
    query = reg.QueryBlock(X[end - m:end + 1])
    res = reg.predict(model, query)
    truth = Y[end]
    out = Path(cfg["io"]["out"])
    io.write_curve_csv(out / "prediction.csv", res.curve)
    io.write_matrix_csv(out / "weights.csv", res.weights[:, None])
    io.write_matrix_csv(out / "objective_trace.csv", np.asarray(res.trace)[:, None])
    io.dump_model(out / "model", model)
    metrics = {
        "n": fit_n, "m": m, "query_end": end, "holdout": q["holdout"],
        "converged": res.converged, "sweeps": res.sweeps, "hit_cap": res.hit_cap,
        "objective": res.objective, "initial_objective": res.initial_objective,
        "coords": res.coords, "weight_mean": float(res.weights.mean()),
        "weight_identity_error": float(abs(res.weights.mean() - 1.0)),
        "sup_error": sup_geodesic_distance(res.curve, truth),
        "integrated_sq_error": integrated_sq_geodesic_distance(res.curve, truth),
        "lipschitz_prediction": lipschitz_estimate(res.curve),
        "sample": manifest.get("generator"),
    }
    io.write_json(out / "metrics.json", metrics)
    if cfg["io"]["plots"]:
        idx = np.arange(res.weights.size) + m
        (out / "weights.svg").write_text(plots.line_plot(
            {"Fréchet weight": (idx, res.weights)}, "Empirical Fréchet weights",
            "sample window end", "weight", markers=True))
    log.info("sup error %.4g, converged %s", metrics["sup_error"], res.converged)
    return EXIT_OK


# ---------------------------------------------------------------------------
# select


def cmd_select(cfg, sample_dir):
    Y, X, _ = io.load_sample(sample_dir)
    n = len(Y)
    m = choose_m(cfg, X)
    model = reg.fit(Y, X, m, cfgmod.regression_config(cfg))
    s_stars = cfg["selection"]["s_star"] or [n - 1]
    results = []
    for s in s_stars:
        if not m <= s < n:
            raise ConfigError(f"s_star = {s} must lie in [{m}, {n - 1}]")
        logs = sel.response_logs(model, [Y[s]])
        for scenario in cfg["selection"]["scenarios"]:
            results.append(sel.scvsa(model, logs, cfgmod.selection_config(cfg, s, scenario), s))
    out = Path(cfg["io"]["out"])
    io.write_json(out / "selection.json", {"m": m, "n": n, "results": [r.as_dict() for r in results]})
    write_selection_table(out / "selection_table.csv", results)
    write_diagnostics(out / "selection_diagnostics.csv", results)
    if cfg["io"]["plots"]:
        series = {f"s*={r.s_star}, scenario {r.scenario}": (np.array(r.candidates), r.weights)
                  for r in results}
        (out / "weights.svg").write_text(plots.line_plot(
            series, "Empirical Fréchet weights per candidate", "candidate time", "weight"))
        r0 = results[0]
        t = model.grid.nodes
        dseries = {f"X{j}": (t, sim_distance(Y[r0.s_star], X[j])) for j in r0.candidates[:10]}
        (out / "distances.svg").write_text(plots.line_plot(
            dseries, f"Squared geodesic distance to Y at s*={r0.s_star}", "t", "squared distance"))
    log.info("selection written for %d prediction time(s)", len(s_stars))
    return EXIT_OK


def sim_distance(y, x):
    from .curve import pointwise_distance

    return pointwise_distance(y, x) ** 2


def _fmt_set(s):
    return " ".join(str(i) for i in s)


def write_selection_table(path, results):
    rows = {}
    for r in results:
        rows.setdefault(r.s_star, {})[r.scenario] = _fmt_set(r.selected)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s_star", "scenario_1", "scenario_2"])
        for s in sorted(rows):
            w.writerow([s, rows[s].get(1, ""), rows[s].get(2, "")])


def write_diagnostics(path, results):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s_star", "scenario", "candidate", "distance", "relative_distance", "weight",
                    "in_s1", "in_s2", "selected"])
        for r in results:
            for k, j in enumerate(r.candidates):
                w.writerow([r.s_star, r.scenario, j, repr(float(r.distances[0, k])),
                            repr(float(r.relative_distances[0, k])), repr(float(r.weights[k])),
                            int(j in r.s1), int(j in r.s2), int(j in r.selected)])


# ---------------------------------------------------------------------------
# report


def find_runs(paths):
    found, missing = [], []
    for p in map(Path, paths):
        if (p / "metrics.json").exists():
            found.append(p)
        elif p.is_dir():
            subs = sorted(d for d in p.iterdir() if (d / "metrics.json").exists())
            found.extend(subs) if subs else missing.append(p)
        else:
            missing.append(p)
    return found, missing


def trend_is_monotone(ns, errors):
    """Errors averaged per ``n`` are non-increasing in ``n``."""
    uniq = sorted(set(ns))
    med = [float(np.median([e for n, e in zip(ns, errors) if n == u])) for u in uniq]
    return all(b <= a for a, b in zip(med, med[1:])), uniq, med


def cmd_report(cfg, run_paths):
    runs, missing = find_runs(run_paths)
    for p in missing:
        log.warning("no completed run at %s", p)
    if not runs:
        raise ConfigError("no completed runs found")
    metrics = [io.read_json(r / "metrics.json") for r in runs]
    out = Path(cfg["io"]["out"])
    ns = [mt["n"] for mt in metrics]
    errs = [mt["sup_error"] for mt in metrics]
    lines = ["# Run report", "", "| run | n | m | sup error | integrated sq. error | weight identity error | converged |",
             "|---|---|---|---|---|---|---|"]
    for r, mt in zip(runs, metrics):
        lines.append(f"| {r.name} | {mt['n']} | {mt['m']} | {mt['sup_error']:.6g} | "
                     f"{mt['integrated_sq_error']:.6g} | {mt['weight_identity_error']:.3g} | {mt['converged']} |")
    checks = {"weight identity": all(mt["weight_identity_error"] <= WEIGHT_IDENTITY_TOL for mt in metrics)}
    monotone, uniq, med = trend_is_monotone(ns, errs)
    if len(uniq) > 1:
        checks["error trend non-increasing in n"] = monotone
    lines += ["", "## Consistency trend", "", "| n | median sup error |", "|---|---|"]
    lines += [f"| {u} | {e:.6g} |" for u, e in zip(uniq, med)]
    lines += ["", "## Acceptance checks", ""]
    lines += [f"- {name}: {'PASS' if ok else 'FAIL'}" for name, ok in checks.items()]
    if missing:
        lines += ["", "## Missing runs", ""] + [f"- {p}" for p in missing]
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.md").write_text("\n".join(lines) + "\n")
    if cfg["io"]["plots"]:
        (out / "trend.svg").write_text(plots.line_plot(
            {"median sup error": (np.array(uniq, dtype=float), np.array(med))},
            "Prediction error against sample size", "n", "sup geodesic error", markers=True))
    return EXIT_OK if all(checks.values()) else EXIT_ACCEPTANCE


# ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="geocurve", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", type=Path, help="YAML experiment configuration")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key (dotted path); repeatable")
        sp.add_argument("--seed", type=int, help="master seed of the simulation")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("simulate", help="generate a curve sample"))
    sp = sub.add_parser("fit-predict", help="fit the regression model and predict one response")
    common(sp)
    sp.add_argument("--sample", type=Path, required=True, help="sample directory")
    sp = sub.add_parser("select", help="run regressor selection")
    common(sp)
    sp.add_argument("--sample", type=Path, required=True, help="sample directory")
    sp = sub.add_parser("report", help="aggregate fit-predict runs")
    common(sp)
    sp.add_argument("runs", nargs="+", type=Path, help="run directories (or parents of runs)")
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as err:
        print(f"geocurve: {err}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = cfgmod.load_config(args.config, args.overrides, args.seed, args.out)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "fit-predict":
            return cmd_fit_predict(cfg, args.sample)
        if args.command == "select":
            return cmd_select(cfg, args.sample)
        return cmd_report(cfg, args.runs)
    except (AntipodalPointError, DegenerateCovarianceError) as err:
        print(f"geocurve: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, OSError, ValueError, GeocurveError) as err:
        print(f"geocurve: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
