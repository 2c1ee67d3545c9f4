"""curveband command-line front end.

Subcommands: gen-pop, sample, estimate, bands, mc-study, oracle-check,
rate-study, rerun. Every run resolves its configuration (defaults, then an
optional JSON config file, then flags, flags winning), executes, and emits
exactly one run manifest recording the resolved config, master seed, package
version, input digests, output digests and wall-clock duration. `rerun`
re-executes a recorded run from its manifest and verifies that the outputs
reproduce byte for byte.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric error,
5 internal error. Errors are also written to stderr as one JSON line with a
machine-readable category.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__, designs, montecarlo, tables
from .bands import GaussianSimConfig, build_band
from .errors import ConfigError, DataError, NumericError
from .estimators import hajek_estimate_surface, ht_mean_curve, hajek_population_surface
from .designs import InclusionProfile, SampleDraw
from .montecarlo import DesignSpec, McConfig
from .population import GeneratorConfig, TimeGrid, generate_synthetic, load_population, save_population
from .rng import rng_for

log = logging.getLogger("curveband")

_EXIT_CODES = {"config": 2, "data": 3, "numeric": 4, "internal": 5}


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("CURVEBAND_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Shared input loading
# ---------------------------------------------------------------------------

def _load_pop(cfg):
    try:
        return load_population(cfg["pop"])
    except FileNotFoundError:
        raise DataError(f"population file not found: {cfg['pop']}") from None


def _load_sample(path, pop) -> SampleDraw:
    ids = tables.read_ids_csv(path)
    index = {uid: k for k, uid in enumerate(pop.ids)}
    try:
        idx = np.array(sorted(index[uid] for uid in ids), dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"sample id {exc.args[0]!r} not present in the population") from None
    if idx.size != len(set(ids)):
        raise DataError("sample file contains duplicate ids")
    membership = np.zeros(pop.n_units, dtype=np.uint8)
    membership[idx] = 1
    return SampleDraw(indices=idx, membership=membership)


def _load_profile(path, n: int, pop) -> InclusionProfile:
    pi = tables.read_pi_csv(path)
    if pi.size != pop.n_units:
        raise DataError(f"pi file has {pi.size} rows, population has {pop.n_units}")
    capped = tuple(np.flatnonzero(pi >= 1.0).tolist())
    try:
        return InclusionProfile(pi=pi, n=n, capped_ids=capped)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _parse_sizes(text: str) -> list:
    try:
        return [int(v) for v in str(text).split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"cannot parse integer list {text!r}") from None


def _parse_floats(text: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"cannot parse number list {text!r}") from None


# ---------------------------------------------------------------------------
# Subcommand runners: take the resolved config dict, return {label: path}
# ---------------------------------------------------------------------------

def _run_gen_pop(cfg):
    gen = GeneratorConfig(idio_scale=cfg["idio_scale"], x_noise=cfg["x_noise"],
                          influential_count=cfg["influential"],
                          influential_peak=cfg["influential_peak"])
    if cfg["proportional"]:
        gen = gen.proportional()
    grid = TimeGrid.regular(cfg["grid_points"], cfg["horizon"])
    pop = generate_synthetic(cfg["units"], grid, gen, seed=cfg["seed"])
    save_population(pop, cfg["out"])
    return {"population": cfg["out"]}


def _sampling_profile(pop, cfg) -> InclusionProfile:
    if cfg["design"] == "srswor":
        return InclusionProfile(pi=np.full(pop.n_units, cfg["n"] / pop.n_units), n=cfg["n"])
    return designs.inclusion_from_auxiliary(pop.auxiliary, cfg["n"], delta=cfg["delta"])


def _run_sample(cfg):
    pop = _load_pop(cfg)
    if not (0 < cfg["n"] < pop.n_units):
        raise ConfigError(f"need 0 < n < N = {pop.n_units}")
    profile = _sampling_profile(pop, cfg)
    rng = rng_for(cfg["seed"], 0)
    design = cfg["design"]
    if design == "rejective":
        p = designs.rejective_working_probs(profile)
        draw = designs.draw_rejective(profile, p, rng)
    elif design == "sampford":
        if profile.capped_ids:
            raise NumericError("Sampford undefined: capping produced pi_k = 1; raise delta or lower n")
        draw = designs.draw_sampford(profile, rng)
    elif design == "srswor":
        draw = designs.draw_srswor(pop.n_units, cfg["n"], rng)
    elif design == "poisson":
        draw = designs.draw_poisson(profile.pi, rng)
    else:
        raise ConfigError(f"unknown design {design!r}")
    tables.write_ids_csv(cfg["out"], [pop.ids[k] for k in draw.indices])
    return {"sample": cfg["out"]}


def _run_estimate(cfg):
    pop = _load_pop(cfg)
    sample = _load_sample(cfg["sample"], pop)
    profile = _load_profile(cfg["pi"], sample.size, pop)
    est = ht_mean_curve(sample, profile, pop)
    surface = hajek_estimate_surface(sample, profile, pop, star=cfg["star"],
                                     berger_correction=cfg["berger_correction"])
    tables.write_mean_csv(cfg["out_mean"], pop.grid, est.values)
    tables.write_matrix_csv(cfg["out_cov"], pop.grid, surface.matrix)
    return {"mean": cfg["out_mean"], "covariance": cfg["out_cov"]}


def _run_bands(cfg):
    pop = _load_pop(cfg)
    sample = _load_sample(cfg["sample"], pop)
    profile = _load_profile(cfg["pi"], sample.size, pop)
    est = ht_mean_curve(sample, profile, pop)
    surface = hajek_estimate_surface(sample, profile, pop)
    sim = GaussianSimConfig(replications=cfg["reps"], alpha=cfg["alpha"],
                            eigen_floor=cfg["eigen_floor"], sigma_floor=cfg["sigma_floor"],
                            seed=cfg["seed"])
    band = build_band(est, surface, sim)
    tables.write_band_csv(cfg["out"], band)
    sidecar = cfg["out"] + ".json"
    tables.write_json(sidecar, tables.json_ready({
        "c_alpha": band.c_alpha,
        "alpha": cfg["alpha"],
        "degenerate": band.degenerate,
        "excluded_points": band.excluded_points,
        "n": sample.size,
    }))
    return {"band": cfg["out"], "cutoff": sidecar}


def _run_mc_study(cfg):
    pop = _load_pop(cfg)
    out_dir = cfg["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    outputs = {}
    for n in _parse_sizes(cfg["n"]):
        mc = McConfig(design=DesignSpec(kind=cfg["design"], delta=cfg["delta"]), n=n,
                      reps_gamma=cfg["reps_gamma"], reps_risk=cfg["reps_risk"],
                      alpha=cfg["alpha"], master_seed=cfg["seed"], threads=cfg["threads"],
                      coverage_reps=cfg["coverage_reps"], band_reps=cfg["band_reps"])
        report = montecarlo.run_variance_study(pop, mc)
        payload = {
            "n": n,
            "design": cfg["design"],
            "d_pi": report.d_pi,
            "rmse": report.rmse,
            "rb2": report.rb2,
            "rv": report.rv,
            "risk_quantiles": report.risk_quantiles,
            "excluded_points": report.excluded_points,
            "selected_replicate": report.selected_replicate,
            "reps_gamma": cfg["reps_gamma"],
            "reps_risk": cfg["reps_risk"],
            "coverage": None if report.coverage is None else {
                "rate": report.coverage.coverage,
                "replicates": int(report.coverage.hits.size),
                "degenerate": report.coverage.n_degenerate,
            },
        }
        paths = {
            f"report_n{n}": os.path.join(out_dir, f"report_n{n}.json"),
            f"gamma_emp_n{n}": os.path.join(out_dir, f"gamma_emp_n{n}.csv"),
            f"gamma_hajek_n{n}": os.path.join(out_dir, f"gamma_hajek_n{n}.csv"),
            f"error_approx_n{n}": os.path.join(out_dir, f"error_approx_n{n}.csv"),
            f"error_estimate_n{n}": os.path.join(out_dir, f"error_estimate_n{n}.csv"),
        }
        tables.write_json(paths[f"report_n{n}"], tables.json_ready(payload))
        grid = pop.grid
        emp = report.gamma_emp.matrix
        haj = report.hajek_population.matrix
        tables.write_matrix_csv(paths[f"gamma_emp_n{n}"], grid, emp)
        tables.write_matrix_csv(paths[f"gamma_hajek_n{n}"], grid, haj)
        tables.write_matrix_csv(paths[f"error_approx_n{n}"], grid, emp - haj)
        tables.write_matrix_csv(paths[f"error_estimate_n{n}"], grid, emp - report.selected_surface.matrix)
        outputs.update(paths)
    return outputs


def _oracle_pi(cfg) -> np.ndarray:
    N, n = cfg["N"], cfg["n"]
    if cfg["x_pattern"] == "equal":
        x = np.ones(N)
    else:
        x = np.arange(1.0, N + 1.0)
    return designs.inclusion_from_auxiliary(x, n).pi


def _run_oracle_check(cfg):
    N, n = cfg["N"], cfg["n"]
    if not (0 < n < N):
        raise ConfigError("need 0 < n < N")
    pi = _oracle_pi(cfg)
    profile = InclusionProfile(pi=pi, n=n)
    p = designs.calibrate_cp_working_probs(profile)
    rejective = designs.enumerate_design("rejective", n, p=p, max_support=cfg["max_support"])

    design = cfg["design"]
    if design == "rejective":
        dist = rejective
        pi_gap = float(np.max(np.abs(designs.cp_first_order_probabilities(p, n) - pi)))
        rows = designs.draw_rejective_many(p, n, rng_for(cfg["seed"], 0), cfg["draws"])
    elif design == "sampford":
        dist = designs.enumerate_design("sampford", n, pi=pi, max_support=cfg["max_support"])
        pi_gap = float(np.max(np.abs(dist.first_order() - pi)))
        rows = designs.draw_sampford_many(pi, n, rng_for(cfg["seed"], 0), cfg["draws"])
    elif design == "srswor":
        dist = designs.enumerate_design("srswor", n, N=N, max_support=cfg["max_support"])
        pi_gap = float(np.max(np.abs(dist.first_order() - n / N)))
        rows = designs.draw_srswor_many(N, n, rng_for(cfg["seed"], 0), cfg["draws"])
    else:
        raise ConfigError(f"oracle-check does not support design {design!r}")

    # empirical distribution of the drawn samples against the enumerated one
    key = {tuple(row): i for i, row in enumerate(dist.support)}
    counts = np.zeros(dist.probs.size)
    for row in rows:
        counts[key[tuple(np.flatnonzero(row))]] += 1
    tv = 0.5 * float(np.sum(np.abs(counts / rows.shape[0] - dist.probs)))

    a5 = None
    if 4 <= N <= designs.A5_MAX_UNITS:
        a5 = designs.a5_statistic(dist, designs.second_order_exact(dist))
    payload = {
        "design": design, "N": N, "n": n, "draws": cfg["draws"],
        "tv_distance": tv,
        "pi_gap": pi_gap,
        "a5": a5,
        "entropy": designs.entropy(dist),
        "kl_vs_rejective": designs.kl_divergence(dist, rejective),
    }
    _write_report(cfg, payload)
    return {"report": cfg["out"]}


_RATE_QUANTITIES = {"a5": "a5", "hajek-pikl-error": "hajek_pikl_error", "var-mse": "var_estimator_mse"}

# fixed base curves for the variance-MSE rate check: two consumption levels
# with small wiggles, one row per base unit; not proportional to the size
# pattern, so neither the bias nor the sampling error vanishes
_RATE_BASE_CURVES = np.array([
    [3.1, 2.9, 3.2, 3.0, 2.8, 3.1],
    [2.8, 3.2, 3.0, 3.1, 3.0, 2.9],
    [1.1, 0.9, 1.0, 1.2, 1.0, 0.8],
    [0.9, 1.1, 1.2, 0.8, 1.1, 1.0],
])


def _run_rate_study(cfg):
    quantity = _RATE_QUANTITIES.get(cfg["quantity"])
    if quantity is None:
        raise ConfigError(f"unknown rate quantity {cfg['quantity']!r}")
    tiles = _parse_sizes(cfg["tiles"])
    base_x = np.asarray(_parse_floats(cfg["base_x"]))
    kwargs = {}
    if quantity == "var_estimator_mse":
        curves = np.tile(_RATE_BASE_CURVES, (int(np.ceil(base_x.size / 4)), 1))[: base_x.size]
        kwargs["base_curves"] = curves
        kwargs["grid"] = TimeGrid.regular(curves.shape[1], 1.0)
    study = montecarlo.rate_study(quantity, tiles, base_x, cfg["base_n"],
                                  max_support=cfg["max_support"], **kwargs)
    payload = {
        "quantity": cfg["quantity"],
        "sizes": study.sizes,
        "sample_sizes": study.sample_sizes,
        "d_pi": study.d_values,
        "values": study.values,
        "slope": study.slope,
        "residuals": study.residuals,
    }
    _write_report(cfg, payload)
    return {"report": cfg["out"]}


def _write_report(cfg, payload: dict) -> None:
    payload = tables.json_ready(payload)
    if cfg.get("format", "json") == "csv":
        with open(cfg["out"], "w", newline="", encoding="utf-8") as fh:
            fh.write("key,value\n")
            for k, v in payload.items():
                fh.write(f"{k},{json.dumps(v)}\n")
    else:
        tables.write_json(cfg["out"], payload)
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")


def _run_rerun(cfg):
    with open(cfg["manifest"], "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    name = manifest["command"]
    spec = _COMMANDS.get(name)
    if spec is None:
        raise ConfigError(f"manifest references unknown command {name!r}")
    run_cfg = dict(manifest["config"])
    if cfg.get("out_dir"):
        os.makedirs(cfg["out_dir"], exist_ok=True)
        for key in spec.output_keys:
            if key == "out_dir":
                run_cfg[key] = cfg["out_dir"]
            elif key in run_cfg:
                run_cfg[key] = os.path.join(cfg["out_dir"], os.path.basename(run_cfg[key]))
        run_cfg.pop("manifest_out", None)
    t0 = time.monotonic()
    outputs = spec.run(run_cfg)
    _write_manifest(spec, run_cfg, outputs, time.monotonic() - t0)
    recorded = manifest.get("outputs", {})
    mismatches = []
    for label, path in outputs.items():
        digest = _sha256(path)
        want = recorded.get(label)
        if want is not None and want.get("sha256") != digest:
            mismatches.append(label)
    payload = {"reproduced": not mismatches, "mismatches": mismatches,
               "outputs": {label: path for label, path in outputs.items()}}
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    if mismatches:
        raise NumericError(f"rerun did not reproduce outputs: {mismatches}")
    return outputs


# ---------------------------------------------------------------------------
# Command table and argument wiring
# ---------------------------------------------------------------------------

class _Command:
    def __init__(self, name, help, defaults, required, input_keys, output_keys, seed_key, configure, run):
        self.name = name
        self.help = help
        self.defaults = defaults
        self.required = required
        self.input_keys = input_keys
        self.output_keys = output_keys
        self.seed_key = seed_key
        self.configure = configure
        self.run = run


def _args_gen_pop(sp):
    sp.add_argument("--units", type=int)
    sp.add_argument("--grid-points", dest="grid_points", type=int)
    sp.add_argument("--horizon", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.add_argument("--idio-scale", dest="idio_scale", type=float)
    sp.add_argument("--x-noise", dest="x_noise", type=float)
    sp.add_argument("--influential", type=int)
    sp.add_argument("--influential-peak", dest="influential_peak", type=float)
    sp.add_argument("--proportional", action="store_true")


def _args_sample(sp):
    sp.add_argument("--design", choices=["rejective", "sampford", "srswor", "poisson"])
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--pop")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--out")


def _args_estimate(sp):
    sp.add_argument("--pop")
    sp.add_argument("--sample")
    sp.add_argument("--pi")
    sp.add_argument("--out-mean", dest="out_mean")
    sp.add_argument("--out-cov", dest="out_cov")
    sp.add_argument("--star", action="store_true")
    sp.add_argument("--berger-correction", dest="berger_correction", action="store_true")


def _args_bands(sp):
    sp.add_argument("--pop")
    sp.add_argument("--sample")
    sp.add_argument("--pi")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--eigen-floor", dest="eigen_floor", type=float)
    sp.add_argument("--sigma-floor", dest="sigma_floor", type=float)
    sp.add_argument("--out")


def _args_mc_study(sp):
    sp.add_argument("--pop")
    sp.add_argument("--design", choices=["rejective", "sampford", "srswor"])
    sp.add_argument("--n")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--reps-gamma", dest="reps_gamma", type=int)
    sp.add_argument("--reps-risk", dest="reps_risk", type=int)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--coverage-reps", dest="coverage_reps", type=int)
    sp.add_argument("--band-reps", dest="band_reps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out-dir", dest="out_dir")


def _args_oracle_check(sp):
    sp.add_argument("--design", choices=["rejective", "sampford", "srswor"])
    sp.add_argument("--N", dest="N", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--draws", type=int)
    sp.add_argument("--max-support", dest="max_support", type=float)
    sp.add_argument("--x-pattern", dest="x_pattern", choices=["linear", "equal"])
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--out")


def _args_rate_study(sp):
    sp.add_argument("--quantity", choices=sorted(_RATE_QUANTITIES))
    sp.add_argument("--tiles")
    sp.add_argument("--base-x", dest="base_x")
    sp.add_argument("--base-n", dest="base_n", type=int)
    sp.add_argument("--max-support", dest="max_support", type=float)
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--out")


def _args_rerun(sp):
    sp.add_argument("--manifest")
    sp.add_argument("--out-dir", dest="out_dir")


_COMMANDS = {c.name: c for c in [
    _Command("gen-pop", "generate a synthetic curve population",
             defaults={"horizon": 7.0, "seed": 0, "idio_scale": 0.15, "x_noise": 0.05,
                       "influential": 0, "influential_peak": 0.7, "proportional": False},
             required=("units", "grid_points", "out"), input_keys=(), output_keys=("out",),
             seed_key="seed", configure=_args_gen_pop, run=_run_gen_pop),
    _Command("sample", "draw one sample from a population",
             defaults={"design": "rejective", "delta": 0.0, "seed": 0},
             required=("n", "pop", "out"), input_keys=("pop",), output_keys=("out",),
             seed_key="seed", configure=_args_sample, run=_run_sample),
    _Command("estimate", "Horvitz-Thompson mean curve and Hajek covariance",
             defaults={"star": False, "berger_correction": False},
             required=("pop", "sample", "pi", "out_mean", "out_cov"),
             input_keys=("pop", "sample", "pi"), output_keys=("out_mean", "out_cov"),
             seed_key=None, configure=_args_estimate, run=_run_estimate),
    _Command("bands", "simultaneous confidence band for the mean curve",
             defaults={"alpha": 0.05, "reps": 3000, "seed": 0, "eigen_floor": 0.0,
                       "sigma_floor": 1e-8},
             required=("pop", "sample", "pi", "out"),
             input_keys=("pop", "sample", "pi"), output_keys=("out",),
             seed_key="seed", configure=_args_bands, run=_run_bands),
    _Command("mc-study", "replicated variance-evaluation study",
             defaults={"design": "rejective", "delta": 0.0, "alpha": 0.05,
                       "coverage_reps": 0, "band_reps": 2000, "seed": 0},
             required=("pop", "n", "reps_gamma", "reps_risk", "out_dir"),
             input_keys=("pop",), output_keys=("out_dir",),
             seed_key="seed", configure=_args_mc_study, run=_run_mc_study),
    _Command("oracle-check", "exact-enumeration diagnostics for a small design",
             defaults={"design": "rejective", "seed": 0, "draws": 100000,
                       "max_support": 1e6, "x_pattern": "linear", "format": "json",
                       "out": "oracle_check.json"},
             required=("N", "n"), input_keys=(), output_keys=("out",),
             seed_key="seed", configure=_args_oracle_check, run=_run_oracle_check),
    _Command("rate-study", "empirical convergence-rate table from the oracle",
             defaults={"tiles": "2,3,4", "base_x": "1,2,3,4", "base_n": 1,
                       "max_support": 1e6, "format": "json", "out": "rate_study.json"},
             required=("quantity",), input_keys=(), output_keys=("out",),
             seed_key=None, configure=_args_rate_study, run=_run_rate_study),
    _Command("rerun", "re-execute a recorded run from its manifest",
             defaults={}, required=("manifest",), input_keys=("manifest",),
             output_keys=(), seed_key=None, configure=_args_rerun, run=_run_rerun),
]}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curveband",
                                     description="survey sampling of curve data")
    parser.add_argument("--version", action="version", version=f"curveband {__version__}")
    subparsers = parser.add_subparsers(dest="command")
    for cmd in _COMMANDS.values():
        sp = subparsers.add_parser(cmd.name, help=cmd.help, argument_default=argparse.SUPPRESS)
        cmd.configure(sp)
        sp.add_argument("--config", help="JSON config file; explicit flags win")
        sp.add_argument("--threads", type=int, help="worker hint, recorded only; results never depend on it")
        sp.add_argument("--manifest-out", dest="manifest_out", help="manifest path (default: first output + .manifest.json)")
    return parser


def _resolve_config(cmd: _Command, ns: argparse.Namespace) -> dict:
    provided = {k: v for k, v in vars(ns).items() if k != "command"}
    cfg = dict(cmd.defaults)
    cfg["threads"] = _default_threads()
    config_path = provided.pop("config", None)
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                from_file = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {config_path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(from_file, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in from_file.items():
            cfg[key.replace("-", "_")] = value
    cfg.update(provided)
    missing = [k for k in cmd.required if cfg.get(k) is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise ConfigError(f"{cmd.name}: missing required option(s): {flags}")
    return cfg


def _write_manifest(cmd: _Command, cfg: dict, outputs: dict, duration: float) -> str:
    manifest = {
        "command": cmd.name,
        "config": {k: v for k, v in cfg.items() if k != "manifest_out"},
        "master_seed": cfg.get(cmd.seed_key) if cmd.seed_key else None,
        "version": __version__,
        "inputs": {key: {"path": cfg[key], "sha256": _sha256(cfg[key])}
                   for key in cmd.input_keys if cfg.get(key)},
        "outputs": {label: {"path": path, "sha256": _sha256(path)}
                    for label, path in outputs.items()},
        "duration_seconds": duration,
    }
    path = cfg.get("manifest_out")
    if not path:
        if outputs:
            path = next(iter(outputs.values())) + ".manifest.json"
        else:
            path = cmd.name.replace("-", "_") + ".manifest.json"
    if os.path.isdir(path):
        path = os.path.join(path, "manifest.json")
    tables.write_json(path, tables.json_ready(manifest))
    return path


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if getattr(ns, "command", None) is None:
        parser.print_usage(sys.stderr)
        return _EXIT_CODES["config"]
    cmd = _COMMANDS[ns.command]
    try:
        cfg = _resolve_config(cmd, ns)
        log.info(json.dumps({"event": "run", "command": cmd.name, "version": __version__,
                             "seed": cfg.get(cmd.seed_key) if cmd.seed_key else None},
                            sort_keys=True))
        t0 = time.monotonic()
        outputs = cmd.run(cfg)
        duration = time.monotonic() - t0
        if cmd.name != "rerun":
            manifest_path = _write_manifest(cmd, cfg, outputs, duration)
            log.info(json.dumps({"event": "done", "manifest": manifest_path,
                                 "duration_seconds": round(duration, 3)}, sort_keys=True))
        return 0
    except ConfigError as exc:
        _emit_error("config", exc)
        sys.stderr.write(f"usage hint: curveband {cmd.name} --help\n")
        return _EXIT_CODES["config"]
    except DataError as exc:
        _emit_error("data", exc)
        return _EXIT_CODES["data"]
    except NumericError as exc:
        _emit_error("numeric", exc)
        return _EXIT_CODES["numeric"]
    except Exception as exc:  # pragma: no cover - defensive
        _emit_error("internal", exc)
        return _EXIT_CODES["internal"]


def _emit_error(category: str, exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": {"category": category, "message": str(exc)}}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
