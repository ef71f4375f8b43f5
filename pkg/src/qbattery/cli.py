"""Command-line experiment runner.

Every subcommand is a pure function of its config and seed to the files it
writes; wall-clock information only goes to ``run.log``.

Exit codes: 0 success, 1 a bound or identity was violated, 2 usage/config error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .bounds import SLACK, theorem1_bound, write_rows
from .corpus import chain_report, lemma1_deviation, lemma2_deviation, random_instance
from .dynamics import advantage_ratio, ground_state, quench_scan
from .ensembles import (
    ENSEMBLE_COLUMNS,
    HIST_COLUMNS,
    STATS_COLUMNS,
    EnsembleConfig,
    analytic_vmax_estimate,
    ansatz,
    norm_scaling_data,
    norm_scaling_fit,
    run_ensemble,
)
from .hamiltonians import (
    BatterySpec,
    DrivingSpec,
    ExplicitPauliSum,
    FixedShiftedNorm,
    MixedNNGlobal,
    SingleQubitParallel,
    SYRandom,
    build_battery,
    build_driving,
)
from .operators import SIGMA_X, SIGMA_Z, HermitianOperator, PauliSum, PauliTerm, to_dense
from .svg import line_plot

SCHEMA_VERSION = 1
log = logging.getLogger("qbattery")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

_REQUIRED = object()

SCHEMAS = {
    "verify": {
        "seed": _REQUIRED,
        "instances": 200,
        "max_sites": 6,
        "fields": [0.5, 1.0, 2.0],
        "e_samples": 10,
        "scan_steps": 400,
        "saturation": True,
        "ensemble": None,
        "inject_fault": None,
    },
    "figure1a": {
        "seed": _REQUIRED,
        "L_values": [4, 5, 6, 7, 8],
        "realizations": 100,
        "h": 1.0,
        "potential": 2.0,
        "n_steps": 2000,
        "t_max": None,
    },
    "figure1b": {
        "L_values": [4, 5, 6, 7, 8, 9, 10],
        "h": 1.0,
        "V": 1.0,
        "n_steps": 2000,
        "t_max": None,
    },
    "scaling": {
        "seed": _REQUIRED,
        "L_values": list(range(4, 13)),
        "realizations": 1000,
        "coupling_std": 1.0,
    },
    "histogram": {
        "seed": _REQUIRED,
        "L_values": [6],
        "realizations": 1000,
        "bin_width": 0.1,
        "h": 1.0,
        "potential": 2.0,
    },
    "quench": {
        "seed": None,
        "battery": {"num_sites": 2, "field_strength": 1.0},
        "driving": {"variant": "pauli_sum",
                    "pauli_sum": {"num_sites": 2, "terms": [{"coeff": 1.0, "paulis": [[0, "X"], [1, "X"]]}]}},
        "n_steps": 2000,
        "t_max": None,
    },
}
ENSEMBLE_KEYS = {"L_values", "realizations", "n_steps", "h", "potential"}
FAULT_KEYS = {"scale_driving"}


class ConfigError(ValueError):
    pass


def load_config(command: str, path=None, seed=None) -> dict:
    """Defaults for ``command`` overlaid with a strict JSON config and the ``--seed`` flag."""
    schema = SCHEMAS[command]
    cfg = {k: v for k, v in schema.items() if v is not _REQUIRED}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        version = data.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
        unknown = set(data) - set(schema)
        if unknown:
            raise ConfigError(f"unknown fields for {command}: {sorted(unknown)}")
        cfg.update(data)
    if seed is not None:
        cfg["seed"] = seed
    missing = [k for k, v in schema.items() if v is _REQUIRED and cfg.get(k) is None]
    if missing:
        raise ConfigError(f"{command} is stochastic and needs {missing} (config or --seed)")
    if cfg.get("seed") is not None:
        s = cfg["seed"]
        if not isinstance(s, int) or isinstance(s, bool) or not 0 <= s < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
    if "L_values" in cfg:
        Ls = cfg["L_values"]
        if not Ls or list(Ls) != sorted(set(Ls)):
            raise ConfigError("L_values must be a nonempty ascending list")
    return cfg


def _setup_logging(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    log.handlers.clear()
    log.setLevel(logging.INFO)
    fh = logging.FileHandler(out / "run.log", mode="w")
    fh.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(fh)
    sh = logging.StreamHandler(sys.stderr)
    sh.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(sh)
    log.info("kernel backend: %s", kernels.BACKEND)


def _write_ensemble(out: Path, res):
    write_rows(out / "records.csv", ENSEMBLE_COLUMNS, res.records)
    write_rows(out / "stats.csv", STATS_COLUMNS, res.stats)
    write_rows(out / "hist.csv", HIST_COLUMNS, res.histogram)


def _violating_records(res) -> list:
    return [r for r in res.records if r["violations"]]


# verify

def _saturation_cases():
    """Closed-form tight cases: one qubit under X, two qubits under XX."""
    one = (HermitianOperator(SIGMA_Z), HermitianOperator(SIGMA_X), 2.0, 1, 1)
    H2 = build_battery(BatterySpec(2, 1.0))
    V2 = to_dense(PauliSum(2, (PauliTerm(1.0, {0: "X", 1: "X"}),)))
    two = (H2, V2, 4.0, 2, 2)
    return {"single_qubit": one, "two_qubit_global": two}


def cmd_verify(cfg: dict, out: Path, workers: int = 1, svg: bool = False) -> int:
    if cfg["instances"] < 1:
        raise ConfigError("verify needs a nonempty corpus (instances >= 1)")
    rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], 0xC0]))
    checks = {name: {"n": 0, "worst": 0.0, "tol": tol} for name, tol in (
        ("lemma1_identity", 1e-9), ("lemma2_spectra", 1e-9), ("h_norm_half", 0.0),
        ("bound_chain", 0.0))}
    dumps = []
    start = time.time()
    for i in range(cfg["instances"]):
        inst = random_instance(rng, cfg["max_sites"], tuple(cfg["fields"]))
        d1 = lemma1_deviation(inst)
        d2, dh = lemma2_deviation(inst, rng, cfg["e_samples"])
        scan = quench_scan(inst.H, inst.V, ground_state(inst.H), n_steps=cfg["scan_steps"])
        rep = chain_report(inst, p_max=scan.p_max)
        bad = rep.violations()
        if np.max(np.abs(scan.power)) > rep.observed_commutator_norm + SLACK:
            bad.append("|P(t)| <= commutator_norm")
        for name, val in (("lemma1_identity", d1), ("lemma2_spectra", d2), ("h_norm_half", dh)):
            c = checks[name]
            c["n"] += 1
            c["worst"] = max(c["worst"], val)
            if val > c["tol"]:
                dumps.append({"check": name, "index": i, "value": val, "instance": inst.to_dict()})
        checks["bound_chain"]["n"] += 1
        if bad:
            checks["bound_chain"]["worst"] += 1
            dumps.append({"check": "bound_chain", "index": i, "failed": bad, "instance": inst.to_dict()})
    log.info("corpus of %d instances checked in %.1fs", cfg["instances"], time.time() - start)

    if cfg["saturation"]:
        for name, (H, V, expected, L, k) in _saturation_cases().items():
            scan = quench_scan(H, V, ground_state(H))
            bound = theorem1_bound(H, V).theorem1
            dev = max(abs(scan.p_max - expected), abs(bound - expected))
            checks[f"saturation_{name}"] = {"n": 1, "worst": dev, "tol": 1e-6}
            if dev > 1e-6:
                dumps.append({"check": f"saturation_{name}", "p_max": scan.p_max, "bound": bound})
        H, V, expected, L, k = _saturation_cases()["two_qubit_global"]
        adv = advantage_ratio(quench_scan(H, V, ground_state(H)).p_max, L, 1.0, 2.0, 2.0, k)
        checks["advantage_gamma_equals_k"] = {"n": 1, "worst": abs(adv.gamma - k), "tol": 1e-6}

    if cfg["ensemble"] is not None:
        ens = dict(cfg["ensemble"])
        unknown = set(ens) - ENSEMBLE_KEYS
        if unknown:
            raise ConfigError(f"unknown ensemble fields: {sorted(unknown)}")
        fault = cfg["inject_fault"] or {}
        if set(fault) - FAULT_KEYS:
            raise ConfigError(f"unknown inject_fault fields: {sorted(set(fault) - FAULT_KEYS)}")
        ec = EnsembleConfig(
            L_values=tuple(ens.get("L_values", [4, 5, 6])),
            realizations=ens.get("realizations", 20),
            master_seed=cfg["seed"],
            h=ens.get("h", 1.0),
            potential=ens.get("potential", 2.0),
            n_steps=ens.get("n_steps", 1000),
            workers=workers,
            driving_scale=float(fault.get("scale_driving", 1.0)),
        )
        res = run_ensemble(ec)
        bad = _violating_records(res)
        checks["ensemble_bounds"] = {"n": len(res.records), "worst": float(len(bad)), "tol": 0.0}
        if res.failures:
            checks["ensemble_failures"] = {"n": len(res.failures), "worst": float(len(res.failures)), "tol": 0.0}
        for r in bad:
            dumps.append({"check": "ensemble_bounds", "L": r["L"], "realization": r["realization"],
                          "seed": cfg["seed"], "failed": r["violations"],
                          "driving_scale": ec.driving_scale})

    rows = []
    for name, c in checks.items():
        ok = c["worst"] <= c["tol"]
        rows.append({"check": name, "n": c["n"], "worst": c["worst"], "tolerance": c["tol"],
                     "status": "pass" if ok else "FAIL"})
        print(f"{'PASS' if ok else 'FAIL'}  {name:28s} n={c['n']:<5d} worst={c['worst']:.3e} tol={c['tol']:.1e}")
    write_rows(out / "verify.csv", ("check", "n", "worst", "tolerance", "status"), rows)
    if dumps:
        (out / "violations.json").write_text(json.dumps(dumps, indent=1, sort_keys=True) + "\n")
        print(f"{len(dumps)} violation(s); offending instances written to {out / 'violations.json'}")
        return EXIT_VIOLATION
    return EXIT_OK


# figures

def _figure(cfg: dict, out: Path, ec: EnsembleConfig, title: str, svg: bool) -> int:
    start = time.time()
    res = run_ensemble(ec)
    log.info("%d scans in %.1fs", len(res.records), time.time() - start)
    _write_ensemble(out, res)
    rows = []
    for st in res.stats:
        recs = [r for r in res.records if r["L"] == st["L"]]
        rows.append({
            "L": st["L"],
            "p_max_max": st["p_max_max"],
            "commutator_norm_max": st["commutator_norm_max"],
            "bound": max(r["nominal_bound"] for r in recs) if recs else None,
        })
    write_rows(out / "figure.csv", ("L", "p_max_max", "commutator_norm_max", "bound"), rows)
    if svg:
        line_plot(out / "figure.svg", [r["L"] for r in rows], {
            "max P_max": [r["p_max_max"] for r in rows],
            "max ||[H,V]||": [r["commutator_norm_max"] for r in rows],
            "bound": [r["bound"] for r in rows],
        }, title=title, xlabel="L", ylabel="power")
    for r in rows:
        print(f"L={r['L']:<3d} max P_max={r['p_max_max']:.6f} max ||[H,V]||={r['commutator_norm_max']:.6f} bound={r['bound']:.6f}")
    bad = _violating_records(res)
    if bad or res.failures:
        (out / "violations.json").write_text(json.dumps(
            {"violations": bad, "failures": res.failures}, indent=1, sort_keys=True, default=str) + "\n")
        print(f"{len(bad)} bound violation(s), {len(res.failures)} failure(s)")
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_figure1a(cfg: dict, out: Path, workers: int = 1, svg: bool = False) -> int:
    ec = EnsembleConfig(tuple(cfg["L_values"]), cfg["realizations"], cfg["seed"], "sy_random",
                        h=cfg["h"], potential=cfg["potential"], n_steps=cfg["n_steps"],
                        t_max=cfg["t_max"], workers=workers)
    return _figure(cfg, out, ec, "random all-to-all driving", svg)


def cmd_figure1b(cfg: dict, out: Path, workers: int = 1, svg: bool = False) -> int:
    ec = EnsembleConfig(tuple(cfg["L_values"]), 1, cfg.get("seed") or 0, "mixed_nn_global",
                        h=cfg["h"], V=cfg["V"], n_steps=cfg["n_steps"], t_max=cfg["t_max"],
                        workers=workers)
    return _figure(cfg, out, ec, "bond + global driving", svg)


# scaling and histogram

def cmd_scaling(cfg: dict, out: Path, workers: int = 1, svg: bool = False) -> int:
    Ls = list(cfg["L_values"])
    reals = cfg["realizations"]
    if isinstance(reals, dict):
        reals = {int(k): int(v) for k, v in reals.items()}
        missing = set(Ls) - set(reals)
        if missing:
            raise ConfigError(f"realizations missing for L={sorted(missing)}")
        for L in Ls:
            if reals[L] < 1000:
                log.info("downscaled: L=%d uses %d realizations (< 1000)", L, reals[L])
    start = time.time()
    data = norm_scaling_data(Ls, reals, cfg["seed"], workers, cfg["coupling_std"])
    log.info("raw norms computed in %.1fs", time.time() - start)
    means = [float(data[L].mean()) for L in Ls]
    fit = norm_scaling_fit(Ls, means)
    rows = [{
        "L": L, "n": data[L].size, "mean": m, "std": float(data[L].std()),
        "ansatz_fit": fit.alpha * float(ansatz(L)), "analytic_estimate": analytic_vmax_estimate(L),
    } for L, m in zip(Ls, means)]
    write_rows(out / "scaling.csv", ("L", "n", "mean", "std", "ansatz_fit", "analytic_estimate"), rows)
    write_rows(out / "fit.csv", ("alpha", "residual_norm", "analytic_constant", "loglog_slope"), [{
        "alpha": fit.alpha, "residual_norm": fit.residual_norm,
        "analytic_constant": fit.analytic_constant, "loglog_slope": fit.loglog_slope,
    }])
    if svg:
        line_plot(out / "scaling.svg", Ls, {
            "mean ||V0 - v0min||/2": means,
            "alpha sqrt(L^2(L-1))": [r["ansatz_fit"] for r in rows],
            "analytic estimate": [r["analytic_estimate"] for r in rows],
        }, title="raw driving norm", xlabel="L", ylabel="half spread")
    print(f"alpha = {fit.alpha:.6f}  residual_norm = {fit.residual_norm:.4f}  "
          f"analytic constant = {fit.analytic_constant:.6f}  log-log slope = {fit.loglog_slope:.4f}")
    return EXIT_OK


def cmd_histogram(cfg: dict, out: Path, workers: int = 1, svg: bool = False) -> int:
    if cfg["realizations"] < 1:
        raise ConfigError("histogram needs at least one realization")
    ec = EnsembleConfig(tuple(cfg["L_values"]), cfg["realizations"], cfg["seed"], "sy_random",
                        h=cfg["h"], potential=cfg["potential"], bin_width=cfg["bin_width"],
                        scan=False, workers=workers)
    res = run_ensemble(ec)
    write_rows(out / "hist.csv", HIST_COLUMNS, res.histogram)
    write_rows(out / "stats.csv", STATS_COLUMNS, res.stats)
    for st in res.stats:
        print(f"L={st['L']:<3d} n={st['n']} mean ||[H,V]||={st['commutator_norm_mean']:.4f} "
              f"std={st['commutator_norm_std']:.4f}")
    if svg:
        for L in ec.L_values:
            h = [r for r in res.histogram if r["L"] == L]
            line_plot(out / f"hist_L{L}.svg", [r["bin_lo"] for r in h], {"count": [r["count"] for r in h]},
                      title=f"||[H,V]|| histogram, L={L}", xlabel="bin", ylabel="count")
    return EXIT_VIOLATION if _violating_records(res) else EXIT_OK


# single quench

def driving_from_config(d: dict, num_sites: int, seed=None) -> DrivingSpec:
    d = dict(d)
    variant = d.pop("variant", None)
    target = d.pop("normalize", None)
    norm = FixedShiftedNorm(float(target)) if target is not None else None
    if variant == "sy_random":
        s = d.pop("seed", seed)
        if s is None:
            raise ConfigError("sy_random driving needs a seed")
        v = SYRandom(seed=s, coupling_std=float(d.pop("coupling_std", 1.0)))
    elif variant == "mixed_nn_global":
        v = MixedNNGlobal(float(d.pop("V", 1.0)))
    elif variant == "pauli_sum":
        v = ExplicitPauliSum(PauliSum.from_dict(d.pop("pauli_sum")))
    elif variant == "single_qubit_parallel":
        v = SingleQubitParallel(float(d.pop("amplitude")))
    else:
        raise ConfigError(f"unknown driving variant {variant!r}")
    if d:
        raise ConfigError(f"unknown driving fields: {sorted(d)}")
    return DrivingSpec(v, norm)


def cmd_quench(cfg: dict, out: Path, workers: int = 1, svg: bool = False) -> int:
    b = dict(cfg["battery"])
    if set(b) - {"num_sites", "field_strength"}:
        raise ConfigError(f"unknown battery fields: {sorted(set(b) - {'num_sites', 'field_strength'})}")
    battery = BatterySpec(int(b["num_sites"]), float(b.get("field_strength", 1.0)))
    H = build_battery(battery)
    V, info = build_driving(driving_from_config(cfg["driving"], battery.num_sites, cfg.get("seed")),
                            battery.num_sites)
    res = quench_scan(H, V, ground_state(H), t_max=cfg["t_max"], n_steps=cfg["n_steps"])
    res.to_csv(out / "quench.csv")
    t1 = theorem1_bound(H, V)
    if svg:
        idx = np.linspace(0, res.times.size - 1, min(res.times.size, 400)).astype(int)
        line_plot(out / "quench.svg", [round(float(t), 3) for t in res.times[idx]],
                  {"E(t)": list(res.energy[idx]), "P(t)": list(res.power[idx])},
                  title="quench", xlabel="t", ylabel="")
    print(f"p_max = {res.p_max:.10f} at t = {res.t_at_max:.10f}; Delta E = {t1.delta_e:.6g}; "
          f"bound = {t1.theorem1:.10f}; k = {info.k_locality}")
    return EXIT_VIOLATION if res.p_max > t1.theorem1 + SLACK else EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "figure1a": cmd_figure1a,
    "figure1b": cmd_figure1b,
    "scaling": cmd_scaling,
    "histogram": cmd_histogram,
    "quench": cmd_quench,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qbattery", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON config (schema_version %d)" % SCHEMA_VERSION)
        sp.add_argument("--out", type=Path, default=Path("out") / name, help="output directory")
        sp.add_argument("--seed", type=int, help="master seed; overrides the config")
        sp.add_argument("--workers", type=int, default=1, help="worker processes for ensembles")
        sp.add_argument("--svg", action="store_true", help="also emit SVG plots")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.command, args.config, args.seed)
        _setup_logging(args.out)
        log.info("config: %s", json.dumps(cfg, sort_keys=True))
        return COMMANDS[args.command](cfg, args.out, workers=args.workers, svg=args.svg)
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        # invalid parameter values surface from the library as ValueError/KeyError/TypeError
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
