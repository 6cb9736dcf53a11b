"""Command-line experiment runner.

Every command takes an optional JSON config (``--config``) whose keys can be
overridden by flags of the same name.  Records go to ``<out>/<name>.jsonl``
one object per line, with a CSV summary derived from that stream.  The output
directory defaults to $AQC_WORKBENCH_OUT or ./aqc_out.

Exit codes: 0 success, 1 internal error or failed invariant, 2 invalid or
unembeddable input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__

OUT_ENV = "AQC_WORKBENCH_OUT"
DEFAULT_OUT = "aqc_out"
ENSEMBLES = ("exact_cover", "3sat", "mis", "clique", "random_field")


class ConfigError(ValueError):
    pass


# --- config schema ----------------------------------------------------------


def _opt_str(v):
    if v is None or isinstance(v, str):
        return v
    raise ConfigError("expected a string")


def _choice(*options):
    def check(v):
        if v not in options:
            raise ConfigError(f"expected one of {options}")
        return v

    return check


def _int(lo=None):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
            raise ConfigError("expected an integer")
        if lo is not None and v < lo:
            raise ConfigError(f"must be >= {lo}")
        return int(v)

    return check


def _float(lo=None, strict=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError("expected a number")
        if lo is not None and (v <= lo if strict else v < lo):
            raise ConfigError(f"must be {'>' if strict else '>='} {lo}")
        return float(v)

    return check


def _bool(v):
    if not isinstance(v, bool):
        raise ConfigError("expected true or false")
    return v


def _list(item):
    def check(v):
        if not isinstance(v, list):
            v = [v]
        if not v:
            raise ConfigError("expected a non-empty list")
        return [item(x) for x in v]

    return check


def _gamma0(v):
    if isinstance(v, str):
        return _choice("polarization", "large")(v)
    return _float(0, strict=True)(v)


SCHEMAS: dict[str, dict[str, tuple[Any, Callable]]] = {
    "gen": {
        "kind": ("graph", _choice("graph", "3sat", "exact_cover", "planar")),
        "n": (10, _int(1)),
        "p": (0.5, _float(0)),
        "ratio": (4.25, _float(0, strict=True)),
        "seed": (0, _int(0)),
        "output": (None, _opt_str),
    },
    "embed": {
        "graph": (None, _opt_str),
        "name": (None, _opt_str),
        "chain_strength": (1.0, _float(0, strict=True)),
        "field_mode": ("compensated", _choice("compensated", "homogeneous")),
    },
    "evolve": {
        "ensemble": ("exact_cover", _choice(*ENSEMBLES)),
        "instance": (None, _opt_str),
        "n": ([6], _list(_int(1))),
        "instances": (1, _int(1)),
        "seed": (0, _int(0)),
        "taus": ([10.0], _list(_float(0, strict=True))),
        "profile": ("linear", _choice("linear", "quadratic")),
        "gamma0": ("polarization", _gamma0),
        "threshold": (0.125, _float(0, strict=True)),
        "median": (False, _bool),
        "gap": (False, _bool),
        "jobs": (1, _int(1)),
        "name": ("evolve", _opt_str),
    },
    "anneal": {
        "rows": (3, _int(1)),
        "cols": (4, _int(1)),
        "instances": (20, _int(2)),
        "seed": (0, _int(0)),
        "taus": ([1.0, 10.0, 100.0], _list(_float(1))),
        "quantum": (True, _bool),
        "gamma0": ("polarization", _gamma0),
        "name": ("anneal", _opt_str),
    },
    "gapscan": {
        "kind": ("grover", _choice("grover", "ensemble")),
        "n": ([2, 3, 4, 5, 6, 7, 8, 9, 10], _list(_int(1))),
        "ensemble": ("exact_cover", _choice(*ENSEMBLES)),
        "instance": (None, _opt_str),
        "instances": (1, _int(1)),
        "seed": (0, _int(0)),
        "profile": ("linear", _choice("linear", "quadratic")),
        "gamma0": ("polarization", _gamma0),
        "grid_points": (41, _int(3)),
        "name": ("gapscan", _opt_str),
    },
    "verify": {
        "suite": (["mis", "scaled_family", "perturbation", "spin_boson"],
                  _list(_choice("mis", "scaled_family", "perturbation", "spin_boson"))),
        "graph": (None, _opt_str),
        "max_n": (5, _int(1)),
        "trials": (100, _int(0)),
        "seed": (0, _int(0)),
        "name": ("verify", _opt_str),
    },
    "report": {
        "input": ([], lambda v: [str(x) for x in (v if isinstance(v, list) else [v])]),
        "output": (None, _opt_str),
    },
}


def build_config(command: str, config_path: str | None, overrides: dict) -> dict:
    schema = SCHEMAS[command]
    raw: dict = {}
    if config_path:
        try:
            raw = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {unknown}")
    cfg = {}
    for key, (default, check) in schema.items():
        value = raw.get(key, default)
        try:
            cfg[key] = check(value) if value is not None else None
        except ConfigError as exc:
            raise ConfigError(f"{command}.{key}: {exc} (got {value!r})") from None
    return cfg


def _flag_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


EXECUTION_KEYS = ("jobs", "name", "output")


def config_hash(cfg: dict) -> str:
    """Hash of the result-determining fields; worker count and output naming are excluded."""
    keep = {k: v for k, v in cfg.items() if k not in EXECUTION_KEYS}
    return hashlib.sha256(json.dumps(keep, sort_keys=True).encode()).hexdigest()[:16]


# --- records ----------------------------------------------------------------


class RecordWriter:
    """Streams one JSON object per line and flushes after each record."""

    def __init__(self, path: Path, cfg: dict):
        self.path = path
        self.cfg_hash = config_hash(cfg)
        path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = path.open("w")
        self.failed = 0

    def write(self, rec: dict, wall_time: float | None = None) -> None:
        rec = {"config_hash": self.cfg_hash, "version": __version__, **rec}
        if rec.get("status") == "failed":
            self.failed += 1
        if wall_time is not None:
            rec["timing"] = {"wall_time": wall_time}
        self._fh.write(json.dumps(_plain(rec), sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def read_records(paths) -> list[dict]:
    out = []
    for p in paths:
        with open(p) as fh:
            out.extend(json.loads(line) for line in fh if line.strip())
    return out


SUMMARY_KEYS = ("method", "ensemble", "n", "tau")
SUMMARY_VALUES = ("success", "residual", "gap_min", "minimal_tau")


def summarize(records: list[dict]) -> str:
    """CSV of mean values grouped by (method, ensemble, n, tau); a pure function of the records."""
    groups: dict[tuple, list[dict]] = {}
    for r in records:
        if r.get("status", "ok") != "ok":
            continue
        key = tuple(r.get(k) for k in SUMMARY_KEYS)
        groups.setdefault(key, []).append(r)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(SUMMARY_KEYS) + ["count"] + [f"mean_{v}" for v in SUMMARY_VALUES])
    for key in sorted(groups, key=lambda k: tuple("" if x is None else str(x).zfill(12) for x in k)):
        rows = groups[key]
        means = []
        for v in SUMMARY_VALUES:
            vals = [r[v] for r in rows if isinstance(r.get(v), (int, float)) and not isinstance(r.get(v), bool)]
            means.append(repr(float(np.mean(vals))) if vals else "")
        w.writerow(["" if k is None else k for k in key] + [len(rows)] + means)
    return buf.getvalue()


def _write_summary(out: Path, name: str) -> None:
    (out / f"{name}.csv").write_text(summarize(read_records([out / f"{name}.jsonl"])))


# --- instances --------------------------------------------------------------


def instance_hash(hp) -> str:
    return hashlib.sha256(np.ascontiguousarray(hp.diagonal()).tobytes()).hexdigest()[:16]


def make_instance(ensemble: str, n: int, seed):
    """(hamiltonian or None for a discarded draw, metadata) for an ensemble draw."""
    from . import graphs, hamiltonian as ham

    if ensemble == "exact_cover":
        return ham.build_exact_cover_hamiltonian(graphs.gen_exact_cover_usa(n, seed)), {}
    if ensemble == "3sat":
        f = graphs.gen_random_3sat(n, seed=seed)
        if graphs.count_sat(f) == 0:
            return None, {"discarded": "unsatisfiable"}
        return ham.build_3sat_hamiltonian(f), {}
    if ensemble in ("mis", "clique"):
        g = graphs.gen_random_graph(n, 0.5, seed)
        if ensemble == "clique":
            g = graphs.complement(g)
        return ham.ising_to_diagonal(ham.build_mis_ising_corrected(g)), {}
    if ensemble == "random_field":
        rows = max(r for r in range(1, int(math.isqrt(n)) + 1) if n % r == 0)
        g = graphs.Graph.grid(rows, n // rows)
        return ham.ising_to_diagonal(ham.build_random_field_ising(n, g.edge_list(), seed)), {}
    raise ConfigError(f"unknown ensemble {ensemble!r}")


def load_instance(path: str):
    """Diagonal Hamiltonian from a file: .cnf (3-SAT), .ec (exact cover), .json (Ising), else a graph (MIS)."""
    from . import graphs, hamiltonian as ham

    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read instance {path}: {exc}") from exc
    if p.suffix == ".cnf":
        return ham.build_3sat_hamiltonian(graphs.parse_dimacs(text))
    if p.suffix == ".ec":
        return ham.build_exact_cover_hamiltonian(graphs.parse_exact_cover(text))
    if p.suffix == ".json":
        try:
            return ham.ising_to_diagonal(ham.IsingModel.from_json(text))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"malformed Ising JSON {path}: {exc}") from exc
    return ham.ising_to_diagonal(ham.build_mis_ising_corrected(graphs.parse_graph(text)))


def _instances(cfg: dict):
    """Yield (tag, hamiltonian) for the configured ensemble or instance file."""
    if cfg["instance"]:
        yield {"ensemble": "file", "n": None, "instance_index": 0, "seed": None}, load_instance(cfg["instance"])
        return
    for n in cfg["n"]:
        for i in range(cfg["instances"]):
            draw = 0
            while True:
                hp, meta = make_instance(cfg["ensemble"], n, np.random.SeedSequence([cfg["seed"], n, i, draw]))
                if hp is not None:
                    break
                draw += 1
            yield {"ensemble": cfg["ensemble"], "n": n, "instance_index": i, "seed": cfg["seed"],
                   "discarded_draws": draw}, hp


def _resolve_gamma0(cfg: dict, hp) -> float:
    from .evolve import gamma0_for

    g = cfg["gamma0"]
    return gamma0_for(hp, g) if isinstance(g, str) else float(g)


# --- commands ---------------------------------------------------------------


def cmd_gen(cfg: dict, out: Path) -> int:
    from . import graphs

    kind, n, seed = cfg["kind"], cfg["n"], cfg["seed"]
    meta = [f"kind={kind} n={n} seed={seed} version={__version__}"]
    if kind == "graph":
        if not 0 <= cfg["p"] <= 1:
            raise ConfigError("p must lie in [0, 1]")
        meta[0] += f" p={cfg['p']}"
        text, ext = graphs.format_graph(graphs.gen_random_graph(n, cfg["p"], seed), meta), "txt"
    elif kind == "planar":
        text, ext = graphs.format_graph(graphs.gen_planar_subcubic(n, seed), meta), "txt"
    elif kind == "3sat":
        meta[0] += f" ratio={cfg['ratio']}"
        text, ext = graphs.format_dimacs(graphs.gen_random_3sat(n, cfg["ratio"], seed), meta), "cnf"
    else:
        text, ext = graphs.format_exact_cover(graphs.gen_exact_cover_usa(n, seed), meta), "ec"
    path = Path(cfg["output"]) if cfg["output"] else out / f"{kind}_n{n}_s{seed}.{ext}"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(path)
    return 0


def cmd_embed(cfg: dict, out: Path) -> int:
    from . import embedding as emb
    from .graphs import read_graph
    from .hamiltonian import build_mis_ising_corrected

    if not cfg["graph"]:
        raise ConfigError("embed needs a graph file")
    try:
        g = read_graph(cfg["graph"])
    except OSError as exc:
        raise ConfigError(f"cannot read graph: {exc}") from exc
    name = cfg["name"] or Path(cfg["graph"]).stem
    layout = emb.embed_grid(g)
    nl = emb.layout_to_netlist(layout)
    verdict = emb.check_netlist(nl, g)
    if not verdict:
        raise RuntimeError(f"netlist invariant violated: {verdict.reason}")
    physical = emb.netlist_to_ising(nl, build_mis_ising_corrected(g), cfg["chain_strength"], cfg["field_mode"])
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.layout.json").write_text(json.dumps(layout.to_dict(), sort_keys=True))
    (out / f"{name}.netlist.json").write_text(nl.to_json())
    (out / f"{name}.netlist.txt").write_text(emb.netlist_ascii(nl) + "\n")
    (out / f"{name}.physical.json").write_text(physical.to_json())
    print(emb.netlist_ascii(nl))
    print(f"sites={len(nl.sites)} area={layout.area} afm={nl.count(emb.AFM)} fm={nl.count(emb.FM)}")
    return 0


def _evolve_task(args):
    tag, hp, taus, profile, gamma0_spec, gap = args
    from .evolve import IntegrationError, Schedule, SpectrumError, run_adiabatic

    recs = []
    try:
        gamma0 = _resolve_gamma0({"gamma0": gamma0_spec}, hp)
    except SpectrumError as exc:
        return [({**tag, "status": "failed", "error": str(exc)}, 0.0)]
    ihash = instance_hash(hp)
    for tau in taus:
        t0 = time.perf_counter()
        base = {**tag, "method": "quantum", "instance_hash": ihash, "tau": tau, "profile": profile,
                "gamma0": gamma0}
        try:
            res = run_adiabatic(hp, Schedule(tau, gamma0, profile), scan_gap=gap)
        except (IntegrationError, SpectrumError) as exc:
            recs.append(({**base, "status": "failed", "error": str(exc)}, time.perf_counter() - t0))
            continue
        rec = {**base, "status": "ok", "success": res.success_probability, "residual": res.residual_energy,
               "norm_drift": res.norm_drift, "steps": res.steps}
        if res.min_gap is not None:
            rec["gap_min"], rec["gamma_at_gap"] = res.min_gap
        recs.append((rec, time.perf_counter() - t0))
    return recs


def _map(fn, tasks, jobs: int):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))  # preserves task order


def cmd_evolve(cfg: dict, out: Path) -> int:
    if cfg["median"]:
        return _cmd_median(cfg, out)
    writer = RecordWriter(out / f"{cfg['name']}.jsonl", cfg)
    try:
        tasks = [(tag, hp, cfg["taus"], cfg["profile"], cfg["gamma0"], cfg["gap"]) for tag, hp in _instances(cfg)]
        for recs in _map(_evolve_task, tasks, cfg["jobs"]):
            for rec, wall in recs:
                writer.write(rec, wall)
    finally:
        writer.close()
    _write_summary(out, cfg["name"])
    return 1 if writer.failed else 0


def _cmd_median(cfg: dict, out: Path) -> int:
    from .evolve import median_runtime_experiment

    if not 0 < cfg["threshold"] < 1:
        raise ConfigError("threshold must lie in (0, 1)")
    if cfg["instance"]:
        raise ConfigError("the median experiment draws from an ensemble, not a file")

    def draw(n, k):
        return make_instance(cfg["ensemble"], n, np.random.SeedSequence([cfg["seed"], n, k]))

    exp = median_runtime_experiment(draw, cfg["n"], cfg["instances"], cfg["taus"], cfg["threshold"])
    writer = RecordWriter(out / f"{cfg['name']}.jsonl", cfg)
    try:
        for rec in exp.records:
            wall = rec.pop("wall_time", None)
            writer.write({"method": "quantum", "ensemble": cfg["ensemble"], "status": "ok", **rec}, wall)
        for row in exp.rows:
            writer.write({"method": "median_runtime", "ensemble": cfg["ensemble"], "status": "ok", "n": row.n,
                          "minimal_tau": row.median_tau, "minimal_taus": row.minimal_taus,
                          "censored": row.censored, "discarded": row.discarded})
        writer.write({"method": "median_fit", "ensemble": cfg["ensemble"], "status": "ok", "slope": exp.slope,
                      "slope_stderr": exp.slope_stderr, "slope_ci": exp.slope_ci,
                      "fit_residuals": exp.fit_residuals})
    finally:
        writer.close()
    _write_summary(out, cfg["name"])
    for row in exp.rows:
        print(f"n={row.n} median_tau={row.median_tau} censored={row.censored} discarded={row.discarded}")
    print(f"slope={exp.slope} ci={exp.slope_ci}")
    return 0


def cmd_anneal(cfg: dict, out: Path) -> int:
    from .anneal import non_increasing_within, residual_scaling_experiment
    from .graphs import Graph
    from .hamiltonian import build_random_field_ising

    g = Graph.grid(cfg["rows"], cfg["cols"])
    if g.n > 20:
        raise ConfigError("grid too large for exact ground energies (n <= 20)")
    models = [build_random_field_ising(g.n, g.edge_list(), np.random.SeedSequence([cfg["seed"], i]))
              for i in range(cfg["instances"])]
    rule = cfg["gamma0"] if isinstance(cfg["gamma0"], str) else "polarization"
    exp = residual_scaling_experiment(models, cfg["taus"], cfg["seed"], cfg["quantum"], rule)
    writer = RecordWriter(out / f"{cfg['name']}.jsonl", cfg)
    try:
        for rec in exp.records:
            wall = rec.pop("wall_time")
            writer.write({"ensemble": "random_field", "n": g.n, "status": "ok", **rec}, wall)
        for meth, s in exp.summaries.items():
            writer.write({
                "method": f"{meth}_fit", "ensemble": "random_field", "n": g.n, "status": "ok",
                "taus": s.taus, "mean_residual": s.mean, "stderr": s.stderr,
                "xi": s.fit.xi if s.fit else None, "xi_ci": s.fit.ci if s.fit else None, "fit_note": s.fit_note,
                "non_increasing": non_increasing_within(s.mean, s.stderr),
            })
    finally:
        writer.close()
    _write_summary(out, cfg["name"])
    for meth, s in exp.summaries.items():
        print(meth, " ".join(f"{t:g}:{m:.4g}+-{e:.2g}" for t, m, e in zip(s.taus, s.mean, s.stderr)))
    return 0


def cmd_gapscan(cfg: dict, out: Path) -> int:
    from .evolve import Schedule, grover_gap_curve, grover_gap_scan, min_gap_scan

    writer = RecordWriter(out / f"{cfg['name']}.jsonl", cfg)
    try:
        if cfg["kind"] == "grover":
            for n in cfg["n"]:
                if n > 14:
                    raise ConfigError("grover gap scan supports n <= 14")
                t0 = time.perf_counter()
                scan = grover_gap_scan(n)
                writer.write({"method": "grover", "n": n, "status": "ok", "gap_min": scan.gap, "s_min": scan.gamma,
                              "closed_form": grover_gap_curve(n, 0.5)}, time.perf_counter() - t0)
                print(f"n={n} gap_min={scan.gap:.12g}")
        else:
            for tag, hp in _instances(cfg):
                t0 = time.perf_counter()
                gamma0 = _resolve_gamma0(cfg, hp)
                scan = min_gap_scan(hp, Schedule(1.0, gamma0, cfg["profile"]), cfg["grid_points"])
                writer.write({**tag, "method": "gapscan", "status": "ok", "instance_hash": instance_hash(hp),
                              "gamma0": gamma0, "gap_min": scan.gap, "gamma_at_gap": scan.gamma},
                             time.perf_counter() - t0)
    finally:
        writer.close()
    _write_summary(out, cfg["name"])
    return 0


def cmd_verify(cfg: dict, out: Path) -> int:
    from . import robustness as rb
    from .graphs import connected_graphs_upto, read_graph

    if cfg["graph"]:
        try:
            graphs = [read_graph(cfg["graph"])]
        except OSError as exc:
            raise ConfigError(f"cannot read graph: {exc}") from exc
    else:
        graphs = connected_graphs_upto(cfg["max_n"])
    report: dict[str, Any] = {"version": __version__, "config_hash": config_hash(cfg), "invariants": {}}
    suites = cfg["suite"]
    if "mis" in suites or "scaled_family" in suites:
        report["reference_findings"] = rb.reference_findings()
    if "mis" in suites:
        report["mis"] = [rb.mis_correspondence_verifier(g, model)
                         for g in graphs for model in ("unit", "corrected")]
        report["invariants"]["corrected_model_equal"] = all(
            r["conventions"]["in_set_plus"]["relation"] == "equal" for r in report["mis"] if r["model"] == "corrected"
        )
    if "scaled_family" in suites:
        report["scaled_family"] = [rb.scaled_family_claim_verifier(g, cfg["trials"], [cfg["seed"], k])
                         for k, g in enumerate(graphs)]
        report["scaled_family_counterexamples"] = sum(len(r["counterexamples"]) for r in report["scaled_family"])
    if "perturbation" in suites:
        reps = rb.perturbation_bound_suite(max(cfg["trials"], 1), cfg["seed"])
        report["perturbation"] = {"count": len(reps), "within_bound": sum(r.within_bound for r in reps),
                                  "max_ratio": max(r.correction_norm / r.bound for r in reps)}
        report["invariants"]["perturbation_bound"] = all(r.within_bound for r in reps)
        report["invariants"]["pauli_terms_single_target"] = rb.pauli_terms_single_target(4)
    if "spin_boson" in suites:
        grid = rb.expansion_grid_check()
        report["spin_boson"] = grid
        report["invariants"]["spin_boson_expansion"] = grid["all_within"]
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg['name']}.json"
    path.write_text(rb.report_json(report))
    failed = [k for k, ok in report["invariants"].items() if not ok]
    print(f"report: {path}")
    if "scaled_family" in report:
        print(f"documented scaled-family counterexamples: {report['scaled_family_counterexamples']}")
    if failed:
        print(f"failed invariants: {failed}", file=sys.stderr)
        return 1
    return 0


def cmd_report(cfg: dict, out: Path) -> int:
    inputs = cfg["input"] or sorted(str(p) for p in out.glob("*.jsonl"))
    if not inputs:
        raise ConfigError("no JSONL inputs")
    try:
        records = read_records(inputs)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read records: {exc}") from exc
    text = summarize(records)
    if cfg["output"]:
        Path(cfg["output"]).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "embed": cmd_embed,
    "evolve": cmd_evolve,
    "anneal": cmd_anneal,
    "gapscan": cmd_gapscan,
    "verify": cmd_verify,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqc-workbench", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name, help=(COMMANDS[name].__doc__ or name).split("\n")[0])
        p.add_argument("--config", help="JSON config file; flags override its fields")
        for key, (default, _) in schema.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(default, list):
                p.add_argument(flag, dest=key, nargs="+", type=_flag_value, default=None,
                               help=f"default {default}")
            else:
                p.add_argument(flag, dest=key, type=_flag_value, default=None, help=f"default {default!r}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out")}
    from .embedding import EmbeddingError
    from .graphs import EnumerationLimitError, GenerationError

    try:
        cfg = build_config(args.command, args.config, overrides)
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, EmbeddingError, EnumerationLimitError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
