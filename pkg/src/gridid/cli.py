"""Command-line front end: simulate, tune, recover, evaluate, pipeline.

Every artifact gets a sidecar ``<file>.manifest.json`` recording the command,
a hash of its configuration, seeds, library versions and timings. The
artifact header carries the config hash and the manifest file name, never a
timestamp, so equal inputs give byte-identical artifacts.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from ._textio import SchemaError
from .dispatch import DispatchInfeasible
from .lp import LpIterationError
from .market import (ieee14_day_config, load_config, load_dataset, save_dataset,
                     simulate_day)
from .metrics import evaluate, unit_max
from .network import GridError, ieee14, load_grid
from .recovery import (DEFAULT_KAPPA, AdmmDivergence, Kappa, StoppingRule, admm_solve,
                       load_result, save_result)
from .tuning import TuningConfig, tune_kappa

log = logging.getLogger("gridid.cli")

FIXTURES = {"ieee14": (ieee14, ieee14_day_config)}

# exception type -> module tag in the error line
_ERROR_TAGS = (
    (SchemaError, "io"),
    (GridError, "netmodel"),
    (DispatchInfeasible, "dispatch"),
    (LpIterationError, "lpsolve"),
    (AdmmDivergence, "recovery"),
    (OSError, "io"),
    (ValueError, "input"),
    (RuntimeError, "runtime"),
)


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int | None
    versions: dict
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    started: str = ""

    def write(self, artifact):
        path = Path(str(artifact) + ".manifest.json")
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def _versions():
    return {"gridid": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def _config_hash(obj):
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _manifest(command, config, seed):
    return RunManifest(command=command, config_hash=_config_hash(config), seed=seed,
                       versions=_versions(),
                       started=time.strftime("%Y-%m-%dT%H:%M:%S%z"))


def _ref(manifest, artifact):
    return {"config_hash": manifest.config_hash, "file": Path(str(artifact) + ".manifest.json").name}


def _child_seeds(seed, n):
    """Independent integer seeds for each stage, all derived from one root seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _load_kappa_grid(path):
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict):
        doc = [doc[k] for k in ("k1", "k2", "k3", "k4")]
    return tuple(tuple(float(v) for v in g) for g in doc)


def kappa_grid_around(center=DEFAULT_KAPPA, factor=10.0):
    """3 x 3 x 3 x 3 grid with ``center`` in the middle of every axis."""
    return tuple((c / factor, c, c * factor) for c in center)


# -- subcommands -------------------------------------------------------------

def cmd_simulate(args):
    grid = load_grid(args.grid)
    over = {"seed": args.seed}
    if args.noise is not None:
        over["noise_std"] = args.noise
    if args.keep_uncongested:
        over["drop_uncongested"] = False
    cfg = load_config(args.config, **over)
    man = _manifest("simulate", {"grid": grid.to_dict(), "config": cfg.to_dict()}, args.seed)
    t0 = time.perf_counter()
    if args.lp_dump:
        Path(args.lp_dump).mkdir(parents=True, exist_ok=True)
    ds = simulate_day(cfg, grid, lp_dump_dir=args.lp_dump)
    man.timings["simulate_s"] = round(time.perf_counter() - t0, 3)
    save_dataset(ds, args.out, manifest=_ref(man, args.out))
    man.outputs.append(str(args.out))
    man.write(args.out)
    log.info("simulate: out=%s N=%d T=%d congested=%d", args.out, ds.N, ds.T,
             ds.meta.get("congested_intervals", 0))
    return 0


def cmd_tune(args):
    ds = load_dataset(args.data)
    grid = _load_kappa_grid(args.grid) if args.grid else kappa_grid_around()
    cfg = TuningConfig(grid, args.mask, args.repeats, args.seed)
    man = _manifest("tune", {"data": Path(args.data).name, "grid": grid, "mask": args.mask,
                             "repeats": args.repeats, "rho": args.rho,
                             "max_iter": args.max_iter}, args.seed)
    t0 = time.perf_counter()
    best, table = tune_kappa(ds.L, cfg, args.rho, StoppingRule(max_iter=args.max_iter),
                             n_jobs=args.jobs)
    man.timings["tune_s"] = round(time.perf_counter() - t0, 3)
    doc = {
        "format": 1, "kind": "tuning", "best_kappa": list(best),
        "mask_fraction": args.mask, "repeats": args.repeats, "seed": args.seed,
        "rho": args.rho, "max_iter": args.max_iter, "manifest": _ref(man, args.out),
        "table": [{"kappa": list(k), "mean_sq_error": e, "errors": errs}
                  for k, e, errs in table],
    }
    Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    man.outputs.append(str(args.out))
    man.write(args.out)
    print(",".join(f"{v:g}" for v in best))
    return 0


def cmd_recover(args):
    ds = load_dataset(args.data)
    kappa = Kappa.coerce(args.kappa)
    stop = StoppingRule(args.eps_abs, args.eps_rel, args.max_iter)
    man = _manifest("recover", {"data": Path(args.data).name, "kappa": kappa,
                                "rho": args.rho, "stop": asdict(stop)}, None)
    res = admm_solve(ds.L, kappa, args.rho, stop)
    man.timings["admm_s"] = round(res.seconds, 3)
    save_result(res, args.out, manifest=_ref(man, args.out))
    man.outputs.append(str(args.out))
    man.write(args.out)
    return 0


def _truth(path_or_fixture):
    if path_or_fixture in FIXTURES:
        return FIXTURES[path_or_fixture][0]()
    return load_grid(path_or_fixture)


def _write_report(report, res, truth_B, out, export_dir, extra=None):
    doc = {"format": 1, "kind": "evaluation", **report.to_dict(),
           "converged": res.converged, "iterations": res.iterations,
           "primal_residual": res.primal_residual, "dual_residual": res.dual_residual}
    if extra:
        doc.update(extra)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    if export_dir:
        d = Path(export_dir)
        d.mkdir(parents=True, exist_ok=True)
        np.savetxt(d / "B_true_unitmax.csv", unit_max(truth_B), delimiter=",", fmt="%.17g")
        np.savetxt(d / "B_hat_unitmax.csv", unit_max(res.B_hat), delimiter=",", fmt="%.17g")
        np.savetxt(d / "residual_history.csv", res.history, delimiter=",", fmt="%.17g",
                   header=",".join(res.HISTORY_COLUMNS), comments="")
    return doc


def cmd_evaluate(args):
    res = load_result(args.result)
    grid = _truth(args.truth)
    B = grid.laplacian.reduced
    report = evaluate(res.B_hat, res.S_hat, B, args.tau)
    _write_report(report, res, B, args.out, args.export_dir)
    return 0


def cmd_pipeline(args):
    if args.fixture not in FIXTURES:
        raise ValueError(f"unknown fixture {args.fixture!r}; choose from {sorted(FIXTURES)}")
    make_grid, make_cfg = FIXTURES[args.fixture]
    grid = make_grid()
    sim_seed, tune_seed = _child_seeds(args.seed, 2)
    cfg = make_cfg(seed=sim_seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    man = _manifest("pipeline", {"fixture": args.fixture, "tune": args.tune,
                                 "kappa": args.kappa, "rho": args.rho,
                                 "max_iter": args.max_iter}, args.seed)

    t0 = time.perf_counter()
    ds = simulate_day(cfg, grid)
    man.timings["simulate_s"] = round(time.perf_counter() - t0, 3)
    save_dataset(ds, out / "dataset.txt", manifest=_ref(man, out / "report.json"))

    kappa = Kappa.coerce(args.kappa)
    if args.tune:
        t0 = time.perf_counter()
        kappa, table = tune_kappa(ds.L, TuningConfig(kappa_grid_around(), 0.1, args.repeats,
                                                     tune_seed),
                                  args.rho, StoppingRule(max_iter=args.tune_max_iter))
        man.timings["tune_s"] = round(time.perf_counter() - t0, 3)

    res = admm_solve(ds.L, kappa, args.rho, StoppingRule(max_iter=args.max_iter))
    man.timings["admm_s"] = round(res.seconds, 3)
    save_result(res, out / "result.txt", manifest=_ref(man, out / "report.json"))

    B = grid.laplacian.reduced
    report = evaluate(res.B_hat, res.S_hat, B, args.tau)
    congested = ds.congested_line_set()
    extra = {
        "seed": args.seed, "kappa": list(kappa), "rho": args.rho,
        "congested_intervals": ds.meta.get("congested_intervals"),
        "distinct_congested_lines": len(congested),
        "under_excited": len(congested) < 5,
        "residual_history": "export/residual_history.csv",
        "manifest": _ref(man, out / "report.json"),
    }
    _write_report(report, res, B, out / "report.json", out / "export", extra)
    man.outputs += [str(out / n) for n in ("dataset.txt", "result.txt", "report.json")]
    man.write(out / "report.json")
    log.info("pipeline: f1=%.3f precision=%.3f recall=%.3f converged=%s out=%s",
             report.f1, report.precision, report.recall, res.converged, out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="gridid", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"gridid {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a day of dispatch and write the price dataset")
    s.add_argument("--grid", required=True, help="grid description JSON")
    s.add_argument("--config", required=True, help="simulation config JSON")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--noise", type=float, help="override noise std of the price model")
    s.add_argument("--keep-uncongested", action="store_true")
    s.add_argument("--lp-dump", metavar="DIR", help="write final simplex tableaux here")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("tune", help="pick kappa by masked-entry reconstruction")
    t.add_argument("--data", required=True)
    t.add_argument("--grid", help="kappa grid JSON: [[k1...],[k2...],[k3...],[k4...]]")
    t.add_argument("--repeats", type=int, default=10)
    t.add_argument("--mask", type=float, default=0.1)
    t.add_argument("--rho", type=float, default=1e3)
    t.add_argument("--max-iter", type=int, default=2000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--jobs", type=int, default=1)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_tune)

    r = sub.add_parser("recover", help="estimate the reduced Laplacian from prices")
    r.add_argument("--data", required=True)
    r.add_argument("--kappa", default=",".join(f"{v:g}" for v in DEFAULT_KAPPA))
    r.add_argument("--rho", type=float, default=1e3)
    r.add_argument("--eps-abs", type=float, default=StoppingRule.eps_abs)
    r.add_argument("--eps-rel", type=float, default=StoppingRule.eps_rel)
    r.add_argument("--max-iter", type=int, default=StoppingRule.max_iter)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_recover)

    e = sub.add_parser("evaluate", help="compare a recovered Laplacian with the true grid")
    e.add_argument("--result", required=True)
    e.add_argument("--truth", required=True, help="grid JSON or fixture name")
    e.add_argument("--tau", type=float, default=0.05)
    e.add_argument("--out", help="report path (default stdout)")
    e.add_argument("--export-dir", help="write unit-max matrices and residuals as CSV")
    e.set_defaults(func=cmd_evaluate)

    q = sub.add_parser("pipeline", help="simulate, recover and evaluate end to end")
    q.add_argument("--fixture", default="ieee14")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--kappa", default=",".join(f"{v:g}" for v in DEFAULT_KAPPA))
    q.add_argument("--rho", type=float, default=1e3)
    q.add_argument("--max-iter", type=int, default=StoppingRule.max_iter)
    q.add_argument("--tau", type=float, default=0.05)
    q.add_argument("--tune", action="store_true", help="run the kappa search first")
    q.add_argument("--repeats", type=int, default=10)
    q.add_argument("--tune-max-iter", type=int, default=2000)
    q.add_argument("--out-dir", default="gridid-run")
    q.set_defaults(func=cmd_pipeline)
    return p


def setup_logging():
    level = os.environ.get("GRIDID_LOG", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="level=%(levelname)s logger=%(name)s %(message)s",
        stream=sys.stderr,
    )


def main(argv=None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - categorized below
        tag = next((t for cls, t in _ERROR_TAGS if isinstance(exc, cls)), "internal")
        print(f"gridid {args.command}: error[{tag}]: {exc}", file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
