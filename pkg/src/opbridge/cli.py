"""Command line front end: ``opbridge classify|simulate|analyze|decompose|compare``.

Exit codes: 0 success, 1 bad input or refused request, 2 a checked property
failed, 3 numerical failure.
"""

import argparse
import datetime
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .analysis import classify, convergence_diagnostic, decay_exponent
from .bridgecore import covariance, quadratic_variation
from .config import config_hash, load_config
from .errors import NumericalFailureError, OpBridgeError
from .grids import default_grid, parse_grid
from .sampler import PathEnsemble, append_terminal_zero, sample_euler, sample_exact
from .spectral import decompose
from .uniqueness import compare_laws, default_law_grid, respec_consistency

EXIT_OK, EXIT_INPUT, EXIT_ASSERT, EXIT_NUMERIC = 0, 1, 2, 3


class _Run:
    """Collects outputs under ``--out`` and writes the manifest last."""

    def __init__(self, command, out, model, seed=None):
        self.command = command
        self.out = out
        self.model = model
        self.seed = seed
        self.files = []
        self.started = _now()
        if out is not None:
            os.makedirs(out, exist_ok=True)

    def write(self, name, text):
        if self.out is None:
            sys.stdout.write(text if text.endswith("\n") else text + "\n")
            return
        path = os.path.join(self.out, name)
        fd, tmp = tempfile.mkstemp(dir=self.out, prefix=".tmp-")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
        self.files.append(name)

    def write_json(self, name, obj):
        self.write(name, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")

    def finish(self, extra=None):
        if self.out is None:
            return
        manifest = {
            "command": self.command,
            "config_hash": config_hash(self.model),
            "model_hash": self.model.model_hash,
            "master_seed": self.seed,
            "tool_version": __version__,
            "started": self.started,
            "finished": _now(),
            "outputs": list(self.files),
        }
        if extra:
            manifest.update(extra)
        self.write_json("manifest.json", manifest)

    def abort(self):
        for name in self.files:
            try:
                os.remove(os.path.join(self.out, name))
            except OSError:
                pass
        self.files = []


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def cmd_classify(args):
    model = load_config(args.config)
    report = classify(model)
    run = _Run("classify", args.out, model)
    if args.format == "json":
        run.write_json("classification.json", report.to_json())
    else:
        run.write("classification.txt", f"verdict: {report.verdict}\n{report.to_text()}\n")
    run.finish()
    return EXIT_OK


def cmd_simulate(args):
    model = load_config(args.config)
    times = parse_grid(args.grid, model.T)
    if args.pin_terminal and args.scheme != "exact":
        raise _UsageError("--pin-terminal requires --scheme exact")
    run = _Run("simulate", args.out, model, args.seed)
    try:
        sampler = sample_exact if args.scheme == "exact" else sample_euler
        ens = sampler(model, times, args.paths, args.seed)
        if args.pin_terminal:
            ens = append_terminal_zero(ens, model)
        if args.format == "json":
            run.write_json("paths.json", {"times": ens.times, "paths": ens.paths})
        else:
            run.write("paths.csv", ens.to_csv())
        run.finish({"ensemble": ens.manifest(), "grid": args.grid})
    except Exception:
        run.abort()
        raise
    return EXIT_OK


def _load_ensemble(directory, model):
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("model_hash") != model.model_hash:
        raise _UsageError(f"ensemble in {directory} was generated from a different model")
    with open(os.path.join(directory, "paths.csv"), encoding="utf-8") as fh:
        text = fh.read()
    info = manifest.get("ensemble", {})
    return PathEnsemble.from_csv(text, model.model_hash, info.get("scheme", ""), manifest.get("master_seed") or 0)


def cmd_analyze(args):
    model = load_config(args.config)
    reports = set(args.report) if args.report else {"all"}
    if "all" in reports:
        reports = {"covariance", "quadvar", "decay", "convergence"}
    run = _Run("analyze", args.out, model)
    summary = {"checks": {}}
    failed = False
    try:
        ensemble = _load_ensemble(args.ensemble, model) if args.ensemble else None
        grid = parse_grid(args.grid, model.T) if args.grid else default_grid(model.T)
        verdict = classify(model).verdict

        if "covariance" in reports:
            run.write("covariance.csv", covariance(model, grid).to_csv())
        if "quadvar" in reports:
            for i in range(1, model.d + 1):
                curve = quadratic_variation(model, i, grid)
                run.write(f"quadvar_{i}.csv", curve.to_csv())
                summary.setdefault("divergence_flag", curve.divergence_flag)
        if "decay" in reports and verdict == "bridge":
            dec = decompose(model.A, model.Sigma)
            out = [decay_exponent(model, j, ensemble).to_json() for j in range(dec.p)]
            run.write_json("decay.json", out)
            ok = all(r["within_band"] for r in out)
            summary["checks"]["decay"] = ok
            failed |= not ok
        if "convergence" in reports and ensemble is not None:
            rep = convergence_diagnostic(ensemble, model)
            run.write_json("convergence.json", rep.to_json())
            if rep.passed is not None:
                summary["checks"]["convergence"] = bool(rep.passed)
                failed |= not rep.passed
        if args.against:
            other = load_config(args.against)
            cmp = compare_laws(model, other, default_law_grid(model.T))
            cons = respec_consistency(model, other, cmp)
            run.write_json("comparison.json", {**cmp.to_json(), "respec_consistency": cons.to_json()})
            summary["comparison"] = cmp.verdict
            if cons.consistent is False:
                summary["checks"]["respec_consistency"] = False
                failed = True
        summary["verdict"] = verdict
        summary["status"] = "fail" if failed else "pass"
        run.write_json("report.json", summary)
        run.finish()
    except Exception:
        run.abort()
        raise
    return EXIT_ASSERT if failed else EXIT_OK


def cmd_decompose(args):
    model = load_config(args.config)
    dec = decompose(model.A, model.Sigma)
    run = _Run("decompose", args.out, model)
    run.write_json("decomposition.json", dec.to_json())
    run.finish()
    return EXIT_OK


def cmd_compare(args):
    model = load_config(args.config)
    other = load_config(args.against)
    cmp = compare_laws(model, other)
    run = _Run("compare", args.out, model)
    run.write_json("comparison.json", {**cmp.to_json(), "respec_consistency": respec_consistency(model, other, cmp).to_json()})
    run.finish()
    return EXIT_OK


class _UsageError(OpBridgeError):
    pass


def build_parser():
    p = argparse.ArgumentParser(prog="opbridge", description="Operator scaled Wiener bridges")
    p.add_argument("--version", action="version", version=f"opbridge {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--config", required=True, help="model config (JSON)")
        sp.add_argument("--out", required=out_required, help="output directory")

    sp = sub.add_parser("classify", help="bridge-property verdict")
    common(sp)
    sp.add_argument("--format", choices=["text", "json"], default="text")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("simulate", help="simulate sample paths")
    common(sp, out_required=True)
    sp.add_argument("--scheme", choices=["exact", "euler"], default="exact")
    sp.add_argument("--paths", type=int, default=100)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--grid", default="geometric:20", help="uniform:N:endfrac or geometric:K")
    sp.add_argument("--pin-terminal", action="store_true", help="append X_T = 0 (bridge models only)")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="covariance, quadratic variation, decay and convergence reports")
    common(sp)
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--analytic", action="store_true", help="use exact second moments only (default)")
    src.add_argument("--ensemble", help="directory written by 'simulate'")
    sp.add_argument(
        "--report", action="append", choices=["covariance", "quadvar", "decay", "convergence", "all"]
    )
    sp.add_argument("--against", help="second config for a law comparison")
    sp.add_argument("--grid", help="time grid for covariance/quadvar reports")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("decompose", help="spectral decomposition by real part")
    common(sp)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("compare", help="compare the laws of two models")
    common(sp)
    sp.add_argument("--against", required=True)
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except NumericalFailureError as exc:
        print(f"opbridge: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OpBridgeError, OSError) as exc:
        print(f"opbridge: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
