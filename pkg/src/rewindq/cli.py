"""Command-line interface: ``rewindq profile | spectrum | plan | replay``.

Exit codes: 0 success, 2 usage error, 3 numerical failure. Diagnostics go to
stderr; stdout carries data only when no output file is given.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from rewindq import __version__
from rewindq.exceptions import ConfigError, DegeneracyError, FitError, NumericalError, ValidationError
from rewindq.experiments import (
    GATE_MODES,
    METHODS,
    ExperimentConfig,
    aggregate_median,
    run_trials,
    sample_gates,
    summarize,
)
from rewindq.planner import constant_gap_plan
from rewindq.transfer import (
    contraction_coefficient,
    noisy_transfer_operator,
    operator_norm_distance,
    spectrum,
    transfer_operator,
)

CSV_HEADER = "# rewindq-csv v1\ntrial,method,noise_p,x,fidelity\n"
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


class UsageError(Exception):
    pass


def git_blob_hash(data: bytes) -> str:
    """Content hash computed the way ``git hash-object`` does."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _clean(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def profiles_to_csv(profiles) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER)
    for p in profiles:
        for x, f in zip(p.x_values, p.fidelity):
            buf.write(f"{p.trial},{p.method},{p.noise_p!r},{int(x)},{float(f)!r}\n")
    return buf.getvalue()


def _emit(text: str, path: str | None, outputs: dict) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    data = text.encode()
    Path(path).write_bytes(data)
    outputs[str(path)] = git_blob_hash(data)


def _write_manifest(path: str | None, command: str, config: dict, outputs: dict, started: float) -> None:
    if path is None:
        return
    manifest = {
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "version": __version__,
        "wall_clock_s": round(time.time() - started, 3),
        "outputs": outputs,
    }
    Path(path).write_text(_dump_json(manifest))


# -- commands -------------------------------------------------------------------


def cmd_profile(args) -> int:
    started = time.time()
    try:
        cfg = ExperimentConfig(
            n=args.n,
            trials=args.trials,
            seed=args.seed,
            noise_p=args.noise_p,
            method=args.method,
            gate_mode=args.gate_mode,
        )
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    profiles = run_trials(cfg, args.workers)
    outputs: dict = {}
    _emit(profiles_to_csv(profiles), args.out, outputs)

    summary = summarize(profiles).to_dict()
    summary_path = args.summary or (f"{args.out}.summary.json" if args.out else None)
    if summary_path is None:
        sys.stderr.write(_dump_json(summary))
    else:
        _emit(_dump_json(summary), summary_path, outputs)
    if args.gnuplot:
        med = aggregate_median(profiles)
        rows = "".join(f"{int(x)} {float(f)!r}\n" for x, f in zip(med.x_values, med.fidelity))
        _emit("# x median_fidelity\n" + rows, args.gnuplot, outputs)
    config = {"command": "profile", **vars(cfg)}
    manifest = args.manifest or (f"{args.out}.manifest.json" if args.out else None)
    _write_manifest(manifest, "profile", config, outputs, started)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    if args.gamma_samples < 1:
        raise UsageError("--gamma-samples must be at least 1")
    if not 0.0 <= args.noise_p <= 1.0:
        raise UsageError("--noise-p must lie in [0, 1]")
    started = time.time()
    cfg = ExperimentConfig(n=3, trials=args.samples, seed=args.seed)
    rows = []
    for k in range(args.samples):
        U, _ = sample_gates(cfg, k)
        T = transfer_operator(U)
        spec = spectrum(T)
        gamma = contraction_coefficient(T, args.gamma_samples, seed=k)
        row = {"trial": k, **spec.to_dict()}
        row.update(
            gamma_sampled=gamma.sampled_max,
            gamma_subspace=gamma.subspace_bound,
            generic=spec.generic,
            noisy_distance=None,
        )
        if args.noise_p > 0:
            row["noisy_distance"] = operator_norm_distance(noisy_transfer_operator(U, args.noise_p), T)
        rows.append(row)
    alphas = np.array([r["alpha_pred"] for r in rows])
    out = {
        "seed": args.seed,
        "noise_p": args.noise_p,
        "median_alpha_pred": float(np.median(alphas)),
        "samples": rows,
    }
    outputs: dict = {}
    _emit(_dump_json(out), args.out, outputs)
    manifest = args.manifest or (f"{args.out}.manifest.json" if args.out else None)
    config = {"command": "spectrum", "seed": args.seed, "samples": args.samples, "noise_p": args.noise_p, "gamma_samples": args.gamma_samples}
    _write_manifest(manifest, "spectrum", config, outputs, started)
    return EXIT_OK


def cmd_plan(args) -> int:
    try:
        plan = constant_gap_plan(args.nq, args.epsilon, args.alpha, args.c)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    out = plan.to_dict()
    if plan.degenerate:
        out["advisory"] = "no constant-gap schedule fits the error budget; recycling gives no advantage"
        sys.stderr.write("advisory: degenerate plan (t = 0)\n")
    _emit(_dump_json(out), args.out, {})
    return EXIT_OK


def cmd_replay(args) -> int:
    """Re-run the command recorded in a manifest and compare output hashes."""
    manifest = json.loads(Path(args.manifest).read_text())
    cfg = manifest["config"]
    outputs = manifest["outputs"]
    if manifest["command"] == "profile":
        argv = [
            "profile", "--n", str(cfg["n"]), "--trials", str(cfg["trials"]), "--seed", str(cfg["seed"]),
            "--noise-p", repr(cfg["noise_p"]), "--method", cfg["method"], "--gate-mode", cfg["gate_mode"],
        ]
    elif manifest["command"] == "spectrum":
        argv = [
            "spectrum", "--seed", str(cfg["seed"]), "--samples", str(cfg["samples"]),
            "--noise-p", repr(cfg["noise_p"]), "--gamma-samples", str(cfg["gamma_samples"]),
        ]
    else:
        raise UsageError(f"cannot replay command {manifest['command']!r}")
    tmp = Path(args.workdir)
    tmp.mkdir(parents=True, exist_ok=True)
    out = tmp / "replay.out"
    argv += ["--out", str(out), "--manifest", str(tmp / "replay.manifest.json")]
    code = main(argv)
    if code != EXIT_OK:
        return code
    fresh = json.loads((tmp / "replay.manifest.json").read_text())["outputs"]
    first_old = next(iter(outputs.values()))
    first_new = fresh[str(out)]
    same = first_old == first_new
    sys.stderr.write(f"replay {'reproduced' if same else 'DIFFERS from'} the recorded output hash\n")
    return EXIT_OK if same else EXIT_NUMERICAL


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rewindq", description="Rewinding-protocol experiments.")
    parser.add_argument("--version", action="version", version=f"rewindq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="per-qubit fidelity profiles over random trials")
    p.add_argument("--n", type=int, default=150)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-p", type=float, default=0.0)
    p.add_argument("--method", choices=METHODS, default="recursion")
    p.add_argument("--gate-mode", choices=GATE_MODES, default="shared_bulk")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: REWINDQ_THREADS or CPU count)")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--summary", help="summary JSON path (default: <out>.summary.json, or stderr)")
    p.add_argument("--gnuplot", help="write the median profile as whitespace-separated columns")
    p.add_argument("--manifest", help="run manifest path (default: <out>.manifest.json)")
    p.set_defaults(func=cmd_profile)

    s = sub.add_parser("spectrum", help="transfer-operator spectra of random gates")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=1)
    s.add_argument("--noise-p", type=float, default=0.0)
    s.add_argument("--gamma-samples", type=int, default=50, help="random channel pairs per contraction estimate")
    s.add_argument("--out")
    s.add_argument("--manifest")
    s.set_defaults(func=cmd_spectrum)

    q = sub.add_parser("plan", help="constant-gap recycling plan")
    q.add_argument("--nq", type=int, required=True)
    q.add_argument("--epsilon", type=float, required=True)
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--c", type=float, default=1.0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_plan)

    r = sub.add_parser("replay", help="re-run a manifest and check output hashes")
    r.add_argument("manifest")
    r.add_argument("--workdir", default="rewindq-replay")
    r.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"rewindq: usage error: {exc}\n")
        return EXIT_USAGE
    except (NumericalError, FitError, DegeneracyError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"rewindq: numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
