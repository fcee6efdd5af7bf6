"""Command-line interface: degrade, reconstruct, evaluate, experiment.

Every command is deterministic given its flags and seed.  results.csv
keeps two intentionally empty columns: ``stoi`` (a slot for externally
computed perceptual scores) and ``runtime_ms`` (wall-clock timing would
break byte-reproducibility; per-iteration timings live in the optional
trace CSVs instead).
"""

import argparse
import csv
import math
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .audio_io import Measurements, read_measurements, read_wav, \
    write_measurements, write_wav
from .divergences import DivergenceSpec, Objective
from .pipeline import DegradeConfig, add_noise, empirical_snr, \
    spectral_convergence, spectral_subtract
from .solvers import SolverConfig, SolverDivergenceError, run_bregman_gd, \
    run_fgla, run_gla
from .stft import StftConfig, stft

DEFAULT_ALGOS = "gla,fgla,gd-l2-d1,gd-beta0.5-d1,gd-kl-d2,gd-klleft-d2"
DEFAULT_SNRS = "inf,20,10,5,0"
DEFAULT_WIN = 512
DEFAULT_HOP = 256

RESULT_COLUMNS = ["kind", "input", "algorithm", "divergence", "orientation",
                  "d", "snr_db", "step", "acceleration", "iterations",
                  "final_sc", "final_j", "runtime_ms", "seed", "stoi",
                  "error"]


class UsageError(Exception):
    """Bad flags or flag/file inconsistencies; exits with code 2."""


@dataclass
class AlgoSpec:
    label: str
    algorithm: str
    divergence: Optional[DivergenceSpec]
    d: int
    default_step: float
    default_accel: float


_GD_LABEL = re.compile(r"^gd-([a-z0-9.]+?)(left)?-d([12])$")


def parse_algo_label(label, d_flag=None):
    """Resolve an algorithm label like 'gla' or 'gd-beta0.5-d1'."""
    if label in ("gla", "fgla"):
        d = 1 if d_flag is None else d_flag
        accel = 0.99 if label == "fgla" else 0.0
        return AlgoSpec(label, label, None, d, 1.0, accel)

    m = _GD_LABEL.match(label)
    if m is None:
        raise UsageError(
            f"unknown algorithm label {label!r}; expected gla, fgla or "
            f"gd-<l2|kl|is|beta<value>>[left]-d<1|2>")
    kind_tok, left, d_tok = m.groups()
    d = int(d_tok)
    if d_flag is not None and d_flag != d:
        raise UsageError(f"--d {d_flag} conflicts with algorithm label "
                         f"{label!r} (d={d})")
    orientation = "left" if left else "right"
    if kind_tok in ("l2", "kl", "is"):
        spec = DivergenceSpec(kind_tok, orientation=orientation)
    elif kind_tok.startswith("beta"):
        try:
            beta = float(kind_tok[4:])
        except ValueError:
            raise UsageError(f"bad beta value in label {label!r}") from None
        try:
            spec = DivergenceSpec("beta", beta=beta, orientation=orientation)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        raise UsageError(f"unknown divergence {kind_tok!r} in label {label!r}")
    return AlgoSpec(label, "bregman_gd", spec, d, _default_step(spec, d), 0.99)


def _default_step(spec, d):
    # KL steps are set below the local stability bounds of the fixed-point
    # map (the d=2 magnitude-error multiplier is 1 - 2*step, so step >= 1
    # oscillates); the left orientation needs extra margin because its
    # log weights amplify bins far above the measurement floor.
    if spec.kind == "kl" and d == 2:
        return 0.1 if spec.orientation == "left" else 0.5
    return 1.0


def _run_algo(algo, r, stft_cfg, iterations, step, accel, seed,
              signal_len=None):
    """Run the solver an AlgoSpec describes; returns (signal, trace)."""
    step = algo.default_step if step is None else step
    accel = algo.default_accel if accel is None else accel
    if algo.algorithm == "bregman_gd":
        obj = Objective(algo.divergence, algo.d, r, stft_cfg)
        cfg = SolverConfig("bregman_gd", objective=obj, step=step,
                           acceleration=accel, iterations=iterations,
                           seed=seed)
        return run_bregman_gd(cfg, signal_len)
    cfg = SolverConfig(algo.algorithm, step=step, acceleration=accel,
                       iterations=iterations, seed=seed)
    runner = run_fgla if algo.algorithm == "fgla" else run_gla
    return runner(r, stft_cfg, cfg, signal_len)


def _derive_seed(base, *indices):
    ss = np.random.SeedSequence([int(base)] + [int(i) for i in indices])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _worker_count():
    raw = os.environ.get("BREGMAN_PR_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            n = 0
        if n > 0:
            return n
    return os.cpu_count() or 1


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _check_positive(name, value):
    if value < 1:
        raise UsageError(f"{name} must be >= 1, got {value}")


# --------------------------------------------------------------------------
# reconstruct


def cmd_reconstruct(args):
    _check_positive("--iters", args.iters)
    algo = parse_algo_label(args.algo, args.d)

    if args.input.lower().endswith(".wav"):
        win = DEFAULT_WIN if args.win is None else args.win
        hop = DEFAULT_HOP if args.hop is None else args.hop
        stft_cfg = StftConfig(win, hop, win)
        x_true = read_wav(args.input)
        mags = stft(x_true, stft_cfg).magnitudes()
        values = mags if algo.d == 1 else mags ** 2
        r = Measurements(values, algo.d, x_true.sample_rate, hop, win)
        signal_len = len(x_true)
    else:
        r = read_measurements(args.input)
        if args.win is not None and args.win != r.win_len:
            raise UsageError(f"win: flag says {args.win}, measurement "
                             f"header says {r.win_len}")
        if args.hop is not None and args.hop != r.hop:
            raise UsageError(f"hop: flag says {args.hop}, measurement "
                             f"header says {r.hop}")
        if algo.algorithm == "bregman_gd" and r.power != algo.d:
            raise UsageError(
                f"measurement file carries power d={r.power} but "
                f"{algo.label} expects d={algo.d}")
        stft_cfg = StftConfig(r.win_len, r.hop, r.bins)
        signal_len = None

    x, trace = _run_algo(algo, r, stft_cfg, args.iters, args.step,
                         args.accel, args.seed, signal_len)
    write_wav(x, args.out, "32-float")
    print(f"J={trace.objective[-1]:#.6g} "
          f"SC={trace.spectral_convergence[-1]:#.6g}")
    return 0


# --------------------------------------------------------------------------
# degrade


def cmd_degrade(args):
    x = read_wav(args.input)
    stft_cfg = StftConfig(args.win, args.hop, args.win)
    noisy, sigma = add_noise(x, DegradeConfig(args.snr, args.seed, args.floor))
    r = spectral_subtract(noisy, sigma, stft_cfg, args.d, args.floor)
    write_measurements(r, args.out)
    achieved = empirical_snr(x, noisy)
    label = "inf" if math.isinf(achieved) else f"{achieved:.2f}"
    print(f"SNR={label} dB")
    return 0


# --------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args):
    r = read_measurements(args.measurements)
    if args.win is not None and args.win != r.win_len:
        raise UsageError(f"win: flag says {args.win}, measurement header "
                         f"says {r.win_len}")
    if args.hop is not None and args.hop != r.hop:
        raise UsageError(f"hop: flag says {args.hop}, measurement header "
                         f"says {r.hop}")
    x = read_wav(args.signal)
    stft_cfg = StftConfig(r.win_len, r.hop, r.bins)
    sc = spectral_convergence(r, x, stft_cfg)
    print(f"SC={sc:#.6g}")
    return 0


# --------------------------------------------------------------------------
# experiment


def _experiment_cell(algo, powers, sample_rate, stft_cfg, iterations, seed):
    values = np.sqrt(powers) if algo.d == 1 else powers
    r = Measurements(values, algo.d, sample_rate, stft_cfg.hop,
                     stft_cfg.win_len)
    return _run_algo(algo, r, stft_cfg, iterations, None, None, seed)


def cmd_experiment(args):
    _check_positive("--iters", args.iters)
    corpus = sorted(Path(args.corpus).glob("*.wav"))
    if not corpus:
        raise UsageError(f"no .wav files found in {args.corpus!r}")
    try:
        snrs = [float(tok) for tok in args.snrs.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"bad --snrs list {args.snrs!r}") from None
    if not snrs:
        raise UsageError("--snrs list is empty")
    algos = [parse_algo_label(tok.strip())
             for tok in args.algos.split(",") if tok.strip()]
    if not algos:
        raise UsageError("--algos list is empty")

    stft_cfg = StftConfig(args.win, args.hop, args.win)
    traces_dir = None
    if args.traces:
        traces_dir = Path(args.traces)
        traces_dir.mkdir(parents=True, exist_ok=True)

    signals = [read_wav(str(p)) for p in corpus]

    # One degradation per (file, snr), shared by all algorithms: subtract
    # in the power domain once, then derive d=1/d=2 grids per algorithm.
    powers = {}
    for fi, x in enumerate(signals):
        for si, snr in enumerate(snrs):
            noise_seed = _derive_seed(args.seed, fi, si)
            noisy, sigma = add_noise(
                x, DegradeConfig(snr, noise_seed, args.floor))
            powers[(fi, si)] = spectral_subtract(
                noisy, sigma, stft_cfg, 2, args.floor).values

    cells = [(fi, si, ai)
             for fi in range(len(corpus))
             for si in range(len(snrs))
             for ai in range(len(algos))]

    def run_one(cell):
        fi, si, ai = cell
        algo = algos[ai]
        seed = _derive_seed(args.seed, fi, si, ai)
        started = time.perf_counter()
        try:
            x, trace = _experiment_cell(
                algo, powers[(fi, si)], signals[fi].sample_rate, stft_cfg,
                args.iters, seed)
        except (ValueError, SolverDivergenceError) as exc:
            return {"error": str(exc), "seed": seed}
        elapsed_ms = 1000.0 * (time.perf_counter() - started)
        return {"trace": trace, "seed": seed, "elapsed_ms": elapsed_ms}

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        outcomes = list(pool.map(run_one, cells))

    rows = []
    failures = 0
    by_group = {}
    for cell, outcome in zip(cells, outcomes):
        fi, si, ai = cell
        algo = algos[ai]
        div_label = algo.divergence.label() if algo.divergence else "l2"
        orient = algo.divergence.orientation if algo.divergence else "right"
        row = {
            "kind": "result",
            "input": corpus[fi].name,
            "algorithm": algo.label,
            "divergence": div_label.removesuffix("left"),
            "orientation": orient,
            "d": algo.d,
            "snr_db": _fmt(snrs[si]),
            "step": _fmt(algo.default_step),
            "acceleration": _fmt(algo.default_accel),
            "iterations": args.iters,
            "runtime_ms": "",
            "seed": outcome["seed"],
            "stoi": "",
            "error": "",
        }
        if "error" in outcome:
            failures += 1
            row["final_sc"] = "error"
            row["final_j"] = "error"
            row["error"] = outcome["error"]
        else:
            trace = outcome["trace"]
            sc = trace.spectral_convergence[-1]
            j = trace.objective[-1]
            row["final_sc"] = _fmt(sc)
            row["final_j"] = _fmt(j)
            by_group.setdefault((ai, si), []).append((sc, j))
            if traces_dir is not None:
                name = (f"{corpus[fi].stem}__snr{snrs[si]:g}"
                        f"__{algo.label}.csv")
                trace.write_csv(traces_dir / name)
        rows.append(row)

    summary_rows = []
    for ai, algo in enumerate(algos):
        for si, snr in enumerate(snrs):
            group = by_group.get((ai, si), [])
            div_label = algo.divergence.label() if algo.divergence else "l2"
            orient = (algo.divergence.orientation if algo.divergence
                      else "right")
            row = {
                "kind": "summary",
                "input": "mean",
                "algorithm": algo.label,
                "divergence": div_label.removesuffix("left"),
                "orientation": orient,
                "d": algo.d,
                "snr_db": _fmt(snr),
                "step": _fmt(algo.default_step),
                "acceleration": _fmt(algo.default_accel),
                "iterations": args.iters,
                "runtime_ms": "",
                "seed": args.seed,
                "stoi": "",
                "error": "" if group else "all cells failed",
            }
            if group:
                row["final_sc"] = _fmt(float(np.mean([g[0] for g in group])))
                row["final_j"] = _fmt(float(np.mean([g[1] for g in group])))
            else:
                row["final_sc"] = "error"
                row["final_j"] = "error"
            summary_rows.append(row)

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for row in rows + summary_rows:
            writer.writerow(row)

    done = len(cells) - failures
    print(f"wrote {args.out}: {done}/{len(cells)} cells ok, "
          f"{len(summary_rows)} summary rows")
    return 1 if failures else 0


# --------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bregman-pr",
        description="Phase retrieval from STFT magnitude/power measurements "
                    "via Bregman divergence minimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct",
                       help="reconstruct a signal from a WAV (self-"
                            "measurement) or a measurement CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--algo", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--accel", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--win", type=int, default=None)
    p.add_argument("--hop", type=int, default=None)
    p.add_argument("--d", type=int, choices=(1, 2), default=None)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("degrade",
                       help="add noise at a target SNR and emit spectral-"
                            "subtracted measurements")
    p.add_argument("--input", required=True)
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--d", type=int, choices=(1, 2), default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--floor", type=float, default=0.0)
    p.add_argument("--win", type=int, default=DEFAULT_WIN)
    p.add_argument("--hop", type=int, default=DEFAULT_HOP)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("evaluate",
                       help="spectral convergence of a signal against a "
                            "measurement file")
    p.add_argument("--measurements", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--win", type=int, default=None)
    p.add_argument("--hop", type=int, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment",
                       help="run the file x SNR x algorithm grid and write "
                            "results.csv")
    p.add_argument("--corpus", required=True)
    p.add_argument("--snrs", default=DEFAULT_SNRS)
    p.add_argument("--algos", default=DEFAULT_ALGOS)
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--traces", default=None)
    p.add_argument("--floor", type=float, default=0.0)
    p.add_argument("--win", type=int, default=DEFAULT_WIN)
    p.add_argument("--hop", type=int, default=DEFAULT_HOP)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(parser.format_usage())
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except SolverDivergenceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
