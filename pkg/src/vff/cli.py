"""Command-line front end: synth | degrade | fit | sample | eval | bench.

Exit codes: 0 success, 1 runtime failure (domain/data errors), 2 usage
errors (bad flags, bad config keys, invalid parameter values). Library
modules are imported lazily so --threads can pin the BLAS thread count
before numpy loads.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

from .errors import ConfigError, VffError

REPORT_SCHEMA_VERSION = 1

_BLAS_ENV = ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS")


def _pin_blas_threads(argv):
    # only effective if numpy has not been imported yet, hence the pre-scan
    for i, arg in enumerate(argv):
        if arg == "--threads" and i + 1 < len(argv):
            value = argv[i + 1]
        elif arg.startswith("--threads="):
            value = arg.split("=", 1)[1]
        else:
            continue
        if value.isdigit() and int(value) >= 1:
            for name in _BLAS_ENV:
                os.environ.setdefault(name, value)
        return


def _dims(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ValueError(f"expected TxHxW, got {text!r}")
    return tuple(int(p) for p in parts)


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _int_pair(text: str) -> tuple[int, int]:
    a, b = _pair(text)
    return (int(a), int(b))


def _ratio(text: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"expected NUM:DEN, got {text!r}")
    return (int(parts[0]), int(parts[1]))


def _sigma(text: str) -> float:
    return math.inf if text.lower() in ("inf", "none") else float(text)


def _bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


class RunConfig:
    """Merged command options: flag > config file > built-in default."""

    def __init__(self, values: dict):
        self._values = values

    def __getattr__(self, name):
        try:
            return self._values[name]
        except KeyError:
            raise AttributeError(name) from None


class _CommandParser:
    """argparse wrapper that tracks option metadata for config-file merging."""

    def __init__(self, sub, name, help_text):
        self.parser = sub.add_parser(name, help=help_text)
        self.parser.add_argument("--config", help="key=value file with option defaults")
        self.parser.add_argument("--threads", type=int, default=None,
                                 help="worker cap for parallel stages (default 1)")
        self.options = {"threads": (int, 1)}

    def positional(self, name, help_text):
        self.parser.add_argument(name, help=help_text)

    def option(self, name, type_fn, default, help_text, flag=False):
        dest = name.replace("-", "_")
        if flag:
            self.parser.add_argument(f"--{name}", dest=dest, action="store_const",
                                     const=True, default=None, help=help_text)
        else:
            self.parser.add_argument(f"--{name}", dest=dest, type=type_fn,
                                     default=None, help=help_text)
        self.options[dest] = (type_fn, default)

    def merge(self, args) -> RunConfig:
        file_values = {}
        if args.config:
            path = Path(args.config)
            if not path.is_file():
                self.parser.error(f"config file not found: {path}")
            for line_no, line in enumerate(path.read_text().splitlines(), 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    self.parser.error(f"{path}:{line_no}: expected key=value")
                key, _, raw = line.partition("=")
                dest = key.strip().replace("-", "_")
                if dest not in self.options:
                    self.parser.error(f"{path}:{line_no}: unknown option {key.strip()!r}")
                file_values[dest] = raw.strip()
        merged = {}
        for dest, (type_fn, default) in self.options.items():
            given = getattr(args, dest)
            if given is not None:
                merged[dest] = given
            elif dest in file_values:
                parse = _bool if type_fn is None else type_fn
                try:
                    merged[dest] = parse(file_values[dest])
                except ValueError as exc:
                    self.parser.error(f"config option {dest}: {exc}")
            else:
                merged[dest] = default
        for key, value in vars(args).items():
            if key not in merged and key != "config":
                merged[key] = value
        return RunConfig(merged)


def _load_video(path):
    from .io import read_png_sequence, read_y4m

    p = Path(path)
    if p.is_dir():
        return read_png_sequence(p)
    if p.suffix.lower() == ".y4m":
        return read_y4m(p)[0]
    raise ConfigError(f"cannot infer video format of {path} (directory or .y4m expected)")


def _save_video(video, path, fps):
    from .io import write_png_sequence, write_y4m

    p = Path(path)
    if p.suffix.lower() == ".y4m":
        write_y4m(video, p, fps)
    else:
        write_png_sequence(video, p)


def _psf_policy(text: str, nu: float):
    from .core import PsfSpec
    from .pipeline import PsfPolicy

    if text == "auto":
        return PsfPolicy(mode="auto", nu=nu)
    if text == "point":
        return PsfPolicy(mode="manual", manual=PsfSpec.point())
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--psf must be auto, point, or sx,sy,st; got {text!r}")
    return PsfPolicy(mode="manual", manual=PsfSpec(*(_sigma(p) for p in parts)))


def cmd_synth(cfg: RunConfig) -> int:
    from .io import write_y4m
    from .synth import SynthSpec, rasterize

    spec = SynthSpec(
        pattern=cfg.pattern, dims=cfg.dims, velocity=cfg.velocity,
        acceleration=cfg.acceleration, angular_rate=cfg.angular_rate,
        cycles=cfg.cycles, cell=cfg.cell, stripe_freq=cfg.stripe_freq,
        dot_sigma=cfg.dot_sigma, amplitude=cfg.amplitude, seed=cfg.seed,
    )
    video = rasterize(spec)
    out = Path(cfg.out)
    _save_video(video, out, cfg.fps)
    sidecar = out / "scene.json" if out.is_dir() else Path(str(out) + ".json")
    sidecar.write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {spec.pattern} {spec.dims[0]}x{spec.dims[1]}x{spec.dims[2]} to {out}")
    return 0


def cmd_degrade(cfg: RunConfig) -> int:
    from .pipeline import degrade

    video = _load_video(cfg.input)
    out = degrade(video, cfg.sscale, cfg.tscale)
    _save_video(out, cfg.out, cfg.fps)
    t, h, w = video.dims
    to, ho, wo = out.dims
    print(f"degraded {t}x{h}x{w} -> {to}x{ho}x{wo} (s={cfg.sscale}, r={cfg.tscale})")
    return 0


def cmd_fit(cfg: RunConfig) -> int:
    from .fit import BankInitConfig, FitConfig, fit_video, init_bank
    from .io import save_field

    video = _load_video(cfg.input)
    bank = init_bank(BankInitConfig(
        n_basis=cfg.basis, omega_max=cfg.omega_max, strategy=cfg.strategy, seed=cfg.seed,
    ))
    fit_cfg = FitConfig(
        window=cfg.window, ridge_lambda=cfg.ridge,
        sample_weight_sigma=cfg.weight_sigma, border_mode=cfg.border,
    )
    grid = fit_video(video, bank, fit_cfg, workers=cfg.threads)
    save_field(grid, cfg.out)
    t, h, w = grid.dims
    print(f"fit {t}x{h}x{w} grid, N={bank.n_basis} -> {cfg.out}")
    return 0


def cmd_sample(cfg: RunConfig) -> int:
    from .io import load_field
    from .sampling import SampleSpec, sample_grid

    grid = load_field(cfg.field)
    spec = SampleSpec(cfg.sscale, cfg.tscale, grid.dims)
    psf = _psf_policy(cfg.psf, cfg.nu).resolve(cfg.sscale, cfg.tscale)
    out = sample_grid(
        grid, spec, psf, crossfade_margin=cfg.crossfade, workers=cfg.threads
    ).clamped()
    _save_video(out, cfg.out, cfg.fps)
    to, ho, wo = out.dims
    print(f"sampled {to}x{ho}x{wo} (s={cfg.sscale}, r={cfg.tscale}, psf={cfg.psf})")
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    from .metrics import evaluate

    pred = _load_video(cfg.pred)
    ref = _load_video(cfg.ref)
    metrics = tuple(m.strip() for m in cfg.metrics.split(",") if m.strip())
    report = evaluate(
        pred, ref, metrics=metrics, on_luma=bool(cfg.luma), split_r=cfg.split_keyframes
    )
    payload = report.to_dict()
    payload["schema_version"] = REPORT_SCHEMA_VERSION
    n_frames = pred.dims[0]
    for k in range(n_frames):
        record = {"frame": k}
        if report.psnr_frames is not None:
            record["psnr"] = report.psnr_frames[k]
        if report.ssim_frames is not None:
            record["ssim"] = report.ssim_frames[k]
        if report.frame_labels is not None:
            record["label"] = report.frame_labels[k]
        print(json.dumps(record, sort_keys=True))
    summary = {k: v for k, v in payload.items() if not k.endswith("_frames") and k != "frame_labels"}
    print(json.dumps({"summary": summary}, sort_keys=True))
    if cfg.json_out:
        Path(cfg.json_out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def _time_stage(fn, repeat: int):
    times = []
    result = None
    for _ in range(repeat):
        result = None  # free the previous run before timing the next
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    times.sort()
    mid = len(times) // 2
    median = times[mid] if len(times) % 2 else 0.5 * (times[mid - 1] + times[mid])
    return result, {"min_s": times[0], "median_s": median, "runs": times}


def cmd_bench(cfg: RunConfig) -> int:
    import resource

    import numpy as np

    from .fit import BankInitConfig, FitConfig, fit_video, init_bank
    from .pipeline import auto_psf
    from .sampling import SampleSpec, sample_grid
    from .synth import SynthSpec, rasterize

    t, h, w = cfg.patch
    video = rasterize(SynthSpec(
        pattern="translating-sinusoid", dims=(t, h, w), velocity=(1.0, 0.5), seed=cfg.seed,
    ))
    bank = init_bank(BankInitConfig(n_basis=cfg.basis, seed=cfg.seed))
    fit_cfg = FitConfig()
    grid, fit_stats = _time_stage(
        lambda: fit_video(video, bank, fit_cfg, workers=cfg.threads), cfg.repeat
    )
    spec = SampleSpec(cfg.sscale, cfg.tscale, grid.dims)
    psf = auto_psf(cfg.sscale, cfg.tscale, 0.5)
    batched, batched_stats = _time_stage(
        lambda: sample_grid(grid, spec, psf, method="batched", workers=cfg.threads),
        cfg.repeat,
    )
    naive, naive_stats = _time_stage(
        lambda: sample_grid(grid, spec, psf, method="naive", workers=cfg.threads), 1
    )
    max_diff = float(np.max(np.abs(batched.data - naive.data)))
    out_voxels = int(np.prod(spec.output_dims))
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "patch": list(cfg.patch),
        "sscale": cfg.sscale,
        "tscale": cfg.tscale,
        "output_dims": list(spec.output_dims),
        "stages": {
            "fit": fit_stats,
            "sample_batched": batched_stats,
            "sample_naive": naive_stats,
        },
        "samples_per_s_batched": out_voxels / batched_stats["min_s"],
        "samples_per_s_naive": out_voxels / naive_stats["min_s"],
        "speedup_batched_vs_naive": naive_stats["min_s"] / batched_stats["min_s"],
        "batched_naive_max_abs_diff": max_diff,
        "peak_rss_mb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0,
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vff",
        description="Sinusoidal video fields: fit, resample, and evaluate clips.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {}

    synth = _CommandParser(sub, "synth", "generate a synthetic clip with known ground truth")
    synth.positional("out", "output directory (PNG frames) or .y4m path")
    synth.option("pattern", str, "translating-sinusoid", "scene pattern name")
    synth.option("dims", _dims, (16, 32, 32), "clip shape TxHxW")
    synth.option("velocity", _pair, (1.0, 0.0), "translation in px/frame as vx,vy")
    synth.option("acceleration", _pair, (0.0, 0.0), "acceleration in px/frame^2 as ax,ay")
    synth.option("angular-rate", float, 0.1, "rotation rate in rad/frame")
    synth.option("cycles", _int_pair, (3, 2), "sinusoid whole cycles across W,H")
    synth.option("cell", float, 4.0, "checkerboard square size in px")
    synth.option("stripe-freq", float, 0.15, "bar frequency in cycles/px")
    synth.option("dot-sigma", float, 2.5, "dot radius in px")
    synth.option("amplitude", float, 0.4, "sinusoid/bar amplitude (0, 0.5]")
    synth.option("seed", int, 0, "per-channel randomization seed")
    synth.option("fps", _ratio, (30, 1), "frame rate for .y4m output")
    commands["synth"] = (synth, cmd_synth)

    degrade = _CommandParser(sub, "degrade", "bicubic spatial + temporal decimation")
    degrade.positional("input", "input video (PNG dir or .y4m)")
    degrade.positional("out", "output video (PNG dir or .y4m)")
    degrade.option("sscale", float, 1.0, "spatial factor >= 1")
    degrade.option("tscale", int, 1, "temporal factor (integer >= 1)")
    degrade.option("fps", _ratio, (30, 1), "frame rate for .y4m output")
    commands["degrade"] = (degrade, cmd_degrade)

    fit = _CommandParser(sub, "fit", "fit a field grid to a video")
    fit.positional("input", "input video (PNG dir or .y4m)")
    fit.positional("out", "output field file (.vff)")
    fit.option("basis", int, 512, "number of basis frequencies N")
    fit.option("omega-max", float, math.pi * 4.0, "bank frequency ceiling (rad/sample)")
    fit.option("window", _dims, (5, 9, 9), "fit window extents WtxWyxWx")
    fit.option("ridge", float, 1e-3, "ridge regularizer lambda")
    fit.option("weight-sigma", _sigma, 3.0, "window sample weighting sigma (inf=uniform)")
    fit.option("border", str, "clamp", "window border mode: clamp | reflect")
    fit.option("strategy", str, "stratified-random", "bank init: stratified-random | axis-grid")
    fit.option("seed", int, 0, "bank initialization seed")
    commands["fit"] = (fit, cmd_fit)

    sample = _CommandParser(sub, "sample", "resample a field grid to a video")
    sample.positional("field", "input field file (.vff)")
    sample.positional("out", "output video (PNG dir or .y4m)")
    sample.option("sscale", float, 1.0, "spatial scale factor")
    sample.option("tscale", float, 1.0, "temporal scale factor")
    sample.option("psf", str, "auto", "auto | point | sx,sy,st (inf = point axis)")
    sample.option("nu", float, 0.5, "auto-psf bandwidth constant")
    sample.option("crossfade", float, 0.0, "cross-voxel blend margin in [0, 0.5)")
    sample.option("fps", _ratio, (30, 1), "frame rate for .y4m output")
    commands["sample"] = (sample, cmd_sample)

    ev = _CommandParser(sub, "eval", "compare two videos")
    ev.positional("pred", "predicted video (PNG dir or .y4m)")
    ev.positional("ref", "reference video (PNG dir or .y4m)")
    ev.option("metrics", str, "psnr,ssim", "comma list from: psnr, ssim")
    ev.option("luma", None, False, "compute PSNR on BT.601 luma", flag=True)
    ev.option("split-keyframes", int, None, "label frame k keyframe when k % r == 0")
    ev.option("json-out", str, None, "also write the full report to this path")
    commands["eval"] = (ev, cmd_eval)

    bench = _CommandParser(sub, "bench", "time fit and both sampler paths")
    bench.option("patch", _dims, (14, 80, 80), "synthetic patch shape TxHxW")
    bench.option("sscale", float, 4.0, "spatial scale factor")
    bench.option("tscale", float, 8.0, "temporal scale factor")
    bench.option("repeat", int, 2, "timed repetitions for fit and batched sampling")
    bench.option("basis", int, 512, "number of basis frequencies N")
    bench.option("seed", int, 0, "patch and bank seed")
    commands["bench"] = (bench, cmd_bench)

    return parser, commands


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _pin_blas_threads(argv)
    parser, commands = build_parser()
    args = parser.parse_args(argv)
    cmd_parser, runner = commands[args.command]
    cfg = cmd_parser.merge(args)
    try:
        return runner(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
