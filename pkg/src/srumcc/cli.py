"""Command-line front end: ``srumcc <subcommand> ...``.

Exit status is 2 for configuration errors (the message names the offending
key) and 1 for I/O failures.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basic_code import transmitted_rank
from .bounds import bound_curve
from .channel import bpsk_map, frame_stream, snr_to_sigma2
from .codec import encode_frame, sample_transform
from .decoder import DecodeConfig, SCDecoder
from .edf import EDF_LABELS, M2_LABELS, calibrate_thresholds, collect_histograms, m2_populations
from .harness import SimConfig, parse_override, provenance, resolve_thresholds, run_sweep, sweep_csv
from .trellis import CodeSpec


class ConfigError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"snr: cannot parse {text!r}") from None


def _build_config(args) -> SimConfig:
    d = {}
    if args.config:
        try:
            d = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"config: invalid JSON ({e})") from None
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be an object")
    cli = {"code": args.code, "snrs": _floats(args.snr) if args.snr else None,
           "master_seed": args.seed, "ell_max": args.ell_max,
           "threshold_policy": args.threshold_policy, "window": args.window,
           "threads": args.threads}
    d.update({k: v for k, v in cli.items() if v is not None})
    if getattr(args, "no_timing", False):
        d["timing"] = False
    for item in args.overrides:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"{item}: overrides must look like key=value")
        try:
            d[key] = parse_override(key, val)
        except KeyError:
            raise ConfigError(f"{key}: unknown configuration key") from None
        except ValueError as e:
            raise ConfigError(f"{key}: {e}") from None
    try:
        return SimConfig.from_dict(d)
    except KeyError as e:
        raise ConfigError(f"{e.args[0]}: unknown configuration key") from None
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None


def _write(path, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _basic(text: str) -> CodeSpec:
    try:
        return CodeSpec.parse(text)
    except ValueError as e:
        raise ConfigError(f"code: {e}") from None


# --- subcommands --------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _build_config(args)

    def progress(rec):
        print(f"snr={rec.snr_db} frames={rec.frames} fer={rec.fer:.3e} "
              f"ell={rec.avg_list_size:.2f}", file=sys.stderr)

    records, bounds = run_sweep(cfg, progress=None if args.quiet else progress)
    _write(args.out, [sweep_csv(cfg, records, bounds).rstrip("\n")])
    if args.positions:
        lines = provenance(cfg) + ["snr_db,t,fer_t,first_error"]
        for rec in records:
            for t in range(cfg.L):
                lines.append(f"{rec.snr_db!r},{t},{rec.fer_positions[t]!r},{int(rec.first_error[t])}")
        _write(args.positions, lines)
    return 0


def cmd_calibrate(args) -> int:
    basic = _basic(args.code)
    R = sample_transform(args.r_seed, basic.n)
    snrs = _floats(args.snr) if args.snr else (2.0, 2.5, 3.0, 3.5, 4.0)
    try:
        table = calibrate_thresholds(basic, R, snrs, args.ell_max, args.trials,
                                     args.threshold_policy, seed=args.seed, q=args.quantile)
    except ValueError as e:
        raise ConfigError(f"threshold_policy: {e}") from None
    _write(args.out, [table.to_text().rstrip("\n")])
    return 0


def cmd_bound(args) -> int:
    basic = _basic(args.code)
    snrs = _floats(args.snr) if args.snr else tuple(np.round(np.arange(1.0, 5.01, 0.25), 2))
    rows = bound_curve(basic, args.L, snrs)
    rate = basic.k / basic.n * args.L / (args.L + 1)
    lines = [f"# srumcc {__version__}", f"# code={basic} L={args.L}", f"# rate={rate!r}",
             "snr_db,sigma2,fer0_bound,fer_bound"]
    lines += [f"{r['snr_db']!r},{r['sigma2']!r},{r['fer0_bound']!r},{r['fer_bound']!r}" for r in rows]
    _write(args.out, lines)
    return 0


def cmd_histogram(args) -> int:
    basic = _basic(args.code)
    snr = float(args.snr) if args.snr else 4.0
    sigma2 = snr_to_sigma2(snr)
    lines = [f"# srumcc {__version__}", f"# code={basic} snr_db={snr!r} trials={args.trials} "
             f"seed={args.seed}", "label,value"]
    samples = collect_histograms(basic, sigma2, args.trials, args.seed)
    for lab in EDF_LABELS:
        lines += [f"{lab},{v!r}" for v in samples[lab]]
    if args.m2:
        R = sample_transform(args.r_seed, basic.n)
        pop = m2_populations(basic, R, snr, args.ell_max, args.trials, seed=args.seed)
        for lab, arr in zip(M2_LABELS, (pop.correct, pop.erroneous)):
            lines += [f"{lab},{v!r}" for v in arr]
    _write(args.out, lines)
    return 0


def cmd_list_profile(args) -> int:
    basic = _basic(args.code)
    tr = basic.trellis
    snrs = _floats(args.snr) if args.snr else (2.0, 2.5, 3.0, 3.5, 4.0)
    sizes = [s for s in (1, 2, 4, 8, 16, 32, 64, 128, 256) if s <= args.ell_max]
    lines = [f"# srumcc {__version__}", f"# code={basic} ell_max={args.ell_max} "
             f"trials={args.trials} seed={args.seed}",
             "# avg_rank averages min(rank, ell_max); fail_<l> is P(rank > l)",
             "snr_db,trials,avg_rank," + ",".join(f"fail_{s}" for s in sizes)]
    for j, snr in enumerate(snrs):
        sigma = math.sqrt(snr_to_sigma2(snr))
        ranks = np.empty(args.trials, dtype=np.int64)
        for i in range(args.trials):
            rng = frame_stream(args.seed, j, i)
            u = rng.integers(0, 2, basic.k, dtype=np.uint8)
            y = bpsk_map(basic.encode(u)) + sigma * rng.standard_normal(basic.n)
            ranks[i] = transmitted_rank(tr, y, u, args.ell_max)
        avg = float(np.minimum(ranks, args.ell_max).mean())
        fails = ",".join(repr(float((ranks > s).mean())) for s in sizes)
        lines.append(f"{snr!r},{args.trials},{avg!r},{fails}")
    _write(args.out, lines)
    return 0


def _read_rows(path):
    text = sys.stdin.read() if path in (None, "-") else Path(path).read_text()
    return [l.strip() for l in text.splitlines() if l.strip() and not l.startswith("#")]


def _bit_rows(rows, width: int, what: str) -> np.ndarray:
    out = []
    for i, r in enumerate(rows):
        if len(r) != width or set(r) - {"0", "1"}:
            raise ConfigError(f"input: row {i} of {what} must be {width} characters of 0/1")
        out.append([int(c) for c in r])
    return np.array(out, dtype=np.uint8)


def cmd_encode(args) -> int:
    basic = _basic(args.code)
    R = sample_transform(args.r_seed, basic.n)
    u = _bit_rows(_read_rows(args.input), basic.k, "information blocks")
    if u.shape[0] < 1:
        raise ConfigError("input: no information blocks")
    c = encode_frame(u, basic, R).c_blocks
    if args.modulate:
        x = bpsk_map(c)
        if args.sigma > 0:
            rng = frame_stream(args.seed, 0, 0)
            x = x + args.sigma * rng.standard_normal(x.shape)
        lines = [" ".join(repr(float(v)) for v in row) for row in x]
    else:
        lines = ["".join(map(str, row)) for row in c]
    _write(args.out, lines)
    return 0


def cmd_decode(args) -> int:
    basic = _basic(args.code)
    R = sample_transform(args.r_seed, basic.n)
    rows = _read_rows(args.input)
    if not rows:
        raise ConfigError("input: no received blocks")
    if all(set(r) <= {"0", "1"} and len(r) == basic.n for r in rows):
        y = bpsk_map(_bit_rows(rows, basic.n, "code blocks"))
    else:
        try:
            y = np.array([[float(v) for v in r.split()] for r in rows])
        except ValueError:
            raise ConfigError("input: rows must be 0/1 strings or real numbers") from None
        if y.ndim != 2 or y.shape[1] != basic.n:
            raise ConfigError(f"input: each row must hold {basic.n} values")
    if y.shape[0] < 2:
        raise ConfigError("input: need at least two received blocks")
    snr = float(args.snr) if args.snr else 4.0
    cfg = SimConfig(code=str(basic), snrs=(snr,), r_seed=args.r_seed, ell_max=args.ell_max,
                    window=args.window, threshold_policy=args.threshold_policy)
    table = resolve_thresholds(cfg, R)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dec = SCDecoder(basic, R, DecodeConfig(table, args.ell_max, args.window), snr)
    u_hat, _ = dec.decode(y)
    _write(args.out, ["".join(map(str, row)) for row in u_hat])
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="srumcc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"srumcc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, code="conv:[27,31]o:k=32:tb", seed=1):
        sp.add_argument("--code", default=code,
                        help="basic code, e.g. conv:[27,31]o:k=32:tb or rm84x8")
        sp.add_argument("--out", "-o", default=None, help="output file (default stdout)")
        sp.add_argument("--seed", type=int, default=seed)
        sp.add_argument("--snr", default=None, help="comma separated SNR list in dB")

    s = sub.add_parser("simulate", help="Monte Carlo fER sweep")
    # unset flags fall back to the config file, then to the SimConfig defaults
    common(s, code=None, seed=None)
    s.add_argument("--config", default=None, help="JSON SimConfig file")
    s.add_argument("--ell-max", type=int, default=None)
    s.add_argument("--threshold-policy", default=None)
    s.add_argument("--window", type=int, default=None)
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--no-timing", action="store_true", help="write 0 in the seconds column")
    s.add_argument("--positions", default=None, help="also write per-position fER_t CSV")
    s.add_argument("--quiet", action="store_true")
    s.add_argument("overrides", nargs="*", help="key=value config overrides")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("calibrate", help="learn or transcribe a threshold table")
    common(c)
    c.add_argument("--ell-max", type=int, default=64)
    c.add_argument("--trials", type=int, default=1000)
    c.add_argument("--threshold-policy", default="learned")
    c.add_argument("--quantile", type=float, default=0.01)
    c.add_argument("--r-seed", type=int, default=2024)
    c.set_defaults(func=cmd_calibrate)

    b = sub.add_parser("bound", help="union-bound curve")
    common(b)
    b.add_argument("--L", type=int, default=49)
    b.set_defaults(func=cmd_bound)

    h = sub.add_parser("histogram", help="EDF (and M2) samples")
    common(h)
    h.add_argument("--trials", type=int, default=10000)
    h.add_argument("--m2", action="store_true", help="include M2 populations")
    h.add_argument("--ell-max", type=int, default=64)
    h.add_argument("--r-seed", type=int, default=2024)
    h.set_defaults(func=cmd_histogram)

    lp = sub.add_parser("list-profile", help="list rank and list failure profile")
    common(lp)
    lp.add_argument("--trials", type=int, default=10000)
    lp.add_argument("--ell-max", type=int, default=64)
    lp.set_defaults(func=cmd_list_profile)

    e = sub.add_parser("encode", help="encode information blocks (rows of k bits)")
    common(e)
    e.add_argument("input", nargs="?", default="-")
    e.add_argument("--r-seed", type=int, default=2024)
    e.add_argument("--modulate", action="store_true", help="emit BPSK reals")
    e.add_argument("--sigma", type=float, default=0.0, help="AWGN std with --modulate")
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="decode received blocks (bits or reals)")
    common(d)
    d.add_argument("input", nargs="?", default="-")
    d.add_argument("--r-seed", type=int, default=2024)
    d.add_argument("--ell-max", type=int, default=64)
    d.add_argument("--window", type=int, default=2)
    d.add_argument("--threshold-policy", default="paper-A")
    d.set_defaults(func=cmd_decode)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"srumcc: config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"srumcc: I/O error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
