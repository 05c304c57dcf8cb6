"""Monte Carlo experiment runner.

Frame ``i`` at SNR index ``j`` draws its information bits and noise from a
stream keyed by ``(master_seed, j, i)``. Frames are simulated in fixed-size
chunks and the stopping rule is applied chunk by chunk in index order, so a
record depends only on the config and never on the number of workers.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import multiprocessing as mp
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import bound_curve
from .channel import bpsk_map, frame_stream, snr_to_sigma2
from .codec import RandomTransform, encode_frame, sample_transform
from .decoder import DecodeConfig, SCDecoder
from .edf import ThresholdTable, calibrate_thresholds, constant_table, reference_table
from .trellis import CodeSpec

CSV_COLUMNS = ("snr_db", "sigma2", "frames", "subframes", "subframe_errors", "fer", "fer_stderr",
               "FER", "avg_list_size", "fer0", "fer0_bound", "fer_bound", "seconds")


@dataclass(frozen=True)
class SimConfig:
    code: str = "conv:[27,31]o:k=32:tb"
    L: int = 49
    snrs: tuple[float, ...] = (2.0, 2.5, 3.0, 3.5, 4.0)
    master_seed: int = 1
    r_seed: int = 2024
    max_frames: int = 10**6
    min_frames: int = 0
    min_subframe_errors: int = 100
    ell_max: int = 64
    window: int = 2
    keep_list: int = 4
    threshold_policy: str = "paper-A"
    threshold_file: str | None = None
    threshold_value: float | None = None
    calib_trials: int = 1000
    stop_after: int | None = None
    chunk: int = 16
    threads: int = 1
    timing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "snrs", tuple(float(s) for s in self.snrs))
        if not self.snrs:
            raise ValueError("snrs: grid must be nonempty")
        if self.L < 1:
            raise ValueError("L: must be >= 1")
        if self.max_frames < 1 or self.chunk < 1 or self.threads < 1:
            raise ValueError("max_frames, chunk and threads must be >= 1")
        if self.threshold_policy not in ("paper-A", "paper-B", "learned", "inf", "constant", "file"):
            raise ValueError(f"threshold_policy: unknown policy {self.threshold_policy!r}")
        if self.stop_after is not None and not 1 <= self.stop_after <= self.L:
            raise ValueError("stop_after: must lie in [1, L]")
        CodeSpec.parse(self.code)

    # --- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["snrs"] = list(self.snrs)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        unknown = sorted(set(d) - {f.name for f in dataclasses.fields(cls)})
        if unknown:
            raise KeyError(unknown[0])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        return cls.from_dict(json.loads(text))

    def with_overrides(self, **kv) -> "SimConfig":
        d = self.to_dict()
        unknown = sorted(set(kv) - set(d))
        if unknown:
            raise KeyError(unknown[0])
        d.update(kv)
        return SimConfig.from_dict(d)

    def digest(self) -> str:
        """Hash of everything that affects the results (not threads or timing)."""
        return hashlib.sha256(json.dumps(_result_keys(self), sort_keys=True).encode()).hexdigest()[:16]

    @property
    def basic(self) -> CodeSpec:
        return CodeSpec.parse(self.code)

    @property
    def rate(self) -> float:
        b = self.basic
        return b.k / b.n * self.L / (self.L + 1)


def _result_keys(cfg: SimConfig) -> dict:
    d = cfg.to_dict()
    d.pop("threads")
    d.pop("timing")
    return d


def parse_override(key: str, text: str):
    """Convert a ``key=value`` string to the field's type."""
    fields = {f.name: f for f in dataclasses.fields(SimConfig)}
    if key not in fields:
        raise KeyError(key)
    default = fields[key].default
    if text.lower() in ("none", "null") and key in ("threshold_file", "threshold_value", "stop_after"):
        return None
    if key == "snrs":
        return tuple(float(s) for s in text.split(",") if s)
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes"):
            return True
        if text.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {text!r}")
    if key in ("threshold_value",):
        return float(text)
    if isinstance(default, int) or key == "stop_after":
        return int(text)
    return text


@dataclass
class SimRecord:
    snr_db: float
    sigma2: float
    L: int
    frames: int = 0
    subframe_errors: int = 0
    frame_errors: int = 0
    fer_t: np.ndarray = field(default=None)  # per-position error counts
    first_error: np.ndarray = field(default=None)  # counts of first-error position
    list_total: int = 0
    acs_total: int = 0
    extended: int = 0
    sq_errors: int = 0  # sum over frames of squared per-frame error counts
    decoded_per_frame: int = 0
    seconds: float = 0.0
    converged: bool = False

    def __post_init__(self):
        if self.fer_t is None:
            self.fer_t = np.zeros(self.L, dtype=np.int64)
        if self.first_error is None:
            self.first_error = np.zeros(self.L, dtype=np.int64)

    @property
    def subframes(self) -> int:
        return self.frames * self.decoded_per_frame

    @property
    def fer(self) -> float:
        return self.subframe_errors / self.subframes if self.subframes else math.nan

    @property
    def fer_stderr(self) -> float:
        p, N = self.fer, self.subframes
        return math.sqrt(p * (1 - p) / N) if N else math.nan

    @property
    def fer_frame_stderr(self) -> float:
        """Standard error of ``fer`` with frames as the independent unit (burst aware)."""
        F, d = self.frames, self.decoded_per_frame
        if F < 2:
            return math.nan
        m = self.subframe_errors / F
        var = (self.sq_errors - F * m * m) / (F - 1)
        return math.sqrt(max(var, 0.0) / F) / d

    @property
    def FER(self) -> float:
        return self.frame_errors / self.frames if self.frames else math.nan

    @property
    def fer0(self) -> float:
        return self.fer_t[0] / self.frames if self.frames else math.nan

    @property
    def fer0_stderr(self) -> float:
        p = self.fer0
        return math.sqrt(p * (1 - p) / self.frames) if self.frames else math.nan

    @property
    def fer_positions(self) -> np.ndarray:
        return self.fer_t / max(self.frames, 1)

    @property
    def avg_list_size(self) -> float:
        return self.list_total / self.subframes if self.subframes else math.nan

    @property
    def acs_per_subframe(self) -> float:
        return self.acs_total / self.subframes if self.subframes else math.nan

    def merge(self, chunk: "_Chunk") -> None:
        self.frames += chunk.frames
        self.subframe_errors += chunk.subframe_errors
        self.frame_errors += chunk.frame_errors
        self.fer_t += chunk.fer_t
        self.first_error += chunk.first_error
        self.list_total += chunk.list_total
        self.acs_total += chunk.acs_total
        self.extended += chunk.extended
        self.sq_errors += chunk.sq_errors

    def chain_holds(self) -> bool:
        """``fER_0 <= max_t fER_t <= FER <= sum_t fER_t`` on the empirical counts."""
        if not self.frames:
            return True
        ft = self.fer_t
        return bool(ft[0] <= ft.max() <= self.frame_errors <= ft.sum())


@dataclass
class _Chunk:
    frames: int
    subframe_errors: int
    frame_errors: int
    fer_t: np.ndarray
    first_error: np.ndarray
    list_total: int
    acs_total: int
    extended: int
    sq_errors: int


def resolve_thresholds(cfg: SimConfig, R: RandomTransform | None = None) -> ThresholdTable:
    basic = cfg.basic
    if cfg.threshold_policy in ("paper-A", "paper-B"):
        return reference_table(cfg.threshold_policy, str(basic), cfg.ell_max)
    if cfg.threshold_policy == "inf":
        return constant_table(math.inf, code_id=str(basic), ell_max=cfg.ell_max)
    if cfg.threshold_policy == "constant":
        if cfg.threshold_value is None:
            raise ValueError("threshold_value: required by the constant policy")
        return constant_table(cfg.threshold_value, "constant", str(basic), cfg.ell_max)
    if cfg.threshold_policy == "file":
        if not cfg.threshold_file:
            raise ValueError("threshold_file: required by the file policy")
        return ThresholdTable.load(cfg.threshold_file)
    R = R if R is not None else sample_transform(cfg.r_seed, basic.n)
    return calibrate_thresholds(basic, R, cfg.snrs, cfg.ell_max, cfg.calib_trials, "learned",
                                seed=cfg.master_seed + 1)


def frame_sample(basic: CodeSpec, L: int, sigma: float, master_seed: int, snr_index: int,
                 frame_index: int):
    rng = frame_stream(master_seed, snr_index, frame_index)
    u = rng.integers(0, 2, (L, basic.k), dtype=np.uint8)
    noise = rng.standard_normal((L + 1, basic.n))
    return u, noise


class _Worker:
    def __init__(self, cfg: SimConfig, thresholds: ThresholdTable, R: RandomTransform):
        self.cfg = cfg
        self.basic = cfg.basic
        self.R = R
        self.dcfg = DecodeConfig(thresholds, cfg.ell_max, cfg.window, cfg.keep_list)
        self._decoders = {}

    def decoder(self, snr: float) -> SCDecoder:
        if snr not in self._decoders:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                self._decoders[snr] = SCDecoder(self.basic, self.R, self.dcfg, snr)
        return self._decoders[snr]

    def run(self, snr_index: int, start: int, count: int) -> _Chunk:
        cfg, basic = self.cfg, self.basic
        snr = cfg.snrs[snr_index]
        dec = self.decoder(snr)
        sigma = math.sqrt(snr_to_sigma2(snr))
        steps = cfg.L if cfg.stop_after is None else cfg.stop_after
        fer_t = np.zeros(cfg.L, dtype=np.int64)
        first = np.zeros(cfg.L, dtype=np.int64)
        errs = ferrs = lists = acs = ext = sq = 0
        for i in range(start, start + count):
            u, noise = frame_sample(basic, cfg.L, sigma, cfg.master_seed, snr_index, i)
            fs = encode_frame(u, basic, self.R)
            y = bpsk_map(fs.c_blocks) + sigma * noise
            u_hat, trace = dec.decode(y, stop_after=cfg.stop_after)
            bad = (u_hat[:steps] != u[:steps]).any(axis=1)
            fer_t[:steps] += bad
            nb = int(bad.sum())
            errs += nb
            sq += nb * nb
            if nb:
                ferrs += 1
                first[int(np.argmax(bad))] += 1
            lists += int(trace.ell.sum())
            acs += trace.acs
            ext += int(trace.extended.sum())
        return _Chunk(count, errs, ferrs, fer_t, first, lists, acs, ext, sq)


_POOL_WORKER: _Worker | None = None


def _pool_init(cfg, thresholds, R):
    global _POOL_WORKER
    _POOL_WORKER = _Worker(cfg, thresholds, R)


def _pool_run(args):
    return _POOL_WORKER.run(*args)


def _chunks(cfg: SimConfig):
    start = 0
    while start < cfg.max_frames:
        n = min(cfg.chunk, cfg.max_frames - start)
        yield start, n
        start += n


def _done(rec: SimRecord, cfg: SimConfig) -> bool:
    return rec.subframe_errors >= cfg.min_subframe_errors and rec.frames >= cfg.min_frames


def run_point(cfg: SimConfig, snr_index: int, thresholds: ThresholdTable | None = None,
              R: RandomTransform | None = None, pool=None) -> SimRecord:
    """Simulate one SNR point until the stopping rule fires."""
    basic = cfg.basic
    R = R if R is not None else sample_transform(cfg.r_seed, basic.n)
    thresholds = thresholds if thresholds is not None else resolve_thresholds(cfg, R)
    snr = cfg.snrs[snr_index]
    rec = SimRecord(snr, snr_to_sigma2(snr), cfg.L,
                    decoded_per_frame=cfg.L if cfg.stop_after is None else cfg.stop_after)
    t0 = time.perf_counter()
    jobs = ((snr_index, s, n) for s, n in _chunks(cfg))
    if pool is None:
        worker = _Worker(cfg, thresholds, R)
        for job in jobs:
            rec.merge(worker.run(*job))
            if _done(rec, cfg):
                break
    else:
        # a bounded window of in-flight chunks, merged in index order, keeps the
        # stopping decision independent of scheduling
        pending = deque()
        for job in jobs:
            pending.append(pool.apply_async(_pool_run, (job,)))
            if len(pending) < 2 * cfg.threads:
                continue
            rec.merge(pending.popleft().get())
            if _done(rec, cfg):
                break
        else:
            while pending and not _done(rec, cfg):
                rec.merge(pending.popleft().get())
        for p in pending:
            p.wait()
    rec.converged = rec.subframe_errors >= cfg.min_subframe_errors
    rec.seconds = time.perf_counter() - t0 if cfg.timing else 0.0
    return rec


def run_sweep(cfg: SimConfig, progress=None) -> tuple[list[SimRecord], list[dict]]:
    """One record per SNR plus the bound columns for the same code."""
    basic = cfg.basic
    R = sample_transform(cfg.r_seed, basic.n)
    thresholds = resolve_thresholds(cfg, R)
    bounds = bound_curve(basic, cfg.L, cfg.snrs)
    records = []
    pool = None
    if cfg.threads > 1:
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
        pool = ctx.Pool(cfg.threads, initializer=_pool_init, initargs=(cfg, thresholds, R))
    try:
        for j in range(len(cfg.snrs)):
            rec = run_point(cfg, j, thresholds, R, pool)
            records.append(rec)
            if progress:
                progress(rec)
    finally:
        if pool is not None:
            pool.terminate()
    return records, bounds


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def sweep_rows(records: list[SimRecord], bounds: list[dict]) -> list[dict]:
    rows = []
    for rec, b in zip(records, bounds):
        rows.append({"snr_db": rec.snr_db, "sigma2": rec.sigma2, "frames": rec.frames,
                     "subframes": rec.subframes, "subframe_errors": rec.subframe_errors,
                     "fer": rec.fer, "fer_stderr": rec.fer_stderr, "FER": rec.FER,
                     "avg_list_size": rec.avg_list_size, "fer0": rec.fer0,
                     "fer0_bound": b["fer0_bound"], "fer_bound": b["fer_bound"],
                     "seconds": rec.seconds})
    return rows


def provenance(cfg: SimConfig, extra: dict | None = None) -> list[str]:
    lines = [f"# srumcc {__version__}", f"# config_digest={cfg.digest()}",
             f"# master_seed={cfg.master_seed} r_seed={cfg.r_seed}",
             f"# rate={cfg.rate!r}", "# config=" + json.dumps(_result_keys(cfg), sort_keys=True)]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}={v}")
    return lines


def sweep_csv(cfg: SimConfig, records: list[SimRecord], bounds: list[dict]) -> str:
    lines = provenance(cfg)
    lines.append(",".join(CSV_COLUMNS))
    for row in sweep_rows(records, bounds):
        lines.append(",".join(_fmt(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def write_sweep_csv(path, cfg: SimConfig, records: list[SimRecord], bounds: list[dict]) -> None:
    Path(path).write_text(sweep_csv(cfg, records, bounds))


def read_csv(path) -> list[dict]:
    """Rows of a '#'-commented CSV as dicts of floats."""
    lines = [l for l in Path(path).read_text().splitlines() if l and not l.startswith("#")]
    head = lines[0].split(",")
    return [dict(zip(head, map(float, l.split(",")))) for l in lines[1:]]
