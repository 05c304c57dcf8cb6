import json
import math

import numpy as np
import pytest

from srumcc.harness import (CSV_COLUMNS, SimConfig, SimRecord, parse_override, read_csv,
                            run_point, run_sweep, write_sweep_csv)

SMALL = SimConfig(code="conv:[27,31]o:k=16:tb", L=6, snrs=(2.0,), max_frames=24, chunk=4,
                  min_subframe_errors=10**9, threshold_policy="paper-B")


def test_config_json_round_trip():
    cfg = SMALL.with_overrides(snrs=(1.0, 2.5), stop_after=1)
    assert SimConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(KeyError):
        SimConfig.from_dict({"bogus": 1})
    with pytest.raises(KeyError):
        cfg.with_overrides(nope=3)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(snrs=())
    with pytest.raises(ValueError):
        SimConfig(threshold_policy="whatever")
    with pytest.raises(ValueError):
        SimConfig(code="conv:[]o:k=3")


def test_parse_override_types():
    assert parse_override("L", "7") == 7
    assert parse_override("snrs", "1,2.5") == (1.0, 2.5)
    assert parse_override("timing", "false") is False
    assert parse_override("stop_after", "none") is None
    assert parse_override("threshold_value", "1.2") == 1.2
    with pytest.raises(KeyError):
        parse_override("nope", "1")


def test_digest_ignores_threads():
    assert SMALL.digest() == SMALL.with_overrides(threads=3, timing=False).digest()
    assert SMALL.digest() != SMALL.with_overrides(master_seed=9).digest()


def test_rate():
    assert SimConfig().rate == pytest.approx(0.5 * 49 / 50)


def test_noiseless_point():
    rec = run_point(SMALL.with_overrides(snrs=(60.0,), max_frames=4), 0)
    assert rec.fer == 0.0 and rec.avg_list_size == 1.0 and rec.subframes == 24


def test_worker_count_does_not_change_records():
    cfg = SMALL.with_overrides(snrs=(1.0,), min_subframe_errors=5, timing=False)
    a, _ = run_sweep(cfg)
    b, _ = run_sweep(cfg.with_overrides(threads=2))
    ra, rb = a[0], b[0]
    assert ra.frames == rb.frames and ra.subframe_errors == rb.subframe_errors
    assert np.array_equal(ra.fer_t, rb.fer_t) and ra.list_total == rb.list_total
    assert ra.converged


def test_record_identities():
    recs, bounds = run_sweep(SMALL.with_overrides(snrs=(1.0, 2.0)))
    for rec in recs:
        assert rec.fer == rec.subframe_errors / rec.subframes
        assert rec.chain_holds()
        assert rec.first_error.sum() == rec.frame_errors
        assert rec.fer_t.sum() == rec.subframe_errors
        assert rec.fer_stderr == pytest.approx(math.sqrt(rec.fer * (1 - rec.fer) / rec.subframes))


def test_stop_after_counts_only_first_subframes():
    rec = run_point(SMALL.with_overrides(stop_after=1, snrs=(1.0,)), 0)
    assert rec.subframes == rec.frames and rec.fer == rec.fer0
    assert rec.fer_t[1:].sum() == 0


def test_csv_layout(tmp_path):
    cfg = SMALL.with_overrides(timing=False)
    recs, bounds = run_sweep(cfg)
    write_sweep_csv(tmp_path / "s.csv", cfg, recs, bounds)
    text = (tmp_path / "s.csv").read_text()
    header = [l for l in text.splitlines() if not l.startswith("#")][0]
    assert tuple(header.split(",")) == CSV_COLUMNS
    assert f"config_digest={cfg.digest()}" in text
    row = read_csv(tmp_path / "s.csv")[0]
    assert row["frames"] == 24 and row["seconds"] == 0.0


def test_learned_policy_and_file_policy(tmp_path):
    from srumcc.edf import ThresholdTable

    ThresholdTable((2.0,), (1.0,)).save(tmp_path / "t.txt")
    rec = run_point(SMALL.with_overrides(threshold_policy="file",
                                         threshold_file=str(tmp_path / "t.txt"), max_frames=4), 0)
    assert rec.frames == 4
    with pytest.raises(ValueError):
        run_point(SMALL.with_overrides(threshold_policy="constant", max_frames=4), 0)


def test_frame_stderr():
    # with one decoded sub-frame per frame the cluster estimate is the binomial one
    rec = run_point(SMALL.with_overrides(stop_after=1, snrs=(-1.0,), max_frames=40), 0)
    assert 0 < rec.fer < 1
    F = rec.frames
    assert rec.fer_frame_stderr == pytest.approx(rec.fer_stderr * math.sqrt(F / (F - 1)))
    # whole-frame bursts inflate it over the per-sub-frame binomial value
    rec = run_point(SMALL.with_overrides(snrs=(0.0,), max_frames=40), 0)
    assert rec.fer_frame_stderr > rec.fer_stderr
