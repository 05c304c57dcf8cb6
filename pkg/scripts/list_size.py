"""Average list size and fER under the transcribed threshold tables."""
import argparse
import sys

from srumcc.harness import SimConfig, run_sweep, sweep_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--policy", default="paper-A", choices=("paper-A", "paper-B"))
    p.add_argument("--snr", default="2,2.5,3,3.5,4")
    p.add_argument("--frames", type=int, default=1021)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=40)
    a = p.parse_args()
    cfg = SimConfig(snrs=tuple(float(s) for s in a.snr.split(",")), threshold_policy=a.policy,
                    max_frames=a.frames, min_subframe_errors=10**9, master_seed=a.seed,
                    threads=a.threads)
    recs, bounds = run_sweep(cfg, progress=lambda r: print(
        f"{r.snr_db} dB: ell={r.avg_list_size:.2f} fer={r.fer:.3e}", file=sys.stderr))
    sys.stdout.write(sweep_csv(cfg, recs, bounds))


if __name__ == "__main__":
    main()
