"""fER of the three TBCC bases of rates 1/2, 1/3 and 1/4 on a common SNR grid."""
import argparse
import sys

from srumcc.harness import SimConfig, run_sweep, sweep_csv

CODES = ("conv:[27,31]o:k=32:tb", "conv:[25,33,37]o:k=48:tb", "conv:[25,27,33,37]o:k=32:tb")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--snr", default="-1,0")
    p.add_argument("--errors", type=int, default=100)
    p.add_argument("--frames", type=int, default=2000)
    p.add_argument("--threads", type=int, default=1)
    a = p.parse_args()
    for spec in CODES:
        cfg = SimConfig(code=spec, snrs=tuple(float(s) for s in a.snr.split(",")),
                        min_subframe_errors=a.errors, max_frames=a.frames, threads=a.threads)
        recs, bounds = run_sweep(cfg)
        sys.stdout.write(sweep_csv(cfg, recs, bounds))


if __name__ == "__main__":
    main()
