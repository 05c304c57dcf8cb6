"""First sub-frame error rate for windows 2 and 3 against the list-miss lower bound."""
import argparse
import math

from srumcc.channel import snr_to_sigma2
from srumcc.decoder import genie_lower_bound
from srumcc.harness import SimConfig, resolve_thresholds, run_point


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--code", default="conv:[27,31]o:k=32")
    p.add_argument("--snr", default="2,2.5,3,3.5,4")
    p.add_argument("--genie-snr", default="1,1.25,1.5,1.75,2,2.5,3")
    p.add_argument("--trials", type=int, default=40_000)
    p.add_argument("--policy", default="paper-A")
    a = p.parse_args()
    cfg = SimConfig(code=a.code, snrs=tuple(float(s) for s in a.snr.split(",")), stop_after=1,
                    max_frames=a.trials, min_subframe_errors=10**9, threshold_policy=a.policy)
    th = resolve_thresholds(cfg)
    print("curve,snr_db,fer0,stderr")
    for w in (2, 3):
        for j, snr in enumerate(cfg.snrs):
            r = run_point(cfg.with_overrides(window=w), j, th)
            print(f"w{w},{snr},{r.fer0!r},{r.fer0_stderr!r}", flush=True)
    for snr in (float(s) for s in a.genie_snr.split(",")):
        g = genie_lower_bound(cfg.basic, cfg.ell_max, math.sqrt(snr_to_sigma2(snr)), a.trials)
        print(f"genie,{snr},{g!r},{math.sqrt(g * (1 - g) / a.trials)!r}", flush=True)


if __name__ == "__main__":
    main()
