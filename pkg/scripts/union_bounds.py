"""Union-bound curves for every shipped basic code."""
import argparse

import numpy as np

from srumcc.bounds import bound_curve
from srumcc.trellis import CodeSpec

CODES = ("conv:[27,31]o:k=32:tb", "conv:[27,31]o:k=32", "conv:[25,33,37]o:k=48:tb",
         "conv:[25,27,33,37]o:k=32:tb", "rm84x8")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--L", type=int, default=49)
    p.add_argument("--snr", default=None, help="comma list; default 0..5 dB in 0.25 steps")
    a = p.parse_args()
    snrs = ([float(s) for s in a.snr.split(",")] if a.snr
            else list(np.round(np.arange(0.0, 5.01, 0.25), 2)))
    print(f"# L={a.L}")
    print("code,snr_db,fer0_bound,fer_bound")
    for spec in CODES:
        for r in bound_curve(CodeSpec.parse(spec), a.L, snrs):
            print(f"{spec},{r['snr_db']},{r['fer0_bound']!r},{r['fer_bound']!r}")


if __name__ == "__main__":
    main()
