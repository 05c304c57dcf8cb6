"""Average list rank of the transmitted codeword for the k=32 TBCC."""
import argparse
import math

import numpy as np

from srumcc import __version__
from srumcc.basic_code import list_failure_probability
from srumcc.channel import snr_to_sigma2
from srumcc.trellis import CodeSpec


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--code", default="conv:[27,31]o:k=32:tb")
    p.add_argument("--snr", default="2,2.5,3,3.5,4")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--ell-max", type=int, default=64)
    p.add_argument("--seed", type=int, default=200)
    a = p.parse_args()
    b = CodeSpec.parse(a.code)
    print(f"# srumcc {__version__}\n# code={b} trials={a.trials} ell_max={a.ell_max} seed={a.seed}")
    print("snr_db,avg_rank_capped,p_miss")
    for j, snr in enumerate(float(s) for s in a.snr.split(",")):
        ranks = np.empty(a.trials, dtype=np.int64)
        miss = list_failure_probability(b, a.ell_max, math.sqrt(snr_to_sigma2(snr)), a.trials,
                                        seed=a.seed + j, ranks=ranks)
        print(f"{snr},{np.minimum(ranks, a.ell_max).mean():.5f},{miss!r}", flush=True)


if __name__ == "__main__":
    main()
