"""Residual power rate of single-path scenes over bandwidth, distance and elevation."""

import argparse
import math
from dataclasses import replace

from ucabeam import CancellationConfig
from ucabeam.estimator import rp_sweep
from ucabeam.scene import UcaGeometry


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta-t", type=float, default=45.0, help="label threshold in dB")
    ap.add_argument("--window", default="hann", choices=("hann", "hamming", "none"))
    args = ap.parse_args()

    base = CancellationConfig(label_threshold_db=args.eta_t)
    cfg = replace(base, steering=replace(base.steering, window=args.window))
    bws = [0.4e9, 1e9, 2e9, 3e9]
    ds = [3.0, 5.0, 10.0, 30.0]
    pts = rp_sweep(UcaGeometry(0.5, 720), 29e9, bws, ds, [math.pi / 2, math.radians(120)], cfg)
    table = {(p.bandwidth, p.distance, round(math.degrees(p.elevation))): p.rate for p in pts}
    for th in (90, 120):
        print(f"elevation {th} deg, R_p in %")
        print("  B [GHz] " + "".join(f"{d:>9.0f} m" for d in ds))
        for b in bws:
            print(f"  {b / 1e9:7.1f} " + "".join(f"{table[(b, d, th)]:11.4f}" for d in ds))


if __name__ == "__main__":
    main()
