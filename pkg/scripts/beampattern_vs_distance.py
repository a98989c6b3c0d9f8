"""CBF and FIBF gain toward a single in-plane path as the source distance varies.

Prints a CSV with the CBF gain at the path azimuth and the FIBF peak gain, both
in dB relative to a unit path.
"""

import argparse
import math
import sys

import numpy as np

from ucabeam.beamform import unit_patterns
from ucabeam.scene import PathTruth, ScattererLocation, UcaGeometry, path_response


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radius", type=float, default=0.5)
    ap.add_argument("--elements", type=int, default=720)
    ap.add_argument("--frequency", type=float, default=29e9)
    ap.add_argument("--start", type=float, default=3.0)
    ap.add_argument("--stop", type=float, default=70.0)
    ap.add_argument("--step", type=float, default=0.5)
    args = ap.parse_args()

    geom = UcaGeometry(args.radius, args.elements)
    azimuth = math.pi
    col = int(round(azimuth / (2 * math.pi) * 720)) % 720
    print("distance_m,cbf_at_path_db,fibf_peak_db")
    for d in np.arange(args.start, args.stop + 1e-9, args.step):
        h = path_response(geom, [args.frequency], PathTruth(1.0, 0.0, ScattererLocation(d, math.pi / 2, azimuth)))
        cbf, fibf = unit_patterns(geom, args.frequency, h[:, 0])
        sys.stdout.write(f"{d:.2f},{20 * math.log10(abs(cbf[col])):.3f},{20 * math.log10(np.abs(fibf).max()):.3f}\n")


if __name__ == "__main__":
    main()
