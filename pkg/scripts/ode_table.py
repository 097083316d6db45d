"""Final values of the sliding trajectory for c = 3.0 .. 2.5, with per-run CSVs."""
import argparse
import sys

from twogreedy import cli

if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--csv-dir", default="runs/ode")
    a = p.parse_args()
    sys.exit(cli.main(["ode", "--h", str(a.h), "--csv-dir", a.csv_dir]))
