"""One-step Monte Carlo of the zeta drift for each forced step kind."""
import argparse
import sys

from twogreedy import cli

if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--c", type=float, default=3.0)
    p.add_argument("--reps", type=int, default=10**4)
    a = p.parse_args()
    sys.exit(cli.main(["drift-test", "--n", str(a.n), "--c", str(a.c), "--reps", str(a.reps)]))
