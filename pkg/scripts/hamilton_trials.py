"""Hamilton pipeline success rate at desk-scale parameters."""
import argparse
import sys

from twogreedy import cli

if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=10**4)
    p.add_argument("--c", type=float, default=15.0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="runs/hamilton.json")
    a = p.parse_args()
    code = cli.main(["hamilton", "--n", str(a.n), "--c", str(a.c), "--trials", str(a.trials),
                     "--jobs", str(a.jobs), "--out", a.out])
    print(f"wrote {a.out}")
    sys.exit(code)
