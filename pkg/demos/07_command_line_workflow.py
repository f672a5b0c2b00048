"""
The command-line workflow, end to end
=====================================

Everything in the library is also reachable through the ``smooth-threshold``
command: simulate a dataset to CSV, fit it with cross-validation, trace the
whole regularization path, and run a seeded benchmark.  This script drives
the CLI in-process (each ``main([...])`` call is exactly one shell command)
and shows the files it leaves behind.
"""

import pathlib
import tempfile

from smooth_threshold.cli import main

workdir = pathlib.Path(tempfile.mkdtemp(prefix="smooth-threshold-demo-"))
data_csv = workdir / "data.csv"

print("$ smooth-threshold simulate --model conditional_mean --n 600 --d 12 "
      "--s 3 --seed 5 --out data.csv")
main(["simulate", "--model", "conditional_mean", "--n", "600", "--d", "12",
      "--s", "3", "--seed", "5", "--out", str(data_csv)])
print(f"  wrote {data_csv.name} plus {data_csv.name}.theta.csv "
      "(true coefficients) and .run.txt (config echo)")

print()
print("$ smooth-threshold fit --input data.csv --tune cv --delta 1.0 --folds 5")
main(["fit", "--input", str(data_csv), "--tune", "cv", "--delta", "1.0",
      "--folds", "5"])

print()
print("$ smooth-threshold path --input data.csv --delta 1.0 "
      "--lambda-tgt 0.01 --out path.csv")
path_csv = workdir / "path.csv"
main(["path", "--input", str(data_csv), "--delta", "1.0",
      "--lambda-tgt", "0.01", "--out", str(path_csv)])
stages = path_csv.read_text().splitlines()
print(f"  {len(stages) - 1} stages; first and last rows:")
print("  " + stages[0][:72] + "...")
print("  " + stages[1][:72] + "...")
print("  " + stages[-1][:72] + "...")

print()
print("$ smooth-threshold diagnose --probe gradient --input data.csv "
      "--delta 0.8")
main(["diagnose", "--probe", "gradient", "--input", str(data_csv),
      "--delta", "0.8"])

print()
print(f"all artifacts are under {workdir}")
