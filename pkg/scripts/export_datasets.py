"""Export the scikit-learn benchmark datasets to CSV files under data/.

Run once (needs scikit-learn, which the package itself does not depend on):

    python scripts/export_datasets.py [outdir]

Each file has a header row of feature names followed by a ``target`` column.
"""

import csv
import sys
from pathlib import Path

from sklearn.datasets import load_breast_cancer, load_diabetes, load_wine

LOADERS = {
    "breast_cancer": load_breast_cancer,
    "wine": load_wine,
    "diabetes": lambda: load_diabetes(scaled=False),
}


def export(outdir):
    outdir.mkdir(parents=True, exist_ok=True)
    for name, loader in LOADERS.items():
        bunch = loader()
        names = [n.replace(" ", "_") for n in bunch.feature_names]
        path = outdir / f"{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names + ["target"])
            for row, t in zip(bunch.data, bunch.target):
                w.writerow([repr(float(v)) for v in row] + [repr(float(t))])
        print(f"{path}: {bunch.data.shape[0]} rows, {bunch.data.shape[1]} features")


if __name__ == "__main__":
    export(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "data")
