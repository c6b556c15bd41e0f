#!/usr/bin/env python3
"""Build the LIBSVM-format benchmark files under data/ from public copies on PyPI.

mushroom.libsvm.gz
    UCI Mushroom (KEEL distribution, rows with a missing stalk-root value
    removed: 5644 instances). Every categorical attribute is one-hot encoded
    over the values observed in the file; label 1 = edible, 2 = poisonous.

a9a_like.libsvm.gz
    UCI Adult training file (32561 instances) binarized the way the a9a
    LIBSVM set was built: the six continuous attributes are cut at their
    quintiles (duplicate cut points merged, so capital-gain/loss end up as a
    zero/non-zero pair) and the eight categorical attributes are one-hot
    encoded over the category lists of adult.names. Missing values activate
    no feature. Label -1 = <=50K, +1 = >50K.

Usage: python3 tools/prepare_datasets.py [--out data] [--wheels DIR]
"""

import argparse
import gzip
import pathlib
import subprocess
import tempfile
import zipfile

import numpy as np

ADULT_CATEGORIES = {
    "workclass": ["Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
                  "Local-gov", "State-gov", "Without-pay", "Never-worked"],
    "education": ["Bachelors", "Some-college", "11th", "HS-grad", "Prof-school",
                  "Assoc-acdm", "Assoc-voc", "9th", "7th-8th", "12th", "Masters",
                  "1st-4th", "10th", "Doctorate", "5th-6th", "Preschool"],
    "marital-status": ["Married-civ-spouse", "Divorced", "Never-married",
                       "Separated", "Widowed", "Married-spouse-absent",
                       "Married-AF-spouse"],
    "occupation": ["Tech-support", "Craft-repair", "Other-service", "Sales",
                   "Exec-managerial", "Prof-specialty", "Handlers-cleaners",
                   "Machine-op-inspct", "Adm-clerical", "Farming-fishing",
                   "Transport-moving", "Priv-house-serv", "Protective-serv",
                   "Armed-Forces"],
    "relationship": ["Wife", "Own-child", "Husband", "Not-in-family",
                     "Other-relative", "Unmarried"],
    "race": ["White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other",
             "Black"],
    "sex": ["Female", "Male"],
    "native-country": ["United-States", "Cambodia", "England", "Puerto-Rico",
                       "Canada", "Germany", "Outlying-US(Guam-USVI-etc)",
                       "India", "Japan", "Greece", "South", "China", "Cuba",
                       "Iran", "Honduras", "Philippines", "Italy", "Poland",
                       "Jamaica", "Vietnam", "Mexico", "Portugal", "Ireland",
                       "France", "Dominican-Republic", "Laos", "Ecuador",
                       "Taiwan", "Haiti", "Columbia", "Hungary", "Guatemala",
                       "Nicaragua", "Scotland", "Thailand", "Yugoslavia",
                       "El-Salvador", "Trinadad&Tobago", "Peru", "Hong",
                       "Holand-Netherlands"],
}

ADULT_COLUMNS = ["age", "workclass", "fnlwgt", "education", "education-num",
                 "marital-status", "occupation", "relationship", "race", "sex",
                 "capital-gain", "capital-loss", "hours-per-week",
                 "native-country", "income"]
ADULT_CONTINUOUS = ["age", "fnlwgt", "education-num", "capital-gain",
                    "capital-loss", "hours-per-week"]


def fetch_wheel(name, wheel_dir):
    matches = sorted(pathlib.Path(wheel_dir).glob(name.replace("-", "_") + "-*.whl"))
    if not matches:
        subprocess.run(["pip", "download", "--no-deps", "-q", "-d", str(wheel_dir), name],
                       check=True)
        matches = sorted(pathlib.Path(wheel_dir).glob(name.replace("-", "_") + "-*.whl"))
    return zipfile.ZipFile(matches[-1])


def write_libsvm(path, labels, rows):
    with gzip.GzipFile(path, "wb", mtime=0) as out:
        for label, row in zip(labels, rows):
            feats = " ".join(f"{j + 1}:1" for j in row)
            out.write(f"{label} {feats}\n".encode())


def build_mushroom(wheel_dir, out_dir):
    raw = fetch_wheel("keel-ds", wheel_dir).read(
        "keel_ds/data/balanced/raw/mushroom.dat").decode()
    records = [line.split(",") for line in raw.splitlines() if line.strip()]
    num_attrs = len(records[0]) - 1
    values = [sorted({r[a] for r in records}) for a in range(num_attrs)]
    offsets = np.cumsum([0] + [len(v) for v in values])
    labels, rows = [], []
    for r in records:
        labels.append(1 if r[-1] == "e" else 2)
        rows.append([int(offsets[a]) + values[a].index(r[a]) for a in range(num_attrs)])
    write_libsvm(out_dir / "mushroom.libsvm.gz", labels, rows)
    return len(records), int(offsets[-1])


def build_a9a_like(wheel_dir, out_dir):
    raw = fetch_wheel("responsibly", wheel_dir).read(
        "responsibly/dataset/adult/adult.data").decode()
    records = [[f.strip() for f in line.split(",")] for line in raw.splitlines() if line.strip()]
    col = {c: i for i, c in enumerate(ADULT_COLUMNS)}

    blocks = []  # (name, encoder) in file order
    for c in ADULT_COLUMNS[:-1]:
        if c in ADULT_CONTINUOUS:
            vals = np.array([float(r[col[c]]) for r in records])
            cuts = np.unique(np.quantile(vals, [0.2, 0.4, 0.6, 0.8]))
            blocks.append((c, len(cuts) + 1,
                           lambda r, c=c, cuts=cuts: int(np.searchsorted(cuts, float(r[col[c]]), side="left"))))
        else:
            cats = ADULT_CATEGORIES[c]
            blocks.append((c, len(cats),
                           lambda r, c=c, cats=cats: cats.index(r[col[c]]) if r[col[c]] in cats else None))
    offsets = np.cumsum([0] + [b[1] for b in blocks])
    labels, rows = [], []
    for r in records:
        labels.append(1 if r[col["income"]].startswith(">") else -1)
        row = []
        for (name, width, enc), off in zip(blocks, offsets):
            k = enc(r)
            if k is not None:
                row.append(int(off) + k)
        rows.append(row)
    write_libsvm(out_dir / "a9a_like.libsvm.gz", labels, rows)
    return len(records), int(offsets[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--wheels", default=None)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        wheel_dir = args.wheels or tmp
        n, d = build_mushroom(wheel_dir, out)
        print(f"mushroom: N={n} n={d}")
        n, d = build_a9a_like(wheel_dir, out)
        print(f"a9a_like: N={n} n={d}")


if __name__ == "__main__":
    main()
