#!/usr/bin/env python3
"""Regenerates the bundled ARFF fixtures in data/ and their expected summaries."""

import json
import pathlib

import numpy as np

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def write_arff(path, relation, q, label_names, features, labels, nominal=None):
    nominal = nominal or {}
    lines = [f"@relation '{relation}: -C {q}'", ""]
    for name in label_names:
        lines.append(f"@attribute {name} {{0,1}}")
    for j in range(features.shape[1]):
        if j in nominal:
            lines.append(f"@attribute f{j} {{{','.join(nominal[j])}}}")
        else:
            lines.append(f"@attribute f{j} numeric")
    lines += ["", "@data"]
    for i in range(features.shape[0]):
        row = [str(int(v)) for v in labels[i]]
        for j in range(features.shape[1]):
            if j in nominal:
                row.append(nominal[j][int(features[i, j])])
            else:
                row.append(f"{features[i, j]:.4f}")
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def summary(labels):
    n, q = labels.shape
    total = int(labels.sum())
    distinct = len({tuple(r) for r in labels.tolist()})
    return {
        "n": n,
        "q": q,
        "cardinality": total / n,
        "density": total / (n * q),
        "diversity": distinct / min(2**q, n),
        "distinct_labelsets": distinct,
    }


def tiny(rng):
    n = 60
    x = rng.normal(size=(n, 4))
    y = np.zeros((n, 3), dtype=int)
    y[:, 0] = x[:, 0] + 0.3 * rng.normal(size=n) > 0
    y[:, 1] = x[:, 1] - 0.5 * x[:, 0] + 0.3 * rng.normal(size=n) > 0.2
    y[:, 2] = (x[:, 2] > 0) & (y[:, 0] == 1)
    write_arff(DATA / "tiny.arff", "tiny", 3, ["l0", "l1", "l2"], x, y)


def flags_like(rng):
    # 194 examples, 7 labels, 658 positive cells, 19 features of which 9 nominal.
    n, q, positives = 194, 7, 658
    cells = rng.permutation(n * q)[:positives]
    y = np.zeros(n * q, dtype=int)
    y[cells] = 1
    y = y.reshape(n, q)
    x = rng.normal(size=(n, 19))
    nominal = {}
    for j in range(10, 19):
        levels = [f"v{k}" for k in range(int(rng.integers(2, 6)))]
        nominal[j] = levels
        x[:, j] = rng.integers(0, len(levels), size=n)
    names = ["red", "green", "blue", "yellow", "white", "black", "orange"]
    write_arff(DATA / "flags_like.arff", "flags_like", q, names, x, y, nominal)
    return summary(y)


def small20(rng):
    n = 20
    x = np.round(rng.normal(size=(n, 2)), 2)
    y = (rng.random(size=(n, 3)) < 0.4).astype(int)
    write_arff(DATA / "small20.arff", "small20", 3, ["a", "b", "c"], x, y)
    s = summary(y)
    s["name"] = "small20"
    s["m"] = 2
    s["labels"] = y.tolist()
    (DATA / "small20.expected.json").write_text(json.dumps(s, sort_keys=True) + "\n")


def zero_labels():
    x = np.arange(10, dtype=float).reshape(5, 2)
    y = np.zeros((5, 2), dtype=int)
    write_arff(DATA / "zero_labels.arff", "zero_labels", 2, ["a", "b"], x, y)


if __name__ == "__main__":
    DATA.mkdir(exist_ok=True)
    rng = np.random.default_rng(20240601)
    tiny(rng)
    print("flags_like", flags_like(rng))
    small20(rng)
    zero_labels()
