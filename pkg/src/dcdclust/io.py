"""Readers and writers for the on-disk formats used by the CLI.

* features: CSV, one sample per row
* graphs: MatrixMarket coordinate, ``symmetric``, 1-based on disk
* labels: one nonnegative integer per line
* cluster results: JSON; iteration traces: JSON lines
"""

import json

import numpy as np
import scipy.io

from . import graph
from .errors import InvalidInputError

__all__ = [
    "read_features",
    "read_graph",
    "write_graph",
    "read_labels",
    "write_labels",
    "result_document",
    "write_result",
    "read_result",
    "write_traces",
]


def read_features(path, header=False, delimiter=","):
    try:
        X = np.loadtxt(path, delimiter=delimiter, skiprows=1 if header else 0, ndmin=2)
    except ValueError as exc:
        raise InvalidInputError(f"{path}: cannot parse features: {exc}") from exc
    return X


def write_graph(A, path):
    scipy.io.mmwrite(str(path), A.matrix, symmetry="symmetric")


def read_graph(path):
    try:
        info = scipy.io.mminfo(str(path))
        if info[3] != "coordinate":
            raise InvalidInputError(f"{path}: expected a coordinate MatrixMarket file, got {info[3]}")
        matrix = scipy.io.mmread(str(path))
    except ValueError as exc:
        raise InvalidInputError(f"{path}: cannot parse MatrixMarket file: {exc}") from exc
    return graph.from_matrix(matrix)


def read_labels(path):
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                value = int(line)
            except ValueError:
                raise InvalidInputError(f"{path}:{lineno}: not an integer label: {line!r}") from None
            if value < 0:
                raise InvalidInputError(f"{path}:{lineno}: negative label {value}")
            labels.append(value)
    return np.array(labels, dtype=np.int64)


def write_labels(labels, path):
    with open(path, "w") as fh:
        fh.writelines(f"{int(x)}\n" for x in labels)


def result_document(A, r, W, labels, candidates, config, soft=False, alphas=(), eps=None):
    best = min((c for c in candidates if c.ok), key=lambda c: c.final_kl)
    doc = {
        "n": int(A.n),
        "r": int(r),
        "selected": best.source,
        "kl_error": best.final_kl,
        "labels": [int(x) for x in labels],
        "candidates": [
            {
                "source": c.source,
                "alpha_used": c.alpha_used,
                "final_kl": c.final_kl,
                "iterations_run": c.iterations_run,
                "prior_iterations": c.prior_iterations,
                "converged": bool(c.traces and c.traces[-1].converged) if c.ok else False,
                "error": c.error,
            }
            for c in candidates
        ],
        "config": {
            "seed": config.seed,
            "max_iters": config.max_iters,
            "rel_tol": config.rel_tol,
            "floor": config.floor,
            "alphas": [float(a) for a in alphas],
            "eps": eps,
        },
    }
    if soft:
        doc["soft"] = np.asarray(W).tolist()
    return doc


def write_result(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_result(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: invalid JSON: {exc}") from exc
    if "labels" not in doc:
        raise InvalidInputError(f"{path}: result file has no 'labels'")
    return doc


def write_traces(candidates, path):
    """All iteration records of all candidates, one JSON object per line."""
    with open(path, "w") as fh:
        for cand in candidates:
            stages = ["final"] if cand.source == "ncut" else ["prior", "final"]
            for stage, trace in zip(stages, cand.traces):
                for line in trace.iter_json(candidate=cand.source, stage=stage):
                    fh.write(line + "\n")
