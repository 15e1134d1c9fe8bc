"""Plain-text data formats: point-cloud and field CSVs, signature dumps,
loss histories, and metric records.

Floats are written with ``repr`` so that reading them back is lossless and
seeded reruns produce byte-identical files.
"""

from __future__ import annotations

import csv
import json

import numpy as np


def save_points_csv(points, path):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(points.shape[1])])
        for row in points:
            writer.writerow([repr(float(v)) for v in row])


def load_points_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    return np.array(rows, dtype=np.float64)


def save_signatures_csv(signatures, path):
    """Sparse dump, one row per stored entry: start_node, node, value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["start_node", "node", "value"])
        for s in range(signatures.num_vectors):
            nodes, values = signatures.row(s)
            start = signatures.start_nodes[s]
            for node, value in zip(nodes, values):
                writer.writerow([int(start), int(node), repr(float(value))])


def save_loss_history_csv(history, path):
    """history: sequence of (epoch, train_loss, val_loss) tuples."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for epoch, train_loss, val_loss in history:
            writer.writerow([int(epoch), repr(float(train_loss)),
                             "" if val_loss is None else repr(float(val_loss))])


def save_table_csv(rows, fieldnames, path):
    """Write dict rows with a fixed column order; floats via repr."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            out = {}
            for key in fieldnames:
                val = row.get(key, "")
                out[key] = repr(float(val)) if isinstance(val, float) else val
            writer.writerow(out)


def save_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
