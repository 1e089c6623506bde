"""Temporal contact streams and sliding-window graph extraction.

Input format: whitespace-separated "t i j" lines (seconds, two node ids);
extra columns are ignored with a warning.  Windows are half-open
[start, start + window) and anchored at the stream's earliest timestamp;
window k (1-indexed) starts at step*(k-1).  Only fully observed windows are
emitted: the count is floor((t_max - window)/step) + 1, clipped at 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import Graph


@dataclass(frozen=True)
class ContactStream:
    """Time-stamped contacts with a fixed node relabelling.

    ``records`` is an (r, 3) int array of (t, i, j) rows sorted by t, with
    node ids already mapped through ``node_map`` (sorted original ids ->
    0..n-1).
    """

    records: np.ndarray
    node_map: dict[int, int]

    @property
    def n(self) -> int:
        return len(self.node_map)

    @property
    def t_min(self) -> int:
        return int(self.records[0, 0])

    @property
    def t_max(self) -> int:
        return int(self.records[-1, 0])


def load_contacts(path) -> ContactStream:
    rows = []
    extra_seen = False
    dropped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) < 3:
                raise ValueError(f"{path}:{lineno}: expected 't i j'")
            if len(parts) > 3:
                extra_seen = True
            t, i, j = int(parts[0]), int(parts[1]), int(parts[2])
            if i == j:
                dropped += 1
                continue
            rows.append((t, i, j))
    if extra_seen:
        warnings.warn("contact file has extra columns; ignored")
    if dropped:
        warnings.warn(f"dropped {dropped} self-contact records")
    if not rows:
        raise ValueError("empty contact stream")
    arr = np.asarray(rows, dtype=np.int64)
    ids = np.unique(arr[:, 1:3])
    node_map = {int(v): k for k, v in enumerate(ids)}
    remap = np.searchsorted(ids, arr[:, 1:3])
    arr = np.column_stack([arr[:, 0], remap])
    arr = arr[np.argsort(arr[:, 0], kind="stable")]
    return ContactStream(records=arr, node_map=node_map)


def window_count(stream: ContactStream, window: int, step: int) -> int:
    span = stream.t_max - stream.t_min
    return max(0, (span - window) // step + 1)


def window_contacts(stream: ContactStream, window: int, step: int) -> list[Graph]:
    """Graphs over sliding windows; edge (i,j) in graph k iff some contact
    with that pair has t in [step*(k-1), window + step*(k-1))."""
    if window <= 0 or step <= 0:
        raise ValueError("window and step must be positive")
    if stream.records.size == 0:
        raise ValueError("empty contact stream")
    count = window_count(stream, window, step)
    t = stream.records[:, 0] - stream.t_min
    n = stream.n
    graphs = []
    for k in range(1, count + 1):
        start = step * (k - 1)
        mask = (t >= start) & (t < start + window)
        pairs = stream.records[mask, 1:3]
        graphs.append(Graph(n, pairs))
    return graphs
