"""Contact-stream parsing and sliding-window graph extraction."""

import numpy as np
import pytest

from rpsbm import ContactStream, load_contacts, window_contacts
from rpsbm.contacts import window_count


def write_stream(tmp_path, lines, name="contacts.txt"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def brute_force_windows(records, n, window, step):
    """Oracle: enumerate every fully observed window and scan all records."""
    t0 = min(r[0] for r in records)
    t_max = max(r[0] for r in records) - t0
    graphs = []
    k = 1
    while window + step * (k - 1) <= t_max:
        start = step * (k - 1)
        edges = {
            (min(i, j), max(i, j))
            for t, i, j in records
            if start <= (t - t0) < start + window
        }
        graphs.append(edges)
        k += 1
    return graphs


class TestLoad:
    def test_basic_parse_and_node_map(self, tmp_path):
        path = write_stream(tmp_path, ["100 7 3", "120 3 9", "110 9 7"])
        stream = load_contacts(path)
        assert stream.node_map == {3: 0, 7: 1, 9: 2}
        assert stream.records[:, 0].tolist() == [100, 110, 120]

    def test_extra_columns_warn(self, tmp_path):
        path = write_stream(tmp_path, ["100 1 2 classA classB"])
        with pytest.warns(UserWarning, match="extra columns"):
            load_contacts(path)

    def test_self_contacts_dropped(self, tmp_path):
        path = write_stream(tmp_path, ["100 1 1", "110 1 2"])
        with pytest.warns(UserWarning, match="self-contact"):
            stream = load_contacts(path)
        assert len(stream.records) == 1

    def test_empty_stream_rejected(self, tmp_path):
        path = write_stream(tmp_path, ["# only a comment"])
        with pytest.raises(ValueError, match="empty"):
            load_contacts(path)


class TestWindows:
    def stream(self, records):
        arr = np.asarray(records, dtype=np.int64)
        ids = np.unique(arr[:, 1:3])
        node_map = {int(v): k for k, v in enumerate(ids)}
        remap = np.searchsorted(ids, arr[:, 1:3])
        arr = np.column_stack([arr[:, 0], remap])
        arr = arr[np.argsort(arr[:, 0], kind="stable")]
        return ContactStream(records=arr, node_map=node_map)

    def test_record_at_zero_in_first_graph_only(self):
        # second pair keeps the stream long enough for 136+ windows
        records = [(0, 0, 1)] + [(t, 2, 3) for t in range(0, 6001, 100)]
        stream = self.stream(records)
        graphs = window_contacts(stream, 2700, 20)
        present = [k for k, g in enumerate(graphs, 1)
                   if [0, 1] in g.edges.tolist()]
        assert present == [1]

    def test_record_at_2699_in_first_135_graphs(self):
        records = [(2699, 0, 1)] + [(t, 2, 3) for t in range(0, 6001, 100)]
        stream = self.stream(records)
        graphs = window_contacts(stream, 2700, 20)
        present = [k for k, g in enumerate(graphs, 1)
                   if [0, 1] in g.edges.tolist()]
        assert present == list(range(1, 136))

    def test_repeat_contacts_collapse(self):
        records = [(10, 0, 1), (20, 1, 0), (3000, 2, 3)]
        stream = self.stream(records)
        graphs = window_contacts(stream, 2700, 20)
        assert graphs[0].m == 1

    def test_count_formula(self):
        records = [(0, 0, 1), (7180, 0, 1)]
        stream = self.stream(records)
        assert window_count(stream, 2700, 20) == 225

    def test_short_stream_gives_no_windows(self):
        records = [(0, 0, 1), (100, 1, 2)]
        stream = self.stream(records)
        assert window_contacts(stream, 2700, 20) == []

    def test_matches_brute_force_on_random_streams(self):
        gen = np.random.default_rng(50)
        for _ in range(10):
            count = int(gen.integers(30, 120))
            records = [
                (int(gen.integers(0, 4000)), int(gen.integers(0, 8)),
                 int(gen.integers(0, 8)))
                for _ in range(count)
            ]
            records = [(t, i, j) for t, i, j in records if i != j]
            if not records:
                continue
            window = int(gen.integers(200, 1500))
            step = int(gen.integers(10, 300))
            stream = self.stream(records)
            got = window_contacts(stream, window, step)
            # map oracle ids through the stream's relabelling
            nm = stream.node_map
            expect = brute_force_windows(records, stream.n, window, step)
            assert len(got) == len(expect)
            for g, ref in zip(got, expect):
                ref_mapped = sorted(
                    (min(nm[i], nm[j]), max(nm[i], nm[j])) for i, j in ref)
                assert [tuple(e) for e in g.edges.tolist()] == ref_mapped

    def test_invalid_window_params(self):
        stream = self.stream([(0, 0, 1), (5000, 1, 2)])
        with pytest.raises(ValueError):
            window_contacts(stream, 0, 20)
        with pytest.raises(ValueError):
            window_contacts(stream, 2700, 0)
