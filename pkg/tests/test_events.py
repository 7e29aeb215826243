from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contextcast.errors import ParseError, ValidationError
from contextcast.events import (
    DatasetSplits, SnapshotSequence, Vocab, add_inverse_events, augmented_timeline, history_window,
    load_dataset, partition_by_context, save_dataset, split_by_time,
)

from conftest import random_events


def _write_dataset(root, train, valid=(), test=(), n_ent=2, n_rel=1, n_ctx=1):
    root.mkdir(exist_ok=True)
    for fname, names in (("entity2id.txt", [f"e{i}" for i in range(n_ent)]),
                         ("relation2id.txt", [f"r{i}" for i in range(n_rel)]),
                         ("context2id.txt", [f"c{i}" for i in range(n_ctx)])):
        (root / fname).write_text("".join(f"{n}\t{i}\n" for i, n in enumerate(names)))
    for fname, rows in (("train.txt", train), ("valid.txt", valid), ("test.txt", test)):
        (root / fname).write_text("".join("\t".join(map(str, r)) + "\n" for r in rows))
    return root


class TestLoadDataset:
    def test_single_event(self, tmp_path):
        vocab, splits = load_dataset(_write_dataset(tmp_path / "d", [(0, 0, 1, 0, 0)]))
        assert vocab.entities == ["e0", "e1"]
        np.testing.assert_array_equal(splits.train.events(), [[0, 0, 1, 0, 0]])

    def test_four_fields_is_parse_error_at_line_1(self, tmp_path):
        root = _write_dataset(tmp_path / "d", [(0, 0, 1, 0)])
        with pytest.raises(ParseError) as info:
            load_dataset(root)
        assert info.value.line == 1 and "train.txt" in info.value.path

    def test_horizons(self, tmp_path):
        root = _write_dataset(tmp_path / "d", [(0, 0, 1, 0, 0), (1, 0, 0, 1, 0)],
                              [(0, 0, 1, 2, 0)], [(1, 0, 0, 3, 0)])
        _, splits = load_dataset(root)
        assert (splits.train.horizon, splits.valid.horizon, splits.test.horizon) == (2, 1, 1)
        assert list(splits.test.times) == [3]

    def test_out_of_range_id(self, tmp_path):
        with pytest.raises(ValidationError):
            load_dataset(_write_dataset(tmp_path / "d", [(0, 0, 5, 0, 0)]))

    def test_overlapping_splits(self, tmp_path):
        root = _write_dataset(tmp_path / "d", [(0, 0, 1, 3, 0)], [(0, 0, 1, 2, 0)])
        with pytest.raises(ValidationError):
            load_dataset(root)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(ValidationError):
            load_dataset(tmp_path / "nope")

    def test_save_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        events = np.concatenate([random_events(rng, 5, 6, 2, 3, t) for t in range(10)])
        splits = split_by_time(events, 10)
        splits = DatasetSplits(splits.train, splits.valid, splits.test, frozenset({2}))
        vocab = Vocab.numbered(6, 2, 3)
        save_dataset(tmp_path / "d", vocab, splits)
        v2, s2 = load_dataset(tmp_path / "d")
        assert v2 == vocab and s2.masked_entities == {2}
        for name in ("train", "valid", "test"):
            a, b = splits.split(name), s2.split(name)
            assert a.start == b.start
            np.testing.assert_array_equal(a.events(), b.events())


class TestInverse:
    def test_definition(self):
        out = add_inverse_events([(0, 0, 1, 5, 2)], 3)
        np.testing.assert_array_equal(out, [[0, 0, 1, 5, 2], [1, 3, 0, 5, 2]])

    def test_empty(self):
        assert add_inverse_events([], 3).shape == (0, 5)

    def test_twice(self):
        rng = np.random.default_rng(0)
        ev = random_events(rng, 10, 7, 3, 2, 4)
        once = add_inverse_events(ev, 3)
        twice = add_inverse_events(once, 6)
        assert len(twice) == 40
        back = twice[20:]
        # second-pass inverses point back to the first-pass rows with ids shifted by 2|R|
        np.testing.assert_array_equal(back[:, [2, 0, 3, 4]], once[:, [0, 2, 3, 4]])
        np.testing.assert_array_equal(back[:, 1], once[:, 1] + 6)

    def test_relation_out_of_range(self):
        with pytest.raises(ValidationError):
            add_inverse_events([(0, 3, 1, 0, 0)], 3)


class TestPartition:
    def test_two_contexts(self):
        parts = partition_by_context([(0, 0, 1, 9, 0), (1, 0, 2, 9, 1)], 2)
        np.testing.assert_array_equal(parts[0], [[0, 0, 1, 9, 0]])
        np.testing.assert_array_equal(parts[1], [[1, 0, 2, 9, 1]])

    def test_empty_contexts(self):
        parts = partition_by_context([(0, 0, 1, 0, 0)] * 3, 3)
        assert [len(p) for p in parts] == [3, 0, 0]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 5), st.integers(0, 100))
    def test_multiset_union(self, seed, k, n):
        ev = random_events(np.random.default_rng(seed), n, 5, 3, k)
        parts = partition_by_context(ev, k)
        assert Counter(map(tuple, np.concatenate(parts))) == Counter(map(tuple, ev))
        for c, p in enumerate(parts):
            assert np.all(p[:, 4] == c)

    def test_context_out_of_range(self):
        with pytest.raises(ValidationError):
            partition_by_context([(0, 0, 1, 0, 2)], 2)


class TestHistoryWindow:
    timeline = [np.full((1, 5), t) for t in range(8)]

    @pytest.mark.parametrize("t,d,expect", [(6, 3, [4, 5, 6]), (1, 7, [0, 1]), (0, 1, [0])])
    def test_windows(self, t, d, expect):
        got = [int(s[0, 3]) for s in history_window(self.timeline, t, d)]
        assert got == expect

    def test_sequence_input_clamps_to_start(self):
        seq = SnapshotSequence(5, [np.zeros((0, 5), dtype=np.int64)] * 3)
        assert len(history_window(seq, 6, 5)) == 2

    def test_invalid(self):
        with pytest.raises(ValidationError):
            history_window(self.timeline, -1, 2)
        with pytest.raises(ValidationError):
            history_window(self.timeline, 2, 0)


class TestSplits:
    def test_eight_one_one(self):
        ev = np.array([(0, 0, 1, t, 0) for t in range(10)])
        s = split_by_time(ev, 10)
        assert (s.train.horizon, s.valid.horizon, s.test.horizon) == (8, 1, 1)
        assert s.valid.start == 8 and s.test.start == 9

    def test_every_event_in_exactly_one_snapshot(self):
        rng = np.random.default_rng(1)
        ev = np.concatenate([random_events(rng, rng.integers(0, 4), 4, 2, 2, t) for t in range(20)])
        s = split_by_time(ev, 20)
        seen = Counter()
        for seq in (s.train, s.valid, s.test):
            for t in seq.times:
                assert np.all(seq.at(t)[:, 3] == t)
                seen.update(map(tuple, seq.at(t)))
        assert seen == Counter(map(tuple, ev))

    def test_unordered_splits_rejected(self):
        a = SnapshotSequence(0, [np.zeros((0, 5), dtype=np.int64)] * 3)
        with pytest.raises(ValidationError):
            DatasetSplits(a, a, a)

    def test_augmented_timeline_doubles_events(self):
        ev = np.array([(0, 0, 1, 0, 0), (1, 1, 2, 1, 1), (2, 0, 0, 2, 0)])
        tl = augmented_timeline(split_by_time(ev, 3, (1 / 3, 1 / 3, 1 / 3)), 2)
        assert [len(s) for s in tl] == [2, 2, 2]


def test_vocab_rejects_duplicates_and_fingerprint_tracks_names():
    with pytest.raises(ValidationError):
        Vocab(["a", "a"], ["r"], ["c"])
    a, b = Vocab(["a", "b"], ["r"], ["c"]), Vocab(["a", "x"], ["r"], ["c"])
    assert a.fingerprint()[:3] == b.fingerprint()[:3]
    assert a.fingerprint()[3] != b.fingerprint()[3]
