import gzip
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from snnbudget.data import (Dataset, StreamSpec, load_dataset, load_idx, make_stream, parse_idx,
                            to_idx)
from snnbudget.errors import IdxFormatError, IdxLengthError, InputError

LABEL_FIXTURE = bytes([0, 0, 8, 1, 0, 0, 0, 2, 5, 7])


def test_label_fixture():
    assert list(parse_idx(LABEL_FIXTURE)) == [5, 7]


def test_gzip_detected():
    assert list(parse_idx(gzip.compress(LABEL_FIXTURE))) == [5, 7]


def test_bad_magic():
    with pytest.raises(IdxFormatError):
        parse_idx(bytes([0, 0, 8, 0x99, 0, 0, 0, 1, 3]))


def test_truncated_images():
    header = struct.pack(">IIII", 0x803, 3, 2, 2)
    with pytest.raises(IdxLengthError):
        parse_idx(header + bytes(2 * 4))
    with pytest.raises(IdxLengthError):
        parse_idx(header[:10])
    with pytest.raises(IdxLengthError):
        parse_idx(b"\x00\x00")


@given(st.integers(0, 5), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_round_trip(n, rows, cols, seed):
    arr = np.random.default_rng(seed).integers(0, 256, (n, rows, cols), dtype=np.uint8)
    raw = to_idx(arr)
    assert to_idx(parse_idx(raw)) == raw
    assert np.array_equal(parse_idx(raw), arr)
    assert to_idx(parse_idx(LABEL_FIXTURE)) == LABEL_FIXTURE


def test_bundled_dataset(data_dir):
    train = load_dataset(data_dir, "train")
    test = load_dataset(data_dir, "test")
    assert train.images.shape[1:] == (28, 28) and test.images.shape[1:] == (28, 28)
    assert len(train) + len(test) == 10000
    assert set(np.unique(train.labels)) == set(range(10))
    assert load_idx(data_dir / "t10k-labels-idx1-ubyte.gz").shape == (len(test),)


def test_missing_dataset(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path)


def test_dataset_validation():
    with pytest.raises(InputError):
        Dataset(np.zeros((2, 4)), np.zeros(3, dtype=np.uint8))
    with pytest.raises(InputError):
        Dataset(np.zeros((1, 4)), np.array([10]))


def _toy(n_per_class=30):
    labels = np.repeat(np.arange(10), n_per_class).astype(np.uint8)
    return Dataset(np.arange(len(labels))[:, None], labels)


def test_stream_parse_and_format():
    spec = StreamSpec.parse("0-4:50; 5-9:50")
    assert spec.phases == (((0, 1, 2, 3, 4), 50), ((5, 6, 7, 8, 9), 50))
    assert spec.classes == tuple(range(10)) and spec.total == 100
    assert StreamSpec.parse(spec.format()) == spec
    assert StreamSpec.parse("0,2,7:3").phases == (((0, 2, 7), 3),)
    assert StreamSpec.parse("").phases == ()
    for bad in ("0-4", "a:3", "0:0", "5-3:2"):
        with pytest.raises(ValueError):
            StreamSpec.parse(bad)


def test_single_mixed_phase():
    s = make_stream(_toy(), StreamSpec.parse("0-9:100", seed=1))
    assert len(s) == 100 and len(np.unique(s.images)) == 100


def test_partition_property():
    s = make_stream(_toy(), StreamSpec.parse("0-4:50;5-9:50", seed=3))
    assert np.all(s.labels[:50] <= 4) and np.all(s.labels[50:] >= 5)


@given(st.integers(0, 2**32 - 1), st.booleans())
def test_stream_deterministic_and_membership(seed, shuffle):
    spec = StreamSpec.parse("1,3:20; 0-9:40; 8:5", seed=seed, shuffle_within_phase=shuffle)
    a, b = make_stream(_toy(), spec), make_stream(_toy(), spec)
    assert np.array_equal(a.images, b.images)
    assert set(a.labels[:20]) <= {1, 3} and set(a.labels[60:]) == {8}


def test_stream_insufficient_samples():
    with pytest.raises(InputError):
        make_stream(_toy(5), StreamSpec.parse("0:6"))
