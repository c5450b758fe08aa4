import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcmc.backend import make_device
from bcmc.errors import InputError
from bcmc.primitives import exclusive_scan, sort_by_key_desc, stream_compact, stream_compact_ids


def serial_scan(x):
    out = np.zeros(len(x), np.uint32)
    acc = 0
    for i, v in enumerate(x):
        out[i] = acc
        acc += int(v)
    return out, acc


def test_scan_empty(backend):
    r = exclusive_scan([], make_device(backend))
    assert r.total == 0


def test_scan_hand_example(backend):
    r = exclusive_scan([1, 0, 1, 1], make_device(backend))
    assert r.offsets.tolist() == [0, 1, 1, 2]
    assert r.total == 3


@pytest.mark.parametrize("n", [1, 63, 64, 65, 255, 257, 4096, 100_000])
def test_scan_against_serial_fold(backend, n):
    rng = np.random.default_rng(n)
    x = rng.integers(0, 7, n).astype(np.uint32)
    r = exclusive_scan(x, make_device(backend))
    offs, total = serial_scan(x)
    assert r.total == total
    assert (r.offsets == offs).all()


def test_compact_ids_examples(backend):
    dev = make_device(backend)
    assert stream_compact_ids([0, 0, 0], dev).tolist() == []
    assert stream_compact_ids([1, 0, 1, 1], dev).tolist() == [0, 2, 3]


def test_compact_values_example(backend):
    dev = make_device(backend)
    out = stream_compact([0, 1, 1], np.array([9, 7, 5], np.uint32), dev)
    assert out.tolist() == [7, 5]
    assert stream_compact(np.zeros(5, np.uint32), np.arange(5, dtype=np.uint32), dev).tolist() == []


def test_compact_against_serial_filter(backend):
    rng = np.random.default_rng(17)
    dev = make_device(backend)
    mask = rng.integers(0, 2, 100_000).astype(np.uint32)
    vals = rng.integers(0, 2**32, 100_000, dtype=np.uint64).astype(np.uint32)
    assert (stream_compact_ids(mask, dev) == np.nonzero(mask)[0]).all()
    assert (stream_compact(mask, vals, dev) == vals[mask == 1]).all()


def test_compact_length_mismatch():
    with pytest.raises(InputError):
        stream_compact([1, 0], np.zeros(3, np.uint32))


def test_sort_empty_and_example(backend):
    dev = make_device(backend)
    ks, vs = sort_by_key_desc([], [], dev)
    assert len(ks) == 0 and len(vs) == 0
    ks, vs = sort_by_key_desc([1, 3, 3, 0], [10, 11, 12, 13], dev)
    assert ks.tolist() == [3, 3, 1, 0]
    assert vs.tolist() == [11, 12, 10, 13]  # equal keys keep input order


def test_sort_length_mismatch():
    with pytest.raises(InputError):
        sort_by_key_desc([1, 2], [1])


def test_sort_stability_on_constructed_runs(backend):
    dev = make_device(backend)
    keys = np.repeat([5, 1, 5, 0], 50).astype(np.uint32)
    vals = np.arange(len(keys), dtype=np.uint32)
    ks, vs = sort_by_key_desc(keys, vals, dev)
    ref = np.lexsort((vals, ~keys))
    assert (ks == keys[ref]).all() and (vs == vals[ref]).all()


@pytest.mark.parametrize("n", [1, 65, 4096, 50_000])
def test_sort_against_serial_stable_sort(backend, n):
    rng = np.random.default_rng(n + 1)
    keys = rng.integers(0, 2**32, n, dtype=np.uint64).astype(np.uint32)
    vals = rng.integers(0, 2**32, n, dtype=np.uint64).astype(np.uint32)
    ks, vs = sort_by_key_desc(keys, vals, make_device(backend))
    ref = np.lexsort((np.arange(n), ~keys))
    assert (ks == keys[ref]).all()
    assert (vs == vals[ref]).all()


@given(st.lists(st.integers(0, 1000), max_size=400), st.lists(st.integers(0, 1000), max_size=400))
@settings(max_examples=40, deadline=None)
def test_scan_linearity(a, b):
    ra = exclusive_scan(np.array(a, np.uint32))
    rb = exclusive_scan(np.array(b, np.uint32))
    rab = exclusive_scan(np.array(a + b, np.uint32))
    assert rab.total == ra.total + rb.total


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 2**32 - 1)), max_size=300))
@settings(max_examples=40, deadline=None)
def test_compaction_conserves_masked_multiset(pairs):
    mask = np.array([int(m) for m, _ in pairs], np.uint32)
    vals = np.array([v for _, v in pairs], np.uint32)
    out = stream_compact(mask, vals)
    assert sorted(out.tolist()) == sorted(vals[mask == 1].tolist())
    assert len(out) == int(mask.sum())


@given(st.lists(st.integers(0, 2**32 - 1), max_size=300))
@settings(max_examples=40, deadline=None)
def test_sort_is_a_permutation_nonincreasing(keys):
    keys = np.array(keys, np.uint32)
    vals = np.arange(len(keys), dtype=np.uint32)
    ks, vs = sort_by_key_desc(keys, vals)
    assert sorted(ks.tolist()) == sorted(keys.tolist())
    assert (ks[:-1] >= ks[1:]).all() if len(ks) else True
    assert (keys[vs] == ks).all()
