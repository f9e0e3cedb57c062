"""ParamStore semantics and bit-exact checkpoint round trips."""
import numpy as np
import pytest

from trajrep.errors import DataError
from trajrep.params import ParamStore, load_checkpoint, save_checkpoint


def test_unique_names():
    store = ParamStore()
    store.add("w", np.zeros((2, 2)))
    with pytest.raises(ValueError):
        store.add("w", np.zeros((2, 2)))


def test_insertion_order_preserved():
    store = ParamStore()
    for name in ("z", "a", "m"):
        store.add(name, np.zeros(1))
    assert store.names() == ["z", "a", "m"]


def test_zero_grads():
    store = ParamStore()
    t = store.add("w", np.ones((2, 2)))
    t.grad = np.ones((2, 2))
    store.zero_grads()
    assert t.grad is None


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    store = ParamStore()
    store.add("emb.table", rng.normal(size=(17, 9)))
    store.add("layer0.w", rng.normal(size=(9, 9)) * 1e-8)
    store.add("bias", np.array([[np.pi, -0.0, 1e300]]))
    path = tmp_path / "model.ckpt"
    save_checkpoint(store, path)
    loaded = load_checkpoint(path)
    assert list(loaded) == store.names()
    for name, t in store.items():
        assert loaded[name].dtype == np.float64
        assert np.array_equal(
            loaded[name].view(np.uint64), t.data.view(np.uint64)
        ), name
    # writing the loaded arrays again produces identical bytes
    path2 = tmp_path / "model2.ckpt"
    save_checkpoint(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_load_into_store(tmp_path):
    store = ParamStore()
    store.add("a", np.ones((2, 3)))
    path = tmp_path / "m.ckpt"
    save_checkpoint(store, path)
    other = ParamStore()
    other.add("a", np.zeros((2, 3)))
    other.load_arrays(load_checkpoint(path))
    assert np.array_equal(other["a"].data, np.ones((2, 3)))


def test_load_arrays_rejects_mismatch():
    store = ParamStore()
    store.add("a", np.ones((2, 3)))
    with pytest.raises(ValueError):
        store.load_arrays({"b": np.ones((2, 3))})
    with pytest.raises(ValueError):
        store.load_arrays({"a": np.ones((3, 2))})


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad.ckpt"
    p.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(DataError):
        load_checkpoint(p)
    with pytest.raises(DataError):
        load_checkpoint(tmp_path / "missing.ckpt")
    # truncated file
    good = tmp_path / "good.ckpt"
    store = ParamStore()
    store.add("a", np.ones((4, 4)))
    save_checkpoint(store, good)
    trunc = tmp_path / "trunc.ckpt"
    trunc.write_bytes(good.read_bytes()[:-9])
    with pytest.raises(Exception):
        load_checkpoint(trunc)
