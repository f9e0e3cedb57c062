"""Dataset model validation and JSONL round trips."""
import numpy as np
import pytest

from trajrep.data import (
    Clip,
    Trajectory,
    Video,
    load_dataset,
    load_split,
    save_dataset,
    save_split,
    videos_equal,
)
from trajrep.errors import DataError
from trajrep.grid import FieldSpec


def _traj(pts, object_id="p0", kind="player"):
    return Trajectory(object_id=object_id, kind=kind, points=np.array(pts))


def _tiny_video(vid="v000"):
    tr = _traj([(0.0, 1.0, 2.0), (0.5, 1.5, 2.5)])
    ball = _traj([(0.0, 0.0, 0.0)], object_id="b", kind="ball")
    clip = Clip(clip_id=f"{vid}c00", duration=2.0, tracks=(tr, ball))
    return Video(video_id=vid, clips=(clip,))


def test_trajectory_validation():
    with pytest.raises(ValueError):
        _traj([(0.0, 1.0)])  # wrong arity
    with pytest.raises(ValueError):
        _traj([])  # no points
    with pytest.raises(ValueError):
        _traj([(0.5, 0, 0), (0.5, 1, 1)])  # timestamps not increasing
    with pytest.raises(ValueError):
        _traj([(0.0, np.nan, 0.0)])
    with pytest.raises(ValueError):
        _traj([(0.0, 0, 0)], kind="referee")


def test_trajectory_points_read_only():
    tr = _traj([(0.0, 1.0, 2.0)])
    with pytest.raises(Exception):
        tr.points[0, 0] = 9.0


def test_clip_window_validation():
    with pytest.raises(ValueError):
        Clip(clip_id="c", duration=1.0, tracks=(_traj([(0.0, 0, 0), (1.5, 0, 0)]),))
    with pytest.raises(ValueError):
        Clip(clip_id="c", duration=0.0, tracks=())


def test_video_requires_clips():
    with pytest.raises(ValueError):
        Video(video_id="v", clips=())


def test_jsonl_roundtrip(tmp_path):
    videos = [_tiny_video("v000"), _tiny_video("v001")]
    path = tmp_path / "data.jsonl"
    save_dataset(videos, path)
    loaded = load_dataset(path)
    assert len(loaded) == 2
    for a, b in zip(videos, loaded):
        assert videos_equal(a, b)
    # file format spot check: one JSON object per line with exact keys
    lines = path.read_text().strip().split("\n")
    import json

    obj = json.loads(lines[0])
    assert set(obj) == {"video_id", "clips"}
    assert set(obj["clips"][0]) == {"clip_id", "duration", "tracks"}
    assert set(obj["clips"][0]["tracks"][0]) == {"object_id", "kind", "points"}


def test_save_is_deterministic(tmp_path):
    videos = [_tiny_video()]
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_dataset(videos, p1)
    save_dataset(videos, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_clamps_when_field_given(tmp_path):
    tr = _traj([(0.0, 500.0, -500.0)])
    video = Video("v0", (Clip("c0", 1.0, (tr,)),))
    path = tmp_path / "d.jsonl"
    save_dataset([video], path)
    loaded = load_dataset(path, field=FieldSpec())[0]
    pt = loaded.clips[0].tracks[0].points[0]
    assert pt[1] == 52.5 and pt[2] == -34.0


def test_load_rejects_bad_input(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text("{not json}\n")
    with pytest.raises(DataError):
        load_dataset(p)
    p.write_text('{"video_id": "v", "clips": [{"clip_id": "c"}]}\n')
    with pytest.raises(DataError):
        load_dataset(p)
    with pytest.raises(DataError):
        load_dataset(tmp_path / "missing.jsonl")


def test_split_manifest_roundtrip(tmp_path):
    p = tmp_path / "split.json"
    save_split(["a", "b"], ["c"], p)
    train, test = load_split(p)
    assert train == ["a", "b"] and test == ["c"]
    p.write_text('{"train": []}')
    with pytest.raises(DataError):
        load_split(p)
