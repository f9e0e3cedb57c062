"""Generator determinism and the exact counting rules of noise variants."""
import numpy as np
import pytest

from trajrep.data import videos_equal
from trajrep.errors import ConfigError
from trajrep.synth import (
    GenConfig,
    build_pool,
    generate_dataset,
    make_eval_query,
    make_inter_variant,
    make_intra_variant,
    replaced_count,
    split_dataset,
)

SMALL = GenConfig(
    n_videos=6, clips_per_video=4, segments_per_clip=4,
    players_per_clip=3, rng_seed=42,
)


@pytest.fixture(scope="module")
def videos():
    return generate_dataset(SMALL)


@pytest.fixture(scope="module")
def pool(videos):
    return build_pool(videos)


def test_generate_shapes(videos):
    assert len(videos) == 6
    v = videos[0]
    assert v.video_id == "v000"
    assert len(v.clips) == 4
    clip = v.clips[1]
    assert clip.clip_id == "v000c01"
    assert clip.duration == 4.0
    assert len(clip.tracks) == 4  # 3 players + ball
    assert clip.tracks[-1].kind == "ball"
    assert clip.tracks[0].object_id == "v000c01p0"
    assert clip.tracks[-1].object_id == "v000c01ball"


def test_generate_within_bounds(videos):
    f = SMALL.field
    for v in videos:
        for c in v.clips:
            for tr in c.tracks:
                pts = tr.points
                assert np.all(pts[:, 1] >= f.x_min) and np.all(pts[:, 1] <= f.x_max)
                assert np.all(pts[:, 2] >= f.y_min) and np.all(pts[:, 2] <= f.y_max)
                assert np.all(np.diff(pts[:, 0]) > 0)
                assert pts[-1, 0] < c.duration


def test_generate_deterministic(videos):
    again = generate_dataset(SMALL)
    assert len(again) == len(videos)
    for a, b in zip(videos, again):
        assert videos_equal(a, b)


def test_videos_differ_from_each_other(videos):
    assert not videos_equal(videos[0], videos[1])


def test_config_validation():
    with pytest.raises(ConfigError):
        GenConfig(n_videos=0)
    with pytest.raises(ConfigError):
        GenConfig(players_per_clip=0, include_ball=False)
    with pytest.raises(ConfigError):
        GenConfig(step_std=0.0)


def test_split_dataset(videos):
    train, test = split_dataset(videos, 0.8, seed=1)
    assert len(train) == 5 and len(test) == 1
    assert set(train) | set(test) == {v.video_id for v in videos}
    assert set(train) & set(test) == set()
    t2, s2 = split_dataset(videos, 0.8, seed=1)
    assert t2 == train and s2 == test


def test_replaced_count_rule():
    assert replaced_count(0.0, 7) == 0
    assert replaced_count(0.5, 7) == 4  # ceil(3.5)
    assert replaced_count(0.01, 7) == 1  # any nonzero fraction replaces
    assert replaced_count(1.0, 7) == 7


def test_intra_variant_counts(videos, pool):
    rng = np.random.default_rng(0)
    v = videos[0]
    out = make_intra_variant(v, 0.5, pool, rng)
    assert out.video_id == v.video_id
    assert len(out.clips) == len(v.clips)
    for orig, var in zip(v.clips, out.clips):
        assert var.clip_id == orig.clip_id  # visual features preserved
        assert var.duration == orig.duration
        assert len(var.tracks) == len(orig.tracks)
        kept = sum(1 for a, b in zip(orig.tracks, var.tracks) if a is b)
        assert len(orig.tracks) - kept == replaced_count(0.5, len(orig.tracks))


def test_intra_zero_delta_is_identity(videos, pool):
    rng = np.random.default_rng(0)
    out = make_intra_variant(videos[0], 0.0, pool, rng)
    assert videos_equal(out, videos[0])


def test_inter_variant_counts(videos, pool):
    rng = np.random.default_rng(3)
    v = videos[1]
    out = make_inter_variant(v, 0.5, pool, rng)
    assert out.video_id == v.video_id
    assert len(out.clips) == len(v.clips)
    swapped = [a is not b for a, b in zip(v.clips, out.clips)]
    assert sum(swapped) == replaced_count(0.5, len(v.clips))
    # replaced positions carry the donor's clip id, so visuals swap
    for orig, var, sw in zip(v.clips, out.clips, swapped):
        if sw:
            assert var.duration == orig.duration
        else:
            assert var.clip_id == orig.clip_id


def test_inter_preserves_order_of_survivors(videos, pool):
    rng = np.random.default_rng(5)
    v = videos[2]
    out = make_inter_variant(v, 0.25, pool, rng)
    survivors = [c.clip_id for a, c in zip(v.clips, out.clips) if a is c]
    orig_order = [c.clip_id for c in v.clips if c.clip_id in survivors]
    assert survivors == orig_order


def test_inter_zero_delta_is_identity(videos, pool):
    rng = np.random.default_rng(0)
    out = make_inter_variant(videos[0], 0.0, pool, rng)
    assert videos_equal(out, videos[0])


def test_eval_query_composition(videos, pool):
    out = make_eval_query(videos[0], 0.0, pool, np.random.default_rng(0))
    assert videos_equal(out, videos[0])
    noisy = make_eval_query(videos[0], 1.0, pool, np.random.default_rng(0))
    assert len(noisy.clips) == len(videos[0].clips)
    assert all(a is not b for a, b in zip(videos[0].clips, noisy.clips))


def test_variants_deterministic_under_seed(videos, pool):
    a = make_eval_query(videos[3], 0.5, pool, np.random.default_rng(9))
    b = make_eval_query(videos[3], 0.5, pool, np.random.default_rng(9))
    assert videos_equal(a, b)


def test_delta_out_of_range(videos, pool):
    with pytest.raises(ValueError):
        make_intra_variant(videos[0], 1.5, pool, np.random.default_rng(0))
    with pytest.raises(ValueError):
        make_inter_variant(videos[0], -0.1, pool, np.random.default_rng(0))


def test_pool_must_not_be_empty():
    with pytest.raises(ConfigError):
        build_pool([])
