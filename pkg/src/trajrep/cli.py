"""Command-line surface for the whole pipeline.

One executable, eight subcommands: generate, tokenize, train, embed,
index, query, evaluate, gradcheck. Behavior is driven by a JSON config
file (sections: field, generate, tokenize, model, loss, train, index,
eval) plus per-flag overrides; flags win. Unknown config keys are
rejected and environment variables are never consulted.

Every output is deterministic for fixed inputs and seeds: JSON is
written with sorted keys and no timestamps, so reruns are byte
identical. Errors leave a single JSON line on stderr and map to exit
codes: 1 usage/config, 2 data, 3 verification.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .clip_encoder import ClipEncoder, ClipEncoderConfig
from .data import load_dataset, load_split, save_dataset, save_split
from .embedder import VideoEmbedder
from .errors import ConfigError, DataError, StateError, TrajrepError, VerificationError
from .grid import FieldSpec, segment_clip
from .hnsw import AnnIndex, AnnParams, load_index, save_index
from .losses import LossConfig
from .params import ParamStore, load_checkpoint, save_checkpoint
from .retrieval import EmbeddingDb, evaluate_retrieval, exact_topk, load_db, save_db
from .synth import GenConfig, build_pool, generate_dataset, split_dataset
from .training import TrainConfig, train, write_curve_csv
from .verify import TINY_TOL, run_gradient_check
from .video_encoder import VideoEncoder, VideoEncoderConfig
from .visual import FileVisualProvider, StubVisualProvider
from .vocab import build_vocabulary, load_vocab, save_vocab

DEFAULTS = {
    "field": {
        "x_min": -52.5, "x_max": 52.5, "y_min": -34.0, "y_max": 34.0,
        "cell_size": 3.0,
    },
    "generate": {
        "n_videos": 200, "clips_per_video": 16, "segments_per_clip": 16,
        "players_per_clip": 6, "include_ball": True, "segment_len": 1.0,
        "sample_hz": 4.0, "step_std": 0.8, "ball_step_mult": 2.0,
        "seed": 0, "train_fraction": 0.8,
    },
    "tokenize": {"threshold": 0.3, "connect": True},
    "model": {
        "max_tokens": 16, "embed_dim": 128, "attn_dim": 128,
        "clip_dim": 128, "visual_dim": 512, "clip_heads": 2,
        "clip_layers": 2, "dropout": 0.3, "enc_dims": [1280, 1280],
        "out_dim": 128, "video_heads": 2, "n_clips": 16,
        "visual_seed": 0, "visual_features": None, "init_seed": 0,
    },
    "loss": {
        "tau": 0.1, "alpha": 0.5, "beta": 0.3, "similarity": "cosine",
        "denominator": "standard", "reduction": "mean",
    },
    "train": {
        "epochs": 100, "batch_size": 32, "lr": 0.01, "momentum": 0.7,
        "patience": 10, "noise_low": 0.0, "noise_high": 0.2, "seed": 0,
    },
    "index": {"M": 16, "ef_construction": 200, "ef_search": 64, "seed": 0},
    "eval": {"deltas": [0.5, 0.55, 0.6], "use_exact": True, "seed": 0},
}


def _merge_section(defaults: dict, override: dict, section: str) -> dict:
    merged = copy.deepcopy(defaults)
    for key, value in override.items():
        if key not in merged:
            raise ConfigError(f"unknown config key {section}.{key}")
        merged[key] = value
    return merged


def load_config(path) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is None:
        return cfg
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: config must be a JSON object")
    for section, value in raw.items():
        if section not in cfg:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(value, dict):
            raise ConfigError(f"config section {section!r} must be an object")
        cfg[section] = _merge_section(cfg[section], value, section)
    return cfg


def _override(cfg: dict, section: str, key: str, value) -> None:
    if value is not None:
        cfg[section][key] = value


def _field_spec(cfg) -> FieldSpec:
    f = cfg["field"]
    return FieldSpec(x_min=f["x_min"], x_max=f["x_max"], y_min=f["y_min"],
                     y_max=f["y_max"], cell_size=f["cell_size"])


def _gen_config(cfg) -> GenConfig:
    g = cfg["generate"]
    return GenConfig(
        n_videos=g["n_videos"], clips_per_video=g["clips_per_video"],
        segments_per_clip=g["segments_per_clip"],
        players_per_clip=g["players_per_clip"], include_ball=g["include_ball"],
        segment_len=g["segment_len"], sample_hz=g["sample_hz"],
        step_std=g["step_std"], ball_step_mult=g["ball_step_mult"],
        rng_seed=g["seed"], field=_field_spec(cfg),
    )


def _loss_config(cfg) -> LossConfig:
    lo = cfg["loss"]
    return LossConfig(tau=lo["tau"], alpha=lo["alpha"], beta=lo["beta"],
                      similarity=lo["similarity"],
                      denominator=lo["denominator"], reduction=lo["reduction"])


def _train_config(cfg) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(
        epochs=t["epochs"], batch_size=t["batch_size"], lr=t["lr"],
        momentum=t["momentum"], patience=t["patience"],
        noise_low=t["noise_low"], noise_high=t["noise_high"], seed=t["seed"],
        split_ratio=cfg["generate"]["train_fraction"],
    )


def _model_configs(cfg, vocab_size: int):
    m = cfg["model"]
    clip_cfg = ClipEncoderConfig(
        vocab_size=vocab_size, max_tokens=m["max_tokens"],
        embed_dim=m["embed_dim"], attn_dim=m["attn_dim"],
        clip_dim=m["clip_dim"], visual_dim=m["visual_dim"],
        n_heads=m["clip_heads"], n_layers=m["clip_layers"],
        dropout=m["dropout"],
    )
    video_cfg = VideoEncoderConfig(
        input_dim=clip_cfg.fused_dim, enc_dims=tuple(m["enc_dims"]),
        out_dim=m["out_dim"], n_heads=m["video_heads"], n_clips=m["n_clips"],
    )
    return clip_cfg, video_cfg


def _visual_provider(cfg, videos):
    m = cfg["model"]
    if m["visual_features"]:
        return FileVisualProvider(m["visual_features"])
    prov = StubVisualProvider(dim=m["visual_dim"], seed=m["visual_seed"])
    return prov.fit(videos, _field_spec(cfg))


def _build_embedder(cfg, vocab, videos) -> VideoEmbedder:
    clip_cfg, video_cfg = _model_configs(cfg, len(vocab))
    store = ParamStore()
    clip_enc = ClipEncoder(clip_cfg)
    video_enc = VideoEncoder(video_cfg)
    rng = np.random.default_rng(cfg["model"]["init_seed"])
    clip_enc.init_params(store, rng)
    video_enc.init_params(store, rng)
    return VideoEmbedder(
        vocab, clip_enc, video_enc, store, _visual_provider(cfg, videos),
        field=_field_spec(cfg), segment_len=cfg["generate"]["segment_len"],
        connect=cfg["tokenize"]["connect"],
    )


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _manifest(path, command: str, cfg: dict, extra: dict) -> None:
    _write_json(path, {"command": command, "config": cfg, **extra})


def _hash_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()[:16]


def _load_videos_split(args, cfg, subset: str = "all"):
    field = _field_spec(cfg)
    videos = load_dataset(args.dataset, field=field)
    if subset == "all" or args.split is None:
        if subset != "all":
            raise ConfigError(f"--split required for subset {subset!r}")
        return videos
    train_ids, test_ids = load_split(args.split)
    wanted = set(train_ids if subset == "train" else test_ids)
    picked = [v for v in videos if v.video_id in wanted]
    missing = wanted - {v.video_id for v in picked}
    if missing:
        raise DataError(
            f"split names {len(missing)} videos absent from the dataset, "
            f"e.g. {sorted(missing)[0]!r}"
        )
    return picked


def _load_model_dir(model_dir, cfg):
    d = Path(model_dir)
    ckpt_path = d / "model.ckpt"
    vocab_path = d / "vocab.json"
    cfg_path = d / "model_config.json"
    for p in (ckpt_path, vocab_path, cfg_path):
        if not p.exists():
            raise DataError(f"model directory is missing {p.name}: {d}")
    with open(cfg_path, "r", encoding="utf-8") as fh:
        try:
            saved = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{cfg_path}: invalid JSON: {exc}") from exc
    merged = copy.deepcopy(cfg)
    for section in ("field", "tokenize", "model", "loss", "generate"):
        if section in saved:
            merged[section] = _merge_section(
                merged[section], saved[section], section)
    vocab = load_vocab(vocab_path)
    arrays = load_checkpoint(ckpt_path)
    return merged, vocab, arrays, _hash_file(ckpt_path)


def cmd_generate(args, cfg) -> int:
    gcfg = _gen_config(cfg)
    videos = generate_dataset(gcfg)
    train_ids, test_ids = split_dataset(
        videos, cfg["generate"]["train_fraction"], cfg["generate"]["seed"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(videos, out / "dataset.jsonl")
    save_split(train_ids, test_ids, out / "split.json")
    _manifest(out / "generate_manifest.json", "generate", cfg, {
        "outputs": {"dataset": "dataset.jsonl", "split": "split.json"},
        "n_videos": len(videos),
        "n_train": len(train_ids),
        "n_test": len(test_ids),
    })
    print(f"wrote {len(videos)} videos to {out / 'dataset.jsonl'}")
    return 0


def cmd_tokenize(args, cfg) -> int:
    field = _field_spec(cfg)
    subset = "train" if args.split else "all"
    videos = _load_videos_split(args, cfg, subset)
    if not videos:
        raise DataError("no videos to tokenize")
    mats = []
    n_clips = 0
    for v in videos:
        for clip in v.clips:
            n_clips += 1
            mats.extend(segment_clip(
                clip.tracks, field, cfg["generate"]["segment_len"],
                cfg["model"]["max_tokens"], cfg["tokenize"]["connect"]))
    vocab = build_vocabulary(mats, cfg["tokenize"]["threshold"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_vocab(vocab, out / "vocab.json")
    _manifest(out / "tokenize_manifest.json", "tokenize", cfg, {
        "stats": {
            "n_videos": len(videos),
            "n_clips": n_clips,
            "n_matrices": len(mats),
            "vocab_size": len(vocab),
            "threshold": cfg["tokenize"]["threshold"],
        },
        "outputs": {"vocab": "vocab.json"},
    })
    print(f"vocabulary of {len(vocab)} tokens from {len(mats)} matrices")
    return 0


def cmd_train(args, cfg) -> int:
    field = _field_spec(cfg)
    videos = load_dataset(args.dataset, field=field)
    train_ids, test_ids = load_split(args.split)
    by_id = {v.video_id: v for v in videos}
    missing = [i for i in (*train_ids, *test_ids) if i not in by_id]
    if missing:
        raise DataError(f"split names missing videos, e.g. {missing[0]!r}")
    train_videos = [by_id[i] for i in train_ids]
    test_videos = [by_id[i] for i in test_ids]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.vocab:
        vocab = load_vocab(args.vocab)
    else:
        mats = []
        for v in train_videos:
            for clip in v.clips:
                mats.extend(segment_clip(
                    clip.tracks, field, cfg["generate"]["segment_len"],
                    cfg["model"]["max_tokens"], cfg["tokenize"]["connect"]))
        vocab = build_vocabulary(mats, cfg["tokenize"]["threshold"])
    save_vocab(vocab, out / "vocab.json")

    embedder = _build_embedder(cfg, vocab, videos)
    pool = build_pool(train_videos)
    tcfg = _train_config(cfg)
    lcfg = _loss_config(cfg)

    # validation is carved out of the training split; the held-out test
    # split must never influence early stopping or model selection
    n_fit = int(round(len(train_videos) * tcfg.split_ratio))
    n_fit = min(max(n_fit, 2), len(train_videos) - 2)
    fit_videos, val_videos = train_videos[:n_fit], train_videos[n_fit:]

    def on_epoch(epoch, tr, va):
        print(f"epoch {epoch}: train_loss {tr:.6f} val_loss {va:.6f}")

    result = train(embedder, fit_videos, val_videos, pool, tcfg, lcfg,
                   on_epoch=on_epoch)
    save_checkpoint(result.best_params, out / "model.ckpt")
    write_curve_csv(result.curve, out / "loss_curve.csv")
    ckpt_id = _hash_file(out / "model.ckpt")
    _write_json(out / "model_config.json", {
        "field": cfg["field"],
        "generate": cfg["generate"],
        "tokenize": cfg["tokenize"],
        "model": cfg["model"],
        "loss": cfg["loss"],
        "vocab_size": len(vocab),
        "checkpoint_id": ckpt_id,
    })
    _manifest(out / "train_manifest.json", "train", cfg, {
        "inputs": {"dataset": str(args.dataset), "split": str(args.split)},
        "outputs": {
            "checkpoint": "model.ckpt", "vocab": "vocab.json",
            "curve": "loss_curve.csv", "model_config": "model_config.json",
        },
        "checkpoint_id": ckpt_id,
        "best_epoch": result.best_epoch,
        "best_val_loss": result.best_val,
        "stopped_epoch": result.stopped_epoch,
        "n_train": len(train_videos),
        "n_val": len(test_videos),
    })
    print(f"best epoch {result.best_epoch} val_loss {result.best_val:.6f} "
          f"checkpoint {ckpt_id}")
    return 0


def cmd_embed(args, cfg) -> int:
    merged, vocab, arrays, ckpt_id = _load_model_dir(args.model, cfg)
    videos = _load_videos_split(args, merged, args.subset)
    if not videos:
        raise DataError("no videos selected to embed")
    embedder = _build_embedder(merged, vocab, videos)
    embedder.store.load_arrays(arrays)
    ids, vectors = embedder.embed_videos(videos, normalize=True)
    db = EmbeddingDb(ids=ids, vectors=vectors, normalized=True)
    base = Path(args.out)
    if base.parent != Path("."):
        base.parent.mkdir(parents=True, exist_ok=True)
    save_db(db, base)
    _manifest(base.with_suffix(".manifest.json"), "embed", merged, {
        "inputs": {"dataset": str(args.dataset), "model": str(args.model),
                   "subset": args.subset},
        "checkpoint_id": ckpt_id,
        "n_vectors": len(db),
        "dim": db.dim,
    })
    print(f"embedded {len(db)} videos at dim {db.dim}")
    return 0


def cmd_index(args, cfg) -> int:
    _override(cfg, "index", "M", args.m)
    _override(cfg, "index", "ef_construction", args.ef_construction)
    _override(cfg, "index", "seed", args.seed)
    db = load_db(args.db)
    params = AnnParams(M=cfg["index"]["M"],
                       ef_construction=cfg["index"]["ef_construction"],
                       seed=cfg["index"]["seed"])
    index = AnnIndex(params).build(db.vectors)
    base = Path(args.out)
    if base.parent != Path("."):
        base.parent.mkdir(parents=True, exist_ok=True)
    save_index(index, base)
    _manifest(base.with_suffix(".manifest.json"), "index", cfg, {
        "inputs": {"db": str(args.db)},
        "ids": list(db.ids),
        "n_vectors": len(db),
    })
    print(f"indexed {len(db)} vectors (M={params.M})")
    return 0


def cmd_query(args, cfg) -> int:
    merged, vocab, arrays, ckpt_id = _load_model_dir(args.model, cfg)
    db = load_db(args.db)
    queries = load_dataset(args.video, field=_field_spec(merged))
    if not queries:
        raise DataError("query file holds no videos")
    embedder = _build_embedder(merged, vocab, queries)
    embedder.store.load_arrays(arrays)
    _override(cfg, "index", "ef_search", args.ef_search)
    ef = cfg["index"]["ef_search"]
    index = load_index(args.index) if args.index else None
    if index is not None and len(index) != len(db):
        raise DataError(
            f"index holds {len(index)} vectors but db holds {len(db)}")
    k = args.k
    _, qvecs = embedder.embed_videos(queries, normalize=True)
    for video, q in zip(queries, qvecs):
        if index is None:
            ranked = exact_topk(db, q, k)
        else:
            ranked = [(db.ids[i], sim)
                      for i, sim in index.query(q, min(k, len(db)), max(ef, k))]
        print(json.dumps({
            "video_id": video.video_id,
            "results": [{"video_id": vid, "similarity": sim}
                        for vid, sim in ranked],
        }, sort_keys=True, separators=(",", ":")))
    return 0


def cmd_evaluate(args, cfg) -> int:
    merged, vocab, arrays, ckpt_id = _load_model_dir(args.model, cfg)
    if args.deltas is not None:
        try:
            deltas = [float(x) for x in args.deltas.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --deltas value: {exc}") from exc
        merged["eval"]["deltas"] = deltas
        cfg["eval"]["deltas"] = deltas
    _override(merged, "eval", "seed", args.seed)
    _override(cfg, "eval", "seed", args.seed)
    if args.use_ann:
        merged["eval"]["use_exact"] = False
        cfg["eval"]["use_exact"] = False
    test_videos = _load_videos_split(args, merged, "test")
    if not test_videos:
        raise ConfigError("test split is empty")
    embedder = _build_embedder(merged, vocab, test_videos)
    embedder.store.load_arrays(arrays)
    pool = build_pool(test_videos)
    report = evaluate_retrieval(
        embedder, test_videos, merged["eval"]["deltas"], pool,
        use_exact=merged["eval"]["use_exact"],
        ann_params=AnnParams(M=merged["index"]["M"],
                             ef_construction=merged["index"]["ef_construction"],
                             seed=merged["index"]["seed"]),
        ef_search=merged["index"]["ef_search"],
        seed=merged["eval"]["seed"],
        checkpoint_id=ckpt_id,
    )
    out = Path(args.out)
    if out.parent != Path("."):
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    _manifest(out.with_suffix(".manifest.json"), "evaluate", cfg, {
        "inputs": {"dataset": str(args.dataset), "split": str(args.split),
                   "model": str(args.model)},
        "checkpoint_id": ckpt_id,
        "n_test": len(test_videos),
    })
    for d, m in report.per_delta.items():
        print(f"delta {d}: HR@1 {m.hr_at_1:.4f} MRR {m.mrr:.4f}")
    return 0


def cmd_gradcheck(args, cfg) -> int:
    report = run_gradient_check(seed=args.seed if args.seed is not None else 0)
    passed = report.passed(TINY_TOL)
    print(json.dumps({
        "dims": args.dims,
        "n_checked": report.n_checked,
        "max_rel_error": report.max_rel_error,
        "tolerance": TINY_TOL,
        "worst_param": report.worst.name if report.worst else None,
        "passed": passed,
    }, sort_keys=True, separators=(",", ":")))
    if not passed:
        raise VerificationError(
            f"gradient check failed: max rel error {report.max_rel_error:.3e} "
            f">= {TINY_TOL:.0e}"
        )
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems on our error contract."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="trajrep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="JSON config file; flags override its values")
        p.add_argument("--threads", type=int, default=1,
                       help="parallel lanes where modules permit (numeric "
                            "paths currently run one lane)")
        p.add_argument("--deterministic", action="store_true", default=True,
                       help="force single-threaded numeric paths (default)")

    p = sub.add_parser("generate", help="write a synthetic dataset + split")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--videos", type=int, default=None)
    p.add_argument("--clips", type=int, default=None)
    p.add_argument("--segments", type=int, default=None)
    p.add_argument("--players", type=int, default=None)
    p.add_argument("--train-fraction", type=float, default=None)

    p = sub.add_parser("tokenize", help="build the token vocabulary")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default=None,
                   help="split manifest; when given, only the train side "
                        "feeds the vocabulary")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threshold", type=float, default=None)

    p = sub.add_parser("train", help="train the encoders")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True, help="output model directory")
    p.add_argument("--vocab", default=None,
                   help="reuse an existing vocabulary file")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--momentum", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)

    p = sub.add_parser("embed", help="embed videos into a database")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True, help="train output directory")
    p.add_argument("--out", required=True, help="output base path")
    p.add_argument("--split", default=None)
    p.add_argument("--subset", choices=["train", "test", "all"], default="all")

    p = sub.add_parser("index", help="build the approximate index")
    common(p)
    p.add_argument("--db", required=True, help="embedding db base path")
    p.add_argument("--out", required=True, help="output base path")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--ef-construction", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("query", help="top-K ids for query video files")
    common(p)
    p.add_argument("--video", required=True, help="JSONL of query videos")
    p.add_argument("--model", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--index", default=None,
                   help="ANN index base path; exact scan when omitted")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--ef-search", type=int, default=None)

    p = sub.add_parser("evaluate", help="corrupt-and-retrieve evaluation")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--deltas", default=None, help="comma-separated fractions")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--use-ann", action="store_true",
                   help="rank with the approximate index instead of exact")

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    common(p)
    p.add_argument("--dims", choices=["tiny"], default="tiny")
    p.add_argument("--seed", type=int, default=None)
    return parser


_FLAG_MAP = {
    "generate": [("seed", "generate", "seed"), ("videos", "generate", "n_videos"),
                 ("clips", "generate", "clips_per_video"),
                 ("segments", "generate", "segments_per_clip"),
                 ("players", "generate", "players_per_clip"),
                 ("train_fraction", "generate", "train_fraction")],
    "tokenize": [("threshold", "tokenize", "threshold")],
    "train": [("epochs", "train", "epochs"),
              ("batch_size", "train", "batch_size"), ("lr", "train", "lr"),
              ("momentum", "train", "momentum"),
              ("patience", "train", "patience"), ("seed", "train", "seed"),
              ("threshold", "tokenize", "threshold")],
    "embed": [],
    "index": [],
    "query": [],
    "evaluate": [],
    "gradcheck": [],
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    if args.threads > 1 and args.deterministic:
        raise ConfigError("--threads > 1 conflicts with --deterministic")
    cfg = load_config(args.config)
    for attr, section, key in _FLAG_MAP[args.command]:
        _override(cfg, section, key, getattr(args, attr, None))
    handler = {
        "generate": cmd_generate,
        "tokenize": cmd_tokenize,
        "train": cmd_train,
        "embed": cmd_embed,
        "index": cmd_index,
        "query": cmd_query,
        "evaluate": cmd_evaluate,
        "gradcheck": cmd_gradcheck,
    }[args.command]
    return handler(args, cfg)


def _fail(kind: str, message: str, code: int) -> int:
    line = json.dumps({"error": kind, "message": str(message)},
                      sort_keys=True, separators=(",", ":"))
    print(line, file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        return run(argv)
    except (ConfigError, StateError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    except ValueError as exc:
        return _fail("ValueError", str(exc), 1)
    except DataError as exc:
        return _fail("DataError", str(exc), 2)
    except OSError as exc:
        return _fail("OSError", str(exc), 2)
    except VerificationError as exc:
        return _fail("VerificationError", str(exc), 3)
    except TrajrepError as exc:
        return _fail(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
