"""Ordinal multi-aspect lyrics content assessment."""

import json as _json

from . import _core
from ._core import (
    ASPECTS,
    EmbeddingCache,
    FormatError,
    InputError,
    Model,
    MusicItem,
    ShapeError,
    Song,
    __version__,
    aspect_attention,
    binary_decode,
    binary_targets,
    confusion_matrix,
    load_manifest,
    macro_f1,
    marker_sentence,
    open_cache,
    paired_ttest,
    project_rating,
    soften_label,
    spearman_p_value,
    spearman_rho,
    synthetic_cache,
    synthetic_corpus,
    synthetic_low_item,
    write_manifest,
)

LEVELS = ("Low", "Medium", "High")


def train(items, cache, config=None, seed=0):
    """Trains on all items; returns (model, per-epoch log)."""
    model, log = _core.train(items, cache, _json.dumps(config or {}), seed)
    return model, _json.loads(log)


def run_cv(items, cache, config=None):
    """Cross-validated evaluation report as a dict."""
    return _json.loads(_core.run_cv(items, cache, _json.dumps(config or {})))


def run_baseline_cv(items, kind="majority", folds=10):
    return _json.loads(_core.run_baseline_cv(items, kind, folds))


def correlation_matrix(items, permutations=0, seed=0):
    return _json.loads(_core.correlation_matrix(items, permutations, seed))


def perturb(model, sentences, texts=()):
    return _json.loads(_core.perturb(model, sentences, list(texts)))


def predict(model, sentences):
    """Per-aspect level names and class probabilities."""
    codes, probs = model.predict(sentences)
    return {
        aspect: {"level": LEVELS[c], "probabilities": list(p)}
        for aspect, c, p in zip(ASPECTS, codes, probs)
    }


def load_checkpoint(path):
    model, meta = _core.load_checkpoint(path)
    return model, _json.loads(meta)


def save_checkpoint(model, path, meta=None):
    model.save(path, _json.dumps(meta or {}))
