"""Python access to the anomforge core: ontology queries, the filter rule,
detector scoring functions, metrics and the pipeline stages."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

try:
    from . import _anomforge as _core
except ImportError:  # in-tree use: the extension sits next to the build outputs
    import _anomforge as _core

AnomforgeError = _core.AnomforgeError
ParseError = _core.ParseError
ValidationError = _core.ValidationError
ProviderError = _core.ProviderError
IoError = _core.IoError
Ontology = _core.Ontology

DEFAULT_VQA_PROMPT = _core.DEFAULT_VQA_PROMPT

_PACKAGED_ONTOLOGY = Path(__file__).parent / "data" / "ontology.json"

__all__ = [
    "AnomforgeError", "ParseError", "ValidationError", "ProviderError", "IoError", "Ontology",
    "DEFAULT_VQA_PROMPT", "load_ontology", "accept", "rank_of", "ranked_labels", "irv_scores",
    "rrv_scores", "kb_scores", "combine", "word_match", "build_prompt", "manifest_stats",
    "format_stats", "make_fixtures", "gen", "filter_dataset", "detect", "evaluate",
]


def _default_ontology() -> str:
    return str(_PACKAGED_ONTOLOGY) if _PACKAGED_ONTOLOGY.exists() else ""


def _config_json(config: Optional[Mapping[str, Any]]) -> str:
    doc = dict(config or {})
    doc.setdefault("ontology", _default_ontology())
    if not doc["ontology"]:
        del doc["ontology"]
    return json.dumps(doc)


def load_ontology(path: os.PathLike | str = "") -> Ontology:
    return _core.load_ontology(str(path) or _default_ontology())


def accept(scores: Mapping[str, float], target: str, k: int, taboo: Sequence[str]) -> tuple[bool, str]:
    """Returns (accepted, reason); the reason is empty for accepted sets."""
    return _core.accept(dict(scores), target, k, list(taboo))


def rank_of(scores: Mapping[str, float], label: str) -> int:
    return _core.rank_of(dict(scores), label)


def ranked_labels(scores: Mapping[str, float]) -> list[str]:
    return _core.ranked_labels(dict(scores))


def irv_scores(image: Sequence[float], regions: Sequence[Sequence[float]]) -> list[float]:
    return _core.irv_scores(list(image), [list(r) for r in regions])


def rrv_scores(regions: Sequence[Sequence[float]]) -> list[float]:
    return _core.rrv_scores([list(r) for r in regions])


def kb_scores(regions, classes: Mapping[str, Sequence[float]], kb: Mapping[str, str], k_kb: int, embed_text) -> list[float]:
    return _core.kb_scores([list(r) for r in regions], {k: list(v) for k, v in classes.items()}, dict(kb), k_kb,
                           lambda text: list(embed_text(text)))


def combine(irv=None, rrv=None, kb=None, function_set: str = "all") -> list[float]:
    return _core.combine(irv, rrv, kb, function_set)


word_match = _core.word_match
build_prompt = _core.build_prompt


def manifest_stats(path: os.PathLike | str) -> dict:
    return _core.manifest_stats(Path(path))


def format_stats(path: os.PathLike | str) -> str:
    return _core.format_stats(Path(path))


def make_fixtures(out, images_per_scene: int = 2, masks_per_image: int = 3, config=None) -> tuple[int, int]:
    return _core.make_fixtures(Path(out), images_per_scene, masks_per_image, _config_json(config))


def gen(images, masks, out, config=None) -> tuple[int, int]:
    """Returns (tasks, candidates)."""
    return _core.run_gen(Path(images), Path(masks), Path(out), _config_json(config))


def filter_dataset(dataset, config=None) -> tuple[int, int, int]:
    """Returns (total, accepted, decided)."""
    return _core.run_filter(Path(dataset), _config_json(config))


def detect(dataset, out, config=None) -> int:
    return _core.run_detect(Path(dataset), Path(out), _config_json(config))


def evaluate(dataset, out, config=None, detections=None) -> dict:
    report = _core.run_eval(Path(dataset), Path(out), _config_json(config),
                            None if detections is None else Path(detections))
    return json.loads(report)
