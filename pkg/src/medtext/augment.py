"""UMLS-template augmentation and training-set assembly.

Each annotated concept span is rewritten as ``"<canonical>, a <type>"``,
e.g. "primary ciliary dyskinesia" becomes "kartaganer syndrome, a Disease
or Syndrome", producing a new pair with the same label.
"""

from __future__ import annotations

import random
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from medtext.corpus import ConceptAnnotation, LabeledSentencePair, Provenance, check_annotations

DEFAULT_TEMPLATE = "{canonical}, a {type}"
DEFAULT_QQP_TARGET = 9000
AUGMENTED_SUFFIX = "#umls"

VARIANTS = ("orig", "data_aug", "orig_plus_dataaug_plus_qqp", "dataaug_plus_qqp", "paraphrase")

# sources each variant reads from the ``sources`` mapping
VARIANT_SOURCES: dict[str, tuple[str, ...]] = {
    "orig": ("train",),
    "data_aug": ("validation", "annotations"),
    "orig_plus_dataaug_plus_qqp": ("train", "validation", "annotations", "qqp"),
    "dataaug_plus_qqp": ("validation", "annotations", "qqp"),
    "paraphrase": ("validation", "annotations", "paraphrase"),
}


class MissingSourceError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentConfig:
    template: str = DEFAULT_TEMPLATE
    seed: int = 0
    qqp_target_size: int = DEFAULT_QQP_TARGET

    def __post_init__(self) -> None:
        for ph in ("{canonical}", "{type}"):
            if self.template.count(ph) != 1:
                raise ValueError(f"template must contain {ph} exactly once: {self.template!r}")
        if self.qqp_target_size < 0:
            raise ValueError("qqp_target_size must be >= 0")

    def fill(self, canonical: str, concept_type: str) -> str:
        # str.replace, not format: canonical names may contain braces
        return self.template.replace("{canonical}", canonical).replace("{type}", concept_type)


def _rewrite(text: str, anns: Sequence[ConceptAnnotation], config: AugmentConfig) -> str:
    for ann in sorted(anns, key=lambda a: a.span_start, reverse=True):
        text = text[:ann.span_start] + config.fill(ann.canonical_name, ann.concept_type) \
            + text[ann.span_end:]
    return text


def augment_pair(pair: LabeledSentencePair, annotations: Sequence[ConceptAnnotation],
                 config: AugmentConfig | None = None) -> LabeledSentencePair | None:
    """Return the template-rewritten copy of ``pair``, or ``None`` if nothing is annotated."""
    config = config or AugmentConfig()
    if not annotations:
        return None
    if any(a.pair_id != pair.id for a in annotations):
        raise ValueError(f"annotations for another pair passed with {pair.id!r}")
    check_annotations(annotations, [pair])
    side_a = [a for a in annotations if a.side == "a"]
    side_b = [a for a in annotations if a.side == "b"]
    return replace(
        pair,
        id=pair.id + AUGMENTED_SUFFIX,
        text_a=_rewrite(pair.text_a, side_a, config),
        text_b=_rewrite(pair.text_b, side_b, config),
        provenance=Provenance.UMLS_AUGMENTED,
    )


def augment_dataset(pairs: Iterable[LabeledSentencePair],
                    annotations: Iterable[ConceptAnnotation],
                    config: AugmentConfig | None = None) -> list[LabeledSentencePair]:
    """Originals first, then one augmented copy per annotated pair, both in input order."""
    pairs = list(pairs)
    by_pair: dict[str, list[ConceptAnnotation]] = defaultdict(list)
    for ann in annotations:
        by_pair[ann.pair_id].append(ann)
    augmented = []
    for pair in pairs:
        new = augment_pair(pair, by_pair.get(pair.id, []), config)
        if new is not None:
            augmented.append(new)
    return pairs + augmented


def subsample(pairs: Sequence[LabeledSentencePair], target: int,
              seed: int) -> list[LabeledSentencePair]:
    """Uniform sample of exactly ``target`` pairs without replacement.

    Uses ``random.Random(seed).sample`` over indices (Mersenne Twister), so
    a seed always selects the same subset on any CPython. Input order is
    kept in the output.
    """
    if target < 0:
        raise ValueError("target must be >= 0")
    if target > len(pairs):
        raise ValueError(f"target {target} exceeds dataset size {len(pairs)}")
    keep = sorted(random.Random(seed).sample(range(len(pairs)), target))
    return [pairs[i] for i in keep]


def _with_provenance(pairs: Iterable[LabeledSentencePair],
                     provenance: Provenance) -> list[LabeledSentencePair]:
    return [p if p.provenance is provenance else replace(p, provenance=provenance) for p in pairs]


def assemble_training_set(variant: str, sources: Mapping[str, Sequence],
                          config: AugmentConfig | None = None) -> list[LabeledSentencePair]:
    """Build one of the RQE training-set variants.

    ``sources`` maps names to datasets: ``train``, ``validation``,
    ``annotations`` (concept annotations for the validation pairs), ``qqp``
    and ``paraphrase``. The data_aug family uses only the augmented
    validation set; the training data is added only where the variant name
    says ``orig``.
    """
    config = config or AugmentConfig()
    if variant not in VARIANT_SOURCES:
        raise ValueError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
    for name in VARIANT_SOURCES[variant]:
        if not sources.get(name):
            raise MissingSourceError(f"missing source {name!r} for variant {variant!r}")

    out: list[LabeledSentencePair] = []
    if "train" in VARIANT_SOURCES[variant]:
        out += _with_provenance(sources["train"], Provenance.ORIGINAL)
    if "validation" in VARIANT_SOURCES[variant]:
        out += augment_dataset(_with_provenance(sources["validation"], Provenance.ORIGINAL),
                               sources["annotations"], config)
    if "qqp" in VARIANT_SOURCES[variant]:
        qqp = subsample(list(sources["qqp"]), config.qqp_target_size, config.seed)
        out += _with_provenance(qqp, Provenance.QQP)
    if "paraphrase" in VARIANT_SOURCES[variant]:
        out += _with_provenance(sources["paraphrase"], Provenance.PARAPHRASE)

    dups = [i for i, n in Counter(p.id for p in out).items() if n > 1]
    if dups:
        dup = dups[0]
        raise ValueError(f"assembled set has duplicate id {dup!r}; source ids must be disjoint")
    return out
