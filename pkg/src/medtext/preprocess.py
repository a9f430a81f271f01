"""Tokenization and abbreviation expansion.

Two strategies run in order. Local context builds first-letter acronyms
from every window of words in one side of a pair and expands matching
tokens in the other side ("CXR" -> "Chest X-Ray"). Gazetteer lookup then
handles any token the first pass left alone.

Edits are spliced into the original text at token offsets, so spacing
outside replaced tokens is kept byte for byte.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from medtext.corpus import Gazetteer, LabeledSentencePair

DEFAULT_MIN_LEN = 2
DEFAULT_MAX_LEN = 6

_TOKEN_RE = re.compile(r"[^\W_]+|\S")
_SENT_END_RE = re.compile(r"[.!?](?=\s|$)")
_NO_SPACE_BEFORE = frozenset(".,;:?!")


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class TokenizedSentence:
    text: str
    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, i: int) -> Token:
        return self.tokens[i]

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]


@dataclass(frozen=True)
class AbbrevCandidate:
    """First-letter acronym of a window of words.

    ``word_span`` is the half-open token index range covered by the window;
    ``word_indices`` lists the word tokens inside it (punctuation in between
    is skipped, as with the hyphen in "X-Ray").
    """

    acronym: str
    word_span: tuple[int, int]
    word_indices: tuple[int, ...]


@dataclass(frozen=True)
class ExpansionTrace:
    pair_id: str
    side: str
    token_index: int
    replaced_token: str
    replacement: str
    strategy: str

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "side": self.side,
            "token_index": self.token_index,
            "replaced_token": self.replaced_token,
            "replacement": self.replacement,
            "strategy": self.strategy,
        }


@dataclass(frozen=True)
class ExpandConfig:
    min_len: int = DEFAULT_MIN_LEN
    max_len: int = DEFAULT_MAX_LEN

    def __post_init__(self) -> None:
        if not 2 <= self.min_len <= self.max_len:
            raise ValueError(f"need 2 <= min_len <= max_len, got {self.min_len}, {self.max_len}")


def is_punct(tok: str) -> bool:
    return len(tok) == 1 and unicodedata.category(tok)[0] in "PS"


def tokenize(text: str) -> TokenizedSentence:
    """Split on whitespace, then split every punctuation character off.

    >>> [t.text for t in tokenize("Chest X-Ray showed infiltrates")]
    ['Chest', 'X', '-', 'Ray', 'showed', 'infiltrates']
    """
    return TokenizedSentence(text, tuple(Token(m.group(), m.start(), m.end())
                                         for m in _TOKEN_RE.finditer(text)))


def split_sentences(text: str) -> list[str]:
    """Split after '.', '!' or '?' when followed by whitespace or end of text.

    Delimiters stay with their sentence. There is no abbreviation list, so
    "Dr. Smith" splits after "Dr."; "e.g. test" gives ["e.g.", "test"]
    only because the inner period is not followed by whitespace.
    """
    out = []
    start = 0
    for m in _SENT_END_RE.finditer(text):
        piece = text[start:m.end()].strip()
        if piece:
            out.append(piece)
        start = m.end()
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


def _is_word(tok: str) -> bool:
    return tok[:1].isalpha()


def gen_candidates(sentence: TokenizedSentence, min_len: int = DEFAULT_MIN_LEN,
                   max_len: int = DEFAULT_MAX_LEN) -> list[AbbrevCandidate]:
    """Every window of ``min_len``..``max_len`` consecutive words, as acronyms.

    Pure punctuation between words is skipped; any other non-word token
    (a number, say) ends the run of words.
    """
    if not 2 <= min_len <= max_len:
        raise ValueError(f"need 2 <= min_len <= max_len, got {min_len}, {max_len}")
    runs: list[list[int]] = [[]]
    for i, tok in enumerate(sentence.tokens):
        if _is_word(tok.text):
            runs[-1].append(i)
        elif not is_punct(tok.text) and runs[-1]:
            runs.append([])

    out = []
    for run in runs:
        for n in range(min_len, max_len + 1):
            for s in range(len(run) - n + 1):
                idx = tuple(run[s:s + n])
                acronym = "".join(sentence.tokens[i].text[0] for i in idx).upper()
                out.append(AbbrevCandidate(acronym, (idx[0], idx[-1] + 1), idx))
    return out


def acronym_key(token: str, min_len: int = DEFAULT_MIN_LEN) -> str | None:
    """Normalized form of a token eligible to be an acronym, else ``None``.

    Eligible tokens have at least ``min_len`` letters once periods are
    stripped and contain an uppercase letter or an internal period, so
    ordinary lowercase words never match.
    """
    if not any(c.isupper() for c in token) and "." not in token.strip("."):
        return None
    key = token.replace(".", "").upper()
    if len(key) < min_len or not key.isalpha():
        return None
    return key


def render_span(sentence: TokenizedSentence, start: int, end: int) -> str:
    """Join tokens ``[start, end)`` with single spaces, reattaching punctuation.

    No space goes before . , ; : ? ! and a hyphen that touched its
    neighbours in the source text stays glued ("X-Ray", not "X - Ray").
    """
    toks = sentence.tokens[start:end]
    parts: list[str] = []
    for k, tok in enumerate(toks):
        if k == 0:
            parts.append(tok.text)
            continue
        prev = toks[k - 1]
        glued = prev.end == tok.start and (tok.text == "-" or prev.text == "-")
        if tok.text in _NO_SPACE_BEFORE or glued:
            parts.append(tok.text)
        else:
            parts.append(" " + tok.text)
    return "".join(parts)


# An edit replaces one token of one side: (side, token_index, new_text, trace).
_Edit = tuple[str, int, str, ExpansionTrace]


def _local_context_edits(pair: LabeledSentencePair, min_len: int, max_len: int) -> list[_Edit]:
    toks = {"a": tokenize(pair.text_a), "b": tokenize(pair.text_b)}
    edits: list[_Edit] = []
    for side, other in (("a", "b"), ("b", "a")):
        # leftmost window wins for a given acronym
        by_acronym: dict[str, AbbrevCandidate] = {}
        for cand in gen_candidates(toks[other], min_len, max_len):
            prev = by_acronym.get(cand.acronym)
            if prev is None or cand.word_span[0] < prev.word_span[0]:
                by_acronym[cand.acronym] = cand
        if not by_acronym:
            continue
        for i, tok in enumerate(toks[side].tokens):
            key = acronym_key(tok.text, min_len)
            cand = by_acronym.get(key) if key else None
            if cand is None:
                continue
            lo, hi = cand.word_span
            trace = ExpansionTrace(
                pair_id=pair.id, side=side, token_index=i, replaced_token=tok.text,
                replacement=" ".join(t.text for t in toks[other].tokens[lo:hi]),
                strategy="local_context")
            edits.append((side, i, render_span(toks[other], lo, hi), trace))
    return edits


def _gazetteer_edits(pair: LabeledSentencePair, gz: Gazetteer,
                     already_replaced: set[tuple[str, int]]) -> list[_Edit]:
    edits: list[_Edit] = []
    if not len(gz):
        return edits
    for side in ("a", "b"):
        for i, tok in enumerate(tokenize(pair.text(side)).tokens):
            if (side, i) in already_replaced:
                continue
            expansion = gz.lookup(tok.text)
            if expansion is None:
                continue
            trace = ExpansionTrace(pair.id, side, i, tok.text, expansion, "gazetteer")
            edits.append((side, i, expansion, trace))
    return edits


def _apply_edits(pair: LabeledSentencePair, edits: Sequence[_Edit]) -> LabeledSentencePair:
    texts = {}
    for side in ("a", "b"):
        text = pair.text(side)
        tokens = tokenize(text).tokens
        for _, i, new, _ in sorted((e for e in edits if e[0] == side), key=lambda e: -e[1]):
            tok = tokens[i]
            text = text[:tok.start] + new + text[tok.end:]
        texts[side] = text
    return replace(pair, text_a=texts["a"], text_b=texts["b"])


def expand_local_context(pair: LabeledSentencePair, min_len: int = DEFAULT_MIN_LEN,
                         max_len: int = DEFAULT_MAX_LEN,
                         ) -> tuple[LabeledSentencePair, list[ExpansionTrace]]:
    edits = _local_context_edits(pair, min_len, max_len)
    return _apply_edits(pair, edits), [e[3] for e in edits]


def expand_gazetteer(pair: LabeledSentencePair, gz: Gazetteer,
                     already_replaced: Iterable[tuple[str, int]] = (),
                     ) -> tuple[LabeledSentencePair, list[ExpansionTrace]]:
    """Replace tokens found in ``gz`` with their first expansion.

    ``already_replaced`` holds ``(side, token_index)`` positions, relative
    to this pair's tokenization, that must be left untouched.
    """
    edits = _gazetteer_edits(pair, gz, set(already_replaced))
    return _apply_edits(pair, edits), [e[3] for e in edits]


def expand(pair: LabeledSentencePair, gz: Gazetteer | None = None,
           config: ExpandConfig | None = None,
           ) -> tuple[LabeledSentencePair, list[ExpansionTrace]]:
    """Local-context expansion first, then gazetteer lookup on the remaining tokens."""
    config = config or ExpandConfig()
    local = _local_context_edits(pair, config.min_len, config.max_len)
    done = {(side, i) for side, i, _, _ in local}
    gaz = _gazetteer_edits(pair, gz, done) if gz is not None else []
    return _apply_edits(pair, local + gaz), [e[3] for e in local + gaz]


def expand_dataset(pairs: Iterable[LabeledSentencePair], gz: Gazetteer | None = None,
                   config: ExpandConfig | None = None,
                   ) -> tuple[list[LabeledSentencePair], list[ExpansionTrace]]:
    out, traces = [], []
    for pair in pairs:
        new, tr = expand(pair, gz, config)
        out.append(new)
        traces.extend(tr)
    return out, traces
