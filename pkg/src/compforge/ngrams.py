"""Frequent n-gram dictionary backed by a prefix tree.

The dictionary stores every n-gram (up to `max_n` tokens) that occurs
strictly more than `min_count` times in a corpus, together with its count.
Because any contiguous subspan of an n-gram occurs at least as often as the
n-gram itself, the stored set is closed under prefixes, which is what makes
the level-wise Apriori build below sound: a k-gram can only pass the
threshold if its (k-1)-token prefix and suffix already did, so only those
candidates are ever counted.

Lookups run on the prefix tree: `contains` walks one path, and
`match_lengths_from` reports every stored n-gram starting at a sentence
position in a single walk. Serialization is deterministic — the same corpus
and flags always produce byte-identical index files.
"""

from __future__ import annotations

import io
import json
import struct
from collections import Counter
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from compforge.errors import ConfigError, DataError

_MAGIC = b"NGIX1"


class _Node:
    __slots__ = ("count", "member", "children")

    def __init__(self) -> None:
        self.count = 0
        self.member = False
        self.children: dict[str, _Node] = {}


class NGramDictionary:
    """Immutable-by-convention n-gram membership index with counts."""

    def __init__(self, root: dict[str, _Node], min_count: int, max_n: int | None):
        self._root = root
        self.min_count = min_count
        self.max_n = max_n

    # -- queries ---------------------------------------------------------

    @property
    def vocab_size(self) -> int:
        """Number of distinct unigram entries."""
        return sum(1 for node in self._root.values() if node.member)

    def __len__(self) -> int:
        """Total number of stored n-grams."""
        return sum(1 for _ in self.entries())

    def contains(self, span: Sequence[str]) -> bool:
        """True iff `span` (a token sequence) is a stored n-gram."""
        if not span:
            return False
        if self.max_n is not None and len(span) > self.max_n:
            return False
        node = None
        children = self._root
        for token in span:
            node = children.get(token)
            if node is None:
                return False
            children = node.children
        return node.member

    def count(self, span: Sequence[str]) -> int:
        """Corpus count of a stored n-gram; 0 when not stored."""
        node = None
        children = self._root
        for token in span:
            node = children.get(token)
            if node is None:
                return 0
            children = node.children
        return node.count if node is not None and node.member else 0

    def match_lengths_from(self, sentence: Sequence[str], start: int) -> list[int]:
        """Ascending lengths L such that sentence[start:start+L] is stored."""
        if not 0 <= start < len(sentence):
            raise ConfigError(f"start {start} out of range for sentence of length {len(sentence)}")
        lengths: list[int] = []
        children = self._root
        limit = len(sentence) - start
        if self.max_n is not None:
            limit = min(limit, self.max_n)
        for offset in range(limit):
            node = children.get(sentence[start + offset])
            if node is None:
                break
            if node.member:
                lengths.append(offset + 1)
            children = node.children
        return lengths

    def entries(self) -> Iterator[tuple[tuple[str, ...], int]]:
        """All stored (n-gram, count) pairs in lexicographic order."""

        def walk(children: dict[str, _Node], prefix: tuple[str, ...]):
            for token in sorted(children):
                node = children[token]
                gram = prefix + (token,)
                if node.member:
                    yield gram, node.count
                yield from walk(node.children, gram)

        yield from walk(self._root, ())

    # -- construction ----------------------------------------------------

    @classmethod
    def from_entries(
        cls,
        entries: Iterable[Sequence[str]],
        min_count: int = 0,
        max_n: int | None = None,
    ) -> "NGramDictionary":
        """Build a dictionary from explicit entries (for hand-built fixtures).

        Every entry is stored as a member with a synthetic count of
        ``min_count + 1``; `max_n` defaults to the longest entry.
        """
        root: dict[str, _Node] = {}
        longest = 0
        for entry in entries:
            gram = tuple(entry)
            if not gram:
                raise ConfigError("dictionary entries must be non-empty")
            longest = max(longest, len(gram))
            children = root
            node = None
            for token in gram:
                node = children.setdefault(token, _Node())
                children = node.children
            node.member = True
            node.count = min_count + 1
        return cls(root, min_count, max_n if max_n is not None else (longest or 1))

    # -- serialization ---------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Write the index; same dictionary always gives identical bytes."""
        tokens = sorted(self._collect_tokens())
        token_ids = {tok: i for i, tok in enumerate(tokens)}
        buf = io.BytesIO()
        buf.write(_MAGIC)
        header = json.dumps(
            {"min_count": self.min_count, "max_n": self.max_n, "tokens": len(tokens)},
            sort_keys=True,
        ).encode("utf-8")
        buf.write(struct.pack("<I", len(header)))
        buf.write(header)
        for tok in tokens:
            raw = tok.encode("utf-8")
            buf.write(struct.pack("<I", len(raw)))
            buf.write(raw)

        def dump(children: dict[str, _Node]) -> None:
            buf.write(struct.pack("<I", len(children)))
            for token in sorted(children):
                node = children[token]
                buf.write(struct.pack("<IQB", token_ids[token], node.count, int(node.member)))
                dump(node.children)

        dump(self._root)
        Path(path).write_bytes(buf.getvalue())

    @classmethod
    def load(cls, path: str | Path) -> "NGramDictionary":
        data = Path(path).read_bytes()
        if data[: len(_MAGIC)] != _MAGIC:
            raise DataError("not an n-gram index file (bad magic)", path=str(path))
        view = io.BytesIO(data[len(_MAGIC):])

        def take(fmt: str):
            size = struct.calcsize(fmt)
            raw = view.read(size)
            if len(raw) != size:
                raise DataError("truncated n-gram index", path=str(path))
            return struct.unpack(fmt, raw)

        (header_len,) = take("<I")
        header = json.loads(view.read(header_len).decode("utf-8"))
        tokens = []
        for _ in range(header["tokens"]):
            (tok_len,) = take("<I")
            tokens.append(view.read(tok_len).decode("utf-8"))

        def read_children() -> dict[str, _Node]:
            (n_children,) = take("<I")
            children: dict[str, _Node] = {}
            for _ in range(n_children):
                token_id, count, member = take("<IQB")
                node = _Node()
                node.count = count
                node.member = bool(member)
                node.children = read_children()
                children[tokens[token_id]] = node
            return children

        root = read_children()
        return cls(root, header["min_count"], header["max_n"])

    def _collect_tokens(self) -> set[str]:
        seen: set[str] = set()

        def walk(children: dict[str, _Node]) -> None:
            for token, node in children.items():
                seen.add(token)
                walk(node.children)

        walk(self._root)
        return seen


def build_ngram_dictionary(
    sentences: Iterable[Sequence[str]],
    min_count: int = 3,
    max_n: int | None = 8,
) -> NGramDictionary:
    """Count n-grams over `sentences` and keep those with count > `min_count`.

    `sentences` is an iterable of token sequences (one side of a corpus).
    n-grams never cross sentence boundaries. `max_n=None` removes the length
    cap; the build then stops at the longest n-gram still above threshold.
    """
    if min_count < 0:
        raise ConfigError(f"min_count must be non-negative, got {min_count}")
    if max_n is not None and max_n < 1:
        raise ConfigError(f"max_n must be at least 1, got {max_n}")

    sents = [tuple(s) for s in sentences]
    survivors: dict[tuple[str, ...], int] = {}

    unigrams = Counter(tok for s in sents for tok in s)
    level = {(tok,): c for tok, c in unigrams.items() if c > min_count}
    survivors.update(level)
    # Start positions (per sentence) whose current-level n-gram survived.
    alive_tokens = {g[0] for g in level}
    alive = [[i for i, tok in enumerate(s) if tok in alive_tokens] for s in sents]

    n = 2
    while level and (max_n is None or n <= max_n):
        counter: Counter[tuple[str, ...]] = Counter()
        candidates: list[list[int]] = []
        for s, positions in zip(sents, alive):
            posset = set(positions)
            cand = [i for i in positions if i + 1 in posset and i + n <= len(s)]
            for i in cand:
                counter[s[i : i + n]] += 1
            candidates.append(cand)
        level = {g: c for g, c in counter.items() if c > min_count}
        alive = [
            [i for i in cand if s[i : i + n] in level]
            for s, cand in zip(sents, candidates)
        ]
        survivors.update(level)
        n += 1

    root: dict[str, _Node] = {}
    for gram, count in survivors.items():
        children = root
        node = None
        for token in gram:
            node = children.setdefault(token, _Node())
            children = node.children
        node.member = True
        node.count = count
    return NGramDictionary(root, min_count, max_n)
