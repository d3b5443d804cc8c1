"""Corpus ingestion: TSV parsing, vocab/tagset construction, encoding, splitting,
and the loader for precomputed contextual-embedding files.

Corpus format (two-column TSV):
    one "token<TAB>tag" pair per line; sentences separated by one or more
    blank lines; lines starting with '#' are comments and skipped.

Contextual-embedding format (one file per corpus):
    per sentence, a header line "<num_tokens> <dim>" followed by num_tokens
    lines of "token<TAB>tag<TAB>v1 v2 ... v_dim"; blank line(s) between
    sentences; '#' comment lines are allowed anywhere (useful for recording
    the provenance of the vectors). The vector dimension must be uniform
    across the whole file.
"""

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import (ConfigError, DimensionError, EmptyCorpusError, ParseError,
                     UnknownTagError)

UNK_TOKEN = "<unk>"
UNK_ID = 0


@dataclass
class Sentence:
    tokens: list[str]
    tags: list[str]

    def __post_init__(self):
        if not self.tokens:
            raise DimensionError("sentence must be nonempty")
        if len(self.tokens) != len(self.tags):
            raise DimensionError(
                f"{len(self.tokens)} tokens but {len(self.tags)} tags"
            )

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class EmbeddedSentence:
    tokens: list[str]
    tags: list[str]
    vectors: np.ndarray  # (T, dim)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if not self.tokens:
            raise DimensionError("sentence must be nonempty")
        if not (len(self.tokens) == len(self.tags) == self.vectors.shape[0]):
            raise DimensionError("tokens, tags and vectors must share one length")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Vocab:
    """Token <-> dense id bijection with the reserved UNK entry at id 0."""

    token_to_id: dict[str, int]
    id_to_token: list[str]

    def __len__(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)


@dataclass
class TagSet:
    """Closed tag inventory; encoding an unseen tag is an error, never UNK."""

    tag_to_id: dict[str, int]
    id_to_tag: list[str]
    meta_tags: dict[str, str] | None = None  # optional semtag -> meta-tag map

    def __len__(self) -> int:
        return len(self.id_to_tag)

    def lookup(self, tag: str) -> int:
        try:
            return self.tag_to_id[tag]
        except KeyError:
            raise UnknownTagError(tag) from None


def _lines(stream) -> Iterator[str]:
    for raw in stream:
        yield raw.rstrip("\r\n")


def parse_corpus(text_stream: Iterable[str]) -> list[Sentence]:
    """Parse a two-column TSV stream into sentences, preserving file order."""
    sentences: list[Sentence] = []
    tokens: list[str] = []
    tags: list[str] = []

    def flush():
        if tokens:
            sentences.append(Sentence(tokens=list(tokens), tags=list(tags)))
            tokens.clear()
            tags.clear()

    for lineno, line in enumerate(_lines(text_stream), start=1):
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(
                f"expected exactly one TAB in {line!r}", line_number=lineno
            )
        token, tag = fields
        if not token or not tag:
            raise ParseError(
                f"empty token or tag field in {line!r}", line_number=lineno
            )
        tokens.append(token)
        tags.append(tag)
    flush()

    if not sentences:
        raise EmptyCorpusError("corpus contains no sentences")
    return sentences


def serialize_corpus(sentences: Iterable[Sentence]) -> str:
    """Inverse of parse_corpus: blocks of token<TAB>tag lines, blank-line separated."""
    blocks = []
    for s in sentences:
        blocks.append("\n".join(f"{tok}\t{tag}" for tok, tag in zip(s.tokens, s.tags)))
    return "\n\n".join(blocks) + "\n"


def read_corpus(path) -> list[Sentence]:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def build_vocab(sentences, min_freq: int = 1) -> tuple[Vocab, TagSet]:
    """Vocab in first-occurrence order with UNK reserved at id 0 (tokens below
    min_freq are dropped and map to UNK at encode time); tags sorted
    lexicographically for stable ids."""
    if not sentences:
        raise EmptyCorpusError("cannot build a vocabulary from zero sentences")
    counts: dict[str, int] = {}
    tag_inventory: set[str] = set()
    for s in sentences:
        for tok in s.tokens:
            counts[tok] = counts.get(tok, 0) + 1
        tag_inventory.update(s.tags)

    id_to_token = [UNK_TOKEN]
    for tok, n in counts.items():  # insertion order = first occurrence
        if n >= min_freq and tok != UNK_TOKEN:
            id_to_token.append(tok)
    vocab = Vocab(
        token_to_id={tok: i for i, tok in enumerate(id_to_token)},
        id_to_token=id_to_token,
    )

    id_to_tag = sorted(tag_inventory)
    tags = TagSet(
        tag_to_id={tag: i for i, tag in enumerate(id_to_tag)},
        id_to_tag=id_to_tag,
    )
    return vocab, tags


def encode(sentence, vocab: Vocab, tags: TagSet) -> tuple[np.ndarray, np.ndarray]:
    """Map one sentence to (token_ids, tag_ids); unknown tokens become UNK,
    unknown tags raise (the tagset is closed)."""
    token_ids = np.array([vocab.lookup(tok) for tok in sentence.tokens], dtype=np.intp)
    tag_ids = encode_tags(sentence.tags, tags)
    return token_ids, tag_ids


def encode_tags(tag_seq: Iterable[str], tags: TagSet) -> np.ndarray:
    return np.array([tags.lookup(t) for t in tag_seq], dtype=np.intp)


def split(sentences: list, val_fraction: float, seed: int) -> tuple[list, list]:
    """Deterministic seeded shuffle, then partition into (train, val).

    When the corpus has at least two sentences the validation side gets at
    least one and at most n-1 of them, so neither side is empty.
    """
    if not 0.0 < val_fraction < 1.0:
        raise ConfigError(f"val_fraction must be in (0, 1), got {val_fraction}")
    n = len(sentences)
    perm = np.random.default_rng(seed).permutation(n)
    n_val = int(round(n * val_fraction))
    if n >= 2:
        n_val = min(max(n_val, 1), n - 1)
    val = [sentences[i] for i in perm[:n_val]]
    train = [sentences[i] for i in perm[n_val:]]
    return train, val


def load_context_embeddings(text_stream: Iterable[str]) -> list[EmbeddedSentence]:
    """Parse a contextual-embedding file (see module docstring for the grammar)."""
    sentences: list[EmbeddedSentence] = []
    file_dim: int | None = None

    expect = "header"          # "header" | "row"
    need_blank = False         # a blank separator is owed before the next header
    remaining = 0
    tokens: list[str] = []
    tags: list[str] = []
    vectors: list[np.ndarray] = []
    cur_dim = 0

    lineno = 0
    for lineno, line in enumerate(_lines(text_stream), start=1):
        if line.startswith("#"):
            continue
        blank = not line.strip()

        if expect == "header":
            if blank:
                need_blank = False
                continue
            if need_blank:
                raise ParseError(
                    "expected a blank line between sentences", line_number=lineno
                )
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(
                    f"expected header '<num_tokens> <dim>', got {line!r}",
                    line_number=lineno,
                )
            try:
                remaining, cur_dim = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(
                    f"non-integer sentence header {line!r}", line_number=lineno
                ) from None
            if remaining < 1 or cur_dim < 1:
                raise ParseError(
                    f"header counts must be positive, got {line!r}", line_number=lineno
                )
            if file_dim is None:
                file_dim = cur_dim
            elif cur_dim != file_dim:
                raise ParseError(
                    f"embedding dim {cur_dim} differs from earlier dim {file_dim}",
                    line_number=lineno,
                )
            expect = "row"
            continue

        # expect == "row"
        if blank:
            raise ParseError(
                f"unexpected blank line: {remaining} token line(s) still expected",
                line_number=lineno,
            )
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(
                f"expected 'token<TAB>tag<TAB>values', got {line!r}",
                line_number=lineno,
            )
        token, tag, value_str = fields
        if not token or not tag:
            raise ParseError(
                f"empty token or tag field in {line!r}", line_number=lineno
            )
        try:
            vec = np.array([float(v) for v in value_str.split()], dtype=np.float64)
        except ValueError:
            raise ParseError(
                f"non-numeric vector component in {line!r}", line_number=lineno
            ) from None
        if vec.shape[0] != cur_dim:
            raise ParseError(
                f"vector has {vec.shape[0]} components, header declared {cur_dim}",
                line_number=lineno,
            )
        tokens.append(token)
        tags.append(tag)
        vectors.append(vec)
        remaining -= 1
        if remaining == 0:
            sentences.append(
                EmbeddedSentence(tokens=list(tokens), tags=list(tags),
                                 vectors=np.vstack(vectors))
            )
            tokens.clear()
            tags.clear()
            vectors.clear()
            expect = "header"
            need_blank = True

    if expect == "row":
        raise ParseError(
            f"file ended with {remaining} token line(s) still expected",
            line_number=lineno,
        )
    if not sentences:
        raise EmptyCorpusError("embedding file contains no sentences")
    return sentences


def serialize_context_embeddings(sentences: Iterable[EmbeddedSentence]) -> str:
    """Inverse of load_context_embeddings; float components round-trip exactly."""
    blocks = []
    for s in sentences:
        lines = [f"{len(s)} {s.vectors.shape[1]}"]
        for tok, tag, vec in zip(s.tokens, s.tags, s.vectors):
            lines.append(f"{tok}\t{tag}\t" + " ".join(repr(float(v)) for v in vec))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def read_context_embeddings(path) -> list[EmbeddedSentence]:
    with open(path, encoding="utf-8") as fh:
        return load_context_embeddings(fh)


def load_meta_tags(text_stream: Iterable[str]) -> dict[str, str]:
    """Optional 'semtag<TAB>meta-tag' map; same comment/blank-line rules as TSV."""
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(_lines(text_stream), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(
                f"expected 'semtag<TAB>meta-tag', got {line!r}", line_number=lineno
            )
        mapping[fields[0]] = fields[1]
    return mapping
