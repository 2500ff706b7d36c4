"""Domain-tagged document collections: ingestion, URL routing, sentence splitting."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional

logger = logging.getLogger(__name__)


class POS(str, Enum):
    NOUN = "NOUN"
    PROPER_NOUN = "PROPER_NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    OTHER = "OTHER"


CONTENT_POS = frozenset({POS.NOUN, POS.PROPER_NOUN, POS.VERB, POS.ADJ, POS.ADV})

SENTENCE_DELIMITERS = frozenset("。？！.?!")

# Preprocessing thresholds for raw lines; the defaults are unvalidated guesses.
MIN_LINE_TOKENS = 2
MAX_LINE_TOKENS = 512


class CorpusError(ValueError):
    pass


class ParseError(CorpusError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateIdError(CorpusError):
    pass


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: POS = POS.OTHER
    is_entity: bool = False

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if not self.lemma:
            raise ValueError("token lemma must be non-empty")
        if not isinstance(self.pos, POS):
            object.__setattr__(self, "pos", POS(self.pos))

    def to_record(self) -> list:
        return [self.surface, self.lemma, self.pos.value, self.is_entity]

    @classmethod
    def from_record(cls, rec) -> "Token":
        if isinstance(rec, str):
            return cls(rec, rec)
        if not isinstance(rec, (list, tuple)) or len(rec) != 4:
            raise ValueError(f"token must be [surface, lemma, pos, is_entity], got {rec!r}")
        surface, lemma, pos, ent = rec
        return cls(str(surface), str(lemma), POS(pos), bool(ent))


Sentence = tuple  # tuple[Token, ...]


@dataclass(frozen=True)
class Document:
    id: str
    body: tuple  # tuple of paragraphs, each a tuple of sentences (tuples of Token)
    title: tuple = ()
    url: Optional[str] = None
    domain: Optional[str] = None

    def sentences(self) -> Iterator[tuple[int, int, tuple]]:
        """Yield ``(paragraph_index, sentence_index, tokens)`` in text order."""
        for p, para in enumerate(self.body):
            for s, sent in enumerate(para):
                yield p, s, sent

    def tokens(self) -> list[Token]:
        return [tok for _, _, sent in self.sentences() for tok in sent]

    @property
    def n_sentences(self) -> int:
        return sum(len(para) for para in self.body)

    @property
    def n_words(self) -> int:
        return sum(len(sent) for _, _, sent in self.sentences())

    def with_domain(self, domain: Optional[str]) -> "Document":
        return Document(self.id, self.body, self.title, self.url, domain)

    def to_record(self) -> dict:
        rec: dict = {"id": self.id}
        if self.url is not None:
            rec["url"] = self.url
        if self.domain is not None:
            rec["domain"] = self.domain
        rec["title"] = [t.to_record() for t in self.title]
        rec["body"] = [[[t.to_record() for t in sent] for sent in para] for para in self.body]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Document":
        if not isinstance(rec, dict):
            raise ValueError("document record must be a JSON object")
        if "id" not in rec:
            raise ValueError('missing "id" field')
        if "body" not in rec:
            raise ValueError('missing "body" field')
        title = tuple(Token.from_record(t) for t in rec.get("title") or [])
        body = tuple(
            tuple(tuple(Token.from_record(t) for t in sent) for sent in para if sent)
            for para in rec["body"]
        )
        body = tuple(para for para in body if para)
        if not body:
            raise ValueError(f"document {rec['id']!r} has an empty body")
        return cls(str(rec["id"]), body, title, rec.get("url"), rec.get("domain"))


@dataclass(frozen=True)
class DomainRoute:
    url_prefix: str
    domain: str

    def __post_init__(self):
        if not self.url_prefix:
            raise ValueError("url_prefix must be non-empty")


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)
    domain_index: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        self._by_id = {}
        for doc in self.documents:
            if doc.id in self._by_id:
                raise DuplicateIdError(f"duplicate document id {doc.id!r}")
            self._by_id[doc.id] = doc
        if not self.domain_index:
            self.domain_index = build_domain_index(self.documents)

    def __len__(self) -> int:
        return len(self.documents)

    def __getitem__(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._by_id

    @property
    def domains(self) -> list[str]:
        return sorted(self.domain_index)

    def domain_documents(self, domain: str) -> list[Document]:
        if domain not in self.domain_index:
            raise CorpusError(f"unknown domain {domain!r}")
        return [self._by_id[i] for i in self.domain_index[domain]]


def build_domain_index(documents: Iterable[Document]) -> dict[str, list[str]]:
    index: dict[str, list[str]] = {}
    for doc in documents:
        if doc.domain is not None:
            index.setdefault(doc.domain, []).append(doc.id)
    return index


def ingest_jsonl(path, routes: Optional[list[DomainRoute]] = None) -> Corpus:
    """Read one document record per line.

    Documents without a ``domain`` field are routed by URL when ``routes``
    is given.
    """
    documents = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                doc = Document.from_record(rec)
            except (json.JSONDecodeError, ValueError, TypeError) as exc:
                raise ParseError(str(exc), lineno) from exc
            if doc.id in seen:
                raise DuplicateIdError(f"line {lineno}: duplicate document id {doc.id!r}")
            seen.add(doc.id)
            if doc.domain is None and routes and doc.url:
                doc = doc.with_domain(route_domain(doc.url, routes))
            documents.append(doc)
    return Corpus(documents)


def write_jsonl(corpus: Corpus | Iterable[Document], path) -> None:
    docs = corpus.documents if isinstance(corpus, Corpus) else corpus
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc.to_record(), ensure_ascii=False) + "\n")


def load_routes(path) -> list[DomainRoute]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return [DomainRoute(r["url_prefix"], r["domain"]) for r in data]


def route_domain(url: str, routes: list[DomainRoute]) -> Optional[str]:
    best = None
    for route in routes:
        if url.startswith(route.url_prefix):
            if best is None or len(route.url_prefix) > len(best.url_prefix):
                best = route
    return best.domain if best else None


def split_sentences(raw: str) -> list[str]:
    sentences = []
    for line in raw.splitlines():
        start = 0
        for i, ch in enumerate(line):
            if ch in SENTENCE_DELIMITERS:
                sentences.append(line[start : i + 1])
                start = i + 1
        if start < len(line):
            sentences.append(line[start:])
    return [s.strip() for s in sentences if s.strip()]


_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def whitespace_tokenize(text: str) -> tuple[Token, ...]:
    """Fallback tokenizer: words and single punctuation marks, all tagged OTHER."""
    return tuple(Token(t, t.lower()) for t in _TOKEN_RE.findall(text))


def document_from_text(
    doc_id: str,
    text: str,
    title: str = "",
    domain: Optional[str] = None,
    url: Optional[str] = None,
    min_line: int = MIN_LINE_TOKENS,
    max_line: int = MAX_LINE_TOKENS,
) -> Document:
    """Build a Document from raw text with the fallback tokenizer.

    Lines shorter than ``min_line`` tokens are dropped, lines longer than
    ``max_line`` tokens are ignored.
    """
    paragraphs = []
    for line in text.splitlines():
        n = len(whitespace_tokenize(line))
        if n < min_line or n > max_line:
            continue
        sents = tuple(whitespace_tokenize(s) for s in split_sentences(line))
        sents = tuple(s for s in sents if s)
        if sents:
            paragraphs.append(sents)
    if not paragraphs:
        raise CorpusError(f"document {doc_id!r} has an empty body")
    return Document(doc_id, tuple(paragraphs), whitespace_tokenize(title), url, domain)


@dataclass(frozen=True)
class CorpusStats:
    doc_count: int
    avg_sentences: float
    avg_words: float


def corpus_stats(corpus: Corpus, domain: str) -> CorpusStats:
    docs = corpus.domain_documents(domain)
    if not docs:
        raise CorpusError(f"domain {domain!r} has no documents")
    n = len(docs)
    return CorpusStats(
        n,
        sum(d.n_sentences for d in docs) / n,
        sum(d.n_words for d in docs) / n,
    )
