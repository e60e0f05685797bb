"""Organization-span extraction used to rescue medium-frequency strings.

The pipeline only needs something that turns a noisy acknowledgment string
into candidate organization names. A trained zero-shot NER model can sit
behind ``NerProvider``; ``HeuristicNerProvider`` is the dependency-free
default and strips grant boilerplate with regular expressions.
"""

from __future__ import annotations

import re
from typing import Protocol, Sequence


class NerProvider(Protocol):
    def extract(self, text: str) -> list[str]:
        """Organization name spans found in ``text``, in reading order."""
        ...


_GRANT = re.compile(
    r"\b(?:grants?|awards?|contracts?|nos?|numbers?)\b\.?\s*(?:#\s*)?"
    r"(?:[a-z0-9./-]*\d[a-z0-9./-]*)?"
)
_NUMBER = re.compile(r"(?:#\s*)?\b[a-z0-9./-]*\d[a-z0-9./-]*\b")
_SPLIT = re.compile(r"[,;:()\[\]]|\b(?:under|through|via|within|by|from|to)\b")
_EDGE_WORDS = {
    "funded", "supported", "financed", "sponsored", "partially", "partly",
    "in", "part", "the", "a", "an", "of", "for", "and", "with", "as", "is",
    "was", "were", "this", "work", "research", "study", "grant", "grants",
    "financial", "support", "funding", "program", "programme", "no",
}


class HeuristicNerProvider:
    """Regex span extractor; no model, no state."""

    def __init__(self, edge_words: Sequence[str] | None = None, min_letters: int = 2):
        self.edge_words = set(edge_words) if edge_words is not None else _EDGE_WORDS
        self.min_letters = min_letters

    def _trim(self, span: str) -> str:
        words = span.split()
        while words and words[0] in self.edge_words:
            words.pop(0)
        while words and words[-1] in self.edge_words:
            words.pop()
        return " ".join(words)

    def extract(self, text: str) -> list[str]:
        text = " ".join(text.lower().split())
        text = _GRANT.sub(" ", text)
        text = _NUMBER.sub(" ", text)
        spans: list[str] = []
        for piece in _SPLIT.split(text):
            span = self._trim(piece.strip(" .-/&"))
            if sum(ch.isalpha() for ch in span) >= self.min_letters and span not in spans:
                spans.append(span)
        return spans
