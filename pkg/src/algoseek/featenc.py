"""Node feature construction: hashed text embedding plus math-operator histogram.

Every graph node gets one feature vector: an L2-normalized text embedding of
dimension d_text concatenated with log(1+count) of each of the 7 operator
categories. The same encoder instance must be used for query and corpus graphs
so both live in one vector space.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass

import numpy as np

from .errors import DataError

MATH_CATEGORIES = (
    "AddSub", "MultDiv", "Deference", "Modular",
    "BitOperator", "LogicalOperator", "RelationalOperator",
)

_TWO_CHAR_OPS = {
    "<<": "BitOperator", ">>": "BitOperator",
    "<=": "RelationalOperator", ">=": "RelationalOperator",
    "!=": "RelationalOperator", "==": "RelationalOperator",
    "&&": "LogicalOperator", "||": "LogicalOperator",
}

_ONE_CHAR_OPS = {
    "+": "AddSub", "-": "AddSub",
    "*": "MultDiv", "/": "MultDiv",
    "[": "Deference", "]": "Deference",
    "%": "Modular",
    "<": "RelationalOperator", ">": "RelationalOperator",
    "!": "LogicalOperator",
}

# textbook pseudo code uses unicode math symbols; fold to ASCII before counting
_UNICODE_FOLD = {"≤": "<=", "≥": ">=", "≠": "!=", "×": "*", "·": "*", "÷": "/"}


class MissingSidecarVector(DataError):
    def __init__(self, graph_id: str, node_id: int):
        super().__init__(f"sidecar has no vector for {graph_id}:{node_id}")


@dataclass(frozen=True)
class MathHistogram:
    counts: tuple  # 7 non-negative ints, MATH_CATEGORIES order

    def as_dict(self) -> dict:
        return dict(zip(MATH_CATEGORIES, self.counts))


def _fold_text(text: str) -> str:
    for uni, ascii_op in _UNICODE_FOLD.items():
        text = text.replace(uni, ascii_op)
    return re.sub(r"\bmod\b", "%", text)


def math_histogram(text: str) -> MathHistogram:
    """Count operators per category using longest-match tokenization."""
    text = _fold_text(text)
    counts = {cat: 0 for cat in MATH_CATEGORIES}
    i = 0
    while i < len(text):
        two = text[i:i + 2]
        if two in _TWO_CHAR_OPS:
            counts[_TWO_CHAR_OPS[two]] += 1
            i += 2
            continue
        ch = text[i]
        if ch in _ONE_CHAR_OPS:
            counts[_ONE_CHAR_OPS[ch]] += 1
        i += 1
    return MathHistogram(tuple(counts[cat] for cat in MATH_CATEGORIES))


def math_feature(text: str) -> np.ndarray:
    """log(1+count) per category; raw counts would let long lines dominate cosine."""
    return np.log1p(np.asarray(math_histogram(text).counts, dtype=np.float64))


_CAMEL_RE = re.compile(r"([a-z0-9])([A-Z])")
_WORD_RE = re.compile(r"[a-z]+|[0-9]+")


def subtokens(text: str) -> list[str]:
    """Lowercased subtokens, splitting identifiers on camel case and underscores."""
    return _WORD_RE.findall(_CAMEL_RE.sub(r"\1 \2", text).lower())


class HashTextEncoder:
    """Deterministic signed-hash bag of subtokens and character trigrams."""

    kind = "builtin-hash"

    def __init__(self, dim: int = 128, seed: int = 42):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self._key = seed.to_bytes(8, "little", signed=True)

    def _hash(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), key=self._key,
                                 digest_size=8).digest()
        return int.from_bytes(digest, "little")

    def encode(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for tok in subtokens(text):
            features = ["t:" + tok]
            padded = "^" + tok + "$"
            features.extend("g:" + padded[i:i + 3] for i in range(len(padded) - 2))
            for feat in features:
                h = self._hash(feat)
                sign = 1.0 if (h >> 33) & 1 else -1.0
                vec[h % self.dim] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec

    def vector_for(self, graph_id: str, node_id: int, text: str) -> np.ndarray:
        return self.encode(text)

    def config(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "seed": self.seed}


class SidecarEncoder:
    """Serves externally computed per-node vectors (e.g. a pretrained model)."""

    kind = "external-sidecar"

    def __init__(self, path: str, dim: int):
        self.path = str(path)
        self.dim = dim
        self._vectors: dict[tuple[str, int], np.ndarray] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                vec = np.asarray(rec["vec"], dtype=np.float64)
                if vec.shape != (dim,):
                    raise DataError(
                        f"sidecar vector for {rec['graph_id']}:{rec['node_id']} "
                        f"has dimension {vec.shape[0]}, expected {dim}")
                self._vectors[(rec["graph_id"], int(rec["node_id"]))] = vec

    def vector_for(self, graph_id: str, node_id: int, text: str) -> np.ndarray:
        try:
            return self._vectors[(graph_id, node_id)]
        except KeyError:
            raise MissingSidecarVector(graph_id, node_id) from None

    def config(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "path": self.path}


def node_features(encoder, graph_id: str, node_id: int, text: str) -> np.ndarray:
    return np.concatenate([encoder.vector_for(graph_id, node_id, text),
                           math_feature(text)])


def build_feature_matrix(graph, encoder) -> np.ndarray:
    """Rows follow node-id order; width is d_text + 7."""
    rows = [node_features(encoder, graph.graph_id, node.id, node.text)
            for node in sorted(graph.nodes, key=lambda n: n.id)]
    return np.vstack(rows)


def feature_dim(encoder) -> int:
    return encoder.dim + len(MATH_CATEGORIES)
