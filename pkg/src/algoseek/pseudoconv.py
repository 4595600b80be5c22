"""Convert free-form textbook pseudo code into the delimited p-code form.

Control-flow keywords are detected structurally; every remaining statement is
classified as math or natural language by semi-supervised label propagation
seeded with source-code lines (code lines labeled math, comment lines labeled
natural language).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DataError
from .featenc import math_histogram

LABEL_MATH = "math"
LABEL_NL = "natural-language"
LABEL_UNLABELED = "unlabeled"
_CLASSES = (LABEL_MATH, LABEL_NL)  # argmax ties resolve to math

_TRIGRAM_BUCKETS = 24
FEATURE_DIM = 7 + 3 + _TRIGRAM_BUCKETS

_STOP_WORDS = frozenset("""
a an and are as at be by each for from has have if in into is it its no not
of on or set sort such that the then this to until we when where which while
with
""".split())


class MissingClass(DataError):
    pass


class StructureError(DataError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line = line_no


@dataclass
class LineSample:
    text: str
    label: str  # math | natural-language | unlabeled
    features: np.ndarray


@dataclass
class PropagationConfig:
    alpha: float = 0.99
    sigma: float = 1.0
    max_iterations: int = 1000
    epsilon: float = 1e-6
    knn: int = 7  # 0 keeps the dense similarity graph

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.sigma <= 0 or self.max_iterations < 1 or self.epsilon <= 0:
            raise ValueError("bad propagation config")
        if self.knn < 0:
            raise ValueError("knn must be non-negative")


def _trigram_hash(tri: str) -> int:
    # small stable hash; no need for the keyed hash used by the text encoder
    h = 2166136261
    for ch in tri.encode("utf-8"):
        h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
    return h


def featurize(line: str) -> np.ndarray:
    """Fixed-dimension line descriptor, L2-normalized; empty line -> zeros."""
    vec = np.zeros(FEATURE_DIM, dtype=np.float64)
    line = " ".join(line.strip().split()).lower()
    if not line:
        return vec
    tokens = line.split()
    ntok = len(tokens)
    ops = np.asarray(math_histogram(line).counts, dtype=np.float64)
    vec[0:7] = 2.0 * ops / ntok
    vec[7] = sum(ch.isdigit() for ch in line) / len(line)
    alpha_tokens = [t for t in (w.strip(".,;:()").lower() for w in tokens) if t.isalpha()]
    if alpha_tokens:
        vec[8] = 3.0 * sum(t in _STOP_WORDS for t in alpha_tokens) / len(alpha_tokens)
    vec[9] = 0.5 * np.log1p(ntok)
    # character trigrams over the raw line pick up assignment/punctuation
    # shapes ("i =", "= 1") that the operator histogram misses
    padded = "^" + line + "$"
    for i in range(len(padded) - 2):
        bucket = _trigram_hash(padded[i:i + 3]) % _TRIGRAM_BUCKETS
        vec[10 + bucket] += 1.0
    # damp the trigram block so the handcrafted features stay influential
    total = vec[10:].sum()
    if total > 0:
        vec[10:] *= 0.5 / np.sqrt(total)
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def _similarity_matrix(features: np.ndarray, sigma: float,
                       knn: int = 0) -> np.ndarray:
    sq = np.sum(features ** 2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * features @ features.T
    np.maximum(d2, 0.0, out=d2)
    w = np.exp(-d2 / (2.0 * sigma ** 2))
    np.fill_diagonal(w, 0.0)
    if knn > 0 and w.shape[0] > knn + 1:
        # keep only each row's strongest neighbours, symmetrized, so a large
        # labeled class cannot dominate through sheer mass
        keep = np.zeros_like(w, dtype=bool)
        for i in range(w.shape[0]):
            keep[i, np.argsort(w[i], kind="stable")[-knn:]] = True
        w = np.where(keep | keep.T, w, 0.0)
    rowsum = w.sum(axis=1, keepdims=True)
    rowsum[rowsum == 0] = 1.0
    return w / rowsum


def propagate_scores(samples: list[LineSample],
                     config: PropagationConfig = None) -> np.ndarray:
    """Converged per-class score matrix F (n x 2), before any normalization."""
    config = config or PropagationConfig()
    for cls in _CLASSES:
        if not any(s.label == cls for s in samples):
            raise MissingClass(f"no labeled sample for class {cls!r}")
    n = len(samples)
    features = np.vstack([s.features for s in samples])
    s_mat = _similarity_matrix(features, config.sigma, config.knn)
    y = np.zeros((n, 2), dtype=np.float64)
    for i, s in enumerate(samples):
        if s.label in _CLASSES:
            y[i, _CLASSES.index(s.label)] = 1.0
    f = y.copy()
    for _ in range(config.max_iterations):
        f_next = config.alpha * (s_mat @ f) + (1.0 - config.alpha) * y
        if np.max(np.abs(f_next - f)) < config.epsilon:
            f = f_next
            break
        f = f_next
    return f


def propagate_labels(samples: list[LineSample],
                     config: PropagationConfig = None) -> list[str]:
    """Hard label per sample; labeled samples keep their given label."""
    f = propagate_scores(samples, config)
    y = np.zeros_like(f)
    for i, s in enumerate(samples):
        if s.label in _CLASSES:
            y[i, _CLASSES.index(s.label)] = 1.0
    # partial class-mass normalization: dividing by sqrt of the labeled-class
    # sizes keeps an imbalanced seed set from deciding every ambiguous sample
    # without over-correcting the way a full division does
    class_mass = np.sqrt(np.maximum(y.sum(axis=0), 1.0))
    out = []
    for i, s in enumerate(samples):
        if s.label in _CLASSES:
            out.append(s.label)
        else:
            out.append(_CLASSES[int(np.argmax(f[i] / class_mass))])
    return out


def load_seed_lines(comments_path: str = None, code_path: str = None):
    """Seed corpus shipped with the package unless paths override it."""
    if comments_path is None:
        comments = resources.files("algoseek.data").joinpath(
            "seed_comments.txt").read_text(encoding="utf-8")
    else:
        with open(comments_path, encoding="utf-8") as fh:
            comments = fh.read()
    if code_path is None:
        code = resources.files("algoseek.data").joinpath(
            "seed_code.txt").read_text(encoding="utf-8")
    else:
        with open(code_path, encoding="utf-8") as fh:
            code = fh.read()
    comment_lines = [ln.strip() for ln in comments.splitlines() if ln.strip()]
    code_lines = [ln.strip() for ln in code.splitlines() if ln.strip()]
    return comment_lines, code_lines


class LineClassifier:
    """math / natural-language classifier over free-form statement lines."""

    def __init__(self, seed_comments: list[str] = None,
                 seed_code: list[str] = None,
                 config: PropagationConfig = None):
        if seed_comments is None or seed_code is None:
            default_comments, default_code = load_seed_lines()
            seed_comments = seed_comments or default_comments
            seed_code = seed_code or default_code
        self.seed_comments = seed_comments
        self.seed_code = seed_code
        self.config = config or PropagationConfig()

    def classify(self, lines: list[str]) -> list[str]:
        if not lines:
            return []
        samples = [LineSample(t, LABEL_MATH, featurize(t)) for t in self.seed_code]
        samples += [LineSample(t, LABEL_NL, featurize(t)) for t in self.seed_comments]
        offset = len(samples)
        samples += [LineSample(t, LABEL_UNLABELED, featurize(t)) for t in lines]
        labels = propagate_labels(samples, self.config)
        return labels[offset:]


# --- structural conversion ---------------------------------------------

_HEADER_RE = re.compile(r"^([A-Za-z_][\w-]*)\s*\((.*)\)\s*$")
_IDENT_RE = re.compile(r"^[A-Za-z_]\w*$")


@dataclass
class _Line:
    no: int
    indent: int
    text: str
    children: list


def _parse_indentation(pseudo: str) -> list[_Line]:
    roots: list[_Line] = []
    stack: list[_Line] = []
    levels = [0]
    for no, raw in enumerate(pseudo.splitlines(), start=1):
        if not raw.strip():
            continue
        expanded = raw.expandtabs(4)
        indent = len(expanded) - len(expanded.lstrip(" "))
        text = expanded.strip()
        if indent > levels[-1]:
            if not stack:
                raise StructureError(no, "indented line with no parent")
            levels.append(indent)
        else:
            while indent < levels[-1]:
                levels.pop()
                stack.pop()
            if indent != levels[-1]:
                raise StructureError(no, "dedent to a level never opened")
            if stack:
                stack.pop()
        node = _Line(no, indent, text, [])
        if stack:
            stack[-1].children.append(node)
        else:
            roots.append(node)
        stack.append(node)
    return roots


_KEYWORD_SPLIT_RE = re.compile(r"\b(and|or|not)\b")


class _Converter:
    def __init__(self, classifier: LineClassifier):
        self.classifier = classifier
        self.segments: list[str] = []  # statements awaiting classification

    def wrap(self, segment: str) -> str:
        # delimiters cannot nest, so strip any literal ones from the statement
        segment = segment.replace("$", " ").replace("@", " ")
        self.segments.append(" ".join(segment.split()))
        return f"\x00{len(self.segments) - 1}\x00"

    def condition(self, text: str) -> str:
        parts = _KEYWORD_SPLIT_RE.split(text)
        out = []
        for part in parts:
            part = part.strip()
            if not part:
                continue
            if part in ("and", "or", "not"):
                out.append(part)
            else:
                out.append(self.wrap(part))
        return " ".join(out) if out else self.wrap(text)

    def emit(self, node: _Line, out: list[str], depth: int):
        pad = "  " * depth
        text = node.text.rstrip(":").strip()
        low = text.lower()

        def suite(children):
            if not children:
                out.append(pad + "  " + self.wrap("continue"))
                return
            i = 0
            while i < len(children):
                i = self.emit_at(children, i, out, depth + 1)

        m = re.match(r"for\s+each\s+(.*)$", text, re.IGNORECASE)
        if m:
            out.append(pad + "for each " + self.wrap(m.group(1)) + " {")
            suite(node.children)
            out.append(pad + "}")
            return
        m = re.match(r"for\s+(.*?)\s+(to|downto)\s+(.*)$", text, re.IGNORECASE)
        if m:
            out.append(pad + "for " + self.wrap(m.group(1)) + " "
                       + m.group(2).lower() + " " + self.wrap(m.group(3)) + " {")
            suite(node.children)
            out.append(pad + "}")
            return
        m = re.match(r"for\s+(.*)$", text, re.IGNORECASE)
        if m:
            out.append(pad + "for " + self.wrap(m.group(1)) + " {")
            suite(node.children)
            out.append(pad + "}")
            return
        m = re.match(r"while\s+(.*)$", text, re.IGNORECASE)
        if m:
            out.append(pad + "while " + self.condition(m.group(1)) + " {")
            suite(node.children)
            out.append(pad + "}")
            return
        if low == "repeat":
            out.append(pad + "repeat {")
            suite(node.children)
            # the matching 'until' is handled by emit_at
            return
        m = re.match(r"if\s+(.*?)(?:\s+then)?$", text, re.IGNORECASE)
        if m and low.startswith("if"):
            out.append(pad + "if " + self.condition(m.group(1)) + " {")
            suite(node.children)
            out.append(pad + "}")
            return
        m = re.match(r"else\s*if\s+(.*?)(?:\s+then)?$|elseif\s+(.*?)(?:\s+then)?$",
                     text, re.IGNORECASE)
        if m and (low.startswith("elseif") or low.startswith("else if")) \
                and self._can_reopen(out):
            cond = m.group(1) or m.group(2)
            self._reopen(out, pad, "elseif " + self.condition(cond))
            suite(node.children)
            out.append(pad + "}")
            return
        if low == "else" and self._can_reopen(out):
            self._reopen(out, pad, "else")
            suite(node.children)
            out.append(pad + "}")
            return
        m = re.match(r"return\b\s*(.*)$", text, re.IGNORECASE)
        if m:
            rest = m.group(1).strip()
            if rest:
                out.append(pad + "return " + self.wrap(rest))
            else:
                out.append(pad + "return")
            return
        out.append(pad + self.wrap(text))
        # a plain statement should not own a block; flatten children
        i = 0
        while i < len(node.children):
            i = self.emit_at(node.children, i, out, depth)

    @staticmethod
    def _can_reopen(out: list[str]) -> bool:
        # an else/elseif clause can only attach to a just-closed if/elseif
        # suite; anywhere else it degrades to a plain statement
        if not out or out[-1].strip() != "}":
            return False
        pending = 1
        for line in reversed(out[:-1]):
            s = line.strip()
            if s.endswith("{"):
                if pending == 1:
                    return s.startswith("if ") or s.startswith("} elseif")
                pending -= 1
                if s.startswith("}"):
                    pending += 1
            elif s == "}" or s.startswith("} until"):
                pending += 1
        return False

    @staticmethod
    def _reopen(out: list[str], pad: str, header: str):
        # merge with the '}' just emitted for the preceding if/elseif suite
        out[-1] = pad + "} " + header + " {"

    def emit_at(self, siblings: list[_Line], i: int, out: list[str],
                depth: int) -> int:
        node = siblings[i]
        low = node.text.rstrip(":").strip().lower()
        if low == "repeat":
            self.emit(node, out, depth)
            j = i + 1
            if j < len(siblings):
                nxt = siblings[j].text.rstrip(":").strip()
                m = re.match(r"until\s+(.*)$", nxt, re.IGNORECASE)
                if m:
                    out.append("  " * depth + "} until " + self.condition(m.group(1)))
                    return j + 1
            out.append("  " * depth + "} until " + self.wrap("done"))
            return i + 1
        self.emit(node, out, depth)
        return i + 1


def convert(pseudo: str, classifier: LineClassifier = None) -> str:
    """Free-form pseudo code -> p-code text accepted by the parser."""
    classifier = classifier or LineClassifier()
    roots = _parse_indentation(pseudo)
    if not roots:
        raise StructureError(1, "empty pseudo code")

    name, params, body_roots = "MAIN", "", roots
    m = _HEADER_RE.match(roots[0].text.strip())
    if m and not roots[0].children and len(roots) > 1:
        name = re.sub(r"\W", "_", m.group(1))
        raw_params = [p.strip() for p in m.group(2).split(",") if p.strip()]
        body_roots = roots[1:]
        conv = _Converter(classifier)
        params = ", ".join(
            p if _IDENT_RE.match(p) else f"${p}$" for p in raw_params)
    else:
        conv = _Converter(classifier)

    lines: list[str] = []
    i = 0
    while i < len(body_roots):
        i = conv.emit_at(body_roots, i, lines, 1)

    labels = classifier.classify(conv.segments)
    resolved = []
    for seg, label in zip(conv.segments, labels):
        delim = "$" if label == LABEL_MATH else "@"
        resolved.append(delim + seg + delim)

    def substitute(line: str) -> str:
        return re.sub(r"\x00(\d+)\x00", lambda m: resolved[int(m.group(1))], line)

    out = [name + "(" + params + ") {"]
    out.extend(substitute(ln) for ln in lines)
    out.append("}")
    return "\n".join(out) + "\n"
