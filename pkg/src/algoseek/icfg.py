"""Interprocedural control-flow graphs shared by pseudo code and source code.

Three producers: a builder over parsed pseudo-code programs, a token-level
extractor for a C/Java subset, and a JSON reader for graphs produced by
external tools. One graph per source file (or per pseudo-code program), with
one entry and one exit node per function and call/return edges linking call
sites to callees defined in the same graph.
"""

from __future__ import annotations

import json
import math
import re
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import plang
from .errors import DataError

NODE_KINDS = {"entry", "exit", "statement", "condition", "call-site"}
EDGE_KINDS = {"flow", "flow-true", "flow-false", "call", "return"}
PAYLOAD_KINDS = {"math-text", "nl-text", "code-text"}

_CONTROL_WORDS = {
    "if", "else", "while", "for", "do", "switch", "case", "default", "return",
    "break", "continue", "goto", "sizeof", "catch", "try", "finally", "new",
    "synchronized", "throw", "assert",
}


class UnknownNode(DataError):
    pass


class UnbalancedBraces(DataError):
    def __init__(self, file: str, line: int):
        super().__init__(f"{file}:{line}: unbalanced braces")
        self.file = file
        self.line = line


class EmptyCorpus(DataError):
    pass


class SchemaError(DataError):
    def __init__(self, field_name: str, reason: str):
        super().__init__(f"bad ICFG JSON field {field_name!r}: {reason}")
        self.field = field_name
        self.reason = reason


@dataclass(frozen=True)
class IcfgNode:
    id: int
    kind: str
    payload_kind: str
    text: str
    file: str
    line_start: int
    line_end: int
    function: str


@dataclass(frozen=True)
class IcfgEdge:
    src: int
    dst: int
    kind: str


@dataclass
class Icfg:
    graph_id: str
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def __post_init__(self):
        self._by_id = {n.id: n for n in self.nodes}

    def node(self, node_id: int) -> IcfgNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownNode(f"{self.graph_id}: no node {node_id}") from None

    def node_ids(self) -> list[int]:
        return sorted(self._by_id)

    def adjacency(self) -> np.ndarray:
        """Binary matrix over node-id order; 1 iff an edge of any kind exists."""
        order = {nid: i for i, nid in enumerate(self.node_ids())}
        a = np.zeros((len(order), len(order)), dtype=np.float64)
        for e in self.edges:
            a[order[e.src], order[e.dst]] = 1.0
        return a

    def _undirected_neighbors(self) -> dict:
        nbrs = {n.id: set() for n in self.nodes}
        for e in self.edges:
            nbrs[e.src].add(e.dst)
            nbrs[e.dst].add(e.src)
        return nbrs

    def shortest_path_hops(self, x: int, y: int) -> float:
        """Minimum undirected edge count between x and y; inf when disconnected."""
        self.node(x)
        self.node(y)
        if x == y:
            return 0
        nbrs = self._undirected_neighbors()
        seen = {x}
        queue = deque([(x, 0)])
        while queue:
            cur, dist = queue.popleft()
            for nxt in nbrs[cur]:
                if nxt == y:
                    return dist + 1
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append((nxt, dist + 1))
        return math.inf

    def hops_from(self, start: int) -> dict:
        """BFS distances from start over undirected edges."""
        self.node(start)
        nbrs = self._undirected_neighbors()
        dist = {start: 0}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for nxt in nbrs[cur]:
                if nxt not in dist:
                    dist[nxt] = dist[cur] + 1
                    queue.append(nxt)
        return dist


def shortest_path_hops(g: Icfg, x: int, y: int) -> float:
    return g.shortest_path_hops(x, y)


# --- p-code builder ----------------------------------------------------

def _test_text(t) -> str:
    if isinstance(t, plang.TestLeaf):
        return t.expr.raw
    if isinstance(t, plang.NotTest):
        return "not " + _test_text(t.operand)
    if isinstance(t, plang.AndTest):
        return _test_text(t.left) + " and " + _test_text(t.right)
    return _test_text(t.left) + " or " + _test_text(t.right)


def _test_payload(t) -> str:
    if isinstance(t, plang.TestLeaf):
        return "math-text" if isinstance(t.expr, plang.MathExpr) else "nl-text"
    if isinstance(t, plang.NotTest):
        return _test_payload(t.operand)
    left = _test_payload(t.left)
    return left if left == "math-text" else _test_payload(t.right)


def _expr_payload(e) -> str:
    return "math-text" if isinstance(e, plang.MathExpr) else "nl-text"


class _PcodeBuilder:
    def __init__(self, graph_id: str, file: str):
        self.graph_id = graph_id
        self.file = file
        self.nodes: list[IcfgNode] = []
        self.edges: list[IcfgEdge] = []
        self.call_sites: list[tuple[int, str]] = []
        self.function = ""

    def add_node(self, kind, payload_kind, text, line) -> int:
        nid = len(self.nodes)
        self.nodes.append(IcfgNode(nid, kind, payload_kind, text, self.file,
                                   max(1, line), max(1, line), self.function))
        return nid

    def edge(self, src, dst, kind="flow"):
        self.edges.append(IcfgEdge(src, dst, kind))

    def connect(self, ends, dst):
        for src, kind in ends:
            self.edge(src, dst, kind)

    def lower_body(self, stmts, exit_id):
        """Returns (first_node_id, open_ends) for a non-empty statement list."""
        first = None
        ends = []
        for st in stmts:
            f, e = self.lower_stmt(st, exit_id)
            if first is None:
                first = f
            else:
                self.connect(ends, f)
            ends = e
        return first, ends

    def lower_stmt(self, st, exit_id):
        if isinstance(st, plang.ExprStmt):
            nid = self.add_node("statement", _expr_payload(st.expr),
                                st.expr.raw, st.line)
            return nid, [(nid, "flow")]
        if isinstance(st, plang.CallStmt):
            text = st.name + "(" + ", ".join(
                a if isinstance(a, str) else a.raw for a in st.args) + ")"
            nid = self.add_node("call-site", "nl-text", text, st.line)
            self.call_sites.append((nid, st.name))
            return nid, [(nid, "flow")]
        if isinstance(st, plang.ReturnStmt):
            if st.value is None:
                text, payload = "return", "nl-text"
            elif isinstance(st.value, plang.CallStmt):
                text, payload = "return " + st.value.name, "nl-text"
            else:
                text, payload = st.value.raw, _expr_payload(st.value)
            nid = self.add_node("statement", payload, text, st.line)
            self.edge(nid, exit_id)
            return nid, []
        if isinstance(st, plang.IfStmt):
            cond = self.add_node("condition", _test_payload(st.test),
                                 _test_text(st.test), st.line)
            then_first, then_ends = self.lower_body(st.then, exit_id)
            self.edge(cond, then_first, "flow-true")
            ends = list(then_ends)
            prev_cond = cond
            for test, body in st.elifs:
                ec = self.add_node("condition", _test_payload(test),
                                   _test_text(test), st.line)
                self.edge(prev_cond, ec, "flow-false")
                bf, be = self.lower_body(body, exit_id)
                self.edge(ec, bf, "flow-true")
                ends.extend(be)
                prev_cond = ec
            if st.orelse is not None:
                ef, ee = self.lower_body(st.orelse, exit_id)
                self.edge(prev_cond, ef, "flow-false")
                ends.extend(ee)
            else:
                ends.append((prev_cond, "flow-false"))
            return cond, ends
        if isinstance(st, plang.WhileStmt):
            cond = self.add_node("condition", _test_payload(st.test),
                                 _test_text(st.test), st.line)
            bf, be = self.lower_body(st.body, exit_id)
            self.edge(cond, bf, "flow-true")
            self.connect(be, cond)
            return cond, [(cond, "flow-false")]
        if isinstance(st, plang.ForStmt):
            init = None
            if st.bound is not None:
                init = self.add_node("statement", _expr_payload(st.header),
                                     st.header.raw, st.line)
                # synthesize the loop test the way a source-level for lowers
                # ("for i = 1 to n" guards on i <= n), so counted loops in
                # queries and in extracted source produce comparable nodes
                var = st.header.raw.split("=", 1)[0].strip() or st.header.raw
                op = ">=" if st.direction == "downto" else "<="
                cond = self.add_node("condition", _expr_payload(st.bound),
                                     f"{var} {op} {st.bound.raw}", st.line)
                self.edge(init, cond)
            else:
                cond = self.add_node("condition", _expr_payload(st.header),
                                     st.header.raw, st.line)
            bf, be = self.lower_body(st.body, exit_id)
            self.edge(cond, bf, "flow-true")
            self.connect(be, cond)
            return (init if init is not None else cond), [(cond, "flow-false")]
        if isinstance(st, plang.RepeatStmt):
            bf, be = self.lower_body(st.body, exit_id)
            cond = self.add_node("condition", _test_payload(st.until),
                                 _test_text(st.until), st.line)
            self.connect(be, cond)
            self.edge(cond, bf, "flow-true")
            return bf, [(cond, "flow-false")]
        raise TypeError(f"unknown statement {st!r}")


def build_pcode_icfg(program: plang.PProgram, graph_id: str = "pcode",
                     file: str = "<pcode>") -> Icfg:
    b = _PcodeBuilder(graph_id, file)
    entries, exits = {}, {}
    succ_of = {}
    for fn in program.functions:
        b.function = fn.name
        first_line = fn.body[0].line if fn.body else 1
        entry = b.add_node("entry", "nl-text", "", first_line)
        exit_id = b.add_node("exit", "nl-text", "", first_line)
        entries[fn.name], exits[fn.name] = entry, exit_id
        first, ends = b.lower_body(fn.body, exit_id)
        b.edge(entry, first)
        b.connect(ends, exit_id)
    # interprocedural linking for callees defined in the same program
    flow_succ = {}
    for e in b.edges:
        if e.kind.startswith("flow"):
            flow_succ.setdefault(e.src, []).append(e.dst)
    for cs, callee in b.call_sites:
        if callee in entries:
            b.edge(cs, entries[callee], "call")
            for succ in flow_succ.get(cs, []):
                b.edge(exits[callee], succ, "return")
    return Icfg(graph_id, b.nodes, b.edges)


# --- source extractor (C/Java subset) ----------------------------------

def _strip_noise(text: str) -> str:
    """Blank comments, string/char contents, preprocessor lines, annotations.

    Output has the same length and line structure as the input.
    """
    out = list(text)
    i, n = 0, len(text)
    state = "code"
    while i < n:
        ch = text[i]
        if state == "code":
            if ch == "/" and i + 1 < n and text[i + 1] == "/":
                state = "line_comment"
                out[i] = " "
            elif ch == "/" and i + 1 < n and text[i + 1] == "*":
                state = "block_comment"
                out[i] = " "
            elif ch == '"':
                state = "string"
            elif ch == "'":
                state = "char"
        elif state == "line_comment":
            if ch == "\n":
                state = "code"
            else:
                out[i] = " "
        elif state == "block_comment":
            if ch == "*" and i + 1 < n and text[i + 1] == "/":
                out[i] = " "
                out[i + 1] = " "
                i += 1
                state = "code"
            elif ch != "\n":
                out[i] = " "
        elif state == "string":
            if ch == "\\":
                out[i] = " "
                if i + 1 < n and text[i + 1] != "\n":
                    out[i + 1] = " "
                    i += 1
            elif ch == '"':
                state = "code"
            elif ch != "\n":
                out[i] = " "
        elif state == "char":
            if ch == "\\":
                out[i] = " "
                if i + 1 < n and text[i + 1] != "\n":
                    out[i + 1] = " "
                    i += 1
            elif ch == "'":
                state = "code"
            elif ch != "\n":
                out[i] = " "
        i += 1
    stripped = "".join(out)
    lines = stripped.split("\n")
    cleaned = []
    for ln in lines:
        bare = ln.lstrip()
        if bare.startswith("#") or re.match(r"@\w+", bare):
            cleaned.append(" " * len(ln))
        else:
            cleaned.append(ln)
    return "\n".join(cleaned)


def _line_index(text: str):
    starts = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            starts.append(i + 1)
    arr = np.asarray(starts)

    def line_of(offset: int) -> int:
        return int(np.searchsorted(arr, offset, side="right"))

    return line_of


_FUNC_RE = re.compile(r"\b([A-Za-z_]\w*)\s*\(")


def _match_paren(text: str, open_pos: int) -> int:
    depth = 0
    for i in range(open_pos, len(text)):
        if text[i] == "(":
            depth += 1
        elif text[i] == ")":
            depth -= 1
            if depth == 0:
                return i
    return -1


def _match_brace(text: str, open_pos: int) -> int:
    depth = 0
    for i in range(open_pos, len(text)):
        if text[i] == "{":
            depth += 1
        elif text[i] == "}":
            depth -= 1
            if depth == 0:
                return i
    return -1


def _find_functions(text: str):
    """Yield (name, body_start, body_end) for function definitions.

    Heuristic: identifier '(' ... ')' '{' at brace depth 0 (C) or 1 (Java
    class body), identifier not a control keyword and not preceded by 'new'.
    """
    depth_at = np.zeros(len(text) + 1, dtype=np.int64)
    d = 0
    for i, ch in enumerate(text):
        depth_at[i] = d
        if ch == "{":
            d += 1
        elif ch == "}":
            d -= 1
    depth_at[len(text)] = d
    for m in _FUNC_RE.finditer(text):
        name = m.group(1)
        if name in _CONTROL_WORDS:
            continue
        open_paren = m.end() - 1
        if depth_at[m.start()] > 1:
            continue
        before = text[:m.start()].rstrip()
        if before.endswith("new") or before.endswith("="):
            continue
        close = _match_paren(text, open_paren)
        if close < 0:
            continue
        j = close + 1
        while j < len(text) and text[j].isspace():
            j += 1
        # Java: allow 'throws X' between ')' and '{'
        mt = re.match(r"throws\s+[\w.,\s]*", text[j:])
        if mt:
            j += mt.end()
        if j < len(text) and text[j] == "{":
            body_end = _match_brace(text, j)
            if body_end > 0:
                yield name, j + 1, body_end


_KW_RE = re.compile(r"\b(if|while|for|do|switch|else|return)\b")
_CALL_RE = re.compile(r"\b([A-Za-z_]\w*)\s*\(")


def _first_call(stmt_text: str):
    for m in _CALL_RE.finditer(stmt_text):
        if m.group(1) not in _CONTROL_WORDS:
            return m.group(1)
    return None


class _SourceBuilder:
    def __init__(self, graph_id: str, file: str, text: str):
        self.graph_id = graph_id
        self.file = file
        self.text = text
        self.line_of = _line_index(text)
        self.nodes: list[IcfgNode] = []
        self.edges: list[IcfgEdge] = []
        self.call_sites: list[tuple[int, str]] = []
        self.function = ""

    def add_node(self, kind, text, start, end) -> int:
        nid = len(self.nodes)
        clean = " ".join(text.split())
        self.nodes.append(IcfgNode(nid, kind, "code-text", clean, self.file,
                                   self.line_of(start), self.line_of(max(start, end)),
                                   self.function))
        return nid

    def edge(self, src, dst, kind="flow"):
        self.edges.append(IcfgEdge(src, dst, kind))

    def connect(self, ends, dst):
        for src, kind in ends:
            self.edge(src, dst, kind)

    def statement_node(self, start, end):
        seg = self.text[start:end]
        callee = _first_call(seg)
        kind = "call-site" if callee else "statement"
        nid = self.add_node(kind, seg, start, end)
        if callee:
            self.call_sites.append((nid, callee))
        return nid

    def skip_ws(self, i, end):
        while i < end and self.text[i].isspace():
            i += 1
        return i

    def stmt_end(self, i, end):
        """Offset just past the ';' terminating the simple statement at i,
        skipping nested parens/braces/brackets."""
        depth = 0
        j = i
        while j < end:
            ch = self.text[j]
            if ch in "({[":
                depth += 1
            elif ch in ")}]":
                depth -= 1
            elif ch == ";" and depth == 0:
                return j + 1
            j += 1
        return end

    def parse_block(self, start, end, exit_id):
        """Lower the region [start, end); returns (first, ends)."""
        first, ends = None, []

        def attach(f, e):
            nonlocal first, ends
            if f is None:
                return
            if first is None:
                first = f
            else:
                self.connect(ends, f)
            ends = e

        i = self.skip_ws(start, end)
        while i < end:
            ch = self.text[i]
            if ch == "{":
                close = _match_brace(self.text, i)
                if close < 0 or close > end:
                    raise UnbalancedBraces(self.file, self.line_of(i))
                f, e = self.parse_block(i + 1, close, exit_id)
                attach(f, e)
                i = self.skip_ws(close + 1, end)
                continue
            if ch == ";":
                i = self.skip_ws(i + 1, end)
                continue
            m = re.match(r"[A-Za-z_]\w*", self.text[i:end])
            word = m.group(0) if m else None
            if word in ("if", "while", "for", "switch", "do"):
                f, e, i = self.control_stmt(word, i, end, exit_id)
                attach(f, e)
                i = self.skip_ws(i, end)
                continue
            j = self.stmt_end(i, end)
            seg = self.text[i:j].strip().rstrip(";").strip()
            if seg:
                nid = self.statement_node(i, j)
                if re.match(r"return\b", seg) or seg == "return":
                    attach(nid, [])
                    self.edge(nid, exit_id)
                else:
                    attach(nid, [(nid, "flow")])
            i = self.skip_ws(j, end)
        return first, ends

    def branch_region(self, i, end):
        """Region of the statement-or-block starting at i; returns (a, b, next_i)."""
        i = self.skip_ws(i, end)
        if i < end and self.text[i] == "{":
            close = _match_brace(self.text, i)
            if close < 0 or close > end:
                raise UnbalancedBraces(self.file, self.line_of(i))
            return i + 1, close, close + 1
        m = re.match(r"[A-Za-z_]\w*", self.text[i:end])
        word = m.group(0) if m else None
        if word in ("if", "while", "for", "switch", "do"):
            # single nested control statement without braces
            j = self.control_extent(word, i, end)
            return i, j, j
        j = self.stmt_end(i, end)
        return i, j, j

    def control_extent(self, word, i, end):
        """Offset just past a braceless nested control statement."""
        open_paren = self.text.index("(", i)
        close_paren = _match_paren(self.text, open_paren)
        a, b, nxt = self.branch_region(close_paren + 1, end)
        if word == "if":
            k = self.skip_ws(nxt, end)
            if re.match(r"else\b", self.text[k:end]):
                a2, b2, nxt = self.branch_region(k + 4, end)
        if word == "do":
            k = self.skip_ws(nxt, end)
            nxt = self.stmt_end(k, end)  # while (...) ;
        return nxt

    def control_stmt(self, word, i, end, exit_id):
        """Lower one structured statement; returns (first, ends, next_offset)."""
        if word == "do":
            body_a, body_b, nxt = self.branch_region(i + 2, end)
            bf, be = self.parse_block(body_a, body_b, exit_id)
            k = self.skip_ws(nxt, end)
            open_paren = self.text.index("(", k)
            close_paren = _match_paren(self.text, open_paren)
            cond = self.add_node("condition",
                                 self.text[open_paren + 1:close_paren],
                                 open_paren + 1, close_paren)
            if bf is None:
                bf, be = cond, []
            else:
                self.connect(be, cond)
            self.edge(cond, bf, "flow-true")
            nxt = self.stmt_end(close_paren + 1, end)
            return bf, [(cond, "flow-false")], nxt

        open_paren = self.text.index("(", i)
        close_paren = _match_paren(self.text, open_paren)
        header = self.text[open_paren + 1:close_paren]

        if word == "if":
            cond = self.add_node("condition", header, open_paren + 1, close_paren)
            then_a, then_b, nxt = self.branch_region(close_paren + 1, end)
            tf, te = self.parse_block(then_a, then_b, exit_id)
            if tf is not None:
                self.edge(cond, tf, "flow-true")
            ends = list(te) if tf is not None else [(cond, "flow-true")]
            k = self.skip_ws(nxt, end)
            if re.match(r"else\b", self.text[k:end]):
                else_a, else_b, nxt = self.branch_region(k + 4, end)
                ef, ee = self.parse_block(else_a, else_b, exit_id)
                if ef is not None:
                    self.edge(cond, ef, "flow-false")
                    ends.extend(ee)
                else:
                    ends.append((cond, "flow-false"))
            else:
                ends.append((cond, "flow-false"))
            return cond, ends, nxt

        if word == "while":
            cond = self.add_node("condition", header, open_paren + 1, close_paren)
            body_a, body_b, nxt = self.branch_region(close_paren + 1, end)
            bf, be = self.parse_block(body_a, body_b, exit_id)
            if bf is not None:
                self.edge(cond, bf, "flow-true")
                self.connect(be, cond)
            return cond, [(cond, "flow-false")], nxt

        if word == "for":
            parts = self._split_for_header(header)
            first = None
            base = open_paren + 1
            if parts is None:
                # Java enhanced for: the whole header is the loop condition
                cond = self.add_node("condition", header, base, close_paren)
            else:
                init, test, update = parts
                if init.strip():
                    first = self.add_node("statement", init, base, base + len(init))
                cond = self.add_node("condition", test if test.strip() else "true",
                                     base, close_paren)
                if first is not None:
                    self.edge(first, cond)
            body_a, body_b, nxt = self.branch_region(close_paren + 1, end)
            bf, be = self.parse_block(body_a, body_b, exit_id)
            back_target = cond
            if parts is not None and parts[2].strip():
                upd = self.add_node("statement", parts[2], base, close_paren)
                self.edge(upd, cond)
                back_target = upd
            if bf is not None:
                self.edge(cond, bf, "flow-true")
                self.connect(be, back_target)
            elif back_target != cond:
                self.edge(cond, back_target, "flow-true")
            return (first if first is not None else cond), \
                [(cond, "flow-false")], nxt

        if word == "switch":
            cond = self.add_node("condition", header, open_paren + 1, close_paren)
            body_a, body_b, nxt = self.branch_region(close_paren + 1, end)
            ends = [(cond, "flow-false")]
            for case_a, case_b in self._split_cases(body_a, body_b):
                cf, ce = self.parse_block(case_a, case_b, exit_id)
                if cf is not None:
                    self.edge(cond, cf, "flow-true")
                    ends.extend(ce)
            return cond, ends, nxt

        raise AssertionError(word)

    @staticmethod
    def _split_for_header(header: str):
        parts, depth, cur = [], 0, []
        for ch in header:
            if ch in "([{":
                depth += 1
            elif ch in ")]}":
                depth -= 1
            if ch == ";" and depth == 0:
                parts.append("".join(cur))
                cur = []
            else:
                cur.append(ch)
        parts.append("".join(cur))
        if len(parts) != 3:
            return None
        return parts[0], parts[1], parts[2]

    def _split_cases(self, start, end):
        label_re = re.compile(r"\b(?:case\b[^:]*|default\s*)\:")
        marks = []
        depth = 0
        i = start
        while i < end:
            ch = self.text[i]
            if ch in "({[":
                depth += 1
            elif ch in ")}]":
                depth -= 1
            elif depth == 0:
                m = label_re.match(self.text, i, end)
                if m:
                    marks.append((i, m.end()))
                    i = m.end()
                    continue
            i += 1
        regions = []
        for idx, (pos, body_start) in enumerate(marks):
            body_end = marks[idx + 1][0] if idx + 1 < len(marks) else end
            regions.append((body_start, body_end))
        return regions


def extract_file_icfg(path: str, language: str, source: str = None) -> Icfg:
    if source is None:
        with open(path, encoding="utf-8", errors="replace") as fh:
            source = fh.read()
    text = _strip_noise(source)
    if text.count("{") != text.count("}"):
        raise UnbalancedBraces(path, 1)
    b = _SourceBuilder(str(path), str(path), text)
    entries, exits = {}, {}
    flow_succ_pending = []
    for name, body_start, body_end in _find_functions(text):
        b.function = name
        entry = b.add_node("entry", "", body_start, body_start)
        exit_id = b.add_node("exit", "", body_end, body_end)
        if name not in entries:
            entries[name], exits[name] = entry, exit_id
        first, ends = b.parse_block(body_start, body_end, exit_id)
        if first is None:
            b.edge(entry, exit_id)
        else:
            b.edge(entry, first)
            b.connect(ends, exit_id)
    flow_succ = {}
    for e in b.edges:
        if e.kind.startswith("flow"):
            flow_succ.setdefault(e.src, []).append(e.dst)
    for cs, callee in b.call_sites:
        if callee in entries:
            b.edge(cs, entries[callee], "call")
            for succ in flow_succ.get(cs, []):
                b.edge(exits[callee], succ, "return")
    return Icfg(str(path), b.nodes, b.edges)


def extract_source_icfg(files: list[tuple[str, str]]) -> list[Icfg]:
    """One graph per file; call/return edges resolve within a file."""
    if not files:
        raise EmptyCorpus("no source files given")
    graphs = []
    for path, language in sorted(files, key=lambda f: str(f[0])):
        graphs.append(extract_file_icfg(path, language))
    return graphs


# --- JSON interchange --------------------------------------------------

def graph_to_dict(g: Icfg) -> dict:
    return {
        "graph_id": g.graph_id,
        "nodes": [
            {"id": n.id, "kind": n.kind, "payload_kind": n.payload_kind,
             "text": n.text, "file": n.file, "line_start": n.line_start,
             "line_end": n.line_end, "function": n.function}
            for n in g.nodes
        ],
        "edges": [{"src": e.src, "dst": e.dst, "kind": e.kind} for e in g.edges],
    }


def graph_from_dict(d: dict) -> Icfg:
    for key in ("graph_id", "nodes", "edges"):
        if key not in d:
            raise SchemaError(key, "missing")
    nodes = []
    for nd in d["nodes"]:
        for key in ("id", "kind", "payload_kind", "text", "file",
                    "line_start", "line_end", "function"):
            if key not in nd:
                raise SchemaError(f"nodes[].{key}", "missing")
        if nd["kind"] not in NODE_KINDS:
            raise SchemaError("nodes[].kind", f"unknown kind {nd['kind']!r}")
        nodes.append(IcfgNode(int(nd["id"]), nd["kind"], nd["payload_kind"],
                              nd["text"], nd["file"], int(nd["line_start"]),
                              int(nd["line_end"]), nd["function"]))
    ids = {n.id for n in nodes}
    edges = []
    for ed in d["edges"]:
        for key in ("src", "dst", "kind"):
            if key not in ed:
                raise SchemaError(f"edges[].{key}", "missing")
        if ed["kind"] not in EDGE_KINDS:
            raise SchemaError("edges[].kind", f"unknown kind {ed['kind']!r}")
        if ed["src"] not in ids or ed["dst"] not in ids:
            raise SchemaError("edges[]", "edge endpoint is not a node id")
        edges.append(IcfgEdge(int(ed["src"]), int(ed["dst"]), ed["kind"]))
    return Icfg(d["graph_id"], nodes, edges)


def write_icfg_json(graphs: list[Icfg], path: str):
    payload = [graph_to_dict(g) for g in graphs]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_icfg_json(path: str) -> list[Icfg]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, list):
        raise SchemaError("<root>", "expected an array of graphs")
    return [graph_from_dict(d) for d in payload]
