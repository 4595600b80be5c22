import math

import networkx as nx
import numpy as np
import pytest

from algoseek import icfg, plang
from algoseek.icfg import (
    Icfg, IcfgEdge, IcfgNode, SchemaError, UnknownNode, build_pcode_icfg,
    extract_file_icfg, graph_from_dict, graph_to_dict, read_icfg_json,
    write_icfg_json,
)

from conftest import make_rng


def random_graph(rng, n):
    nodes = [IcfgNode(i, "statement", "code-text", f"s{i}", "f", i + 1, i + 1, "F")
             for i in range(n)]
    edges = []
    for _ in range(int(rng.integers(0, 2 * n))):
        a, b = int(rng.integers(n)), int(rng.integers(n))
        edges.append(IcfgEdge(a, b, "flow"))
    return Icfg("rand", nodes, edges)


class TestGraphBasics:
    def test_unknown_node(self):
        g = random_graph(make_rng(0), 4)
        with pytest.raises(UnknownNode):
            g.node(99)
        with pytest.raises(UnknownNode):
            g.shortest_path_hops(0, 99)

    def test_adjacency_follows_node_id_order(self):
        nodes = [IcfgNode(i, "statement", "code-text", "", "f", 1, 1, "F")
                 for i in (5, 2, 9)]
        g = Icfg("g", nodes, [IcfgEdge(2, 9, "flow")])
        a = g.adjacency()
        # order is [2, 5, 9]
        assert a[0, 2] == 1.0
        assert a.sum() == 1.0

    @pytest.mark.parametrize("seed", range(5))
    def test_shortest_path_matches_networkx(self, seed):
        rng = make_rng(seed)
        g = random_graph(rng, int(rng.integers(3, 12)))
        ref = nx.Graph()
        ref.add_nodes_from(n.id for n in g.nodes)
        ref.add_edges_from((e.src, e.dst) for e in g.edges if e.src != e.dst)
        for x in ref.nodes:
            lengths = nx.single_source_shortest_path_length(ref, x)
            for y in ref.nodes:
                expected = lengths.get(y, math.inf)
                assert g.shortest_path_hops(x, y) == expected
            hops = g.hops_from(x)
            for y in ref.nodes:
                assert hops.get(y, math.inf) == lengths.get(y, math.inf)

    @pytest.mark.parametrize("seed", range(3))
    def test_metric_properties(self, seed):
        rng = make_rng(seed + 50)
        g = random_graph(rng, 8)
        ids = [n.id for n in g.nodes]
        for x in ids:
            assert g.shortest_path_hops(x, x) == 0
            for y in ids:
                assert g.shortest_path_hops(x, y) == g.shortest_path_hops(y, x)


class TestPcodeBuilder:
    def build(self, source):
        return build_pcode_icfg(plang.parse_source(source), graph_id="q",
                                file="q.p")

    def kinds(self, g):
        return [n.kind for n in sorted(g.nodes, key=lambda n: n.id)]

    def edge_set(self, g):
        return {(e.src, e.dst, e.kind) for e in g.edges}

    def test_straight_line(self):
        g = self.build("F() { $a$ $b$ }")
        assert self.kinds(g) == ["entry", "exit", "statement", "statement"]
        assert self.edge_set(g) == {(0, 2, "flow"), (2, 3, "flow"),
                                    (3, 1, "flow")}

    def test_if_else(self):
        g = self.build("F() { if $c$ { $x$ } else { $y$ } $z$ }")
        by_text = {n.text: n for n in g.nodes}
        cond = by_text["c"]
        assert cond.kind == "condition"
        edges = self.edge_set(g)
        assert (cond.id, by_text["x"].id, "flow-true") in edges
        assert (cond.id, by_text["y"].id, "flow-false") in edges
        assert (by_text["x"].id, by_text["z"].id, "flow") in edges
        assert (by_text["y"].id, by_text["z"].id, "flow") in edges

    def test_while_back_edge(self):
        g = self.build("F() { while $c$ { $x$ } }")
        by_text = {n.text: n for n in g.nodes}
        edges = self.edge_set(g)
        assert (by_text["c"].id, by_text["x"].id, "flow-true") in edges
        assert (by_text["x"].id, by_text["c"].id, "flow") in edges
        # exit through flow-false
        exit_id = next(n.id for n in g.nodes if n.kind == "exit")
        assert (by_text["c"].id, exit_id, "flow-false") in edges

    def test_counted_for_synthesizes_guard(self):
        g = self.build("F() { for $i = 1$ to $n$ { $x$ } }")
        texts = {n.text for n in g.nodes}
        assert "i = 1" in texts
        assert "i <= n" in texts
        by_text = {n.text: n for n in g.nodes}
        assert by_text["i = 1"].kind == "statement"
        assert by_text["i <= n"].kind == "condition"
        assert (by_text["i = 1"].id, by_text["i <= n"].id, "flow") \
            in self.edge_set(g)

    def test_downto_guard(self):
        g = self.build("F() { for $i = n$ downto $1$ { $x$ } }")
        assert any(n.text == "i >= 1" for n in g.nodes)

    def test_for_each_single_condition(self):
        g = self.build("F() { for each @vertex v@ { $x$ } }")
        conds = [n for n in g.nodes if n.kind == "condition"]
        assert len(conds) == 1
        assert conds[0].text == "vertex v"

    def test_return_skips_fallthrough(self):
        g = self.build("F() { if $c$ { return $x$ } $y$ }")
        by_text = {n.text: n for n in g.nodes}
        exit_id = next(n.id for n in g.nodes if n.kind == "exit")
        edges = self.edge_set(g)
        ret = by_text["x"]
        assert (ret.id, exit_id, "flow") in edges
        assert not any(src == ret.id and kind.startswith("flow") and dst != exit_id
                       for src, dst, kind in edges)

    def test_call_and_return_edges(self):
        g = self.build("F() { G($a$) $x$ }\nG(p) { $y$ }")
        call = next(n for n in g.nodes if n.kind == "call-site")
        entries = {n.function: n.id for n in g.nodes if n.kind == "entry"}
        exits = {n.function: n.id for n in g.nodes if n.kind == "exit"}
        edges = self.edge_set(g)
        assert (call.id, entries["G"], "call") in edges
        after = next(n for n in g.nodes if n.text == "x")
        assert (exits["G"], after.id, "return") in edges

    def test_repeat_edges_as_specified(self):
        g = self.build("F() { repeat { $x$ } until $c$ }")
        by_text = {n.text: n for n in g.nodes}
        edges = self.edge_set(g)
        assert (by_text["x"].id, by_text["c"].id, "flow") in edges
        assert (by_text["c"].id, by_text["x"].id, "flow-true") in edges

    def test_one_entry_exit_per_function(self):
        g = self.build("F() { $a$ }\nG() { $b$ }")
        assert sum(1 for n in g.nodes if n.kind == "entry") == 2
        assert sum(1 for n in g.nodes if n.kind == "exit") == 2

    def test_payload_kinds(self):
        g = self.build("F() { $a+b$ @say hi@ }")
        payloads = {n.text: n.payload_kind for n in g.nodes}
        assert payloads["a+b"] == "math-text"
        assert payloads["say hi"] == "nl-text"


C_SOURCE = """\
int locate(const int *arr, int cnt, int target) {
    int low = 0;
    int high = cnt - 1;
    while (low <= high) {
        int middle = (low + high) / 2;
        if (arr[middle] == target)
            return middle;
        else if (arr[middle] < target)
            low = middle + 1;
        else
            high = middle - 1;
    }
    return -1;
}

void caller(void) {
    int r = locate(0, 0, 0);
}
"""

JAVA_SOURCE = """\
class Box {
    // a comment with a brace {
    int pick(int[] vals, int flag) {
        String s = "quoted { brace";
        int acc = 0;
        for (int i = 0; i < vals.length; i++) {
            switch (flag) {
            case 0:
                acc += vals[i];
                break;
            default:
                acc -= vals[i];
                break;
            }
        }
        do {
            acc--;
        } while (acc > 100);
        return acc;
    }
}
"""


class TestSourceExtractor:
    def test_c_functions_found(self, tmp_path):
        p = tmp_path / "t.c"
        p.write_text(C_SOURCE)
        g = extract_file_icfg(str(p), "c")
        fns = {n.function for n in g.nodes}
        assert fns == {"locate", "caller"}

    def test_c_branches_and_loops(self, tmp_path):
        p = tmp_path / "t.c"
        p.write_text(C_SOURCE)
        g = extract_file_icfg(str(p), "c")
        conds = [n.text for n in g.nodes if n.kind == "condition"]
        assert "low <= high" in conds
        assert "arr[middle] == target" in conds

    def test_c_call_edges_resolved_in_file(self, tmp_path):
        p = tmp_path / "t.c"
        p.write_text(C_SOURCE)
        g = extract_file_icfg(str(p), "c")
        call_edges = [e for e in g.edges if e.kind == "call"]
        assert len(call_edges) == 1
        entry = next(n for n in g.nodes if n.kind == "entry"
                     and n.function == "locate")
        assert call_edges[0].dst == entry.id

    def test_line_numbers(self, tmp_path):
        p = tmp_path / "t.c"
        p.write_text(C_SOURCE)
        g = extract_file_icfg(str(p), "c")
        node = next(n for n in g.nodes if n.text == "int low = 0;")
        assert node.line_start == 2

    def test_java_comment_and_string_braces_ignored(self, tmp_path):
        p = tmp_path / "t.java"
        p.write_text(JAVA_SOURCE)
        g = extract_file_icfg(str(p), "java")
        assert {n.function for n in g.nodes} == {"pick"}

    def test_java_switch_and_do_while(self, tmp_path):
        p = tmp_path / "t.java"
        p.write_text(JAVA_SOURCE)
        g = extract_file_icfg(str(p), "java")
        conds = [n.text for n in g.nodes if n.kind == "condition"]
        assert "flag" in conds       # switch head
        assert "acc > 100" in conds  # do-while
        texts = [n.text for n in g.nodes]
        assert "acc += vals[i];" in texts

    def test_for_lowering(self, tmp_path):
        p = tmp_path / "t.java"
        p.write_text(JAVA_SOURCE)
        g = extract_file_icfg(str(p), "java")
        by_text = {n.text: n for n in g.nodes}
        cond = by_text["i < vals.length"]
        upd = by_text["i++"]
        assert cond.kind == "condition"
        edges = {(e.src, e.dst) for e in g.edges}
        assert (upd.id, cond.id) in edges

    def test_unbalanced_braces(self, tmp_path):
        p = tmp_path / "bad.c"
        p.write_text("int f(void) { if (x) { return 1; }\n")
        with pytest.raises(icfg.DataError):
            extract_file_icfg(str(p), "c")


class TestJsonRoundTrip:
    def test_round_trip(self, tmp_path):
        g = build_pcode_icfg(
            plang.parse_source("F() { if $c$ { $x$ } $y$ }"), "g1", "g1.p")
        path = tmp_path / "graphs.json"
        write_icfg_json([g], str(path))
        back = read_icfg_json(str(path))
        assert len(back) == 1
        assert back[0].graph_id == g.graph_id
        assert sorted(back[0].nodes, key=lambda n: n.id) == \
            sorted(g.nodes, key=lambda n: n.id)
        assert set(back[0].edges) == set(g.edges)

    def test_schema_field_names(self):
        g = build_pcode_icfg(plang.parse_source("F() { $x$ }"), "g", "g.p")
        d = graph_to_dict(g)
        assert set(d) == {"graph_id", "nodes", "edges"}
        assert set(d["nodes"][0]) == {"id", "kind", "payload_kind", "text",
                                      "file", "line_start", "line_end",
                                      "function"}
        assert set(d["edges"][0]) == {"src", "dst", "kind"}

    def test_bad_kind_rejected(self):
        d = graph_to_dict(
            build_pcode_icfg(plang.parse_source("F() { $x$ }"), "g", "g.p"))
        d["nodes"][0]["kind"] = "mystery"
        with pytest.raises(SchemaError):
            graph_from_dict(d)

    def test_dangling_edge_rejected(self):
        d = graph_to_dict(
            build_pcode_icfg(plang.parse_source("F() { $x$ }"), "g", "g.p"))
        d["edges"].append({"src": 0, "dst": 999, "kind": "flow"})
        with pytest.raises(SchemaError):
            graph_from_dict(d)
