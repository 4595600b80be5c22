"""Query pipeline: per-node retrieval, node grouping, scoring, ranked output.

Each query-graph node retrieves its top-k most similar corpus nodes by cosine
similarity over the final embeddings. Matched corpus nodes are grouped per
graph by complete-linkage agglomeration under undirected shortest-path
distance; every group seen during agglomeration (singletons included) becomes
a candidate, scored by query coverage plus inverse group diameter.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import featenc, gae, icfg, plang
from .errors import DataError

log = logging.getLogger(__name__)


class EmptyIndex(DataError):
    pass


class ConfigMismatch(DataError):
    pass


@dataclass(frozen=True)
class IndexEntry:
    graph_id: str
    node_id: int
    vec: np.ndarray
    file: str
    line_start: int  # 0 when the node has no source location (entry/exit)
    line_end: int


@dataclass
class VectorIndex:
    dim: int
    config_hash: str
    entries: list  # of IndexEntry, ordered by (graph_id, node_id)

    def matrix(self) -> np.ndarray:
        return np.vstack([e.vec for e in self.entries])


@dataclass(frozen=True)
class Match:
    query_node: int
    graph_id: str
    node_id: int
    similarity: float


@dataclass
class CandidateGroup:
    graph_id: str
    members: tuple  # sorted node ids
    qc: int
    diameter: int  # max intra-group shortest path; 0 for singletons
    gamma: float
    fragments: list = field(default_factory=list)  # of (file, line_start, line_end)


@dataclass
class SearchResult:
    query_id: str
    groups: list  # of CandidateGroup, ranked
    parameters: dict


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        log.debug("cosine of zero vector treated as 0")
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def build_index(graphs: list, finals: list[np.ndarray],
                config_hash: str) -> VectorIndex:
    """graphs and finals are parallel lists; rows follow node-id order."""
    entries = []
    for g, mat in zip(graphs, finals):
        for row, nid in enumerate(g.node_ids()):
            node = g.node(nid)
            has_loc = node.kind not in ("entry", "exit")
            entries.append(IndexEntry(
                g.graph_id, nid, np.asarray(mat[row], dtype=np.float64),
                node.file,
                node.line_start if has_loc else 0,
                node.line_end if has_loc else 0))
    entries.sort(key=lambda e: (e.graph_id, e.node_id))
    if not entries:
        raise EmptyIndex("no nodes to index")
    return VectorIndex(entries[0].vec.shape[0], config_hash, entries)


def top_k(index: VectorIndex, query_vec: np.ndarray, k: int) -> list[tuple]:
    """Exact scan; returns up to k (entry, similarity) pairs, best first."""
    if not index.entries:
        raise EmptyIndex("index has no entries")
    if query_vec.shape[0] != index.dim:
        raise DataError(f"query dim {query_vec.shape[0]} vs index dim {index.dim}")
    sims = [cosine(query_vec, e.vec) for e in index.entries]
    ranked = sorted(range(len(sims)),
                    key=lambda i: (-sims[i], index.entries[i].graph_id,
                                   index.entries[i].node_id))
    return [(index.entries[i], sims[i]) for i in ranked[:k]]


def _pairwise_sp(graph: icfg.Icfg, node_ids: list[int]) -> dict:
    dist = {}
    for x in node_ids:
        hops = graph.hops_from(x)
        for y in node_ids:
            dist[(x, y)] = hops.get(y, math.inf)
    return dist


def group_nodes(matches: list[Match], graphs: dict) -> list[CandidateGroup]:
    """Complete-linkage agglomeration per source graph; emits every group."""
    coverage: dict[tuple[str, int], set] = {}
    per_graph: dict[str, set] = {}
    for m in matches:
        per_graph.setdefault(m.graph_id, set()).add(m.node_id)
        coverage.setdefault((m.graph_id, m.node_id), set()).add(m.query_node)

    candidates: list[CandidateGroup] = []
    for gid in sorted(per_graph):
        graph = graphs[gid]
        members = sorted(per_graph[gid])
        sp = _pairwise_sp(graph, members)

        def diameter(group: tuple) -> float:
            if len(group) == 1:
                return 0
            return max(sp[(x, y)] for i, x in enumerate(group)
                       for y in group[i + 1:])

        def make_candidate(group: tuple):
            qset = set()
            for nid in group:
                qset |= coverage.get((gid, nid), set())
            d = diameter(group)
            gamma = len(qset) + 1.0 / max(1, d)
            candidates.append(CandidateGroup(gid, group, len(qset), int(d), gamma))

        groups = [(nid,) for nid in members]
        for g in groups:
            make_candidate(g)
        while len(groups) > 1:
            best = None
            for i in range(len(groups)):
                for j in range(i + 1, len(groups)):
                    d = max(sp[(x, y)] for x in groups[i] for y in groups[j])
                    merged = tuple(sorted(groups[i] + groups[j]))
                    key = (d, merged)
                    if d != math.inf and (best is None or key < best[0]):
                        best = (key, i, j, merged)
            if best is None:
                break  # remaining groups are mutually unreachable
            _, i, j, merged = best
            groups = [g for idx, g in enumerate(groups) if idx not in (i, j)]
            groups.append(merged)
            make_candidate(merged)
    return candidates


def score_group(group: CandidateGroup) -> float:
    return group.qc + 1.0 / max(1, group.diameter)


def emit_fragments(groups: list[CandidateGroup], graphs: dict,
                   query_id: str = "", parameters: dict = None,
                   gap_lines: int = 2) -> SearchResult:
    """Merge member locations into per-file line spans and rank groups."""
    for grp in groups:
        graph = graphs[grp.graph_id]
        locs = []
        for nid in grp.members:
            node = graph.node(nid)
            if node.kind in ("entry", "exit"):
                continue
            locs.append((node.file, node.line_start, node.line_end))
        locs.sort()
        spans = []
        for file, start, end in locs:
            if spans and spans[-1][0] == file and start - spans[-1][2] - 1 <= gap_lines:
                prev = spans[-1]
                spans[-1] = (file, prev[1], max(prev[2], end))
            else:
                spans.append((file, start, end))
        grp.fragments = spans
    ranked = sorted(groups, key=lambda g: (
        -g.gamma, -g.qc, len(g.members), g.graph_id,
        min(g.members) if g.members else 0))
    return SearchResult(query_id, ranked, parameters or {})


def search(query_program: plang.PProgram, index: VectorIndex,
           model: gae.GaeModel, encoder, corpus_graphs: dict,
           k: int = 100, query_id: str = "query",
           gap_lines: int = 2) -> SearchResult:
    """End-to-end query: embed the query graph, retrieve, group, score, rank."""
    if index.config_hash != model.config_hash:
        raise ConfigMismatch(
            f"index hash {index.config_hash!r} != model hash {model.config_hash!r}")
    qgraph = icfg.build_pcode_icfg(query_program, graph_id=query_id)
    x = featenc.build_feature_matrix(qgraph, encoder)
    final = gae.embed(model, [(qgraph, x)])[0]
    matches: list[Match] = []
    for row, qnid in enumerate(qgraph.node_ids()):
        if qgraph.node(qnid).kind in ("entry", "exit"):
            continue
        for entry, sim in top_k(index, final[row], k):
            matches.append(Match(qnid, entry.graph_id, entry.node_id, sim))
    groups = group_nodes(matches, corpus_graphs)
    return emit_fragments(
        groups, corpus_graphs, query_id=query_id,
        parameters={"k": k, "gap_lines": gap_lines,
                    "config_hash": model.config_hash},
        gap_lines=gap_lines)


# --- persistence -------------------------------------------------------

def save_index(index: VectorIndex, path: str):
    payload = {
        "version": 1,
        "dim": index.dim,
        "config_hash": index.config_hash,
        "entries": [
            {"graph_id": e.graph_id, "node_id": e.node_id,
             "vec": e.vec.tolist(), "file": e.file,
             "line_start": e.line_start, "line_end": e.line_end}
            for e in index.entries
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_index(path: str) -> VectorIndex:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    entries = [IndexEntry(e["graph_id"], int(e["node_id"]),
                          np.asarray(e["vec"], dtype=np.float64),
                          e["file"], int(e["line_start"]), int(e["line_end"]))
               for e in payload["entries"]]
    return VectorIndex(int(payload["dim"]), payload["config_hash"], entries)


def result_to_json(result: SearchResult) -> list[dict]:
    return [
        {"rank": rank, "gamma": g.gamma, "qc": g.qc, "distance": g.diameter,
         "graph_id": g.graph_id,
         "fragments": [{"file": f, "line_start": a, "line_end": b}
                       for f, a, b in g.fragments]}
        for rank, g in enumerate(result.groups, start=1)
    ]
