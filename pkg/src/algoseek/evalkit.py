"""Ground-truth handling and retrieval metrics (first-hit rank, MRR)."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import DataError

DEFAULT_CUTOFF = 100


class EmptyList(DataError):
    pass


@dataclass(frozen=True)
class Target:
    project: str
    file: str = None
    line_start: int = None
    line_end: int = None
    function: str = None


@dataclass
class GroundTruth:
    query_id: str
    targets: list

    def __post_init__(self):
        if not self.targets:
            raise DataError(f"query {self.query_id!r} has no targets")


@dataclass
class MetricReport:
    cutoff: int
    per_query: dict = field(default_factory=dict)  # query_id -> rank or None
    mrr: float = 0.0


def read_ground_truth_tsv(path: str) -> dict[str, GroundTruth]:
    """Rows: query<TAB>project<TAB>file<TAB>start<TAB>end
    or     query<TAB>project<TAB>@function_name"""
    grouped: dict[str, list] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) == 3 and cols[2].startswith("@"):
                target = Target(cols[1], function=cols[2][1:])
            elif len(cols) == 5:
                target = Target(cols[1], file=cols[2],
                                line_start=int(cols[3]), line_end=int(cols[4]))
            else:
                raise DataError(f"{path}:{lineno}: bad ground truth row")
            grouped.setdefault(cols[0], []).append(target)
    return {qid: GroundTruth(qid, targets) for qid, targets in grouped.items()}


def _same_file(fragment_file: str, target_file: str) -> bool:
    frag = os.path.normpath(fragment_file)
    tgt = os.path.normpath(target_file)
    return frag == tgt or frag.endswith(os.sep + tgt) or tgt.endswith(os.sep + frag)


def is_hit(fragment: tuple, target: Target, function_spans: dict = None) -> bool:
    """fragment: (file, line_start, line_end). Hit on >=1 line of overlap,
    or containment in the named function's span."""
    file, start, end = fragment
    if target.file is not None:
        return _same_file(file, target.file) and \
            start <= target.line_end and end >= target.line_start
    if target.function is not None and function_spans:
        span = function_spans.get(target.function)
        if span is None:
            return False
        sfile, sstart, send = span
        return _same_file(file, sfile) and start >= sstart and end <= send
    return False


def function_spans_from_graphs(graphs) -> dict[str, tuple]:
    """function name -> (file, line_start, line_end) from corpus graphs."""
    spans: dict[str, tuple] = {}
    for g in graphs:
        for node in g.nodes:
            if not node.function or node.line_start < 1:
                continue
            cur = spans.get(node.function)
            if cur is None:
                spans[node.function] = (node.file, node.line_start, node.line_end)
            elif cur[0] == node.file:
                spans[node.function] = (cur[0], min(cur[1], node.line_start),
                                        max(cur[2], node.line_end))
    return spans


def f_rank(result, truth: GroundTruth, cutoff: int = DEFAULT_CUTOFF,
           function_spans: dict = None):
    """1-based rank of the first hitting group; None when no hit in cutoff."""
    for rank, group in enumerate(result.groups[:cutoff], start=1):
        for fragment in group.fragments:
            if any(is_hit(fragment, t, function_spans) for t in truth.targets):
                return rank
    return None


def mrr(f_ranks: list) -> float:
    """Mean reciprocal rank; a missing hit (None) contributes 0."""
    if not f_ranks:
        raise EmptyList("mrr of no queries")
    return sum(0.0 if r is None else 1.0 / r for r in f_ranks) / len(f_ranks)


def mean_f_rank(f_ranks: list) -> float:
    """Mean over hits only; sentinels are excluded (report them separately)."""
    hits = [r for r in f_ranks if r is not None]
    if not hits:
        raise EmptyList("mean_f_rank with no hits")
    return sum(hits) / len(hits)


def build_report(per_query: dict, cutoff: int = DEFAULT_CUTOFF) -> MetricReport:
    return MetricReport(cutoff=cutoff, per_query=dict(per_query),
                        mrr=mrr(list(per_query.values())))


def format_rank(rank, cutoff: int = DEFAULT_CUTOFF) -> str:
    return f">{cutoff}" if rank is None else str(rank)


def report_to_json(report: MetricReport) -> dict:
    return {
        "cutoff": report.cutoff,
        "mrr": report.mrr,
        "per_query": {qid: (None if r is None else r)
                      for qid, r in sorted(report.per_query.items())},
    }


def report_to_table(report: MetricReport) -> str:
    rows = [("query", "f_rank")]
    rows += [(qid, format_rank(r, report.cutoff))
             for qid, r in sorted(report.per_query.items())]
    rows.append(("MRR", f"{report.mrr:.4f}"))
    width = max(len(r[0]) for r in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def write_report(report: MetricReport, json_path: str, table_path: str):
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report_to_json(report), fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write(report_to_table(report) + "\n")
