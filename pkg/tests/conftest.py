import os

import numpy as np
import pytest

from algoseek import plang

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

# the AST node is named TestLeaf; keep pytest from trying to collect it
plang.TestLeaf.__test__ = False


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def random_expr(rng):
    if rng.random() < 0.5:
        return plang.MathExpr(_raw_text(rng))
    return plang.NlExpr(_raw_text(rng))


def _raw_text(rng):
    words = ["x", "y + 1", "a[i]", "total", "count < n", "the head of the list",
             "dist[v] = dist[u] + w", "left <= right", "swap them"]
    return str(rng.choice(words))


def random_test(rng, depth=0):
    # mirror the grammar shape so pretty-printed text reparses identically:
    # or_test := and_test ('or' and_test)*  (left-assoc)
    t = _and_chain(rng, depth)
    while depth < 2 and rng.random() < 0.25:
        t = plang.OrTest(t, _and_chain(rng, depth + 1))
    return t


def _and_chain(rng, depth):
    t = _not_test(rng)
    while depth < 2 and rng.random() < 0.25:
        t = plang.AndTest(t, _not_test(rng))
    return t


def _not_test(rng):
    # 'not' only wraps another not_test, never an and/or chain
    if rng.random() < 0.25:
        return plang.NotTest(_not_test(rng))
    return plang.TestLeaf(random_expr(rng))


def random_stmt(rng, depth=0, last=False):
    kinds = ["expr", "call"]
    # a return statement can swallow a following expression or call, so the
    # generator only emits one in final position where no ambiguity exists
    if last:
        kinds.append("return")
    if depth < 2:
        kinds += ["if", "while", "for", "repeat"]
    kind = rng.choice(kinds)
    if kind == "expr":
        return plang.ExprStmt(random_expr(rng))
    if kind == "call":
        n_args = int(rng.integers(0, 3))
        args = tuple(
            f"arg{k}" if rng.random() < 0.5 else random_expr(rng)
            for k in range(n_args))
        return plang.CallStmt(f"helper{int(rng.integers(0, 3))}", args)
    if kind == "return":
        roll = rng.random()
        if roll < 0.3:
            return plang.ReturnStmt(None)
        if roll < 0.6:
            return plang.ReturnStmt(plang.CallStmt("callee", ()))
        return plang.ReturnStmt(random_expr(rng))
    if kind == "if":
        elifs = tuple((random_test(rng), random_body(rng, depth + 1))
                      for _ in range(int(rng.integers(0, 2))))
        orelse = random_body(rng, depth + 1) if rng.random() < 0.5 else None
        return plang.IfStmt(random_test(rng), random_body(rng, depth + 1),
                            elifs, orelse)
    if kind == "while":
        return plang.WhileStmt(random_test(rng), random_body(rng, depth + 1))
    if kind == "for":
        if rng.random() < 0.4:
            return plang.ForStmt(random_expr(rng), each=True,
                                 body=random_body(rng, depth + 1))
        direction = str(rng.choice(["to", "downto"]))
        return plang.ForStmt(random_expr(rng), random_expr(rng), direction,
                             False, random_body(rng, depth + 1))
    return plang.RepeatStmt(random_body(rng, depth + 1), random_test(rng))


def random_body(rng, depth=0):
    n = int(rng.integers(1, 4))
    return tuple(random_stmt(rng, depth, last=(k == n - 1)) for k in range(n))


def random_program(rng):
    n_fns = int(rng.integers(1, 4))
    fns = []
    for k in range(n_fns):
        n_params = int(rng.integers(0, 3))
        params = tuple(
            f"p{j}" if rng.random() < 0.7 else random_expr(rng)
            for j in range(n_params))
        fns.append(plang.PFunction(f"FN_{k}", params, random_body(rng)))
    return plang.PProgram(tuple(fns))


def make_rng(seed):
    return np.random.default_rng(seed)
