"""Genetic-programming symbolic regression with a (complexity, R^2) Pareto archive.

Expressions are nested tuples:

    ("const", value) | ("var", name) | (op, child) | (op, left, right)

Binary ops: add sub mul div. Unary ops: cos sin exp log erf erfc step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

BINARY = ("add", "sub", "mul", "div")
UNARY = ("cos", "sin", "exp", "log", "erf", "erfc", "step")
WEIGHTS = {"const": 1, "var": 1, "add": 1, "sub": 1, "mul": 2, "div": 2}
WEIGHTS.update({op: 4 for op in UNARY})
SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def _step(x):
    return (x > 0).astype(float)


UNARY_FN = {
    "cos": np.cos,
    "sin": np.sin,
    "exp": np.exp,
    "log": np.log,
    "erf": special.erf,
    "erfc": special.erfc,
    "step": _step,
}


def evaluate(tree, cols: dict) -> np.ndarray:
    """Evaluate ``tree`` over a mapping of column name -> array. May return non-finite values."""
    op = tree[0]
    if op == "const":
        n = len(next(iter(cols.values())))
        return np.full(n, float(tree[1]))
    if op == "var":
        return np.asarray(cols[tree[1]], dtype=float)
    with np.errstate(all="ignore"):
        if op in UNARY_FN:
            return UNARY_FN[op](evaluate(tree[1], cols))
        a = evaluate(tree[1], cols)
        b = evaluate(tree[2], cols)
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        if op == "div":
            return a / b
    raise ValueError(f"unknown operator {op!r}")


def complexity(tree) -> int:
    return WEIGHTS[tree[0]] + sum(complexity(ch) for ch in tree[1:] if isinstance(ch, tuple))


def size(tree) -> int:
    return 1 + sum(size(ch) for ch in tree[1:] if isinstance(ch, tuple))


def depth(tree) -> int:
    kids = [ch for ch in tree[1:] if isinstance(ch, tuple)]
    return 1 + (max(depth(ch) for ch in kids) if kids else 0)


def _fmt_const(v: float) -> str:
    return f"{v:.6g}"


def infix(tree) -> str:
    op = tree[0]
    if op == "const":
        v = float(tree[1])
        return _fmt_const(v) if v >= 0 else f"({_fmt_const(v)})"
    if op == "var":
        return str(tree[1])
    if op in UNARY:
        return f"{op}({infix(tree[1])})"
    return f"({infix(tree[1])} {SYMBOLS[op]} {infix(tree[2])})"


def variables(tree) -> set:
    if tree[0] == "var":
        return {tree[1]}
    if tree[0] == "const":
        return set()
    return set().union(*(variables(ch) for ch in tree[1:]))


def r_squared(y, yhat) -> float:
    """Coefficient of determination 1 - SS_res / SS_tot."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.size < 2:
        raise ValueError("r_squared needs equal-length vectors with at least two entries")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        raise ValueError("r_squared undefined for constant y")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


@dataclass(frozen=True)
class Formula:
    tree: tuple
    complexity: int
    r2: float

    @classmethod
    def fit(cls, tree, cols: dict, y: np.ndarray) -> "Formula":
        pred = evaluate(tree, cols)
        with np.errstate(all="ignore"):
            r2 = r_squared(y, pred) if np.all(np.isfinite(pred)) else -math.inf
        if not math.isfinite(r2):
            r2 = -math.inf
        return cls(tree=tree, complexity=complexity(tree), r2=r2)

    @property
    def expression(self) -> str:
        return infix(self.tree)

    def predict(self, cols: dict) -> np.ndarray:
        return evaluate(self.tree, cols)

    def to_dict(self) -> dict:
        return {"formula": self.expression, "complexity": self.complexity, "r2": self.r2}


def dominates(a: Formula, b: Formula) -> bool:
    return (a.r2 >= b.r2 and a.complexity <= b.complexity) and (a.r2 > b.r2 or a.complexity < b.complexity)


def pareto_filter(candidates) -> list[Formula]:
    """Non-dominated subset ordered by complexity; equal (C, R^2) pairs collapse to the first seen."""
    seen = {}
    for f in candidates:
        if not math.isfinite(f.r2):
            continue
        seen.setdefault((f.complexity, f.r2), f)
    pool = list(seen.values())
    front = [f for f in pool if not any(dominates(g, f) for g in pool)]
    return sorted(front, key=lambda f: (f.complexity, -f.r2))


# --------------------------------------------------------------------------- search

@dataclass(frozen=True)
class SRConfig:
    population_size: int = 300
    generations: int = 60
    seed: int = 0
    tournament: int = 4
    p_crossover: float = 0.6
    p_subtree_mutation: float = 0.2
    p_point_mutation: float = 0.1
    p_constant_jitter: float = 0.1
    max_depth: int = 7
    max_size: int = 40
    parsimony: float = 1e-3
    unary_ops: tuple = UNARY
    binary_ops: tuple = BINARY
    polish_steps: int = 30


@dataclass
class _Search:
    cfg: SRConfig
    names: list
    cols: dict
    y: np.ndarray
    rng: np.random.Generator
    cache: dict = field(default_factory=dict)

    # ---- tree generation
    def terminal(self):
        if self.rng.random() < 0.5:
            return ("var", self.names[self.rng.integers(len(self.names))])
        return ("const", round(float(self.rng.uniform(-3, 3)), 3))

    def random_tree(self, max_depth: int, full: bool):
        if max_depth <= 1 or (not full and self.rng.random() < 0.3):
            return self.terminal()
        if self.rng.random() < 0.25:
            op = self.cfg.unary_ops[self.rng.integers(len(self.cfg.unary_ops))]
            return (op, self.random_tree(max_depth - 1, full))
        op = self.cfg.binary_ops[self.rng.integers(len(self.cfg.binary_ops))]
        return (op, self.random_tree(max_depth - 1, full), self.random_tree(max_depth - 1, full))

    # ---- subtree addressing
    def paths(self, tree, prefix=()):
        yield prefix
        for i, ch in enumerate(tree[1:], start=1):
            if isinstance(ch, tuple):
                yield from self.paths(ch, prefix + (i,))

    @staticmethod
    def get(tree, path):
        for i in path:
            tree = tree[i]
        return tree

    @classmethod
    def replace(cls, tree, path, sub):
        if not path:
            return sub
        i = path[0]
        return tree[:i] + (cls.replace(tree[i], path[1:], sub),) + tree[i + 1:]

    def random_path(self, tree):
        ps = list(self.paths(tree))
        return ps[self.rng.integers(len(ps))]

    # ---- variation
    def crossover(self, a, b):
        pa = self.random_path(a)
        pb = self.random_path(b)
        return self.replace(a, pa, self.get(b, pb))

    def subtree_mutation(self, a):
        return self.replace(a, self.random_path(a), self.random_tree(3, full=False))

    def point_mutation(self, a):
        p = self.random_path(a)
        node = self.get(a, p)
        op = node[0]
        if op in BINARY:
            new = (self.cfg.binary_ops[self.rng.integers(len(self.cfg.binary_ops))],) + node[1:]
        elif op in UNARY:
            new = (self.cfg.unary_ops[self.rng.integers(len(self.cfg.unary_ops))],) + node[1:]
        else:
            new = self.terminal()
        return self.replace(a, p, new)

    def jitter(self, a, scale: float = 0.1):
        consts = [p for p in self.paths(a) if self.get(a, p)[0] == "const"]
        if not consts:
            return a
        p = consts[self.rng.integers(len(consts))]
        v = self.get(a, p)[1]
        v = v + self.rng.normal(0.0, scale * max(1.0, abs(v)))
        return self.replace(a, p, ("const", float(v)))

    def valid(self, tree) -> bool:
        return depth(tree) <= self.cfg.max_depth and size(tree) <= self.cfg.max_size

    # ---- evaluation
    def score(self, tree) -> Formula:
        f = self.cache.get(tree)
        if f is None:
            f = Formula.fit(tree, self.cols, self.y)
            self.cache[tree] = f
        return f

    def scaled_variants(self, tree) -> list[Formula]:
        """The raw tree plus least-squares offset/scale wrappers around it."""
        out = [self.score(tree)]
        raw = evaluate(tree, self.cols)
        if not np.all(np.isfinite(raw)) or np.max(np.abs(raw)) > 1e100:
            return out
        y = self.y
        var = float(np.var(raw))
        shift = float(np.mean(y - raw))
        out.append(self.score(("add", ("const", shift), tree)))
        if var > 1e-12:
            scale0 = float(raw @ y / (raw @ raw))
            out.append(self.score(("mul", ("const", scale0), tree)))
            b = float(np.mean((raw - raw.mean()) * (y - y.mean())) / var)
            a = float(y.mean() - b * raw.mean())
            out.append(self.score(("add", ("const", a), ("mul", ("const", b), tree))))
        return out

    def polish(self, f: Formula) -> Formula:
        """Greedy Gaussian hill-climbing on the constants of one formula."""
        best = f
        for _ in range(self.cfg.polish_steps):
            cand = self.score(self.jitter(best.tree, scale=0.05))
            if cand.r2 > best.r2 and cand.complexity <= best.complexity:
                best = cand
        return best

    def fitness(self, f: Formula) -> float:
        return f.r2 - self.cfg.parsimony * f.complexity if math.isfinite(f.r2) else -1e18


def sr_search(cols: dict, y, cfg: SRConfig = SRConfig(), variables: list | None = None,
              on_generation: Callable | None = None) -> list[Formula]:
    """Search for formulas predicting ``y`` from ``cols``; returns the Pareto front.

    Deterministic for a given ``cfg.seed``. ``on_generation(gen, front)`` is
    called after each generation with the current archive.
    """
    y = np.asarray(y, dtype=float)
    names = list(variables) if variables is not None else list(cols)
    cols = {k: np.asarray(cols[k], dtype=float) for k in names}
    if y.size < 10:
        raise ValueError("symbolic regression needs at least 10 rows")
    if np.ptp(y) == 0:
        raise ValueError("target is constant")
    s = _Search(cfg=cfg, names=names, cols=cols, y=y, rng=np.random.default_rng(cfg.seed))

    pop = []
    for i in range(cfg.population_size):
        d = 2 + i % max(1, cfg.max_depth - 2)
        pop.append(s.random_tree(min(d, 4), full=bool(i % 2)))
    archive: list[Formula] = []

    for gen in range(cfg.generations):
        scored = [s.score(t) for t in pop]
        cands = list(archive)
        for t in pop:
            cands.extend(s.scaled_variants(t))
        archive = pareto_filter(cands)
        archive = pareto_filter(archive + [s.polish(f) for f in archive])
        if on_generation is not None:
            on_generation(gen, list(archive))
        if gen == cfg.generations - 1:
            break

        fit = np.array([s.fitness(f) for f in scored])
        elites = [f.tree for f in archive]
        nxt = list(elites[: cfg.population_size // 5])
        while len(nxt) < cfg.population_size:
            contenders = s.rng.integers(len(pop), size=cfg.tournament)
            parent = pop[int(contenders[np.argmax(fit[contenders])])]
            r = s.rng.random()
            if r < cfg.p_crossover:
                donor_pool = elites if (elites and s.rng.random() < 0.3) else pop
                other = donor_pool[s.rng.integers(len(donor_pool))]
                child = s.crossover(parent, other)
            elif r < cfg.p_crossover + cfg.p_subtree_mutation:
                child = s.subtree_mutation(parent)
            elif r < cfg.p_crossover + cfg.p_subtree_mutation + cfg.p_point_mutation:
                child = s.point_mutation(parent)
            else:
                child = s.jitter(parent)
            nxt.append(child if s.valid(child) else parent)
        pop = nxt
    return archive
