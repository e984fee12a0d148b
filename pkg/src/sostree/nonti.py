"""Non-translation-invariant fields built from a pair of infinite paths.

A parameter t in [0, (k+1)/k] encodes an infinite path from the origin by a
digit expansion; two such paths (sorted, t <= s) split the tree into a left,
a middle and a right component.  A field is built on a finite ball by
prescribing the three extreme constant laws on the outermost sphere according
to the component of each sphere vertex, then recursing inward, so the
consistency equation holds exactly at every interior vertex and the root law
stabilises as the depth grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ti
from .boundary import BoundaryLawField, law_map
from .model import ModelParams
from .tree import Word, direct_successors, vertex_addresses


@dataclass(frozen=True)
class PathParam:
    """Digit expansion of a path parameter."""

    t: float
    digits: tuple[int, ...]


def path_from_parameter(t: float, k: int, depth: int) -> PathParam:
    """Deterministic digit expansion of t in [0, (k+1)/k].

    The unit-interval image u = t*k/(k+1) fixes the first digit among the
    origin's k+1 successors; the remainder expands base k.  The expansion is
    monotone (lexicographically) in t and hits both endpoint paths exactly.
    """
    hi = (k + 1) / k
    if not 0.0 <= t <= hi:
        raise ValueError(f"path parameter {t} outside [0, {hi}]")
    u = t * k / (k + 1)
    first = min(int(math.floor(u * (k + 1))), k)
    r = u * (k + 1) - first
    digits = [first]
    for _ in range(depth - 1):
        d = min(int(math.floor(r * k)), k - 1)
        digits.append(d)
        r = r * k - d
    return PathParam(t=t, digits=tuple(digits[:depth]))


def _compare(addr: tuple[int, ...], path: tuple[int, ...]) -> int:
    """-1 / 0 / +1 for an address left of / on / right of a path prefix."""
    for a, p in zip(addr, path):
        if a < p:
            return -1
        if a > p:
            return 1
    return 0


def split_components(path1: PathParam, path2: PathParam, k: int,
                     depth: int) -> dict[Word, int]:
    """Component label (1, 2 or 3) for every ball vertex.

    Vertices strictly left of the lower path get 1, strictly right of the
    upper path get 3, strictly between get 2.  Vertices on one path only join
    its outer component (1 for the lower, 3 for the upper).  Vertices on both
    paths follow the right side, unless nothing in the ball lies strictly
    right of the upper path (then the left side); this keeps the two extreme
    parameter choices exactly constant.
    """
    if path1.digits[:depth] > path2.digits[:depth]:
        raise ValueError("paths must be ordered: lower path first")
    addressed = vertex_addresses(k, depth)
    cmp1 = {w: _compare(addr, path1.digits) for w, addr in addressed}
    cmp2 = {w: _compare(addr, path2.digits) for w, addr in addressed}
    any_right = any(c > 0 for c in cmp2.values())
    comp: dict[Word, int] = {}
    for w, _ in addressed:
        c1, c2 = cmp1[w], cmp2[w]
        if c2 > 0:
            comp[w] = 3
        elif c1 < 0:
            comp[w] = 1
        elif c1 == 0 and c2 == 0:
            comp[w] = 3 if any_right else 1
        elif c2 == 0:
            comp[w] = 3
        elif c1 == 0:
            comp[w] = 1
        else:
            comp[w] = 2
    return comp


@dataclass
class NonTiField:
    """Path-pair field on a ball, with the component of every vertex."""

    depth: int
    t: float
    s: float
    field: BoundaryLawField
    components: dict[Word, int]

    def to_json_dict(self) -> dict:
        data = self.field.to_json_dict()
        data["t"] = self.t
        data["s"] = self.s
        data["component_map"] = {str(w): c for w, c in sorted(
            self.components.items(), key=lambda kv: (len(kv[0]), kv[0].letters))}
        return data


def extreme_laws(params: ModelParams) -> dict[int, np.ndarray]:
    """Component -> constant law: 1 -> low root, 2 -> middle, 3 -> high."""
    roots = ti.solve_symmetric_roots(params)
    if len(roots) != 3:
        raise ValueError(
            "path-pair fields need three symmetric solutions "
            "(negative coupling above the threshold)")
    z_minus, z_mid, z_plus = roots
    return {
        1: np.array([0.0, math.log(z_minus)]),
        2: np.array([0.0, math.log(z_mid)]),
        3: np.array([0.0, math.log(z_plus)]),
    }


def build_field(t: float, s: float, params: ModelParams, depth: int) -> NonTiField:
    """Field with sphere laws prescribed by the path-pair split, recursed inward.

    The consistency equation holds exactly (to the last bit) at interior
    vertices because they are filled from their successors; the prescription
    itself is only attained in the deep-ball limit, which root_convergence
    quantifies.
    """
    if t > s:
        raise ValueError("need t <= s")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    k = params.k
    p1 = path_from_parameter(t, k, depth)
    p2 = path_from_parameter(s, k, depth)
    comp = split_components(p1, p2, k, depth)
    laws_by_comp = extreme_laws(params)

    levels: list[list[Word]] = [[] for _ in range(depth + 1)]
    for w in comp:
        levels[len(w)].append(w)

    laws: dict[Word, np.ndarray] = {}
    for w in levels[depth]:
        laws[w] = laws_by_comp[comp[w]].copy()
    root = None
    for d in range(depth - 1, -1, -1):
        words = levels[d]
        children = np.stack([
            np.stack([laws[y] for y in direct_successors(w, k)]) for w in words])
        sums = law_map(children, params.m, params.theta).sum(axis=1)
        for w, h in zip(words, sums):
            if w.letters:
                laws[w] = h
            else:
                root = h
    fld = BoundaryLawField(depth=depth, laws=laws, root=root)
    return NonTiField(depth=depth, t=t, s=s, field=fld, components=comp)


@dataclass
class ConvergenceReport:
    """Root-law stabilisation across depths."""

    depths: list[int]
    root_laws: list[np.ndarray]
    differences: list[float]      # max-norm gaps between consecutive root laws
    rates: list[float]            # ratios of consecutive differences
    cauchy: bool                  # differences monotonically nonincreasing

    def to_json_dict(self) -> dict:
        return {"depths": self.depths,
                "root_laws": [[float(v) for v in h] for h in self.root_laws],
                "differences": self.differences,
                "rates": self.rates,
                "cauchy": self.cauchy}


def root_convergence(t: float, s: float, params: ModelParams,
                     depths: list[int]) -> ConvergenceReport:
    """Build the field at each depth and track the root law."""
    depths = sorted(depths)
    root_laws = [build_field(t, s, params, d).field.root for d in depths]
    diffs = [float(np.max(np.abs(b - a))) for a, b in zip(root_laws, root_laws[1:])]
    rates = [b / a for a, b in zip(diffs, diffs[1:]) if a > 0]
    cauchy = all(b <= a for a, b in zip(diffs, diffs[1:]))
    return ConvergenceReport(depths=depths, root_laws=root_laws,
                             differences=diffs, rates=rates, cauchy=cauchy)


def field_distance(a: NonTiField, b: NonTiField) -> float:
    """Max-norm distance over the common ball (root included)."""
    shared = set(a.field.laws) & set(b.field.laws)
    worst = float(np.max(np.abs(a.field.root - b.field.root)))
    for w in shared:
        worst = max(worst, float(np.max(np.abs(a.field.laws[w] - b.field.laws[w]))))
    return worst


def distinctness_check(pairs: list[tuple[float, float]], params: ModelParams,
                       depth: int) -> np.ndarray:
    """Pairwise max-norm distances of the fields built for each (t, s) pair."""
    fields = [build_field(t, s, params, depth) for t, s in pairs]
    n = len(fields)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = field_distance(fields[i], fields[j])
    return out
