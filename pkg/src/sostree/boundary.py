"""Boundary-law recursion on the tree.

A boundary law assigns to each non-root vertex a reduced real vector h of
length m (the last component of the unreduced vector is gauged to zero, so
the unreduced single-site weights are exp(h_0), ..., exp(h_{m-1}), 1).  A law
family is consistent exactly when every non-root vertex satisfies

    h_x = sum over direct successors y of law_map(h_y, m, theta),

where law_map is the per-child update

    law_map(h)_i = ln[ (sum_j theta^|i-j| e^{h_j} + theta^{m-i})
                     / (sum_j theta^{m-j} e^{h_j} + 1) ].

Everything here is evaluated in log space.  The exponent terms are sorted
before each log-sum-exp so that identical term multisets produce bit-identical
sums; this keeps component 0 of the m=2 update exactly zero on the symmetric
slice h_0 = 0, and it is what lets downstream constructions preserve that
slice exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams
from .tree import Word, cached_ball, direct_successors


def _sorted_lse(terms: np.ndarray, axis: int = -1) -> np.ndarray:
    t = np.sort(terms, axis=axis)
    hi = np.max(t, axis=axis, keepdims=True)
    return np.squeeze(hi, axis=axis) + np.log(np.sum(np.exp(t - hi), axis=axis))


def pair_exponents(unreduced: np.ndarray, theta: float) -> np.ndarray:
    """Exponent table E[..., i, j] = h_j + |i-j| ln(theta) over the full spin set.

    `unreduced` carries the m+1 unreduced components (last one zero for a
    reduced law).  Row i of E is the log-weight vector for a child beneath a
    parent with spin i; it drives the recursion, the transfer messages and
    the sampling kernels alike.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    n = unreduced.shape[-1]
    lt = np.log(theta)
    i = np.arange(n)
    gaps = np.abs(i[:, None] - i[None, :]).astype(float)
    return unreduced[..., None, :] + lt * gaps


def log_messages(unreduced: np.ndarray, theta: float) -> np.ndarray:
    """Per-parent-spin log message ln sum_j theta^|i-j| e^{h_j}, i = 0..m."""
    return _sorted_lse(pair_exponents(unreduced, theta), axis=-1)


def unreduce(h: np.ndarray) -> np.ndarray:
    """Append the gauged zero component."""
    h = np.asarray(h, dtype=float)
    return np.concatenate([h, np.zeros(h.shape[:-1] + (1,))], axis=-1)


def law_map(h: np.ndarray, m: int, theta: float) -> np.ndarray:
    """One-child update of the boundary-law recursion (vectorised over h).

    Accepts shape (..., m) and returns the same shape: component i is the log
    of the i-th message ratio against the last spin level.
    """
    h = np.asarray(h, dtype=float)
    if h.shape[-1] != m:
        raise ValueError(f"law must have {m} reduced components")
    s = log_messages(unreduce(h), theta)
    return s[..., :m] - s[..., m:]


def law_map_jac(h: np.ndarray, theta: float) -> np.ndarray:
    """Analytic Jacobian of the m=2 update, shape (..., 2, 2)."""
    h = np.asarray(h, dtype=float)
    e0, e1 = np.exp(h[..., 0]), np.exp(h[..., 1])
    t = theta
    n0 = e0 + t * e1 + t * t
    n1 = t * e0 + e1 + t
    d = t * t * e0 + t * e1 + 1.0
    jac = np.empty(h.shape[:-1] + (2, 2))
    jac[..., 0, 0] = e0 * (1 - t * t) * (t * e1 + t * t + 1) / (n0 * d)
    jac[..., 0, 1] = t * e1 * (t * t - 1) * (e0 - 1) / (n0 * d)
    jac[..., 1, 0] = t * e0 * (1 - t * t) / (n1 * d)
    jac[..., 1, 1] = e1 * (1 - t * t) / (n1 * d)
    return jac


@dataclass
class BoundaryLawField:
    """Reduced laws for every non-root vertex of a ball, plus a root law.

    The consistency equation defines laws away from the origin only; the root
    law is fixed by the convention root = sum of law_map over all k+1 origin
    successors, which is the unique choice making the depth-0 marginal agree
    with the depth-1 measure.  Builders fill it in; it is stored (not
    recomputed) so that deliberate perturbations are visible to the oracles.
    """

    depth: int
    laws: dict[Word, np.ndarray]
    root: np.ndarray | None = None

    def law(self, w: Word) -> np.ndarray:
        if not w.letters:
            if self.root is None:
                raise KeyError("field has no root law")
            return self.root
        return self.laws[w]

    def to_json_dict(self) -> dict:
        entries = [{"vertex": str(w), "h": [float(v) for v in law]}
                   for w, law in sorted(self.laws.items(), key=lambda kv: (len(kv[0]), kv[0].letters))]
        if self.root is not None:
            entries.insert(0, {"vertex": "e", "h": [float(v) for v in self.root]})
        return {"depth": self.depth, "entries": entries}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def from_json_dict(data: dict) -> "BoundaryLawField":
        laws: dict[Word, np.ndarray] = {}
        root = None
        for entry in data["entries"]:
            w = Word.parse(entry["vertex"])
            h = np.asarray(entry["h"], dtype=float)
            if w.letters:
                laws[w] = h
            else:
                root = h
        return BoundaryLawField(depth=int(data["depth"]), laws=laws, root=root)

    @staticmethod
    def from_json(text: str) -> "BoundaryLawField":
        return BoundaryLawField.from_json_dict(json.loads(text))


def constant_field(h: np.ndarray, params: ModelParams, depth: int) -> BoundaryLawField:
    """Field equal to h at every non-root vertex (root set by the convention)."""
    h = np.asarray(h, dtype=float)
    laws = {w: h.copy() for w in cached_ball(params.k, depth) if w.letters}
    root = (params.k + 1) * law_map(h, params.m, params.theta)
    return BoundaryLawField(depth=depth, laws=laws, root=root)


def perturb_field(fld: BoundaryLawField, eps: float, component: int = -1) -> BoundaryLawField:
    """Shift one component of every stored law (negative-control helper)."""
    laws = {}
    for w, h in fld.laws.items():
        h2 = h.copy()
        h2[component] += eps
        laws[w] = h2
    root = None
    if fld.root is not None:
        root = fld.root.copy()
        root[component] += eps
    return BoundaryLawField(depth=fld.depth, laws=laws, root=root)


def flip_field(fld: BoundaryLawField, m: int) -> BoundaryLawField:
    """Image of the field under the global spin flip j -> m-j.

    In unreduced weights the flip reverses the component order; re-gauging to
    a zero last component gives h'_i = h_{m-i} - h_0 (with h_m = 0).
    """

    def flip(h: np.ndarray) -> np.ndarray:
        u = unreduce(h)[..., ::-1]
        return (u - u[..., -1:])[..., :m]

    laws = {w: flip(h) for w, h in fld.laws.items()}
    root = flip(fld.root) if fld.root is not None else None
    return BoundaryLawField(depth=fld.depth, laws=laws, root=root)


def compatibility_residual(fld: BoundaryLawField, params: ModelParams) -> float:
    """Max-norm defect of the consistency equation at the checkable vertices.

    A field on the depth-n ball determines the equation at every non-root
    vertex of the depth-(n-1) ball; the returned value is the worst max-norm
    gap between a stored law and the successor-sum of updates.
    """
    worst = 0.0
    for w in cached_ball(params.k, fld.depth - 1):
        if not w.letters:
            continue
        if w not in fld.laws:
            raise KeyError(f"field missing vertex {w}")
        try:
            children = np.stack([fld.laws[y] for y in direct_successors(w, params.k)])
        except KeyError as missing:
            raise KeyError(f"field missing vertex {missing.args[0]}") from None
        total = law_map(children, params.m, params.theta).sum(axis=0)
        worst = max(worst, float(np.max(np.abs(fld.laws[w] - total))))
    return worst


def injectivity_check(h, l, theta: float, tol: float = 1e-10, tol_out: float = 1e-6) -> bool:
    """Numerical form of injectivity of the m=2 update away from theta = 1.

    Returns whether "update images within `tol` implies arguments within
    `tol_out`" holds for this pair; h = l is always accepted.
    """
    if theta == 1.0:
        raise ValueError("theta = 1 is excluded: the update is constant there")
    h = np.asarray(h, dtype=float)
    l = np.asarray(l, dtype=float)
    df = float(np.max(np.abs(law_map(h, 2, theta) - law_map(l, 2, theta))))
    if df > tol:
        return True
    return float(np.max(np.abs(h - l))) <= tol_out


def slice_contraction_constant(theta: float) -> float:
    """Sharp Lipschitz constant of the m=2 update along the slice h = (0, h1)."""
    t2 = theta * theta
    return abs(t2 - 1.0) / (1.0 + 3.0 * t2 + 2.0 * theta * np.sqrt(2.0 * (t2 + 1.0)))


@dataclass
class BoundsReport:
    """Outcome of the sampled derivative / Lipschitz checks (m = 2)."""

    theta: float
    samples: int
    bound_partial: float          # ceiling for each |dF_i/dh_j|
    bound_pair: float             # ceiling for max-norm ratios of arbitrary pairs
    bound_slice: float            # ceiling for ratios of slice pairs (0, h1)
    bound_first: float            # ceiling for |F_0(h)| / |h_0|
    violations: dict = field(default_factory=dict)
    worst: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(v == 0 for v in self.violations.values())


def derivative_bounds(theta: float, sample_count: int, seed: int = 0,
                      step: float = 1e-5, tol: float = 1e-6) -> BoundsReport:
    """Sampled verification of the m=2 derivative and Lipschitz ceilings.

    Draws `sample_count` points (and pairs) from [-10, 10]^2, estimates the
    four partials by central differences with the given step, and counts
    violations of each ceiling beyond `tol`.
    """
    rng = np.random.default_rng(seed)
    t2 = theta * theta
    c_partial = abs(t2 - 1.0) / t2
    c_pair = 2.0 * c_partial
    c_slice = slice_contraction_constant(theta)
    c_first = abs(t2 - 1.0) / (t2 + 1.0)

    h = rng.uniform(-10.0, 10.0, size=(sample_count, 2))
    l = rng.uniform(-10.0, 10.0, size=(sample_count, 2))

    worst: dict[str, float] = {}
    violations: dict[str, int] = {}

    # (a) partial derivatives by central differences
    max_partial = 0.0
    for j in (0, 1):
        dh = np.zeros((1, 2))
        dh[0, j] = step
        diff = (law_map(h + dh, 2, theta) - law_map(h - dh, 2, theta)) / (2 * step)
        max_partial = max(max_partial, float(np.max(np.abs(diff))))
    worst["partial"] = max_partial
    violations["partial"] = int(max_partial > c_partial + tol)

    # (b) pair ratios in the max norm
    num = np.max(np.abs(law_map(h, 2, theta) - law_map(l, 2, theta)), axis=-1)
    den = np.max(np.abs(h - l), axis=-1)
    keep = den > 1e-12
    ratios = num[keep] / den[keep]
    worst["pair"] = float(np.max(ratios)) if ratios.size else 0.0
    violations["pair"] = int(np.sum(ratios > c_pair + tol))

    # (c) slice pairs (0, h1) vs (0, l1)
    hs = np.column_stack([np.zeros(sample_count), rng.uniform(-10, 10, sample_count)])
    ls = np.column_stack([np.zeros(sample_count), rng.uniform(-10, 10, sample_count)])
    num = np.max(np.abs(law_map(hs, 2, theta) - law_map(ls, 2, theta)), axis=-1)
    den = np.max(np.abs(hs - ls), axis=-1)
    keep = den > 1e-12
    ratios = num[keep] / den[keep]
    worst["slice"] = float(np.max(ratios)) if ratios.size else 0.0
    violations["slice"] = int(np.sum(ratios > c_slice + tol))

    # (d) first component against |h_0|
    f0 = np.abs(law_map(h, 2, theta)[..., 0])
    h0 = np.abs(h[..., 0])
    keep = h0 > 1e-12
    ratios = f0[keep] / h0[keep]
    worst["first"] = float(np.max(ratios)) if ratios.size else 0.0
    violations["first"] = int(np.sum(ratios > c_first + tol))

    return BoundsReport(theta=theta, samples=sample_count,
                        bound_partial=c_partial, bound_pair=c_pair,
                        bound_slice=c_slice, bound_first=c_first,
                        violations=violations, worst=worst)
