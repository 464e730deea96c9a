"""Convex geometry kernel: polyhedral cones, V-polytopes, Minkowski sums,
Euclidean projections, excess, Hausdorff distance, and enlargement-inclusion
certificates.

All sets live in R^m with m small (desk scale, m <= 4 typical).  Cones are
finitely generated, polytopes are vertex lists.  Distances are exact up to
floating point: projections onto a polytope-plus-cone are computed by an
active-set elimination loop on the nonnegative coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Optional, Union

import numpy as np

#: membership means distance <= GEOM_TOL
GEOM_TOL = 1e-9

#: distance to an empty set (guards malformed constraint data)
EMPTY_DISTANCE = math.inf


def as_vector(x, dim: Optional[int] = None) -> np.ndarray:
    """Coerce to a finite 1-D float array, optionally checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got array of shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    return v


def _as_points(rows, dim: Optional[int] = None) -> np.ndarray:
    pts = np.asarray(rows, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2:
        raise ValueError(f"expected a list of points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points have non-finite coordinates")
    if dim is not None and pts.shape[1] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {pts.shape[1]}")
    return pts


# ---------------------------------------------------------------------------
# nonnegative least squares kernels
# ---------------------------------------------------------------------------

def _nnls_project(y: np.ndarray, G: np.ndarray) -> tuple[np.ndarray, float]:
    """Project y onto cone(G rows): argmin ||G.T mu - y||, mu >= 0.

    Reuses the hull-plus-cone active-set kernel with the singleton base {0}.
    (scipy.optimize.nnls 1.15 returns suboptimal points on some wedge
    instances, so the projection stack stays on one audited kernel.)
    """
    return _hull_cone_project(y, np.zeros((1, y.shape[0])), G)


def _hull_cone_project(
    y: np.ndarray,
    base: np.ndarray,
    gens: Optional[np.ndarray],
    tol: float = 1e-12,
    max_iter: Optional[int] = None,
) -> tuple[np.ndarray, float]:
    """Project y onto conv(base rows) + cone(gens rows).

    Solves  min || A z - y ||  s.t.  z >= 0,  sum of the base weights = 1,
    where the columns of A are the base vertices followed by the cone
    generators.  Active-set elimination in the style of Lawson-Hanson,
    extended with the single linear equality on the base weights.

    Returns the projection point and its distance to y.  Raises
    ``RuntimeError`` when the iteration budget is exceeded (degenerate
    data; does not occur for valid inputs at desk scale).
    """
    k = base.shape[0]
    cols = [base.T]
    if gens is not None and len(gens):
        cols.append(gens.T)
    A = np.hstack(cols)
    n = A.shape[1]
    is_base = np.zeros(n, dtype=bool)
    is_base[:k] = True
    csum = is_base.astype(float)

    if max_iter is None:
        max_iter = 6 * n + 30

    # feasible start: all weight on the base vertex nearest to y
    start = int(np.argmin(np.linalg.norm(base - y, axis=1)))
    z = np.zeros(n)
    z[start] = 1.0
    free = np.zeros(n, dtype=bool)
    free[start] = True
    scale = max(1.0, float(np.max(np.abs(A.T @ y))), float(np.max(np.abs(A))))

    def _solve_free() -> np.ndarray:
        idx = np.flatnonzero(free)
        Af = A[:, idx]
        cf = csum[idx]
        K = np.vstack([
            np.hstack([Af.T @ Af, cf[:, None]]),
            np.hstack([cf, 0.0]),
        ])
        rhs = np.concatenate([Af.T @ y, [1.0]])
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        zf = np.zeros(n)
        zf[idx] = sol[:-1]
        return zf

    for _ in range(max_iter):
        z_new = _solve_free()
        neg = free & (z_new < -tol)
        if np.any(neg):
            stuck = neg & (z <= tol)
            if np.any(stuck):
                # anti-cycling: a variable entered at zero and went negative
                free[stuck] = False
                z[stuck] = 0.0
                continue
            ratios = z[neg] / (z[neg] - z_new[neg])
            step = min(1.0, float(np.min(ratios)))
            z = z + step * (z_new - z)
            hit = free & (z <= tol) & ~ (z_new > tol)
            free_base = np.flatnonzero(free & is_base)
            if free_base.size and np.all(hit[free_base]):
                keep = free_base[int(np.argmax(z[free_base]))]
                hit[keep] = False  # the sum-to-one row needs a base variable
            z[hit] = 0.0
            free[hit] = False
            continue
        z = np.where(free, np.maximum(z_new, 0.0), 0.0)
        resid = y - A @ z
        grad = -(A.T @ resid)
        free_base = free & is_base
        gbeta = float(np.mean(grad[free_base])) if np.any(free_base) else 0.0
        # reduced optimality: active base vars must not beat the free base
        # gradient; active cone vars must have nonnegative gradient
        viol = np.where(is_base, gbeta - grad, -grad)
        viol[free] = -np.inf
        worst = int(np.argmax(viol))
        if viol[worst] <= 1e-10 * scale:
            return A @ z, float(np.linalg.norm(resid))
        free[worst] = True
    raise RuntimeError("projection active-set loop exceeded its iteration budget")


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PolyCone:
    """Finitely generated closed convex cone {sum mu_i g_i : mu >= 0}.

    Must be neither {0} nor the whole space.  ``pointed`` is cached at
    construction (origin-in-hull test on the normalized generators).
    """

    generators: np.ndarray
    pointed: bool = field(init=False)

    def __post_init__(self):
        gens = _as_points(self.generators)
        norms = np.linalg.norm(gens, axis=1)
        if not np.any(norms > GEOM_TOL):
            raise ValueError("cone must have at least one nonzero generator")
        gens = gens[norms > GEOM_TOL]
        object.__setattr__(self, "generators", gens)
        if self._is_whole_space():
            raise ValueError("cone equals the whole space; a proper cone is required")
        unit = gens / np.linalg.norm(gens, axis=1, keepdims=True)
        _, d = _hull_cone_project(np.zeros(self.dim), unit, None)
        object.__setattr__(self, "pointed", bool(d > GEOM_TOL))
        object.__setattr__(self, "_orthant", self._detect_orthant())
        object.__setattr__(self, "_pieces", self._triangulate())

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    @property
    def is_orthant(self) -> bool:
        return getattr(self, "_orthant")

    def _is_whole_space(self) -> bool:
        # containing +e_i and -e_i for every axis forces C = R^m
        m = self.generators.shape[1]
        probes = np.vstack([np.eye(m), -np.eye(m)])
        return all(_nnls_project(p, self.generators)[1] <= GEOM_TOL for p in probes)

    def _detect_orthant(self) -> bool:
        m = self.dim
        unit = self.generators / np.linalg.norm(self.generators, axis=1, keepdims=True)
        hit = np.zeros(m, dtype=bool)
        for g in unit:
            axis = int(np.argmax(g))
            if abs(g[axis] - 1.0) > GEOM_TOL or np.any(np.abs(np.delete(g, axis)) > GEOM_TOL):
                return False
            hit[axis] = True
        return bool(np.all(hit))

    def _triangulate(self) -> Optional[list[np.ndarray]]:
        """Split a pointed cone in R^1/R^2/R^3 into simplicial pieces
        (generator index arrays) whose union is the cone.  Enables the
        vectorized exact distance path; None means fall back to per-point
        NNLS."""
        if not self.pointed:
            return None
        gens = self.generators
        m = self.dim
        if m == 1:
            return [np.array([0])]
        unit = gens / np.linalg.norm(gens, axis=1, keepdims=True)
        w = unit.sum(axis=0)
        nw = np.linalg.norm(w)
        if nw <= GEOM_TOL:
            return None
        w = w / nw
        dots = unit @ w
        if np.any(dots <= GEOM_TOL):
            return None  # mean ray not strictly interior; NNLS fallback
        if m == 2:
            rel = np.arctan2(
                gens[:, 1] * w[0] - gens[:, 0] * w[1],
                gens[:, 0] * w[0] + gens[:, 1] * w[1],
            )
            lo, hi = int(np.argmin(rel)), int(np.argmax(rel))
            if lo == hi:
                return [np.array([lo])]
            return [np.array([lo, hi])]
        if m == 3:
            # slice by the plane <w, y> = 1 and fan-triangulate the extreme
            # points of the section polygon (redundant rays must drop out)
            q = unit / dots[:, None]
            b1 = np.eye(3)[int(np.argmin(np.abs(w)))]
            b1 = b1 - (b1 @ w) * w
            b1 /= np.linalg.norm(b1)
            b2 = np.cross(w, b1)
            uv = np.column_stack([q @ b1, q @ b2])
            if len(uv) == 1:
                return [np.array([0])]
            if len(uv) == 2:
                return [np.array([0, 1])]
            try:
                from scipy.spatial import ConvexHull, QhullError
                hull = ConvexHull(uv)
                order = hull.vertices  # counterclockwise extreme points
            except (QhullError, ValueError):
                return None  # degenerate section; NNLS fallback
            if len(order) < 3:
                return [np.asarray(order)]
            anchor = order[0]
            pieces = []
            for j in range(1, len(order) - 1):
                pieces.append(np.array([anchor, order[j], order[j + 1]]))
            return pieces
        return None

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Exact Euclidean distances of many points to the cone (vectorized)."""
        pts = _as_points(points, self.dim)
        if getattr(self, "_orthant"):
            return np.linalg.norm(np.minimum(pts, 0.0), axis=1)
        pieces = getattr(self, "_pieces")
        if pieces is not None:
            return self._distances_by_pieces(pts, pieces)
        return np.array([_nnls_project(p, self.generators)[1] for p in pts])

    def _distances_by_pieces(self, pts: np.ndarray, pieces) -> np.ndarray:
        # the projection onto a simplicial cone is the nearest primal-feasible
        # candidate among unconstrained least squares over generator subsets
        best = np.linalg.norm(pts, axis=1)  # origin candidate
        seen: set[tuple[int, ...]] = set()
        for idx in pieces:
            for r in range(1, len(idx) + 1):
                for sub in combinations(idx.tolist(), r):
                    key = tuple(sorted(sub))
                    if key in seen:
                        continue
                    seen.add(key)
                    Gs = self.generators[list(key)]
                    gram = Gs @ Gs.T
                    try:
                        coef = np.linalg.solve(gram, Gs @ pts.T)
                    except np.linalg.LinAlgError:
                        continue
                    feas = np.all(coef >= -1e-12, axis=0)
                    if not np.any(feas):
                        continue
                    proj = coef.T @ Gs
                    d = np.linalg.norm(pts - proj, axis=1)
                    best = np.where(feas, np.minimum(best, d), best)
        return best

    def project(self, y: np.ndarray) -> tuple[np.ndarray, float]:
        y = as_vector(y, self.dim)
        if getattr(self, "_orthant"):
            proj = np.maximum(y, 0.0)
            return proj, float(np.linalg.norm(y - proj))
        return _nnls_project(y, self.generators)

    def deep_direction(self) -> np.ndarray:
        """Unit direction into the cone's bulk (normalized generator mean)."""
        unit = self.generators / np.linalg.norm(self.generators, axis=1, keepdims=True)
        w = unit.sum(axis=0)
        n = np.linalg.norm(w)
        return w / n if n > GEOM_TOL else unit[0]


def orthant(m: int) -> PolyCone:
    """The nonnegative orthant of R^m."""
    return PolyCone(np.eye(m))


@dataclass(frozen=True, eq=False)
class VPolytope:
    """Compact convex set given by a nonempty vertex list (rows)."""

    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _as_points(self.vertices))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def translate(self, v) -> "VPolytope":
        return VPolytope(self.vertices + as_vector(v, self.dim))

    def __neg__(self) -> "VPolytope":
        return VPolytope(-self.vertices)


@dataclass(frozen=True, eq=False)
class SumSet:
    """Minkowski sum conv(base) + cone; absent cone means the plain polytope."""

    base: VPolytope
    cone: Optional[PolyCone] = None

    def __post_init__(self):
        if self.cone is not None and self.cone.dim != self.base.dim:
            raise ValueError("dimension mismatch between base polytope and cone")

    @property
    def dim(self) -> int:
        return self.base.dim


SetLike = Union[SumSet, PolyCone, VPolytope]


_UNSET = object()


def _hull2d_points(P: VPolytope) -> Optional[np.ndarray]:
    """Counterclockwise hull points of a 2-D polytope, cached on the
    instance; None when the hull is degenerate (fall back to the kernel)."""
    cached = getattr(P, "_hull2d", _UNSET)
    if cached is _UNSET:
        verts = P.vertices
        if verts.shape[0] <= 2:
            cached = verts
        else:
            try:
                from scipy.spatial import ConvexHull, QhullError
                hull = ConvexHull(verts)
                cached = verts[hull.vertices]
            except (QhullError, ValueError):
                cached = None
        object.__setattr__(P, "_hull2d", cached)
    return cached


def _project_polytope_2d(y: np.ndarray, pts: np.ndarray) -> tuple[np.ndarray, float]:
    if pts.shape[0] == 1:
        return pts[0].copy(), float(np.linalg.norm(y - pts[0]))
    if pts.shape[0] == 2:
        a, d = pts[0], pts[1] - pts[0]
        denom = float(d @ d)
        t = 0.0 if denom == 0 else min(max(float((y - a) @ d) / denom, 0.0), 1.0)
        proj = a + t * d
        return proj, float(np.linalg.norm(y - proj))
    A = pts
    D = np.roll(pts, -1, axis=0) - pts
    rel = y - A
    cross = D[:, 0] * rel[:, 1] - D[:, 1] * rel[:, 0]
    if np.all(cross >= -1e-12):
        return y.copy(), 0.0
    denom = np.einsum("ij,ij->i", D, D)
    t = np.clip(np.einsum("ij,ij->i", rel, D) / np.where(denom == 0, 1.0, denom),
                0.0, 1.0)
    cand = A + t[:, None] * D
    dd = np.linalg.norm(cand - y, axis=1)
    j = int(np.argmin(dd))
    return cand[j], float(dd[j])


def _as_sumset(S: SetLike) -> SumSet:
    if isinstance(S, SumSet):
        return S
    if isinstance(S, PolyCone):
        return SumSet(VPolytope(np.zeros((1, S.dim))), S)
    if isinstance(S, VPolytope):
        return SumSet(S, None)
    raise TypeError(f"cannot interpret {type(S).__name__} as a point set")


# ---------------------------------------------------------------------------
# distances and excess
# ---------------------------------------------------------------------------

def project_dist(y, S: SetLike) -> tuple[np.ndarray, float]:
    """Euclidean nearest point of S to y, and the distance.

    S may be a SumSet, a bare PolyCone, or a bare VPolytope.  Exact up to
    floating point (active-set / NNLS); distance zero within GEOM_TOL means
    membership.
    """
    ss = _as_sumset(S)
    y = as_vector(y, ss.dim)
    base = ss.base.vertices
    if base.shape[0] == 1:
        shifted = y - base[0]
        if ss.cone is None:
            return base[0].copy(), float(np.linalg.norm(shifted))
        proj, d = ss.cone.project(shifted)
        return proj + base[0], d
    if ss.cone is None and ss.dim == 2:
        pts = _hull2d_points(ss.base)
        if pts is not None:
            return _project_polytope_2d(y, pts)
    gens = ss.cone.generators if ss.cone is not None else None
    return _hull_cone_project(y, base, gens)


def _dist_many_segment_cone(pts: np.ndarray, v0: np.ndarray, v1: np.ndarray,
                            cone: PolyCone, iters: int = 60) -> np.ndarray:
    """Distances to (segment v0-v1) + cone, ternary search over the segment
    parameter vectorized across the whole query batch (the per-query maps
    t -> dist(p - v(t), cone) are convex, hence unimodal)."""
    n = pts.shape[0]
    lo = np.zeros(n)
    hi = np.ones(n)
    seg = v1 - v0

    def f(t):
        return cone.distances(pts - (v0 + t[:, None] * seg))

    for _ in range(iters):
        c = lo + (hi - lo) / 3.0
        d = hi - (hi - lo) / 3.0
        left = f(c) <= f(d)
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
    return np.minimum(f(lo), np.minimum(f(hi), f(0.5 * (lo + hi))))


def dist_many(points: np.ndarray, S: SetLike) -> np.ndarray:
    """Distances of many points (rows) to S; vectorized where possible."""
    ss = _as_sumset(S)
    pts = _as_points(points, ss.dim)
    base = ss.base.vertices
    if base.shape[0] == 1 and ss.cone is not None:
        return ss.cone.distances(pts - base[0])
    if base.shape[0] == 1 and ss.cone is None:
        return np.linalg.norm(pts - base[0], axis=1)
    if base.shape[0] == 2 and ss.cone is not None and ss.cone.dim <= 3:
        return _dist_many_segment_cone(pts, base[0], base[1], ss.cone)
    return np.array([project_dist(p, ss)[1] for p in pts])


def excess(A: VPolytope, S: SetLike) -> float:
    """Excess of A beyond S: sup over a in A of dist(a, S).

    The distance function to a convex set is convex, so the supremum over
    the polytope is attained at a vertex.
    """
    ss = _as_sumset(S)
    if A.dim != ss.dim:
        raise ValueError("dimension mismatch between polytope and target set")
    return float(np.max(dist_many(A.vertices, ss)))


def hausdorff(A: VPolytope, B: VPolytope) -> float:
    """Hausdorff distance between two polytopes: max of the two excesses."""
    if A.dim != B.dim:
        raise ValueError("dimension mismatch between polytopes")
    return max(excess(A, SumSet(B)), excess(B, SumSet(A)))


# ---------------------------------------------------------------------------
# direction sets
# ---------------------------------------------------------------------------

def unit_directions(m: int, count: Optional[int] = None) -> np.ndarray:
    """Deterministic unit directions in R^m: uniform angles (m=2), Fibonacci
    sphere (m=3), signed axes plus a fixed-seed normalized Gaussian cloud
    otherwise."""
    if count is None:
        count = {1: 2, 2: 64, 3: 512}.get(m, 512)
    if m == 1:
        return np.array([[1.0], [-1.0]])
    if m == 2:
        t = np.arange(count) * (2.0 * np.pi / count)
        return np.column_stack([np.cos(t), np.sin(t)])
    if m == 3:
        i = np.arange(count) + 0.5
        phi = np.arccos(1.0 - 2.0 * i / count)
        theta = np.pi * (1.0 + math.sqrt(5.0)) * i
        return np.column_stack([
            np.sin(phi) * np.cos(theta),
            np.sin(phi) * np.sin(theta),
            np.cos(phi),
        ])
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((max(count, 2 * m), m))
    pts = np.vstack([np.eye(m), -np.eye(m), pts])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# enlargement inclusion
# ---------------------------------------------------------------------------

class Verdict(Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class InclusionResult:
    """Outcome of an enlargement-inclusion test B(A, s) subset of B(D, r)."""

    verdict: Verdict
    witness: Optional[np.ndarray] = None  # a point of B(A, s) farther than r from D
    sup_estimate: float = math.nan  # computed sup of dist(., D) over B(A, s)

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS


def _sphere_max_2d(center, s, D, n_coarse, stop_above):
    t = np.arange(n_coarse) * (2.0 * np.pi / n_coarse)
    pts = center + s * np.column_stack([np.cos(t), np.sin(t)])
    vals = dist_many(pts, D)
    hi = int(np.argmax(vals))
    if stop_above is not None and vals[hi] > stop_above:
        return float(vals[hi]), pts[hi], True
    # golden-section polish around the best coarse sample
    gap = 2.0 * np.pi / n_coarse
    phi = (math.sqrt(5.0) - 1.0) / 2.0

    def f(tt):
        p = center + s * np.array([math.cos(tt), math.sin(tt)])
        return project_dist(p, D)[1], p

    a, b = t[hi] - gap, t[hi] + gap
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, _ = f(c)
    fd, _ = f(d)
    for _ in range(60):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc, _ = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd, _ = f(d)
        if b - a < 1e-13:
            break
    tt = 0.5 * (a + b)
    val, p = f(tt)
    if val < vals[hi]:
        val, p = float(vals[hi]), pts[hi]
    return float(val), p, True


def _sphere_max_nd(center, s, D, n_coarse, rounds, stop_above):
    dirs = unit_directions(center.shape[0], n_coarse)
    pts = center + s * dirs
    vals = dist_many(pts, D)
    hi = int(np.argmax(vals))
    if stop_above is not None and vals[hi] > stop_above:
        return float(vals[hi]), pts[hi], True
    best_dir, best = dirs[hi], float(vals[hi])
    m = center.shape[0]
    probe = unit_directions(m, 2 * m + 8)
    radius, improved_last = 0.5, math.inf
    for _ in range(max(rounds, 14)):
        cand = best_dir + radius * probe
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        pv = center + s * cand
        dv = dist_many(pv, D)
        j = int(np.argmax(dv))
        improved_last = float(dv[j]) - best
        if dv[j] > best:
            best, best_dir = float(dv[j]), cand[j]
            if stop_above is not None and best > stop_above:
                return best, center + s * best_dir, True
        radius *= 0.55
    stable = improved_last <= 1e-7 * max(1.0, best)
    return best, center + s * best_dir, stable


def ball_sup_dist(A: VPolytope, s: float, D: SetLike,
                  dirs: Optional[int] = None, rounds: int = 3,
                  stop_above: Optional[float] = None):
    """Supremum of dist(., D) over the enlargement B(A, s), with a
    maximizing point.

    The maximand is convex, so the sup sits over a vertex of A.  For a
    vertex outside D the value is exactly dist(vertex, D) + s (walk along
    the outward normal); for a vertex inside D the sphere of radius s is
    searched by dense directions plus local refinement.

    Returns (sup, point, stable_flag).  ``stop_above`` allows early exit as
    soon as a point beyond that threshold is localized.
    """
    ss = _as_sumset(D)
    if A.dim != ss.dim:
        raise ValueError("dimension mismatch between polytope and target set")
    if s < 0:
        raise ValueError("enlargement radius must be nonnegative")
    best, best_pt, stable_all = -math.inf, None, True
    order = np.argsort(-dist_many(A.vertices, ss))  # likely violators first
    for vi in order:
        v = A.vertices[vi]
        proj, d = project_dist(v, ss)
        if s == 0.0 or d > GEOM_TOL:
            if d > GEOM_TOL and s > 0.0:
                val = d + s
                pt = v + s * (v - proj) / d
            else:
                val, pt = d, v.copy()
            stable = True
        else:
            n_coarse = dirs if dirs is not None else (64 if A.dim == 2 else 512)
            if A.dim == 1:
                cand = np.array([v - s, v + s])
                dv = dist_many(cand, ss)
                j = int(np.argmax(dv))
                val, pt, stable = float(dv[j]), cand[j], True
            elif A.dim == 2:
                val, pt, stable = _sphere_max_2d(v, s, ss, n_coarse, stop_above)
            else:
                val, pt, stable = _sphere_max_nd(v, s, ss, n_coarse, rounds, stop_above)
        if val > best:
            best, best_pt = val, pt
        stable_all = stable_all and stable
        if stop_above is not None and best > stop_above:
            return best, best_pt, stable_all
    return best, best_pt, stable_all


def enlargement_inclusion(A: VPolytope, s: float, D: SetLike, r: float,
                          dirs: Optional[int] = None, tol: float = GEOM_TOL,
                          rounds: int = 3) -> InclusionResult:
    """Decide whether B(A, s) is contained in B(D, r).

    Sufficient analytic test first: if dist(v, D) + s <= r for every vertex
    v of A, the inclusion holds.  Otherwise the supremum of dist(., D) over
    B(A, s) is computed per vertex (exact for vertices outside D, refined
    sphere search inside); a localized point beyond r + tol refutes the
    inclusion and is returned as witness.  INCONCLUSIVE is reserved for the
    rare case where the sphere search did not stabilize near the threshold.
    """
    ss = _as_sumset(D)
    if s < 0 or r < 0:
        raise ValueError("radii must be nonnegative")
    verts = A.vertices
    dists = dist_many(verts, ss)
    if float(np.max(dists)) + s <= r + tol:
        return InclusionResult(Verdict.HOLDS, None, float(np.max(dists)) + s)
    # certified refutation from any vertex already outside D
    out = dists > GEOM_TOL
    if np.any(out) and float(np.max(dists[out])) + s > r + tol:
        vi = int(np.argmax(np.where(out, dists, -math.inf)))
        proj, d = project_dist(verts[vi], ss)
        wit = verts[vi] + (s / d) * (verts[vi] - proj) if s > 0 else verts[vi]
        return InclusionResult(Verdict.FAILS, wit, float(d + s))
    sup, pt, stable = ball_sup_dist(A, s, ss, dirs=dirs, rounds=rounds,
                                    stop_above=r + tol)
    if sup > r + tol:
        return InclusionResult(Verdict.FAILS, pt, sup)
    margin = max(100.0 * tol, 1e-7)
    if sup <= r - margin or stable:
        return InclusionResult(Verdict.HOLDS, None, sup)
    return InclusionResult(Verdict.INCONCLUSIVE, None, sup)
