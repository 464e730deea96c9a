"""Warm-started parameter sweeps and continuity diagnostics.

A sweep solves the inclusion problem along a sorted parameter grid,
initializing each solve at the previous solution.  The chain of solutions is
the numerical stand-in for a continuous selection of the solution map: warm
starting biases the solver toward the branch through the previous point.
Unsolved grid points are recorded as data, never as failures, because
legitimately empty solution sets must be chartable.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .solver import MaxItersExceeded, NoDescentStep, SolverConfig, solve


class TooFewRows(ValueError):
    pass


@dataclass
class SweepRow:
    p: float
    x: np.ndarray
    merit: float
    bound_rhs: float
    bound_holds: bool
    solved: bool
    iterations: int = 0
    warm_start: Optional[np.ndarray] = None
    value: Optional[np.ndarray] = None  # objective value column (vector sweeps)


@dataclass
class SweepTable:
    rows: list
    meta: dict = field(default_factory=dict)

    def solved_rows(self) -> list:
        return [r for r in self.rows if r.solved]

    def as_array(self) -> np.ndarray:
        return np.array([[r.p, *r.x, r.merit] for r in self.rows])


@dataclass
class ContinuityReport:
    max_step_ratio: float
    discontinuity_flags: list
    unsolved_runs: list  # (p_start, p_end) maximal unsolved intervals
    threshold_ratio: float


def _problem_hash(problem) -> str:
    try:
        payload = json.dumps(problem.to_dict(), sort_keys=True)
    except Exception:
        payload = repr(problem)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _penalized_merit(problem, p: float, x, kappa: float) -> float:
    vp = problem.evaluate(p, x)
    m = float(np.max(problem.cone.distances(vp.vertices)))
    if kappa > 0:
        m += kappa * problem.constraint.project(np.asarray(x, float), p)[1]
    return m


def _segment_pullback(problem, p: float, x_from, x_to, kappa: float,
                      tol: float, iters: int = 45) -> np.ndarray:
    """Earliest point on the segment [x_from, x_to] with merit <= tol.

    Keeps the tracked selection close to the anchor instead of overshooting
    into the solution set's interior; for the catalog the merit is convex
    along segments, so the feasible part is a tail interval and bisection
    is exact."""
    x_from = np.asarray(x_from, dtype=float)
    x_to = np.asarray(x_to, dtype=float)

    def m(t):
        return _penalized_merit(problem, p, x_from + t * (x_to - x_from), kappa)

    if m(0.0) <= tol:
        return x_from
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if m(mid) <= tol:
            hi = mid
        else:
            lo = mid
    return x_from + hi * (x_to - x_from)


def _ray_entry(problem, p, anchor, v, kappa, tol, t_hint, iters=48):
    """First entry parameter of the ray anchor + t*v into the solved set;
    math.inf when no feasible point is bracketed near the hint."""
    feas = None
    for c in (1.0, 1.3, 1.8, 2.6, 4.0):
        t = t_hint * c
        if _penalized_merit(problem, p, anchor + t * v, kappa) <= tol:
            feas = t
            break
    if feas is None:
        return math.inf
    lo, hi = 0.0, feas
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _penalized_merit(problem, p, anchor + mid * v, kappa) <= tol:
            hi = mid
        else:
            lo = mid
    return hi


def _anchored_projection_2d(problem, p, anchor, x_feas, kappa, tol):
    """Approximate nearest point of the solved set to the anchor (n = 2).

    Parametrizes rays from the anchor by angle and minimizes the entry
    distance by golden section, warm-started at the direction of the
    supplied feasible point.  Tracking this projection gives the sweep a
    drift-free selection: the anchor never moves, so step ratios reflect
    the selection's true speed."""
    anchor = np.asarray(anchor, dtype=float)
    if _penalized_merit(problem, p, anchor, kappa) <= tol:
        return anchor.copy()
    gap = np.asarray(x_feas, float) - anchor
    base_t = float(np.linalg.norm(gap))
    if base_t <= tol:
        return np.asarray(x_feas, float)
    theta = math.atan2(gap[1], gap[0])

    def entry(th, hint):
        v = np.array([math.cos(th), math.sin(th)])
        return _ray_entry(problem, p, anchor, v, kappa, tol, hint)

    best_t, best_th = base_t, theta
    window = 0.35
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(4):  # re-center when the minimum sits on the bracket edge
        center = best_th
        a, b = center - window, center + window
        c, d = b - phi * (b - a), a + phi * (b - a)
        fc, fd = entry(c, best_t), entry(d, best_t)
        for _ in range(36):
            hint = min(v for v in (best_t, fc, fd) if not math.isinf(v))
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - phi * (b - a)
                fc = entry(c, hint)
            else:
                a, c, fc = c, d, fd
                d = a + phi * (b - a)
                fd = entry(d, hint)
        th = 0.5 * (a + b)
        t = entry(th, best_t)
        if t < best_t:
            best_t, best_th = t, th
        if abs(best_th - center) < window * 0.9:
            break
        window *= 2.0
    v = np.array([math.cos(best_th), math.sin(best_th)])
    return anchor + best_t * v


def _solve_row(problem, p: float, x_start: np.ndarray,
               cfg: SolverConfig, anchor=None) -> SweepRow:
    try:
        res = solve(problem, p, x_start, cfg)
        x_row = res.x_final
        if anchor is not None and res.iterations > 0:
            # record the anchor's (approximate) metric projection onto the
            # solution set: the drift-free selection the sweep tracks
            if len(x_row) == 2:
                x_row = _anchored_projection_2d(problem, p, anchor, x_row,
                                                res.kappa, cfg.tol)
            else:
                x_row = _segment_pullback(problem, p, anchor, x_row,
                                          res.kappa, cfg.tol)
        m_row = _penalized_merit(problem, p, x_row, res.kappa)
        bound_holds = (float(np.linalg.norm(x_row - np.asarray(x_start, float)))
                       <= res.bound_rhs + cfg.tol)
        return SweepRow(p=float(p), x=x_row, merit=m_row,
                        bound_rhs=res.bound_rhs, bound_holds=bound_holds,
                        solved=m_row <= cfg.tol,
                        iterations=res.iterations, warm_start=np.asarray(x_start, float))
    except (NoDescentStep, MaxItersExceeded) as err:
        x_last = getattr(err, "x", np.asarray(x_start, float))
        m_last = getattr(err, "merit_value", math.nan)
        return SweepRow(p=float(p), x=np.asarray(x_last, float), merit=float(m_last),
                        bound_rhs=math.nan, bound_holds=False, solved=False,
                        warm_start=np.asarray(x_start, float))


def sweep(problem, grid: Sequence[float], x_init,
          cfg: Optional[SolverConfig] = None, warm_start: bool = True,
          jobs: int = 1) -> SweepTable:
    """Solve along a sorted grid; warm-started by default (sequential), or
    cold-started from x_init on every row (parallelizable, per-row seeds)."""
    cfg = cfg or SolverConfig()
    grid = [float(p) for p in grid]
    if not grid:
        raise ValueError("parameter grid must be nonempty")
    if sorted(grid) != grid:
        raise ValueError("parameter grid must be sorted")
    x_init = np.asarray(x_init, dtype=float)
    t0 = time.perf_counter()
    rows: list[SweepRow] = []
    if warm_start:
        x_start = x_init
        for p in grid:
            row = _solve_row(problem, p, x_start, cfg, anchor=x_init)
            rows.append(row)
            x_start = row.x  # best available iterate, solved or not
    else:
        def run(i_p):
            i, p = i_p
            row_cfg = SolverConfig(**{**cfg.__dict__, "rng_seed": cfg.rng_seed + i})
            return _solve_row(problem, p, x_init, row_cfg, anchor=x_init)

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(run, enumerate(grid)))
        else:
            rows = [run(ip) for ip in enumerate(grid)]
    meta = {
        "problem_hash": _problem_hash(problem),
        "cfg": dict(cfg.__dict__),
        "warm_start": warm_start,
        "wall_time": time.perf_counter() - t0,
    }
    return SweepTable(rows=rows, meta=meta)


def continuity_report(table: SweepTable,
                      threshold_ratio: Optional[float] = None) -> ContinuityReport:
    """Step-ratio diagnostic over consecutive solved rows: a numerical
    surrogate for continuity of the tracked selection.  The default
    threshold is 10x the median ratio (scale-free jump detection)."""
    if len(table.rows) < 2:
        raise TooFewRows("continuity diagnostics need at least two rows")
    ratios, idx_pairs = [], []
    for i in range(len(table.rows) - 1):
        a, b = table.rows[i], table.rows[i + 1]
        if not (a.solved and b.solved):
            continue
        dp = b.p - a.p
        if dp <= 0:
            continue
        ratios.append(float(np.linalg.norm(b.x - a.x)) / dp)
        idx_pairs.append(i + 1)
    if threshold_ratio is None:
        threshold_ratio = 10.0 * float(np.median(ratios)) if ratios else math.inf
    flags = [i for i, rr in zip(idx_pairs, ratios) if rr > threshold_ratio]
    unsolved = []
    start = None
    for row in table.rows:
        if not row.solved and start is None:
            start = row.p
        elif row.solved and start is not None:
            unsolved.append((start, prev_p))
            start = None
        prev_p = row.p
    if start is not None:
        unsolved.append((start, table.rows[-1].p))
    return ContinuityReport(
        max_step_ratio=float(max(ratios)) if ratios else 0.0,
        discontinuity_flags=flags,
        unsolved_runs=unsolved,
        threshold_ratio=float(threshold_ratio),
    )


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def csv_header(dim_x: int, dim_val: int = 0, oracle: bool = False) -> list:
    cols = ["p"] + [f"x_{i + 1}" for i in range(dim_x)]
    cols += ["merit", "bound_rhs", "bound_holds", "solved"]
    cols += [f"val_{i + 1}" for i in range(dim_val)]
    if oracle:
        cols.append("oracle_status")
    return cols


def write_csv(table: SweepTable, path, oracle_statuses: Optional[list] = None) -> None:
    """Emit the sweep as CSV with the documented fixed column order."""
    dim_x = len(table.rows[0].x)
    dim_val = len(table.rows[0].value) if table.rows[0].value is not None else 0
    cols = csv_header(dim_x, dim_val, oracle_statuses is not None)
    lines = [",".join(cols)]
    for i, r in enumerate(table.rows):
        cells = [repr(float(r.p))]
        cells += [repr(float(v)) for v in r.x]
        cells += [repr(float(r.merit)), repr(float(r.bound_rhs)),
                  "true" if r.bound_holds else "false",
                  "true" if r.solved else "false"]
        if dim_val:
            cells += [repr(float(v)) for v in r.value]
        if oracle_statuses is not None:
            cells.append(str(oracle_statuses[i]))
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
