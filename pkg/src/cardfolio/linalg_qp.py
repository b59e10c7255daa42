"""Dense linear-algebra kernels: positive-definiteness checks, simplex-face
minimizers, an active-set solver for box/equality quadratic programs and a
two-phase tableau simplex for linear programs.

Everything here is deterministic: ties are broken by lowest index and no
randomized pivoting is used.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular

# Interior test threshold for face minimizers (absolute, on weights).
INTERIOR_TOL = 1e-9
# Relative pivot threshold for positive-definiteness.
PD_PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class SymMatrix:
    """Exactly symmetric dense matrix.

    ``values[i, j] == values[j, i]`` holds bitwise; the backing array is
    frozen so instances can be shared across threads or processes.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise ValueError(f"square matrix required, got shape {v.shape}")
        if not (v == v.T).all():
            raise ValueError("matrix is not exactly symmetric; use SymMatrix.from_array")
        if not v.flags.writeable:
            object.__setattr__(self, "values", v)
        else:
            v = v.copy()
            v.setflags(write=False)
            object.__setattr__(self, "values", v)

    @classmethod
    def from_array(cls, a, sym_tol: float = 1e-8) -> "SymMatrix":
        """Build from a nearly symmetric array, enforcing exact symmetry.

        Asymmetry beyond ``sym_tol`` (relative to the largest entry) is an
        error rather than something to silently average away.
        """
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"square matrix required, got shape {a.shape}")
        scale = max(1.0, float(np.abs(a).max()) if a.size else 1.0)
        gap = float(np.abs(a - a.T).max()) if a.size else 0.0
        if gap > sym_tol * scale:
            raise ValueError(f"matrix asymmetry {gap:.3e} exceeds tolerance")
        sym = (a + a.T) / 2.0
        return cls(sym)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.values)

    def submatrix(self, indices) -> "SymMatrix":
        idx = _check_indices(indices, self.n)
        return SymMatrix(self.values[np.ix_(idx, idx)])


@dataclass(frozen=True)
class FaceResult:
    """Outcome of minimizing x'Qx over the affine hull of a simplex face.

    ``minimizer`` is given in face coordinates (one entry per index of the
    face) and sums to one; it may have negative entries when the face
    minimum sits outside the relative interior.  ``value`` is x'Qx at the
    minimizer.  Both are None when the face submatrix is not positive
    definite.
    """

    indices: tuple
    pd: bool
    interior: bool
    minimizer: np.ndarray | None
    value: float | None


def _check_indices(indices, n: int) -> list:
    idx = [int(i) for i in indices]
    if not idx:
        raise ValueError("index set must be nonempty")
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate indices in {idx}")
    for i in idx:
        if i < 0 or i >= n:
            raise ValueError(f"index {i} out of range for size {n}")
    return idx


def pd_check(q, tol: float = PD_PIVOT_TOL) -> np.ndarray | None:
    """Cholesky factorization gated by a relative pivot threshold.

    Returns the lower-triangular factor L with ``L @ L.T == q`` if every
    pivot exceeds ``tol * max(diag(q))``, otherwise None.  Matrices that are
    merely positive semidefinite (or indefinite) are rejected.

    Parameters
    ----------
    q : SymMatrix or array_like
        Symmetric matrix to factor.
    tol : float
        Relative pivot threshold.
    """
    a = q.values if isinstance(q, SymMatrix) else np.asarray(q, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix has non-finite entries")
    n = a.shape[0]
    max_diag = float(np.diag(a).max())
    if max_diag <= 0.0:
        return None
    threshold = tol * max_diag
    lower = np.zeros((n, n))
    for k in range(n):
        pivot = a[k, k] - lower[k, :k] @ lower[k, :k]
        if pivot <= threshold:
            return None
        root = np.sqrt(pivot)
        lower[k, k] = root
        if k + 1 < n:
            lower[k + 1 :, k] = (a[k + 1 :, k] - lower[k + 1 :, :k] @ lower[k, :k]) / root
    return lower


def chol_solve(lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (L L') x = rhs given a lower Cholesky factor."""
    y = solve_triangular(lower, rhs, lower=True, check_finite=False)
    return solve_triangular(lower.T, y, lower=False, check_finite=False)


def face_minimizer(q: SymMatrix, indices, interior_tol: float = INTERIOR_TOL) -> FaceResult:
    """Minimize x'Qx over the hyperplane sum(x)=1 restricted to a face.

    For a face index set I with positive definite submatrix Q_I the unique
    minimizer is Q_I^{-1} e / (e' Q_I^{-1} e) with value (e' Q_I^{-1} e)^{-1}.
    ``interior`` reports whether every component exceeds ``interior_tol``.
    """
    idx = _check_indices(indices, q.n)
    sub = q.values[np.ix_(idx, idx)]
    lower = pd_check(sub)
    if lower is None:
        return FaceResult(tuple(idx), pd=False, interior=False, minimizer=None, value=None)
    z = chol_solve(lower, np.ones(len(idx)))
    total = float(z.sum())
    x = z / total
    value = 1.0 / total
    interior = bool((x > interior_tol).all())
    return FaceResult(tuple(idx), pd=True, interior=interior, minimizer=x, value=value)


# ---------------------------------------------------------------------------
# Convex quadratic programming: min x'Qx + lin'x  s.t.  A x = b, lo <= x <= hi
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QpResult:
    x: np.ndarray | None
    value: float | None
    status: str  # optimal | infeasible | unbounded
    iterations: int = 0


def _kkt_solve(q2, lin, a_eq, b_eq, free, x_fixed):
    """Solve the equality-constrained stationarity system on free variables.

    Returns (x_free, nu, consistent) where consistent is False when the
    system has no solution (reduced problem unbounded below).
    """
    n_free = int(free.sum())
    m = a_eq.shape[0]
    fixed = ~free
    q_ff = q2[np.ix_(free, free)]
    a_f = a_eq[:, free]
    rhs_top = -(lin[free] + q2[np.ix_(free, fixed)] @ x_fixed[fixed])
    rhs_bot = b_eq - a_eq[:, fixed] @ x_fixed[fixed]
    kkt = np.zeros((n_free + m, n_free + m))
    kkt[:n_free, :n_free] = q_ff
    kkt[:n_free, n_free:] = a_f.T
    kkt[n_free:, :n_free] = a_f
    rhs = np.concatenate([rhs_top, rhs_bot])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    # a singular system can slip through np.linalg.solve with a tiny pivot,
    # so the residual is checked no matter which path produced sol
    residual = float(np.abs(kkt @ sol - rhs).max(initial=0.0))
    scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
    return sol[:n_free], sol[n_free:], residual <= 1e-7 * scale


def constrained_qp(
    q,
    lin,
    a_eq,
    b_eq,
    lo,
    hi,
    *,
    kkt_tol: float = 1e-8,
    max_iter: int | None = None,
) -> QpResult:
    """Active-set solver for min x'Qx + lin'x s.t. A x = b, lo <= x <= hi.

    Q must be positive semidefinite on the feasible affine hull.  The solver
    warm-starts from the equality-only stationary point when that point is
    inside the box; otherwise a feasibility LP provides the starting vertex.
    Bound additions and releases both break ties by lowest variable index,
    so the iteration path is deterministic.

    Returns
    -------
    QpResult
        status is 'optimal', 'infeasible' (box plus equalities empty) or
        'unbounded' (only possible with infinite bounds and curvature
        degeneracy along a feasible ray).
    """
    qv = q.values if isinstance(q, SymMatrix) else np.asarray(q, dtype=float)
    n = qv.shape[0]
    lin = np.zeros(n) if lin is None else np.asarray(lin, dtype=float)
    a_eq = np.asarray(a_eq, dtype=float).reshape(-1, n)
    b_eq = np.asarray(b_eq, dtype=float).reshape(-1)
    lo = np.full(n, -np.inf) if lo is None else np.broadcast_to(np.asarray(lo, dtype=float), (n,)).copy()
    hi = np.full(n, np.inf) if hi is None else np.broadcast_to(np.asarray(hi, dtype=float), (n,)).copy()
    if a_eq.shape[0] != b_eq.shape[0]:
        raise ValueError("equality row/rhs count mismatch")
    if (lo > hi + 1e-15).any():
        return QpResult(None, None, "infeasible")
    q2 = 2.0 * qv
    bound_gap = 1e-10 * max(1.0, float(np.max(np.abs(b_eq), initial=0.0)))

    def objective(x):
        return float(x @ qv @ x + lin @ x)

    # Warm start: equality-only stationary point, used when inside the box.
    free_all = np.ones(n, dtype=bool)
    x_try, _, ok = _kkt_solve(q2, lin, a_eq, b_eq, free_all, np.zeros(n))
    x = None
    if (
        ok
        and np.isfinite(x_try).all()
        and (x_try >= lo - bound_gap).all()
        and (x_try <= hi + bound_gap).all()
        and np.abs(a_eq @ np.clip(x_try, lo, hi) - b_eq).max(initial=0.0)
        <= 1e-9 * max(1.0, float(np.abs(b_eq).max(initial=0.0)))
    ):
        x = np.clip(x_try, lo, hi)
        at_lo = np.zeros(n, dtype=bool)
        at_hi = np.zeros(n, dtype=bool)
    else:
        feas = solve_lp(
            LpProblem(
                c=np.zeros(n),
                a=a_eq,
                senses=("==",) * a_eq.shape[0],
                b=b_eq,
                bounds=np.column_stack([lo, hi]),
            )
        )
        if feas.status != "optimal":
            return QpResult(None, None, "infeasible")
        x = np.clip(feas.x, lo, hi)
        at_lo = np.abs(x - lo) <= bound_gap
        at_hi = (np.abs(x - hi) <= bound_gap) & ~at_lo
        x[at_lo] = lo[at_lo]
        x[at_hi] = hi[at_hi]

    limit = max_iter if max_iter is not None else 60 * n + 200
    iterations = 0
    while iterations < limit:
        iterations += 1
        fixed = at_lo | at_hi
        free = ~fixed
        x_fixed = np.where(at_lo, lo, np.where(at_hi, hi, 0.0))
        if free.any():
            xf, nu, consistent = _kkt_solve(q2, lin, a_eq, b_eq, free, x_fixed)
        else:
            # All variables pinned; recover multipliers from the gradient.
            xf, consistent = np.zeros(0), True
            if a_eq.size:
                nu, *_ = np.linalg.lstsq(a_eq.T, -(q2 @ x + lin), rcond=None)
            else:
                nu = np.zeros(0)
        target = x_fixed.copy()
        target[free] = xf
        direction = target - x
        direction[fixed] = 0.0
        step_scale = max(1.0, float(np.abs(x).max()))
        if consistent and np.abs(direction).max(initial=0.0) <= 1e-12 * step_scale:
            # Reduced optimum reached; examine bound multipliers.  The KKT
            # solve uses the convention grad + A'nu = 0 on free variables.
            grad = q2 @ x + lin
            reduced = grad + a_eq.T @ nu if a_eq.size else grad
            worst, worst_i, worst_side = 0.0, -1, None
            for i in np.flatnonzero(fixed):
                lam = reduced[i] if at_lo[i] else -reduced[i]
                if lam < worst - 1e-15:
                    worst, worst_i, worst_side = lam, int(i), "lo" if at_lo[i] else "hi"
            if worst_i < 0 or worst >= -kkt_tol:
                return QpResult(x, objective(x), "optimal", iterations)
            if worst_side == "lo":
                at_lo[worst_i] = False
            else:
                at_hi[worst_i] = False
            continue
        if not consistent:
            # Unbounded reduced subproblem: descend along the least-squares
            # direction until a bound blocks; no block means unbounded QP.
            if np.abs(direction).max(initial=0.0) <= 1e-14:
                return QpResult(x, objective(x), "optimal", iterations)
            alpha_cap = np.inf
        else:
            alpha_cap = 1.0
        alpha = alpha_cap
        blocker, blocker_side = -1, None
        for i in np.flatnonzero(free):
            d = direction[i]
            if d > 1e-14 and np.isfinite(hi[i]):
                a_i = (hi[i] - x[i]) / d
                if a_i < alpha - 1e-14:
                    alpha, blocker, blocker_side = a_i, int(i), "hi"
            elif d < -1e-14 and np.isfinite(lo[i]):
                a_i = (lo[i] - x[i]) / d
                if a_i < alpha - 1e-14:
                    alpha, blocker, blocker_side = a_i, int(i), "lo"
        if not np.isfinite(alpha):
            return QpResult(None, None, "unbounded", iterations)
        alpha = max(alpha, 0.0)
        x = x + alpha * direction
        if blocker >= 0:
            if blocker_side == "lo":
                x[blocker] = lo[blocker]
                at_lo[blocker] = True
            else:
                x[blocker] = hi[blocker]
                at_hi[blocker] = True
    raise RuntimeError(f"active-set iteration limit {limit} exceeded")


# ---------------------------------------------------------------------------
# Linear programming: dense two-phase tableau simplex
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LpProblem:
    """Linear program min c'x subject to row constraints and variable bounds.

    rows carry a sense each ('<=', '==' or '>='); bounds is an (n, 2) array
    and either side may be infinite.
    """

    c: np.ndarray
    a: np.ndarray
    senses: tuple
    b: np.ndarray
    bounds: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        a = np.asarray(self.a, dtype=float).reshape(-1, c.shape[0]) if c.shape[0] else np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        bounds = np.asarray(self.bounds, dtype=float)
        if a.ndim != 2 or a.shape[1] != c.shape[0]:
            raise ValueError(f"row length {a.shape} does not match {c.shape[0]} variables")
        if a.shape[0] != b.shape[0] or a.shape[0] != len(self.senses):
            raise ValueError("row, sense and rhs counts differ")
        for s in self.senses:
            if s not in ("<=", "==", ">="):
                raise ValueError(f"unknown sense {s!r}")
        if bounds.shape != (c.shape[0], 2):
            raise ValueError(f"bounds shape {bounds.shape} != ({c.shape[0]}, 2)")
        finite = np.isfinite(bounds[:, 0]) & np.isfinite(bounds[:, 1])
        if (bounds[finite, 0] > bounds[finite, 1]).any():
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "senses", tuple(self.senses))

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    def with_bounds(self, index: int, lo: float, hi: float) -> "LpProblem":
        bounds = self.bounds.copy()
        bounds[index] = (lo, hi)
        return replace(self, bounds=bounds)


@dataclass(frozen=True)
class LpResult:
    x: np.ndarray | None
    value: float | None
    status: str  # optimal | infeasible | unbounded
    iterations: int = 0


def _pivot(tableau, basis, row, col):
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0
    basis[row] = col


def _run_simplex(tableau, basis, n_cols, bland_after, pivot_tol, allowed=None):
    """Iterate a tableau whose last row is the (priced-out) objective.

    Returns 'optimal' or 'unbounded'.  Dantzig pricing switches to Bland's
    rule permanently once ``bland_after`` consecutive degenerate pivots
    occur.
    """
    m = tableau.shape[0] - 1
    degenerate_run = 0
    bland = False
    iterations = 0
    cap = 5000 + 400 * (m + n_cols)
    while True:
        iterations += 1
        if iterations > cap:
            raise RuntimeError("simplex iteration cap exceeded")
        costs = tableau[-1, :n_cols]
        if allowed is not None:
            eligible = np.flatnonzero((costs < -pivot_tol) & allowed[:n_cols])
        else:
            eligible = np.flatnonzero(costs < -pivot_tol)
        if eligible.size == 0:
            return "optimal", iterations
        if bland:
            col = int(eligible[0])
        else:
            col = int(eligible[np.argmin(costs[eligible])])
        column = tableau[:m, col]
        positive = column > pivot_tol
        if not positive.any():
            return "unbounded", iterations
        ratios = np.full(m, np.inf)
        ratios[positive] = tableau[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12)
        row = int(ties[np.argmin([basis[t] for t in ties])])
        if best <= 1e-12:
            degenerate_run += 1
            if degenerate_run >= bland_after:
                bland = True
        else:
            degenerate_run = 0
        _pivot(tableau, basis, row, col)


def solve_lp(problem: LpProblem, *, pivot_tol: float = 1e-10, bland_after: int | None = None) -> LpResult:
    """Two-phase dense tableau simplex.

    Parameters
    ----------
    problem : LpProblem
        Problem with arbitrary senses and (possibly infinite) bounds.
    pivot_tol : float
        Entries below this magnitude are treated as zero during pricing.
    bland_after : int, optional
        Consecutive degenerate pivots tolerated before switching to Bland's
        rule; defaults to twice the column count.

    Returns
    -------
    LpResult
        Optimal point in the original variable space, or a status of
        'infeasible'/'unbounded'.
    """
    n = problem.n_vars
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    # Convert to standard form with nonnegative shifted variables.  Each
    # original variable maps to one column (shift or mirror) or two (split).
    col_of = []  # (kind, col_index) per original variable
    columns = []  # per standard column: (orig_index, sign, shift)
    for j in range(n):
        if np.isfinite(lo[j]):
            columns.append((j, 1.0, lo[j]))
            col_of.append(("shift", len(columns) - 1))
        elif np.isfinite(hi[j]):
            columns.append((j, -1.0, hi[j]))
            col_of.append(("mirror", len(columns) - 1))
        else:
            columns.append((j, 1.0, 0.0))
            columns.append((j, -1.0, 0.0))
            col_of.append(("split", len(columns) - 2))
    n_std = len(columns)
    a_std = np.zeros((problem.a.shape[0], n_std))
    c_std = np.zeros(n_std)
    for k, (j, sign, _) in enumerate(columns):
        a_std[:, k] = sign * problem.a[:, j]
        c_std[k] = sign * problem.c[j]
    # Shift the rhs by the substitution offsets (x = shift + sign * x_std).
    shift_vec = np.zeros(n)
    for j in range(n):
        kind, _ = col_of[j]
        if kind == "shift":
            shift_vec[j] = lo[j]
        elif kind == "mirror":
            shift_vec[j] = hi[j]
    b_std = problem.b - problem.a @ shift_vec
    senses = list(problem.senses)
    rows = [a_std[i] for i in range(a_std.shape[0])]
    rhs = list(b_std)
    # Upper-bound rows for shifted variables with two finite bounds.
    for j in range(n):
        kind, k = col_of[j]
        if kind == "shift" and np.isfinite(hi[j]):
            row = np.zeros(n_std)
            row[k] = 1.0
            rows.append(row)
            senses.append("<=")
            rhs.append(hi[j] - lo[j])
    m = len(rows)
    a_full = np.vstack(rows) if rows else np.zeros((0, n_std))
    b_full = np.asarray(rhs, dtype=float)
    senses = np.asarray(senses)
    flip = b_full < 0
    a_full[flip] *= -1.0
    b_full[flip] *= -1.0
    swap = {"<=": ">=", ">=": "<=", "==": "=="}
    senses = np.asarray([swap[s] if f else s for s, f in zip(senses, flip)])

    n_slack = int((senses == "<=").sum() + (senses == ">=").sum())
    n_art = int((senses == ">=").sum() + (senses == "==").sum())
    total = n_std + n_slack + n_art
    tableau = np.zeros((m + 1, total + 1))
    tableau[:m, :n_std] = a_full
    tableau[:m, -1] = b_full
    basis = np.zeros(m, dtype=int)
    s_at, a_at = n_std, n_std + n_slack
    art_cols = []
    for i in range(m):
        if senses[i] == "<=":
            tableau[i, s_at] = 1.0
            basis[i] = s_at
            s_at += 1
        elif senses[i] == ">=":
            tableau[i, s_at] = -1.0
            s_at += 1
            tableau[i, a_at] = 1.0
            basis[i] = a_at
            art_cols.append(a_at)
            a_at += 1
        else:
            tableau[i, a_at] = 1.0
            basis[i] = a_at
            art_cols.append(a_at)
            a_at += 1
    bland_limit = bland_after if bland_after is not None else 2 * total
    iterations = 0
    if art_cols:
        # Phase 1: minimize the sum of artificials (priced out).
        for i in range(m):
            if basis[i] in art_cols:
                tableau[-1] -= tableau[i]
        tableau[-1, art_cols] = 0.0
        status, it1 = _run_simplex(tableau, basis, total, bland_limit, pivot_tol)
        iterations += it1
        feas_scale = max(1.0, float(np.abs(b_full).max(initial=0.0)))
        if -tableau[-1, -1] > 1e-9 * feas_scale:
            return LpResult(None, None, "infeasible", iterations)
        art_set = set(art_cols)
        for i in range(m):
            if basis[i] in art_set:
                row_entries = np.abs(tableau[i, :n_std + n_slack])
                nz = np.flatnonzero(row_entries > pivot_tol)
                if nz.size:
                    _pivot(tableau, basis, i, int(nz[0]))
        # Freeze artificial columns out of phase 2.
        tableau[:, art_cols] = 0.0
    tableau[-1] = 0.0
    tableau[-1, :n_std] = c_std
    for i in range(m):
        if tableau[-1, basis[i]] != 0.0:
            tableau[-1] -= tableau[-1, basis[i]] * tableau[i]
    status, it2 = _run_simplex(tableau, basis, n_std + n_slack, bland_limit, pivot_tol)
    iterations += it2
    if status == "unbounded":
        return LpResult(None, None, "unbounded", iterations)
    x_std = np.zeros(total)
    for i in range(m):
        x_std[basis[i]] = tableau[i, -1]
    x = np.zeros(n)
    for j in range(n):
        kind, k = col_of[j]
        if kind == "shift":
            x[j] = lo[j] + x_std[k]
        elif kind == "mirror":
            x[j] = hi[j] - x_std[k]
        else:
            x[j] = x_std[k] - x_std[k + 1]
    value = float(problem.c @ x)
    return LpResult(x, value, "optimal", iterations)
