"""Cardinality-constrained Markowitz selection by simplex-face search.

The return constraint is folded into the objective as a quadratic penalty,
turning the problem into minimizing a quadratic form over the faces of the
simplex with at most K vertices.  Candidate supports are grown one asset at
a time: every face whose principal submatrix is positive definite has a
closed-form minimizer over its affine hull, and that value both scores the
face and lower-bounds anything achievable on it once holding bounds are
enforced.  A final pass re-solves the best candidates exactly (hard return
equality, no penalty) in ascending lower-bound order, stopping as soon as
the bounds prove no remaining face can win.

With an unlimited beam every positive-definite face of size <= K gets
scored, so the final pass is exhaustive up to provably safe pruning; with a
finite beam the search is a heuristic and solutions say so in their status.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg_qp import INTERIOR_TOL, SymMatrix, chol_solve, constrained_qp, pd_check
from .market_data import MarketModel
from .mv_core import PortfolioSolution, ReturnRange, return_range

BOUND_TOL = 1e-9
DEFAULT_BEAM = 400
RETURN_TOL = 1e-7
_WITNESS_NODE_CAP = 500_000


@dataclass(frozen=True)
class LimitedAssetSpec:
    """Selection rules: at most k names, each held weight inside its band.

    ``lower``/``upper`` accept scalars or per-asset vectors; ``preassigned``
    names assets that must appear in the chosen support.
    """

    n: int
    k: int
    lower: np.ndarray = 0.01
    upper: np.ndarray = 1.0
    preassigned: tuple = ()

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k={self.k} outside 1..{self.n}")
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.n,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.n,)).copy()
        if (lo < 0).any() or (lo > hi + 1e-15).any() or (hi > 1 + 1e-15).any():
            raise ValueError("need 0 <= lower <= upper <= 1 per asset")
        pre = tuple(sorted(int(i) for i in self.preassigned))
        if len(set(pre)) != len(pre):
            raise ValueError("duplicate preassigned indices")
        if pre and (pre[0] < 0 or pre[-1] >= self.n):
            raise ValueError("preassigned index out of range")
        if len(pre) > self.k:
            raise ValueError(f"{len(pre)} preassigned assets exceed k={self.k}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "preassigned", pre)
        if not _bounds_witness(lo, hi, self.k, pre):
            raise ValueError(
                "infeasible spec: no support of size <= k fits the holding bounds"
            )


def _bounds_witness(lower, upper, k, pre) -> bool:
    """Is there a support S >= preassigned, |S| <= k, with sum(lower) <= 1
    <= sum(upper)?  Exact via pruned search; accepts on search overflow
    (the solver then settles feasibility honestly)."""
    base_l = float(lower[list(pre)].sum()) if pre else 0.0
    base_u = float(upper[list(pre)].sum()) if pre else 0.0
    if base_l > 1.0 + 1e-12:
        return False
    if base_u >= 1.0 - 1e-12:
        return True
    slots = k - len(pre)
    extras = [i for i in range(len(lower)) if i not in set(pre)]
    if slots == 0 or not extras:
        return False
    need = 1.0 - base_u
    budget = 1.0 - base_l
    order = sorted(extras, key=lambda i: -upper[i])
    u_sorted = upper[order]
    l_sorted = lower[order]
    m = len(order)
    # best u-sum achievable taking r items from the suffix starting at i
    u_prefix = np.concatenate([[0.0], np.cumsum(u_sorted)])

    nodes = 0

    def dfs(i, taken, sum_l, sum_u):
        nonlocal nodes
        nodes += 1
        if sum_u >= need - 1e-12 and sum_l <= budget + 1e-12:
            return True
        if taken == slots or i == m or nodes > _WITNESS_NODE_CAP:
            return nodes > _WITNESS_NODE_CAP
        r = min(slots - taken, m - i)
        if sum_u + (u_prefix[i + r] - u_prefix[i]) < need - 1e-12:
            return False
        if dfs(i + 1, taken + 1, sum_l + l_sorted[i], sum_u + u_sorted[i]):
            return True
        return dfs(i + 1, taken, sum_l, sum_u)

    return dfs(0, 0, 0.0, 0.0)


@dataclass(frozen=True)
class StqpInstance:
    """Quadratic form over the simplex: risk plus penalized return miss."""

    q: SymMatrix
    penalty: float
    rho: float

    @property
    def n(self) -> int:
        return self.q.n


def build_stqp(m: MarketModel, rho: float, penalty: float) -> StqpInstance:
    """Fold the return target into the risk matrix.

    On the budget hyperplane e'x = 1 the form x'(S + M dd')x with
    d = mu - rho*e equals x'Sx + M(mu'x - rho)^2, so minimizing over the
    simplex needs no separate return row.  penalty = 0 returns the plain
    risk matrix.
    """
    if penalty < 0:
        raise ValueError("penalty must be nonnegative")
    d = m.mu - rho
    q = m.sigma.values + penalty * np.outer(d, d)
    return StqpInstance(q=SymMatrix((q + q.T) / 2.0), penalty=penalty, rho=rho)


@dataclass(frozen=True)
class FaceRecord:
    """One scored face: support, affine-hull minimum, and its minimizer."""

    key: tuple
    w: float
    x: np.ndarray
    interior: bool
    in_bounds: bool


@dataclass
class _LevelArrays:
    """Batched face data for one level; rows are faces, columns follow
    ``orders`` (insertion order, matching the Cholesky factor)."""

    orders: np.ndarray  # (p, j) int
    keys: np.ndarray  # (p, j) int, each row sorted
    chol: np.ndarray  # (p, j, j) lower-triangular factors of Q_I
    z: np.ndarray  # (p, j) solutions of Q_I z = e
    sumz: np.ndarray  # (p,)
    maxd: np.ndarray  # (p,) running max diagonal, for the pivot test

    @property
    def size(self) -> int:
        return self.orders.shape[0]

    @property
    def w(self) -> np.ndarray:
        return 1.0 / self.sumz

    @property
    def x(self) -> np.ndarray:
        return self.z / self.sumz[:, None]


@dataclass
class BeamState:
    """Search record: per-level incumbents, retained faces, and the ledger
    of faces that were scored but cannot host an unconstrained minimum."""

    level: int = 0
    families: list = field(default_factory=list)  # interior FaceRecords, last level
    overflow: list = field(default_factory=list)  # (w, key) lower-bound ledger
    min_by_level: dict = field(default_factory=dict)
    best_value: float = np.inf
    best_face: FaceRecord | None = None
    levels_executed: int = 0
    scored: list = field(default_factory=list)  # (w, key) for every PD face seen

    def min_at(self, level: int) -> float:
        """Incumbent after the given level; levels past an early stop keep
        the last executed level's incumbent."""
        if not self.min_by_level:
            return np.inf
        if level in self.min_by_level:
            return self.min_by_level[level]
        top = max(self.min_by_level)
        return self.min_by_level[top] if level > top else np.inf


def _classify(pool: _LevelArrays, spec: LimitedAssetSpec):
    x = pool.x
    interior = (x > INTERIOR_TOL).all(axis=1)
    lo = spec.lower[pool.orders]
    hi = spec.upper[pool.orders]
    in_bounds = ((x >= lo - BOUND_TOL) & (x <= hi + BOUND_TOL)).all(axis=1)
    return interior, in_bounds


def _record_level(state: BeamState, pool: _LevelArrays, spec: LimitedAssetSpec):
    """Fold one scored level into the state; returns count sent to overflow."""
    interior, in_bounds = _classify(pool, spec)
    w = pool.w
    state.scored.extend(
        (float(w[r]), tuple(int(i) for i in pool.keys[r])) for r in range(pool.size)
    )
    prime = interior & in_bounds
    level = pool.orders.shape[1]
    prev = state.min_at(level - 1) if state.min_by_level else np.inf
    level_min = float(w[prime].min()) if prime.any() else np.inf
    state.min_by_level[level] = min(prev, level_min)
    if level_min < state.best_value:
        r = int(np.flatnonzero(prime)[np.argmin(w[prime])])
        state.best_value = level_min
        state.best_face = _face_record(pool, r, True, True)
    spill = ~prime
    for r in np.flatnonzero(spill):
        state.overflow.append((float(w[r]), tuple(int(i) for i in pool.keys[r])))
    state.level = level
    state.levels_executed += 1
    state.families = [
        _face_record(pool, int(r), True, bool(in_bounds[r]))
        for r in np.flatnonzero(interior)
    ]
    return int(spill.sum())


def _face_record(pool: _LevelArrays, row: int, interior: bool, in_bounds: bool):
    order = pool.orders[row]
    rank = np.argsort(order)
    return FaceRecord(
        key=tuple(int(i) for i in order[rank]),
        w=float(pool.w[row]),
        x=pool.x[row][rank].copy(),
        interior=interior,
        in_bounds=in_bounds,
    )


def _seed_singletons(q: np.ndarray, allowed) -> _LevelArrays | None:
    diag = np.diag(q)
    idx = np.asarray([i for i in allowed if diag[i] > 0.0], dtype=np.int64)
    if idx.size == 0:
        return None
    p = idx.size
    return _LevelArrays(
        orders=idx[:, None],
        keys=idx[:, None].copy(),
        chol=np.sqrt(diag[idx]).reshape(p, 1, 1),
        z=(1.0 / diag[idx])[:, None],
        sumz=1.0 / diag[idx],
        maxd=diag[idx],
    )


def _seed_preassigned(q: np.ndarray, pre: tuple) -> _LevelArrays | None:
    sub = q[np.ix_(pre, pre)]
    lower = pd_check(sub)
    if lower is None:
        return None
    z = chol_solve(lower, np.ones(len(pre)))
    order = np.asarray(pre, dtype=np.int64)
    return _LevelArrays(
        orders=order[None, :],
        keys=order[None, :].copy(),
        chol=lower[None, :, :],
        z=z[None, :],
        sumz=np.array([float(z.sum())]),
        maxd=np.array([float(np.diag(sub).max())]),
    )


def _expand(pool: _LevelArrays, q: np.ndarray, pd_tol: float) -> _LevelArrays | None:
    """Score every one-asset extension of the pool, dropping duplicates and
    non-positive-definite children."""
    p, j = pool.orders.shape
    n = q.shape[0]
    member = np.zeros((p, n), dtype=bool)
    np.put_along_axis(member, pool.orders, True, axis=1)
    parent_idx, new_idx = np.nonzero(~member)
    if parent_idx.size == 0:
        return None
    child_keys = np.sort(
        np.concatenate(
            [pool.keys[parent_idx], new_idx[:, None].astype(np.int64)], axis=1
        ),
        axis=1,
    )
    _, first = np.unique(child_keys, axis=0, return_index=True)
    first.sort()
    parent_idx, new_idx = parent_idx[first], new_idx[first]
    child_keys = child_keys[first]

    orders = pool.orders[parent_idx]
    b = q[orders, new_idx[:, None]]  # (r, j) cross column in parent order
    qkk = np.diag(q)[new_idx]
    lower = pool.chol[parent_idx]
    y = np.linalg.solve(lower, b[:, :, None])[:, :, 0]
    s = qkk - np.einsum("rj,rj->r", y, y)
    maxd = np.maximum(pool.maxd[parent_idx], qkk)
    keep = s > pd_tol * np.maximum(maxd, 1e-300)
    if not keep.any():
        return None
    parent_idx, new_idx = parent_idx[keep], new_idx[keep]
    child_keys, orders = child_keys[keep], orders[keep]
    b, y, s, maxd = b[keep], y[keep], s[keep], maxd[keep]
    lower = lower[keep]

    r = parent_idx.size
    zp = pool.z[parent_idx]
    # w_vec = Q_parent^{-1} b via the cached factor
    w_vec = np.linalg.solve(np.swapaxes(lower, 1, 2), y[:, :, None])[:, :, 0]
    t = (1.0 - np.einsum("rj,rj->r", b, zp)) / s
    z = np.concatenate([zp - t[:, None] * w_vec, t[:, None]], axis=1)
    sumz = pool.sumz[parent_idx] + t * (1.0 - w_vec.sum(axis=1))
    chol = np.zeros((r, j + 1, j + 1))
    chol[:, :j, :j] = lower
    chol[:, j, :j] = y
    chol[:, j, j] = np.sqrt(s)
    return _LevelArrays(
        orders=np.concatenate([orders, new_idx[:, None].astype(np.int64)], axis=1),
        keys=child_keys,
        chol=chol,
        z=z,
        sumz=sumz,
        maxd=maxd,
    )


def _take(pool: _LevelArrays, keep: np.ndarray) -> _LevelArrays:
    return _LevelArrays(
        orders=pool.orders[keep],
        keys=pool.keys[keep],
        chol=pool.chol[keep],
        z=pool.z[keep],
        sumz=pool.sumz[keep],
        maxd=pool.maxd[keep],
    )


def _truncate(pool: _LevelArrays, beam_width) -> _LevelArrays:
    if beam_width is None or pool.size <= beam_width:
        return pool
    rank = np.lexsort(tuple(pool.keys[:, c] for c in range(pool.keys.shape[1] - 1, -1, -1)) + (pool.w,))
    return _take(pool, np.sort(rank[:beam_width]))


def increasing_set(
    inst: StqpInstance,
    spec: LimitedAssetSpec,
    beam_width: int | None = DEFAULT_BEAM,
    trace=None,
    pd_tol: float = 1e-12,
    expand: str = "all",
) -> BeamState:
    """Grow candidate supports one asset per level up to size k.

    Each level scores all one-asset extensions of the retained pool: a face
    survives if its risk submatrix stays positive definite, contributes to
    the level incumbent when its affine minimizer is strictly inside the
    face and inside the holding bounds, and otherwise lands in the overflow
    ledger with its value kept as a lower bound.  ``beam_width=None``
    retains everything (exhaustive); otherwise the pool is cut to the best
    ``beam_width`` faces per level.

    ``expand`` picks the growth pool.  ``"all"`` extends every retained
    face; with an unlimited beam that enumerates all positive-definite
    supports, which is exact under any bounds but combinatorial in k.
    ``"interior"`` extends only faces whose affine minimizer is strictly
    interior.  Value monotonicity along interior chains makes that pool
    self-sufficient for loose upper bounds, and it stays small on real
    covariance matrices even with no beam cap, so large instances can run
    uncapped.  Children of interior parents are still scored and ledgered
    even when not grown further; the seed level always expands.
    """
    if inst.n != spec.n:
        raise ValueError("instance and spec disagree on asset count")
    if expand not in ("all", "interior"):
        raise ValueError("expand must be 'all' or 'interior'")
    q = inst.q.values
    state = BeamState()
    if spec.preassigned:
        if len(spec.preassigned) == 1:
            pool = _seed_singletons(q, spec.preassigned)
        else:
            pool = _seed_preassigned(q, spec.preassigned)
    else:
        pool = _seed_singletons(q, range(spec.n))
    seed_level = True
    while pool is not None:
        pool = _truncate(pool, beam_width)
        spilled = _record_level(state, pool, spec)
        if trace is not None:
            trace(
                f"LEVEL {state.level} kept={pool.size} "
                f"overflow={spilled} MIN={state.min_at(state.level)!r}"
            )
        if state.level >= spec.k:
            break
        if expand == "interior" and not seed_level:
            interior, _ = _classify(pool, spec)
            if not interior.any():
                break
            pool = _take(pool, np.flatnonzero(interior))
        seed_level = False
        pool = _expand(pool, q, pd_tol)
    return state


def overflow_resolve(
    state: BeamState, inst: StqpInstance, spec: LimitedAssetSpec
) -> tuple[float, PortfolioSolution | None]:
    """Settle the ledger: any overflow face whose affine lower bound beats
    the incumbent gets its bounded minimum computed exactly.

    Returns the improved incumbent value and the bounded minimizer as a
    penalized-objective solution (no return refinement here).
    """
    best = state.best_value
    best_x_full = None
    if state.best_face is not None:
        best_x_full = np.zeros(spec.n)
        best_x_full[list(state.best_face.key)] = state.best_face.x
    q = inst.q.values
    for w, key in sorted(state.overflow):
        if w >= best - 1e-15:
            break  # sorted ascending: nothing later can win
        idx = list(key)
        sub = q[np.ix_(idx, idx)]
        res = constrained_qp(
            sub,
            np.zeros(len(idx)),
            np.ones((1, len(idx))),
            np.array([1.0]),
            spec.lower[idx],
            spec.upper[idx],
        )
        if res.status != "optimal":
            continue
        if res.value < best:
            best = res.value
            best_x_full = np.zeros(spec.n)
            best_x_full[idx] = res.x
    return best, best_x_full


def _face_return_span(mu_i, lo_i, hi_i):
    """Attainable mu'x range on {e'x = 1, lo <= x <= hi}; None if empty."""
    free = 1.0 - lo_i.sum()
    if free < -1e-12 or hi_i.sum() < 1.0 - 1e-12:
        return None
    room = hi_i - lo_i
    base = float(mu_i @ lo_i)
    hi_val = base
    rest = free
    for j in np.argsort(-mu_i):
        take = min(rest, room[j])
        hi_val += take * mu_i[j]
        rest -= take
        if rest <= 1e-15:
            break
    lo_val = base
    rest = free
    for j in np.argsort(mu_i):
        take = min(rest, room[j])
        lo_val += take * mu_i[j]
        rest -= take
        if rest <= 1e-15:
            break
    return lo_val, hi_val


def _refine_support(m: MarketModel, rho: float, spec: LimitedAssetSpec, key):
    """Exact solve on one support: min variance, return pinned to rho."""
    idx = list(key)
    span = _face_return_span(m.mu[idx], spec.lower[idx], spec.upper[idx])
    if span is None or not span[0] - 1e-11 <= rho <= span[1] + 1e-11:
        return None
    sub = m.sigma.submatrix(idx)
    res = constrained_qp(
        sub,
        np.zeros(len(idx)),
        np.vstack([np.ones(len(idx)), m.mu[idx]]),
        np.array([1.0, rho]),
        spec.lower[idx],
        spec.upper[idx],
    )
    if res.status != "optimal":
        return None
    x = np.zeros(spec.n)
    x[idx] = res.x
    return float(res.value), x


def lam_solve(
    m: MarketModel,
    rho: float,
    spec: LimitedAssetSpec,
    *,
    beam_width: int | None = DEFAULT_BEAM,
    penalty: float | None = None,
    max_escalations: int = 6,
    trace=None,
    rho_range: ReturnRange | None = None,
    expand: str = "all",
) -> PortfolioSolution:
    """Minimum-variance portfolio with at most ``spec.k`` assets held
    inside their weight bands, hitting mean return ``rho`` exactly.

    The face search runs on the penalized form; every scored face then
    competes in an exact refinement pass (hard return equality, true risk
    objective) in ascending order of its affine lower bound, which prunes
    soundly because the bound never exceeds the face's true value.  With
    ``beam_width=None`` and a positive-definite risk matrix the result is
    the global optimum; finite beams report status 'heuristic'.  When the
    beam search strands without any return-feasible support, the penalty is
    escalated and the search repeated, since a stiffer penalty steers the
    beam toward return-feasible faces.

    ``expand="interior"`` grows only interior-minimizer faces, keeping the
    uncapped search polynomial-sized in practice; pair it with
    ``beam_width=None`` for large instances.  Its optimality certificate
    assumes upper bounds loose enough that no optimal support is reachable
    only through boundary-minimizer faces (always holds when each asset may
    carry the whole budget); tightly capped portfolios should use the
    default exhaustive mode.
    """
    if m.n_assets != spec.n:
        raise ValueError("model and spec disagree on asset count")
    rng = rho_range if rho_range is not None else return_range(m)
    if penalty is None:
        spread = max(1e-12, (rng.rho_max - rng.rho_min) ** 2)
        penalty = 1e3 * float(m.sigma.diagonal.max()) / spread
    exact = beam_width is None

    attempts = 1 if exact else max_escalations + 1
    for attempt in range(attempts):
        inst = build_stqp(m, rho, penalty)
        state = increasing_set(
            inst, spec, beam_width=beam_width, trace=trace, expand=expand
        )
        best = None
        for w, key in sorted(state.scored):
            if best is not None and w >= best[0] - 1e-15:
                break
            refined = _refine_support(m, rho, spec, key)
            if refined is not None and (best is None or refined[0] < best[0]):
                best = refined
        if best is not None:
            value, x = best
            status = "optimal" if exact else "heuristic"
            achieved = float(m.mu @ x)
            if abs(achieved - rho) > RETURN_TOL:
                status = "tolerance-limited"
            return PortfolioSolution.build(x, m.mu, value, status, "lam")
        penalty *= 10.0
    return PortfolioSolution.unsolved(spec.n, "lam")
