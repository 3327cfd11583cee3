"""Model-based trust region with underdetermined quadratic interpolation.

The surrogate interpolates ``f`` at ``m`` points (default ``2n + 1``). The
``(n+1)(n+2)/2 - m`` spare degrees of freedom are fixed by taking the
Hessian closest, in Frobenius norm, to the previous model's Hessian. This
reduces to solving the symmetric KKT system

    [ A    e   S ] [lam]   [r]
    [ e^T  0   0 ] [ c ] = [0]
    [ S^T  0   0 ] [ g ]   [0]

with ``A_ij = (s_i . s_j)^2 / 2``, ``s_i`` the offsets of the points from
the trust-region center and ``r`` the residuals of the previous model. The
Hessian correction is ``sum_j lam_j s_j s_j^T``.

Without bounds this behaves like an unconstrained NEWUOA-style method; with
bounds every step is confined to the box (BOBYQA-style) and no infeasible
point is ever evaluated.
"""
from __future__ import annotations

import math

import numpy as np

from rosfit.dfo._common import XTOL, BudgetExhausted, OptOptions, OptResult, start

DEFAULT_RADIUS = 0.5
SHRINK_BELOW = 0.1
GROW_ABOVE = 0.7
MAX_COND = 1e13
INF_RETRIES = 30


def _kkt(S: np.ndarray) -> np.ndarray:
    m, n = S.shape
    W = np.zeros((m + n + 1, m + n + 1))
    G = S @ S.T
    W[:m, :m] = 0.5 * G * G
    W[:m, m] = W[m, :m] = 1.0
    W[:m, m + 1:] = S
    W[m + 1:, :m] = S.T
    return W


class _Model:
    """q(x) = c + g.(x - center) + (x - center)^T H (x - center) / 2."""

    def __init__(self, n: int):
        self.center = np.zeros(n)
        self.c = 0.0
        self.g = np.zeros(n)
        self.H = np.zeros((n, n))

    def value(self, X: np.ndarray) -> np.ndarray:
        D = np.atleast_2d(X) - self.center
        return self.c + D @ self.g + 0.5 * np.einsum("ij,jk,ik->i", D, self.H, D)

    def grad_at(self, x: np.ndarray) -> np.ndarray:
        return self.g + self.H @ (x - self.center)


class _InterpolationSet:
    def __init__(self, Y: np.ndarray, F: np.ndarray):
        self.Y = Y
        self.F = F
        self.model = _Model(Y.shape[1])
        self.W: np.ndarray | None = None
        self.scale = 1.0

    @property
    def kopt(self) -> int:
        return int(np.argmin(self.F))

    @property
    def xbest(self) -> np.ndarray:
        return self.Y[self.kopt]

    def distances(self) -> np.ndarray:
        return np.sqrt(((self.Y - self.xbest) ** 2).sum(axis=1))

    def refit(self) -> bool:
        """Update the model; False when the point set is degenerate."""
        xb = self.xbest.copy()
        S = self.Y - xb
        scale = float(np.sqrt((S ** 2).sum(axis=1)).max()) or 1.0
        Sh = S / scale
        W = _kkt(Sh)
        m, n = S.shape
        rhs = np.zeros(m + n + 1)
        rhs[:m] = self.F - self.model.value(self.Y)
        try:
            if np.linalg.cond(W) > MAX_COND:
                return False
            sol = np.linalg.solve(W, rhs)
        except np.linalg.LinAlgError:
            return False
        lam, dc, dg = sol[:m], sol[m], sol[m + 1:]
        dH = (Sh.T * lam) @ Sh
        old = self.model
        new = _Model(n)
        new.center = xb
        new.c = float(old.value(xb)[0] + dc)
        new.g = old.grad_at(xb) + dg / scale
        H = old.H + dH / scale ** 2
        new.H = 0.5 * (H + H.T)
        self.model, self.W, self.scale = new, W, scale
        return True

    def lagrange(self, X: np.ndarray) -> np.ndarray:
        """Lagrange function values, shape (len(X), m), at the rows of ``X``."""
        m, n = self.Y.shape
        Sh = (self.Y - self.model.center) / self.scale
        Xh = (np.atleast_2d(X) - self.model.center) / self.scale
        G = Sh @ Xh.T
        rhs = np.vstack([0.5 * G * G, np.ones((1, Xh.shape[0])), Xh.T])
        return np.linalg.solve(self.W, rhs)[:m].T


def _trust_region_step(g, H, delta, lo=None, hi=None) -> np.ndarray:
    """Truncated conjugate gradient inside ``||s|| <= delta`` and ``lo <= s <= hi``.

    Variables that hit a bound are fixed there and CG restarts on the rest.
    """
    n = g.size
    s = np.zeros(n)
    free = np.ones(n, dtype=bool)
    boxed = lo is not None
    if boxed:
        free &= ~((g > 0) & (lo >= 0)) & ~((g < 0) & (hi <= 0))
    for _ in range(n + 1):
        r = -(g + H @ s)
        r[~free] = 0.0
        d = r.copy()
        rr = r @ r
        restart = False
        for _ in range(n):
            if rr <= 1e-30 * max(1.0, g @ g):
                return s
            Hd = H @ d
            dHd = d @ Hd
            sd, dd, ss = s @ d, d @ d, s @ s
            alpha_tr = (-sd + math.sqrt(max(sd * sd + dd * (delta * delta - ss), 0.0))) / dd
            alpha_bd, hit = math.inf, -1
            if boxed:
                for i in np.flatnonzero(free & (d != 0)):
                    lim = ((hi[i] if d[i] > 0 else lo[i]) - s[i]) / d[i]
                    if lim < alpha_bd:
                        alpha_bd, hit = max(lim, 0.0), i
            alpha = min(alpha_tr, alpha_bd) if dHd <= 0 else min(rr / dHd, alpha_tr, alpha_bd)
            s = s + alpha * d
            if alpha == alpha_tr and alpha <= alpha_bd:
                return s
            if alpha == alpha_bd:
                s[hit] = hi[hit] if d[hit] > 0 else lo[hit]
                free[hit] = False
                restart = True
                break
            r_new = r - alpha * Hd
            r_new[~free] = 0.0
            rr_new = r_new @ r_new
            d = r_new + (rr_new / rr) * d
            d[~free] = 0.0
            r, rr = r_new, rr_new
        if not restart or not free.any():
            return s
    return s


def minimize_quadratic_tr(f, x0, opts: OptOptions | None = None) -> OptResult:
    """Minimise ``f`` by interpolation-model trust region.

    Radius rules: halve when the achieved/predicted ratio is below 0.1, grow
    to ``max(radius, 2 * |step|)`` above 0.7. The radius also halves when the
    model predicts no useful decrease and the interpolation points are
    already local. Stops when the radius drops below ``opts.xtol_abs``.
    Non-finite values never enter the model.
    """
    opts = opts or OptOptions()
    track, x0, f0 = start(f, x0, opts)
    n = x0.size
    m = opts.m_for(n)
    box = opts.box(n)
    name = "bobyqa" if box is not None else "newuoa"
    delta = opts.initial_step if opts.initial_step is not None else DEFAULT_RADIUS
    if box is not None:
        width = box[1] - box[0]
        if np.any(width <= 0):
            raise ValueError("box has zero width in some coordinate")
        delta = min(delta, 0.5 * float(width.min()))
    clip = (lambda x: np.clip(x, *box)) if box is not None else (lambda x: x)

    def eval_finite(base, disp):
        """Evaluate base + disp, halving disp while the value is non-finite."""
        for _ in range(INF_RETRIES):
            y = clip(base + disp)
            fy = track(y)
            if math.isfinite(fy):
                return y, fy
            disp = 0.5 * disp
        raise ValueError("could not find finite objective values around the start point")

    try:
        Y, F = _initial_points(x0, f0, m, delta, box, eval_finite)
        iset = _InterpolationSet(Y, F)
        if not iset.refit():
            raise ValueError("initial interpolation set is degenerate")

        fix_geometry = False
        while True:
            if delta < opts.xtol_abs:
                return track.result(XTOL, name)
            xb, fb = iset.xbest.copy(), iset.F[iset.kopt]
            dist = iset.distances()
            far = int(np.argmax(dist))

            if fix_geometry and dist[far] > 2 * delta:
                fix_geometry = False
                _geometry_step(iset, far, delta, box, track)
                continue
            fix_geometry = False

            model = iset.model
            if box is not None:
                s = _trust_region_step(model.g, model.H, delta, box[0] - xb, box[1] - xb)
            else:
                s = _trust_region_step(model.g, model.H, delta)
            snorm = float(np.linalg.norm(s))
            pred = -(model.g @ s + 0.5 * s @ model.H @ s)
            if snorm < 0.5 * delta or not pred > 0:
                if dist[far] > 2 * delta:
                    _geometry_step(iset, far, delta, box, track)
                else:
                    delta *= 0.5
                continue

            x_new = clip(xb + s)
            f_new = track(x_new)
            if not math.isfinite(f_new):
                delta *= 0.5
                continue
            ratio = (fb - f_new) / pred
            if ratio < SHRINK_BELOW:
                delta *= 0.5
                fix_geometry = True
            elif ratio > GROW_ABOVE:
                delta = max(delta, 2.0 * snorm)
                if box is not None:
                    delta = min(delta, float(np.linalg.norm(box[1] - box[0])))
            _insert(iset, x_new, f_new, improved=f_new < fb, delta=delta)
    except BudgetExhausted as stop:
        return track.result(stop.reason, name)


def _initial_points(x0, f0, m, delta, box, eval_finite):
    n = x0.size
    first = np.full(n, delta)
    second = np.full(n, -delta)
    if box is not None:
        lo, hi = box
        for i in range(n):
            up, down = x0[i] + delta <= hi[i], x0[i] - delta >= lo[i]
            if not up:
                first[i], second[i] = -delta, -2 * delta
            elif not down:
                second[i] = 2 * delta
    Y, F = [x0], [f0]
    for i in range(n):
        if len(Y) < m:
            y, fy = eval_finite(x0, first[i] * np.eye(n)[i])
            Y.append(y)
            F.append(fy)
    for i in range(n):
        if len(Y) < m:
            y, fy = eval_finite(x0, second[i] * np.eye(n)[i])
            Y.append(y)
            F.append(fy)
    for i in range(n):
        for j in range(i + 1, n):
            if len(Y) < m:
                disp = np.zeros(n)
                disp[i], disp[j] = Y[1 + i][i] - x0[i], Y[1 + j][j] - x0[j]
                y, fy = eval_finite(x0, disp)
                Y.append(y)
                F.append(fy)
    return np.array(Y), np.array(F, dtype=np.float64)


def _insert(iset: _InterpolationSet, x_new, f_new, improved: bool, delta: float) -> None:
    """Swap ``x_new`` into the set, keeping it well poised where possible."""
    center = x_new if improved else iset.xbest
    d2 = ((iset.Y - center) ** 2).sum(axis=1)
    weight = np.abs(iset.lagrange(x_new)[0]) * np.maximum(1.0, d2 / (delta * delta))
    if not improved:
        weight[iset.kopt] = -1.0
    j = int(np.argmax(weight))
    if weight[j] < 1e-8:
        d2 = d2.copy()
        if not improved:
            d2[iset.kopt] = -1.0
        j = int(np.argmax(d2))
    old_y, old_f = iset.Y[j].copy(), iset.F[j]
    iset.Y[j], iset.F[j] = x_new, f_new
    if not iset.refit():
        iset.Y[j], iset.F[j] = old_y, old_f
        iset.refit()


def _geometry_step(iset: _InterpolationSet, j: int, delta: float, box, track) -> None:
    """Replace point ``j`` by a point within ``delta`` of the best one that
    maximises the magnitude of its Lagrange function."""
    xb = iset.xbest
    n = xb.size
    dirs = [np.eye(n)]
    off = iset.Y - xb
    norms = np.sqrt((off ** 2).sum(axis=1))
    keep = norms > 0
    if keep.any():
        dirs.append(off[keep] / norms[keep, None])
    U = np.vstack(dirs)
    cand = np.vstack([xb + delta * U, xb - delta * U])
    if box is not None:
        cand = np.clip(cand, *box)
    cand = cand[np.sqrt(((cand - xb) ** 2).sum(axis=1)) > 0]
    if cand.size == 0:
        return
    score = np.abs(iset.lagrange(cand)[:, j])
    y = cand[int(np.argmax(score))]
    fy = track(y)
    if not math.isfinite(fy):
        return
    old_y, old_f = iset.Y[j].copy(), iset.F[j]
    iset.Y[j], iset.F[j] = y, fy
    if not iset.refit():
        iset.Y[j], iset.F[j] = old_y, old_f
        iset.refit()
