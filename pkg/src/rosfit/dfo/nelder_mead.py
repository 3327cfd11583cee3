"""Nelder-Mead downhill simplex."""
from __future__ import annotations

import numpy as np

from rosfit.dfo._common import XTOL, BudgetExhausted, OptOptions, OptResult, start

REFLECT = 1.0
EXPAND = 2.0
CONTRACT = 0.5
SHRINK = 0.5


def _diameter(simplex: np.ndarray) -> float:
    diff = simplex[:, None, :] - simplex[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1)).max())


def minimize_nelder_mead(f, x0, opts: OptOptions | None = None) -> OptResult:
    """Minimise ``f`` from ``x0`` with a reflect/expand/contract/shrink simplex.

    The initial simplex is ``x0 + h_i e_i`` with ``h_i = 0.05 * max(|x0_i|, 1)``
    unless ``opts.initial_step`` fixes ``h``. With bounds, every trial point is
    clipped into the box before it is evaluated.
    """
    opts = opts or OptOptions()
    track, x0, f0 = start(f, x0, opts)
    n = x0.size
    box = opts.box(n)
    clip = (lambda x: np.clip(x, *box)) if box is not None else (lambda x: x)

    try:
        simplex = np.empty((n + 1, n))
        fvals = np.empty(n + 1)
        simplex[0], fvals[0] = x0, f0
        for i in range(n):
            h = opts.initial_step if opts.initial_step is not None else 0.05 * max(abs(x0[i]), 1.0)
            y = x0.copy()
            y[i] += h
            y = clip(y)
            if box is not None and y[i] == x0[i]:
                y[i] = np.clip(x0[i] - h, *[b[i] for b in box])
            simplex[i + 1], fvals[i + 1] = y, track(y)

        while True:
            order = np.argsort(fvals, kind="stable")
            simplex, fvals = simplex[order], fvals[order]
            if _diameter(simplex) < opts.xtol_abs:
                return track.result(XTOL, "nelder-mead")

            worst = simplex[-1]
            centroid = simplex[:-1].mean(axis=0)
            xr = clip(centroid + REFLECT * (centroid - worst))
            fr = track(xr)
            if fvals[0] <= fr < fvals[-2]:
                simplex[-1], fvals[-1] = xr, fr
                continue
            if fr < fvals[0]:
                xe = clip(centroid + EXPAND * (xr - centroid))
                fe = track(xe)
                if fe < fr:
                    simplex[-1], fvals[-1] = xe, fe
                else:
                    simplex[-1], fvals[-1] = xr, fr
                continue
            if fr < fvals[-1]:
                xc = clip(centroid + CONTRACT * (xr - centroid))
                fc = track(xc)
                if fc <= fr:
                    simplex[-1], fvals[-1] = xc, fc
                    continue
            else:
                xc = clip(centroid + CONTRACT * (worst - centroid))
                fc = track(xc)
                if fc < fvals[-1]:
                    simplex[-1], fvals[-1] = xc, fc
                    continue
            for i in range(1, n + 1):
                simplex[i] = clip(simplex[0] + SHRINK * (simplex[i] - simplex[0]))
                fvals[i] = track(simplex[i])
    except BudgetExhausted as stop:
        return track.result(stop.reason, "nelder-mead")
