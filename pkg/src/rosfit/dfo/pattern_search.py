"""Compass (coordinate) pattern search."""
from __future__ import annotations

from rosfit.dfo._common import XTOL, BudgetExhausted, OptOptions, OptResult, start

DEFAULT_STEP = 0.25


def minimize_pattern_search(f, x0, opts: OptOptions | None = None) -> OptResult:
    """Poll ``x +/- step * e_i`` in index order, take the first strict
    improvement, halve the step after a failed poll. Poll points outside the
    box are skipped, not evaluated.
    """
    opts = opts or OptOptions()
    track, x, fx = start(f, x0, opts)
    n = x.size
    box = opts.box(n)
    step = opts.initial_step if opts.initial_step is not None else DEFAULT_STEP
    try:
        while step >= opts.xtol_abs:
            improved = False
            for i in range(n):
                for sign in (1.0, -1.0):
                    y = x.copy()
                    y[i] += sign * step
                    if y[i] == x[i]:
                        continue
                    if box is not None and not box[0][i] <= y[i] <= box[1][i]:
                        continue
                    fy = track(y)
                    if fy < fx:
                        x, fx = y, fy
                        improved = True
                        break
                if improved:
                    break
            if not improved:
                step *= 0.5
        return track.result(XTOL, "pattern-search")
    except BudgetExhausted as stop:
        return track.result(stop.reason, "pattern-search")
