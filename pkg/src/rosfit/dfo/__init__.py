"""Derivative-free minimisers sharing one options/result contract."""
from rosfit.dfo._common import MAX_EVALS, MAX_TIME, XTOL, OptOptions, OptResult
from rosfit.dfo.nelder_mead import minimize_nelder_mead
from rosfit.dfo.pattern_search import minimize_pattern_search
from rosfit.dfo.quadratic_tr import minimize_quadratic_tr

NELDER_MEAD = "nelder-mead"
PATTERN_SEARCH = "pattern-search"
NEWUOA = "newuoa"
BOBYQA = "bobyqa"
ALGORITHMS = (NELDER_MEAD, PATTERN_SEARCH, NEWUOA, BOBYQA)

_DISPATCH = {
    NELDER_MEAD: minimize_nelder_mead,
    PATTERN_SEARCH: minimize_pattern_search,
    NEWUOA: minimize_quadratic_tr,
    BOBYQA: minimize_quadratic_tr,
}


def minimize(f, x0, algorithm: str, opts: OptOptions | None = None) -> OptResult:
    """Dispatch by name. ``newuoa`` and ``bobyqa`` are the same quadratic
    trust-region code, without and with ``opts.bounds``."""
    try:
        fn = _DISPATCH[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}") from None
    opts = opts or OptOptions()
    if algorithm == BOBYQA and opts.bounds is None:
        raise ValueError("bobyqa needs bounds")
    if algorithm == NEWUOA and opts.bounds is not None:
        raise ValueError("newuoa is the unconstrained mode; drop the bounds or use bobyqa")
    res = fn(f, x0, opts)
    res.algorithm = algorithm
    return res


__all__ = [
    "ALGORITHMS", "BOBYQA", "MAX_EVALS", "MAX_TIME", "NELDER_MEAD", "NEWUOA", "PATTERN_SEARCH",
    "XTOL", "OptOptions", "OptResult", "minimize", "minimize_nelder_mead",
    "minimize_pattern_search", "minimize_quadratic_tr",
]
