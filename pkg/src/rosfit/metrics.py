"""Agreement metrics between binary burn grids."""
from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

SSIM_K1 = 0.01
SSIM_K2 = 0.03
NORMS = ("frobenius", "hamming")


def _pair(S, P) -> tuple[np.ndarray, np.ndarray]:
    S = np.asarray(S)
    P = np.asarray(P)
    if S.shape != P.shape:
        raise ValueError(f"grid dimension mismatch: {S.shape} vs {P.shape}")
    return S, P


def hamming(S, P) -> int:
    """Number of cells where the grids differ."""
    S, P = _pair(S, P)
    return int(np.count_nonzero(S != P))


def frobenius_error(S, P) -> float:
    return math.sqrt(hamming(S, P))


def mse(S, P) -> float:
    S, P = _pair(S, P)
    return hamming(S, P) / S.size


def _ssim_stats(mu_s, mu_p, var_s, var_p, cov, c1, c2):
    return ((2 * mu_s * mu_p + c1) * (2 * cov + c2)) / (
        (mu_s ** 2 + mu_p ** 2 + c1) * (var_s + var_p + c2))


def ssim(S, P, window: int | None = None, data_range: float = 1.0) -> float:
    """Structural similarity of two grids.

    With ``window=None`` the whole grid is one window (population
    statistics). With an integer, square windows of that side slide at
    stride 1 and the per-window values are averaged; grids smaller than the
    window fall back to the global form.
    """
    S, P = _pair(S, P)
    S = S.astype(np.float64)
    P = P.astype(np.float64)
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    if window is None or window > min(S.shape):
        mu_s, mu_p = S.mean(), P.mean()
        var_s = ((S - mu_s) ** 2).mean()
        var_p = ((P - mu_p) ** 2).mean()
        cov = ((S - mu_s) * (P - mu_p)).mean()
        return float(_ssim_stats(mu_s, mu_p, var_s, var_p, cov, c1, c2))
    ws = sliding_window_view(S, (window, window))
    wp = sliding_window_view(P, (window, window))
    mu_s = ws.mean(axis=(-2, -1))
    mu_p = wp.mean(axis=(-2, -1))
    var_s = (ws ** 2).mean(axis=(-2, -1)) - mu_s ** 2
    var_p = (wp ** 2).mean(axis=(-2, -1)) - mu_p ** 2
    cov = (ws * wp).mean(axis=(-2, -1)) - mu_s * mu_p
    return float(_ssim_stats(mu_s, mu_p, var_s, var_p, cov, c1, c2).mean())


def grid_norm(S, P, norm: str = "frobenius") -> float:
    if norm == "frobenius":
        return frobenius_error(S, P)
    if norm == "hamming":
        return float(hamming(S, P))
    raise ValueError(f"unknown norm {norm!r}; expected one of {NORMS}")


def weighted_error(sim, obs, mu, norm: str = "frobenius") -> float:
    """sum_t mu_t * ||sim_t - obs_t||.

    ``sim`` and ``obs`` are ScarSeries (timestamps must agree) or plain
    sequences of grids.
    """
    mu = np.asarray(mu, dtype=np.float64)
    ts_sim = getattr(sim, "timestamps", None)
    ts_obs = getattr(obs, "timestamps", None)
    if ts_sim is not None and ts_obs is not None and tuple(ts_sim) != tuple(ts_obs):
        raise ValueError(f"series timestamps differ: {ts_sim} vs {ts_obs}")
    if not (len(sim) == len(obs) == len(mu)):
        raise ValueError(
            f"length mismatch: {len(sim)} simulated, {len(obs)} observed, {len(mu)} weights")
    if np.any(mu < 0) or not np.all(np.isfinite(mu)):
        raise ValueError("weights must be finite and non-negative")
    if not np.any(mu > 0):
        raise ValueError("at least one weight must be positive")
    return float(sum(m * grid_norm(s, p, norm) for m, s, p in zip(mu, sim, obs) if m != 0))


def uniform_weights(T: int) -> np.ndarray:
    return np.full(T, 1.0 / T)


def final_only_weights(T: int) -> np.ndarray:
    mu = np.zeros(T)
    mu[-1] = 1.0
    return mu


def compare(S, P) -> dict[str, float]:
    """All metrics for one pair of grids."""
    return {
        "frobenius": frobenius_error(S, P),
        "hamming": hamming(S, P),
        "mse": mse(S, P),
        "ssim": ssim(S, P),
    }
