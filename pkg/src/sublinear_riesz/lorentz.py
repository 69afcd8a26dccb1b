"""Decreasing rearrangements, Lorentz quasi-norms and L^p norms against measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GridFunction, LorentzPair, Measure


@dataclass(frozen=True)
class StepRearrangement:
    """Step function f* with value ``levels[k]`` on ``[breakpoints[k], breakpoints[k+1])``.

    ``breakpoints`` starts at 0 and has one more entry than ``levels``.
    """

    breakpoints: np.ndarray
    levels: np.ndarray

    @property
    def total_volume(self) -> float:
        return float(self.breakpoints[-1])

    def distribution(self, lam: float) -> float:
        """|{f* > lam}|, equal to |{|f| > lam}| for the original function."""
        k = int(np.searchsorted(-self.levels, -lam, side="left"))
        return float(self.breakpoints[k])

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.breakpoints, t, side="right") - 1
        out = np.zeros(t.shape)
        ok = (k >= 0) & (k < len(self.levels))
        out[ok] = self.levels[k[ok]]
        return out


def rearrange(f: GridFunction) -> StepRearrangement:
    """Decreasing rearrangement of |f|; each cell carries Lebesgue measure ``cell_volume``.

    Equal values merge into one step.
    """
    v = np.abs(np.asarray(f.values, dtype=float))
    if not np.isfinite(v).all():
        raise ValueError("rearrangement needs finite values")
    levels, counts = np.unique(v, return_counts=True)
    levels, counts = levels[::-1], counts[::-1]
    t = np.concatenate([[0.0], np.cumsum(counts) * f.grid.cell_volume])
    return StepRearrangement(t, levels)


def _pair(p) -> tuple[float, float]:
    if isinstance(p, LorentzPair):
        return float(p.r), float(p.rho)
    r, rho = p
    r, rho = float(r), float(rho)
    if not (0 < r < np.inf) or not rho > 0:
        raise ValueError("need 0 < r < inf and rho > 0")
    return r, rho


def lorentz_norm(f: GridFunction | StepRearrangement, p) -> float:
    """||f||_{L^{r,rho}} = (int_0^inf (t^{1/r} f*(t))^rho dt/t)^{1/rho}.

    ``p`` is a :class:`LorentzPair` or an ``(r, rho)`` tuple; ``rho`` may be
    ``inf``, giving sup_t t^{1/r} f*(t). Each step integrates in closed form.
    """
    r, rho = _pair(p)
    fs = f if isinstance(f, StepRearrangement) else rearrange(f)
    t0, t1, lv = fs.breakpoints[:-1], fs.breakpoints[1:], fs.levels
    keep = lv > 0
    t0, t1, lv = t0[keep], t1[keep], lv[keep]
    if len(lv) == 0:
        return 0.0
    if np.isinf(rho):
        return float(np.max(t1 ** (1.0 / r) * lv))
    e = rho / r
    pieces = lv**rho * (r / rho) * (t1**e - t0**e)
    return float(np.sum(pieces) ** (1.0 / rho))


def lp_norm_grid(f: GridFunction, p: float) -> float:
    """Lebesgue L^p norm of a grid function."""
    v = np.abs(f.values)
    return float((np.sum(v**p) * f.grid.cell_volume) ** (1.0 / p))


def values_on_support(f, m: Measure) -> tuple[np.ndarray, np.ndarray]:
    """Values of ``f`` at the support points of ``m`` with the matching masses.

    ``f`` may be a :class:`GridFunction` (atoms must sit on cell centers,
    densities must share its grid), a :class:`PotentialField` evaluated on a
    grid or on a point list containing the support, or a callable on points.
    """
    locs, masses = m.support_points()
    if callable(f) and not isinstance(f, GridFunction):
        return np.asarray(f(locs), dtype=float), masses
    targets = getattr(f, "targets", None)
    if isinstance(f, GridFunction) or hasattr(targets, "locate"):
        grid = f.grid if isinstance(f, GridFunction) else targets
        idx = grid.locate(locs) if len(locs) else np.zeros(0, dtype=int)
        if (idx < 0).any():
            raise ValueError("f is not defined at every atom of the measure")
        return np.asarray(f.values)[idx], masses
    pts = np.asarray(targets, dtype=float)
    vals = np.asarray(f.values)
    out = np.empty(len(locs))
    for i, x in enumerate(locs):
        d = np.linalg.norm(pts - x, axis=1)
        j = int(np.argmin(d))
        if d[j] > 1e-9:
            raise ValueError("f is not defined at every atom of the measure")
        out[i] = vals[j]
    return out, masses


def lp_norm_measure(f, p: float, m: Measure) -> float:
    """(int |f|^p dm)^{1/p}; ``+inf`` values propagate."""
    if not p > 0:
        raise ValueError("p must be positive")
    vals, masses = values_on_support(f, m)
    total = float(np.sum(masses * np.abs(vals) ** p))
    return total ** (1.0 / p)
