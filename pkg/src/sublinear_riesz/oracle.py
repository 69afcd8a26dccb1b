"""Brute-force references for tests. Nothing here reuses the kernel, summation
or rearrangement code it is meant to check."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.integrate import quad


def _sphere_average(alpha: float, n: int, radius: float, dist: float) -> float:
    """Mean of |x-y|^{alpha-n} over y uniform on the sphere of the given radius, |x| = dist."""
    e = (alpha - n) / 2.0
    w = n - 2

    def integrand(theta):
        d2 = dist * dist + radius * radius - 2.0 * dist * radius * math.cos(theta)
        return d2**e * math.sin(theta) ** w

    def norm(theta):
        return math.sin(theta) ** w

    num, _ = quad(integrand, 0.0, math.pi, epsabs=1e-13, epsrel=1e-12, limit=400)
    den, _ = quad(norm, 0.0, math.pi, epsabs=1e-14, epsrel=1e-13)
    return num / den


def radial_reduction(alpha: float, n: int, kind: str, radius: float, mass: float, x, constant: float = 1.0) -> float:
    """constant * int |x-y|^{alpha-n} d mu(y) for mu uniform of total ``mass`` on a sphere or ball.

    The sphere reduces to one angular integral; the ball adds a radial one.
    """
    dist = float(np.linalg.norm(np.asarray(x, dtype=float)))
    if kind == "sphere":
        if abs(dist - radius) < 1e-12:
            raise ValueError("target on the sphere")
        return constant * mass * _sphere_average(alpha, n, radius, dist)
    if kind == "ball":
        def shell(rho):
            if rho == 0.0:
                return 0.0
            return rho ** (n - 1) * _sphere_average(alpha, n, rho, dist)

        pts = [dist] if 0 < dist < radius else None
        val, _ = quad(shell, 0.0, radius, points=pts, epsabs=1e-13, epsrel=1e-11, limit=400)
        return constant * mass * n / radius**n * val
    raise ValueError("kind must be 'sphere' or 'ball'")


def simplex_enumerate_kappa(points, masses, candidates, q: float, alpha: float, constant: float = 1.0,
                            resolution: float = 1e-3) -> float:
    """max over a lattice of the probability simplex of (sum_k m_k (sum_j w_j c|x_k-y_j|^{alpha-n})^q)^{1/q}.

    Up to four candidates; weights are multiples of ``resolution``.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    Y = np.atleast_2d(np.asarray(candidates, dtype=float))
    m = np.asarray(masses, dtype=float)
    if len(Y) > 4:
        raise ValueError("at most four candidates")
    n = X.shape[1]
    A = np.empty((len(X), len(Y)))
    for i, x in enumerate(X):
        for j, y in enumerate(Y):
            A[i, j] = constant * math.sqrt(sum((x[a] - y[a]) ** 2 for a in range(n))) ** (alpha - n)
    steps = int(round(1.0 / resolution))
    best = 0.0
    k = len(Y)
    if k == 1:
        return float(np.sum(m * A[:, 0] ** q) ** (1.0 / q))
    # enumerate all but the last two coordinates, vectorize over the last free one
    for head in itertools.product(range(steps + 1), repeat=k - 2):
        rest = steps - sum(head)
        if rest < 0:
            continue
        a = np.arange(rest + 1)
        W = np.empty((rest + 1, k))
        W[:, : k - 2] = np.asarray(head, dtype=float)
        W[:, k - 2] = a
        W[:, k - 1] = rest - a
        W /= steps
        vals = (W @ A.T) ** q @ m
        best = max(best, float(vals.max()))
    return best ** (1.0 / q)


def lorentz_by_quadrature(values, cell_volume: float, r: float, rho: float, nodes: int = 8, depth: int = 200) -> float:
    """(int_0^inf (t^{1/r} f*(t))^rho dt/t)^{1/rho} by Gauss-Legendre quadrature.

    f* is read off the sorted values, one cell volume per value. The first
    cell is split dyadically toward t = 0; each later cell gets one
    ``nodes``-point rule.
    """
    v = np.sort(np.abs(np.asarray(values, dtype=float)).ravel())[::-1]
    v = v[v > 0]
    if len(v) == 0:
        return 0.0
    x, w = np.polynomial.legendre.leggauss(nodes)
    e = rho / r - 1.0

    def integrate(a, b):
        # int_a^b t^e dt for arrays of intervals
        half = 0.5 * (b - a)
        t = half[:, None] * x[None, :] + (0.5 * (b + a))[:, None]
        return half * (t**e @ w)

    lo = cell_volume * 0.5 ** np.arange(1, depth + 1)
    first = float(np.sum(integrate(lo, 2 * lo))) * v[0] ** rho
    starts = cell_volume * np.arange(1, len(v))
    rest = float(np.sum(integrate(starts, starts + cell_volume) * v[1:] ** rho))
    return (first + rest) ** (1.0 / rho)


def radial_quadrature_atoms(n: int, kind: str, radius: float, mass: float, count: int, shells: int = 16):
    """Atoms (locations, masses) integrating the uniform measure on a sphere or ball.

    Circles use ``count`` equispaced points; 2-spheres a Gauss-Legendre rule
    in cos(theta) with ``count`` nodes times ``2 count`` equispaced angles.
    Balls stack ``shells`` Gauss-Legendre radii with weight n rho^{n-1}/R^n.
    Both rules converge spectrally for targets off the support.
    """
    def sphere(rho):
        if n == 2:
            th = 2 * np.pi * np.arange(count) / count
            return rho * np.column_stack([np.cos(th), np.sin(th)]), np.full(count, 1.0 / count)
        if n != 3:
            raise ValueError("n must be 2 or 3")
        z, wz = np.polynomial.legendre.leggauss(count)
        phi = 2 * np.pi * np.arange(2 * count) / (2 * count)
        Z, P = np.meshgrid(z, phi, indexing="ij")
        s = np.sqrt(1 - Z * Z)
        pts = rho * np.column_stack([(s * np.cos(P)).ravel(), (s * np.sin(P)).ravel(), Z.ravel()])
        return pts, np.repeat(wz / 2, 2 * count) / (2 * count)

    if kind == "sphere":
        pts, w = sphere(radius)
        return pts, mass * w
    if kind != "ball":
        raise ValueError("kind must be 'sphere' or 'ball'")
    x, wx = np.polynomial.legendre.leggauss(shells)
    rho = 0.5 * radius * (x + 1)
    wr = 0.5 * radius * wx * n * rho ** (n - 1) / radius**n
    parts = [sphere(r) for r in rho]
    pts = np.vstack([p for p, _ in parts])
    w = np.concatenate([wi * ww for (_, ww), wi in zip(parts, wr)])
    return pts, mass * w
