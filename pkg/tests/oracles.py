"""Independent slow-path oracles used only by the tests.

These deliberately avoid the production fast paths: the layer matrix is
rebuilt from the sinusoid/stress coefficient matrices and a numerical
inverse, the gap finder walks a ten-times-finer grid with scipy
refinement, and half traces always go through the matrix product.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from phonogap.crystal import (
    Layer,
    Polarization,
    UnitCell,
    cell_transfer_matrix,
    transit_time,
    wave_speed,
)


def state_matrix(layer: Layer, z_hat: float, omega_hat: float, pol: Polarization) -> np.ndarray:
    """Coefficient matrix mapping sinusoid amplitudes to (displacement,
    stress) at depth z within the layer."""
    c = wave_speed(layer, pol)
    m = layer.modulus(pol)
    arg = omega_hat * z_hat / c
    k = m * omega_hat / c
    return np.array(
        [
            [math.sin(arg), math.cos(arg)],
            [k * math.cos(arg), -k * math.sin(arg)],
        ]
    )


def layer_matrix_oracle(layer: Layer, omega_hat: float, pol: Polarization) -> np.ndarray:
    """Propagator as state_matrix(h) @ inv(state_matrix(0))."""
    top = state_matrix(layer, layer.h_hat, omega_hat, pol)
    bottom = state_matrix(layer, 0.0, omega_hat, pol)
    return top @ np.linalg.inv(bottom)


def half_trace_matrix(cell: UnitCell, omega_hat: float, pol: Polarization) -> float:
    t = cell_transfer_matrix(cell, omega_hat, pol)
    return 0.5 * (t[0, 0] + t[1, 1])


def brute_force_first_gap(
    cell: UnitCell,
    pol: Polarization,
    resolution: int = 2000,
    cap_factor: float = 8.0,
) -> tuple[float, float] | None:
    """(start, end) of the first band gap from a dense scan.

    Walks a grid ten times finer than the production default, refines
    edges with brentq and checks every local minimum of |half_trace|
    with bounded scalar minimization so narrow passbands are honored.
    """
    tau = transit_time(cell, pol)
    step = math.pi / (resolution * tau)
    n_cap = int(8.0 * math.pi / tau / step * cap_factor / 8.0)

    def g(w: float) -> float:
        return abs(half_trace_matrix(cell, w, pol)) - 1.0

    start = None
    k = 1
    prev = 0.0
    while k <= n_cap:
        val = g(step * k)
        if val > 1e-12:
            lo = step * (k - 1) if k > 1 else step * 1e-6
            start = brentq(g, lo, step * k, xtol=1e-12)
            break
        prev = val
        k += 1
    if start is None:
        return None

    values = [g(step * k)]
    positions = [step * k]
    m = k + 1
    while True:
        if m > 8 * n_cap:
            raise RuntimeError("oracle did not find the gap end")
        w = step * m
        val = g(w)
        values.append(val)
        positions.append(w)
        if val <= 1e-12:
            end = brentq(g, positions[-2], w, xtol=1e-12)
            return start, end
        if len(values) >= 3 and values[-2] < values[-3] and values[-2] <= values[-1]:
            res = minimize_scalar(
                g, bounds=(positions[-3], positions[-1]), method="bounded",
                options={"xatol": 1e-13},
            )
            if res.fun < 0.0:
                end = brentq(g, positions[-3], res.x, xtol=1e-12)
                return start, end
        m += 1


def gauss_legendre(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [lo, hi]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), w * half
