"""Dimensionless transfer-matrix solver for 1D layered elastic crystals.

Everything is nondimensional: lengths by the unit-cell height, densities
and moduli by the first layer's density and Young's modulus, so the
dimensionless radial frequency is ``omega_hat = omega * h * sqrt(rho1/E1)``.

For a single layer with transit phase ``phi = omega_hat * h_hat / c_hat``
and acoustic impedance ``z = rho_hat * c_hat`` the (displacement, stress)
state vector propagates bottom-to-top through the real 2x2 matrix::

    T = [[ cos(phi),            sin(phi) / (omega_hat z) ],
         [ -omega_hat z sin(phi),          cos(phi)      ]]

which is the closed form of H(h) H(0)^{-1} for the sinusoidal steady
state, and is exactly unimodular.  The unit-cell matrix is the ordered
product over layers (first layer rightmost).  With the Bloch condition
across one cell, Cayley-Hamilton reduces the eigenproblem of the
unimodular cell matrix to ``cos(k_hat * h_hat) = trace(T)/2``: real wave
numbers exist only where ``|trace/2| <= 1``, and ``|trace/2| > 1`` marks
a band gap.  S-waves use the shear modulus, P-waves the longitudinal
modulus ``lambda + 2 mu``, in both the speed and the stress row.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .sampling import ParameterSpace, canonical_space, map_to_space
from .sobol import ModelEvaluationError, ModelFunction

__all__ = [
    "NU_CAP",
    "Polarization",
    "ObjectiveKind",
    "Layer",
    "UnitCell",
    "BandGap",
    "DispersionPoint",
    "NoBandGapError",
    "lame_from_e_nu",
    "wave_speed",
    "layer_transfer_matrix",
    "cell_transfer_matrix",
    "half_trace",
    "two_layer_half_trace",
    "dispersion_curve",
    "first_band_gap",
    "transit_time",
    "two_layer_cell",
    "objective",
    "objective_model",
]

#: Upper bound on Poisson's ratio accepted by :class:`Layer`.  Beyond it
#: the first Lame parameter blows up towards the incompressible limit.
NU_CAP = 0.463

#: Excursions of |half_trace| above one smaller than this are treated as
#: rounding noise by the gap scan, not as band gaps.  Physical gaps
#: overshoot by orders of magnitude more; homogeneous stacks only by a
#: few ulps.
_GAP_GUARD = 1e-12


class Polarization(str, Enum):
    S = "S"
    P = "P"


class ObjectiveKind(str, Enum):
    """First-gap objectives: start (S*) or width (W*) per polarization."""

    SS = "SS"  # start, S-wave
    WS = "WS"  # width, S-wave
    SP = "SP"  # start, P-wave
    WP = "WP"  # width, P-wave

    @property
    def polarization(self) -> Polarization:
        return Polarization.S if self.value.endswith("S") else Polarization.P

    @property
    def is_width(self) -> bool:
        return self.value.startswith("W")


class NoBandGapError(RuntimeError):
    """No band gap below the search cap; carries the offending parameters."""

    def __init__(self, message: str, params: Sequence[float] | None = None):
        self.params = None if params is None else tuple(float(p) for p in params)
        super().__init__(message if self.params is None else f"{message} (params={self.params})")


def lame_from_e_nu(e_hat: float, nu: float) -> tuple[float, float]:
    """Isotropic Lame parameters (lambda, mu) from Young's modulus and nu."""
    if e_hat <= 0:
        raise ValueError("Young's modulus must be positive")
    if not 0.0 <= nu < 0.5:
        raise ValueError(f"Poisson's ratio {nu} is singular or unphysical (need 0 <= nu < 0.5)")
    mu = e_hat / (2.0 * (1.0 + nu))
    lam = e_hat * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return lam, mu


@dataclass(frozen=True)
class Layer:
    """One layer: thickness, density and Young's modulus relative to the
    reference layer, plus its own Poisson's ratio."""

    h_hat: float
    rho_hat: float
    e_hat: float
    nu: float

    def __post_init__(self) -> None:
        if self.h_hat <= 0 or self.rho_hat <= 0 or self.e_hat <= 0:
            raise ValueError("layer thickness, density and modulus must be positive")
        if self.nu >= 0.5:
            raise ValueError(f"Poisson's ratio {self.nu} >= 0.5: material is singular")
        if not 0.0 <= self.nu <= NU_CAP:
            raise ValueError(f"Poisson's ratio {self.nu} outside the supported [0, {NU_CAP}]")

    @property
    def lame(self) -> tuple[float, float]:
        return lame_from_e_nu(self.e_hat, self.nu)

    def modulus(self, pol: Polarization | str) -> float:
        """Shear modulus for S-waves, longitudinal modulus for P-waves."""
        lam, mu = self.lame
        return mu if Polarization(pol) is Polarization.S else lam + 2.0 * mu


def wave_speed(layer: Layer, pol: Polarization | str) -> float:
    """Dimensionless wave speed sqrt(modulus / density)."""
    return math.sqrt(layer.modulus(pol) / layer.rho_hat)


@dataclass(frozen=True)
class UnitCell:
    """Ordered stack of layers; thicknesses are normalized to sum to one
    on construction so callers may pass raw thickness ratios."""

    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a unit cell needs at least one layer")
        total = math.fsum(l.h_hat for l in layers)
        if total != 1.0:
            hs = [l.h_hat / total for l in layers]
            # pin the thickest layer so the exact sum is one
            k = max(range(len(hs)), key=hs.__getitem__)
            hs[k] = 1.0 - math.fsum(h for i, h in enumerate(hs) if i != k)
            layers = tuple(
                Layer(h, l.rho_hat, l.e_hat, l.nu) for h, l in zip(hs, layers)
            )
        first = layers[0]
        if first.rho_hat != 1.0 or first.e_hat != 1.0:
            raise ValueError(
                "layer 1 is the reference: its density and modulus ratios must be 1"
            )
        object.__setattr__(self, "layers", layers)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @classmethod
    def from_dimensional(
        cls,
        heights: Sequence[float],
        densities: Sequence[float],
        youngs_moduli: Sequence[float],
        poisson_ratios: Sequence[float],
    ) -> "UnitCell":
        """Nondimensionalize raw per-layer properties by the first layer
        (density, modulus) and the total height."""
        total_h = float(sum(heights))
        rho1 = float(densities[0])
        e1 = float(youngs_moduli[0])
        return cls(
            tuple(
                Layer(h / total_h, rho / rho1, e / e1, nu)
                for h, rho, e, nu in zip(heights, densities, youngs_moduli, poisson_ratios)
            )
        )

    def to_json(self) -> str:
        payload = {
            "layers": [
                {"h": l.h_hat, "rho": l.rho_hat, "e": l.e_hat, "nu": l.nu}
                for l in self.layers
            ]
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "UnitCell":
        payload = json.loads(text)
        return cls(
            tuple(
                Layer(float(l["h"]), float(l["rho"]), float(l["e"]), float(l["nu"]))
                for l in payload["layers"]
            )
        )


def two_layer_cell(
    e2_e1: float, rho2_rho1: float, h2_h1: float, nu1: float, nu2: float
) -> UnitCell:
    """Two-layer cell from the five canonical ratios (layer 1 is the reference)."""
    if min(e2_e1, rho2_rho1, h2_h1) <= 0:
        raise ValueError("all ratios must be positive")
    return UnitCell(
        (
            Layer(1.0 / (1.0 + h2_h1), 1.0, 1.0, nu1),
            Layer(h2_h1 / (1.0 + h2_h1), rho2_rho1, e2_e1, nu2),
        )
    )


def layer_transfer_matrix(layer: Layer, omega_hat: float, pol: Polarization) -> np.ndarray:
    """2x2 state-vector propagator across one layer (exactly unimodular)."""
    if omega_hat <= 0:
        raise ValueError("omega_hat must be positive")
    c = wave_speed(layer, pol)
    z = layer.rho_hat * c
    phi = omega_hat * layer.h_hat / c
    cp, sp = math.cos(phi), math.sin(phi)
    return np.array([[cp, sp / (omega_hat * z)], [-omega_hat * z * sp, cp]])


def cell_transfer_matrix(cell: UnitCell, omega_hat: float, pol: Polarization) -> np.ndarray:
    """Ordered product over the stack, first layer rightmost."""
    t = layer_transfer_matrix(cell.layers[0], omega_hat, pol)
    for layer in cell.layers[1:]:
        t = layer_transfer_matrix(layer, omega_hat, pol) @ t
    return t


def half_trace(cell: UnitCell, omega_hat: float, pol: Polarization) -> float:
    """Half the trace of the unit-cell matrix: cos(k_hat h_hat) in passbands."""
    t = cell_transfer_matrix(cell, omega_hat, pol)
    return 0.5 * (t[0, 0] + t[1, 1])


def two_layer_half_trace(
    e2_e1: float,
    rho2_rho1: float,
    h2_h1: float,
    nu1: float,
    nu2: float,
    omega_hat: float,
    pol: Polarization,
) -> float:
    """Closed-form half trace of a two-layer cell.

    ``cos(phi1) cos(phi2) - (z1/z2 + z2/z1)/2 * sin(phi1) sin(phi2)``
    with per-layer transit phases and impedances; equal to the matrix
    product for any polarization.
    """
    cell = two_layer_cell(e2_e1, rho2_rho1, h2_h1, nu1, nu2)
    l1, l2 = cell.layers
    c1, c2 = wave_speed(l1, pol), wave_speed(l2, pol)
    z1, z2 = l1.rho_hat * c1, l2.rho_hat * c2
    p1 = omega_hat * l1.h_hat / c1
    p2 = omega_hat * l2.h_hat / c2
    return math.cos(p1) * math.cos(p2) - 0.5 * (z1 / z2 + z2 / z1) * math.sin(p1) * math.sin(p2)


def transit_time(cell: UnitCell, pol: Polarization) -> float:
    """Total transit time across the cell, sum of h_hat / c_hat."""
    return sum(l.h_hat / wave_speed(l, pol) for l in cell.layers)


def _ht_evaluators(
    cell: UnitCell, pol: Polarization
) -> tuple[Callable[[np.ndarray], np.ndarray], Callable[[float], float]]:
    """(vectorized, scalar) half-trace evaluators for repeated sweeps.

    Two-layer cells collapse to two cosines via the product-to-sum
    identity; general stacks multiply the 2x2 propagators.  Both agree
    with :func:`half_trace` to machine precision.
    """
    if cell.n_layers == 2:
        l1, l2 = cell.layers
        c1, c2 = wave_speed(l1, pol), wave_speed(l2, pol)
        a = l1.h_hat / c1
        b = l2.h_hat / c2
        z1, z2 = l1.rho_hat * c1, l2.rho_hat * c2
        zbar = 0.5 * (z1 / z2 + z2 / z1)
        p, q = 0.5 * (1.0 - zbar), 0.5 * (1.0 + zbar)
        diff, tot = a - b, a + b

        def grid(omegas: np.ndarray) -> np.ndarray:
            return p * np.cos(diff * omegas) + q * np.cos(tot * omegas)

        def scalar(omega: float) -> float:
            return p * math.cos(diff * omega) + q * math.cos(tot * omega)

        return grid, scalar

    speeds = [wave_speed(l, pol) for l in cell.layers]
    phases = np.array([l.h_hat / c for l, c in zip(cell.layers, speeds)])
    imps = np.array([l.rho_hat * c for l, c in zip(cell.layers, speeds)])

    def grid_general(omegas: np.ndarray) -> np.ndarray:
        omegas = np.asarray(omegas, dtype=float)
        phi = np.outer(omegas, phases)
        cp, sp = np.cos(phi), np.sin(phi)
        t = np.empty((len(omegas), 2, 2))
        t[:, 0, 0] = cp[:, 0]
        t[:, 1, 1] = cp[:, 0]
        t[:, 0, 1] = sp[:, 0] / (omegas * imps[0])
        t[:, 1, 0] = -omegas * imps[0] * sp[:, 0]
        for k in range(1, len(imps)):
            m = np.empty_like(t)
            m[:, 0, 0] = cp[:, k]
            m[:, 1, 1] = cp[:, k]
            m[:, 0, 1] = sp[:, k] / (omegas * imps[k])
            m[:, 1, 0] = -omegas * imps[k] * sp[:, k]
            t = m @ t
        return 0.5 * (t[:, 0, 0] + t[:, 1, 1])

    def scalar_general(omega: float) -> float:
        return float(grid_general(np.array([omega]))[0])

    return grid_general, scalar_general


@dataclass(frozen=True)
class BandGap:
    """One forbidden band in dimensionless radial frequency."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if not 0.0 < self.start < self.end:
            raise ValueError("a band gap needs 0 < start < end")

    @property
    def width(self) -> float:
        return self.end - self.start

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "width": self.width}


@dataclass(frozen=True)
class DispersionPoint:
    omega_hat: float
    half_trace: float
    k_hat_h: float | None
    in_gap: bool


def dispersion_curve(
    cell: UnitCell, omega_max: float, n_points: int, pol: Polarization
) -> list[DispersionPoint]:
    """Dispersion samples on a uniform frequency grid up to ``omega_max``.

    Within passbands the wave number is folded into the first Brillouin
    zone, ``k_hat h_hat = arccos(half_trace) in [0, pi]``; in gaps it is
    absent and the point is flagged.
    """
    if omega_max <= 0:
        raise ValueError("omega_max must be positive")
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    omegas = np.linspace(0.0, omega_max, n_points + 1)[1:]
    grid, _ = _ht_evaluators(cell, pol)
    values = grid(omegas)
    points = []
    for w, ht in zip(omegas, values):
        in_gap = abs(ht) > 1.0
        k = None if in_gap else float(np.arccos(np.clip(ht, -1.0, 1.0)))
        points.append(DispersionPoint(float(w), float(ht), k, bool(in_gap)))
    return points


def _golden_min(
    f: Callable[[float], float], a: float, b: float, max_iter: int = 200
) -> tuple[float, float]:
    """Golden-section minimization of a smooth scalar on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= 1e-12 * max(1.0, abs(a), abs(b)):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    x = x1 if f1 <= f2 else x2
    return x, min(f1, f2)


def _refine_edge(
    scalar: Callable[[float], float],
    lo: float,
    hi: float,
    edge_tol: float,
    entering: bool,
) -> float:
    """Bisect |half_trace|-1 between a passband point and a gap point.

    Runs to the absolute frequency tolerance, then keeps halving until
    the residual at the returned edge is below 10x the tolerance (steep
    crossings need the extra iterations; each one is cheap).
    """

    def g(w: float) -> float:
        return abs(scalar(w)) - 1.0

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        inside = g(mid) > 0.0
        if inside == entering:
            hi = mid
        else:
            lo = mid
        if hi - lo <= edge_tol and abs(g(0.5 * (lo + hi))) < 10.0 * edge_tol:
            break
    return 0.5 * (lo + hi)


def first_band_gap(
    cell: UnitCell,
    pol: Polarization,
    omega_step_factor: int = 200,
    edge_tol: float = 1e-9,
    omega_cap: float | None = None,
) -> BandGap | None:
    """Locate the first band gap, or return None when there is none.

    Scans upward from zero in steps of ``pi / (omega_step_factor * tau)``
    (``tau`` the cell transit time, so every dispersion branch gets on
    the order of ``omega_step_factor`` samples), brackets the first
    excursion of ``|half_trace|`` above one, and bisects both edges.
    Gaps narrower than the scan step are treated as no gap.
    """
    grid, scalar = _ht_evaluators(cell, pol)
    tau = transit_time(cell, pol)
    step = math.pi / (omega_step_factor * tau)
    cap = 8.0 * math.pi / tau if omega_cap is None else float(omega_cap)
    n_max = int(math.floor(cap / step))

    block = 256
    start_idx = None
    k = 1
    while k <= n_max:
        hi_k = min(k + block, n_max + 1)
        omegas = step * np.arange(k, hi_k)
        inside = np.abs(grid(omegas)) > 1.0 + _GAP_GUARD
        if inside.any():
            start_idx = k + int(np.argmax(inside))
            break
        k = hi_k
    if start_idx is None:
        return None

    lo = step * (start_idx - 1)  # half_trace -> 1 as omega -> 0, so lo=0 is outside
    start = _refine_edge(scalar, lo, step * start_idx, edge_tol, entering=True)

    # The gap must close: passbands recur on every dispersion branch, but
    # strong impedance contrast makes some of them far narrower than the
    # scan step.  Every local minimum of |half_trace| on the grid is
    # therefore refined by golden section before the scan steps over it.
    def g_abs(w: float) -> float:
        return abs(scalar(w))

    end = None
    hard_limit = 4 * n_max
    tail = np.abs(grid(step * np.array([start_idx])))
    tail_start = start_idx
    k = start_idx + 1
    while k <= hard_limit and end is None:
        hi_k = min(k + block, hard_limit + 1)
        seq = np.concatenate([tail, np.abs(grid(step * np.arange(k, hi_k)))])
        base = tail_start  # grid index of seq[0]
        below = seq[len(tail):] <= 1.0 + _GAP_GUARD
        first_below = (len(tail) + int(np.argmax(below))) if below.any() else len(seq)
        is_min = (seq[1:-1] < seq[:-2]) & (seq[1:-1] <= seq[2:]) & (seq[1:-1] > 1.0 + _GAP_GUARD)
        for m in (np.nonzero(is_min)[0] + 1):
            if m >= first_below:
                break
            x_min, f_min = _golden_min(g_abs, step * (base + m - 1), step * (base + m + 1))
            if f_min < 1.0:
                end = _refine_edge(scalar, step * (base + m - 1), x_min, edge_tol, entering=False)
                break
        if end is None and first_below < len(seq):
            idx = base + first_below
            end = _refine_edge(scalar, step * (idx - 1), step * idx, edge_tol, entering=False)
        tail = seq[-2:]
        tail_start = hi_k - 2
        k = hi_k
    if end is None:
        raise RuntimeError("band gap did not close below four search caps")
    return BandGap(start=start, end=end)


def objective(params: Sequence[float], kind: ObjectiveKind | str) -> float:
    """First-gap objective at one design point.

    ``params`` is the five-vector (E2/E1, rho2/rho1, h2/h1, nu1, nu2);
    ``kind`` selects start or width for either polarization.  Raises
    :class:`NoBandGapError` when the cell has no gap below the search
    cap (equal layers, for instance).
    """
    kind = ObjectiveKind(kind)
    e2, rho2, h2, nu1, nu2 = (float(p) for p in params)
    cell = two_layer_cell(e2, rho2, h2, nu1, nu2)
    gap = first_band_gap(cell, kind.polarization)
    if gap is None:
        raise NoBandGapError("no band gap below the search cap", params)
    return gap.width if kind.is_width else gap.start


def objective_model(kind: ObjectiveKind | str, space: ParameterSpace | None = None) -> ModelFunction:
    """Wrap an objective as a unit-hypercube model for the Sobol' engine."""
    kind = ObjectiveKind(kind)
    space = canonical_space() if space is None else space

    def fn(u: np.ndarray) -> np.ndarray:
        pts = map_to_space(u, space)
        out = np.empty(pts.shape[0])
        for r in range(pts.shape[0]):
            try:
                out[r] = objective(pts[r], kind)
            except NoBandGapError as err:
                raise ModelEvaluationError(r, pts[r], str(err)) from err
        return out

    return ModelFunction(n_dims=space.n_dims, fn=fn, name=f"bandgap-{kind.value}")


def dispersion_csv_rows(points: Sequence[DispersionPoint]) -> list[list[str]]:
    """CSV payload with header omega_hat,half_trace,k_hat_h,in_gap."""
    rows = [["omega_hat", "half_trace", "k_hat_h", "in_gap"]]
    for p in points:
        rows.append(
            [
                format(p.omega_hat, ".17g"),
                format(p.half_trace, ".17g"),
                "" if p.k_hat_h is None else format(p.k_hat_h, ".17g"),
                "1" if p.in_gap else "0",
            ]
        )
    return rows
