"""Reduced-order design equations for the first band gap.

Each of the four objectives (start/width of the first gap, S/P wave)
has a closed-form surrogate: a constant plus a short sum of fitted
one- and two-variable terms in transformed coordinates (log10 of the
three property ratios, raw nu1).  The coefficient tables ship as a
versioned JSON data file next to this module so the transcription is
reviewable; the tables evaluate in cycles and are scaled by 2*pi to the
radial omega_hat convention used by the solver (both the log base and
the scale are recorded in the data file).

The quality metric is the scaled L2 error: mean squared surrogate error
normalized by the total variance of the exact response, so the constant
mean surrogate scores one and a perfect surrogate scores zero.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

import numpy as np

from .sampling import SampleSet, canonical_space, map_to_space
from .sobol import ModelFunction, _evaluate

__all__ = [
    "KINDS",
    "FittedTerm",
    "DesignEquation",
    "TruncationCurve",
    "ExtrapolationWarning",
    "load_design_equations",
    "eval_design_equation",
    "design_model",
    "scaled_l2_error",
    "truncation_curve",
    "fit_polynomial_surrogate",
    "to_hertz",
]

KINDS = ("SS", "WS", "SP", "WP")

_COEFF_FILE = "design_coefficients.json"


class ExtrapolationWarning(UserWarning):
    """Design-equation input outside the fitted parameter box."""


def _poly(exponents: np.ndarray, coefficients: np.ndarray, cols: list[np.ndarray]) -> np.ndarray:
    acc = np.zeros_like(cols[0])
    for exps, c in zip(exponents, coefficients):
        term = np.full_like(cols[0], c)
        for col, e in zip(cols, exps):
            if e:
                term = term * col**int(e)
        acc = acc + term
    return acc


@dataclass(frozen=True)
class FittedTerm:
    """One fitted component of a design equation.

    ``form`` is ``polynomial`` (monomial sum), ``rational`` (ratio of two
    monomial sums) or ``exp_sum`` (sum of a*exp(b*x) pieces, single
    input only).  Inputs name transformed coordinates.
    """

    name: str
    inputs: tuple[str, ...]
    form: str
    payload: dict

    def evaluate(self, coords: dict[str, np.ndarray]) -> np.ndarray:
        cols = [np.asarray(coords[k], dtype=float) for k in self.inputs]
        if self.form == "polynomial":
            return _poly(self.payload["exponents"], self.payload["coefficients"], cols)
        if self.form == "rational":
            num = _poly(
                self.payload["numerator"]["exponents"],
                self.payload["numerator"]["coefficients"],
                cols,
            )
            den = _poly(
                self.payload["denominator"]["exponents"],
                self.payload["denominator"]["coefficients"],
                cols,
            )
            return num / den
        if self.form == "exp_sum":
            (x,) = cols
            acc = np.zeros_like(x)
            for a, b in self.payload["terms"]:
                acc = acc + a * np.exp(b * x)
            return acc
        raise ValueError(f"unknown term form {self.form!r}")

    def denominator_on(self, coords: dict[str, np.ndarray]) -> np.ndarray | None:
        """Denominator values for pole scanning; None for non-rational forms."""
        if self.form != "rational":
            return None
        cols = [np.asarray(coords[k], dtype=float) for k in self.inputs]
        return _poly(
            self.payload["denominator"]["exponents"],
            self.payload["denominator"]["coefficients"],
            cols,
        )


@dataclass(frozen=True)
class DesignEquation:
    """Constant plus ordered fitted terms for one objective."""

    kind: str
    f0: float
    terms: tuple[FittedTerm, ...]
    log_base: float
    omega_scale: float

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def transform(self, params: np.ndarray) -> dict[str, np.ndarray]:
        """Physical five-vectors -> transformed coordinate columns."""
        pts = np.atleast_2d(np.asarray(params, dtype=float))
        if pts.shape[1] != 5:
            raise ValueError("expected five parameters (E2/E1, rho2/rho1, h2/h1, nu1, nu2)")
        scale = math.log(self.log_base)
        return {
            "log_e": np.log(pts[:, 0]) / scale,
            "log_rho": np.log(pts[:, 1]) / scale,
            "log_h": np.log(pts[:, 2]) / scale,
            "nu1": pts[:, 3],
        }

    def evaluate(self, params: np.ndarray, n_terms: int | None = None) -> np.ndarray | float:
        """Surrogate prediction in radial omega_hat units.

        ``n_terms`` truncates the term sum (0 keeps only the constant).
        Out-of-box inputs warn but still evaluate.
        """
        pts = np.atleast_2d(np.asarray(params, dtype=float))
        squeeze = np.asarray(params).ndim == 1
        _warn_if_outside(pts)
        coords = self.transform(pts)
        keep = self.terms if n_terms is None else self.terms[: int(n_terms)]
        total = np.full(pts.shape[0], self.f0)
        for term in keep:
            total = total + term.evaluate(coords)
        total = total * self.omega_scale
        return float(total[0]) if squeeze else total


def _warn_if_outside(pts: np.ndarray) -> None:
    space = canonical_space()
    for d, dim in enumerate(space.dims):
        col = pts[:, d]
        if (col < dim.lower).any() or (col > dim.upper).any():
            warnings.warn(
                f"{dim.name} outside the fitted range [{dim.lower}, {dim.upper}]; "
                "extrapolating the design equation",
                ExtrapolationWarning,
                stacklevel=3,
            )


@lru_cache(maxsize=1)
def load_design_equations() -> dict[str, DesignEquation]:
    """Parse the bundled coefficient tables (cached)."""
    text = resources.files(__package__).joinpath(_COEFF_FILE).read_text()
    payload = json.loads(text)
    log_base = float(payload["log_base"])
    omega_scale = float(payload["omega_scale"])
    out: dict[str, DesignEquation] = {}
    for kind in KINDS:
        eq = payload["equations"][kind]
        terms = tuple(
            FittedTerm(
                name=str(t["name"]),
                inputs=tuple(t["inputs"]),
                form=str(t["form"]),
                payload={k: v for k, v in t.items() if k not in ("name", "inputs", "form")},
            )
            for t in eq["terms"]
        )
        out[kind] = DesignEquation(
            kind=kind,
            f0=float(eq["f0"]),
            terms=terms,
            log_base=log_base,
            omega_scale=omega_scale,
        )
    return out


def eval_design_equation(kind: str, params: Sequence[float] | np.ndarray, n_terms: int | None = None):
    """Evaluate one design equation at physical parameters (omega_hat units)."""
    return load_design_equations()[str(kind)].evaluate(np.asarray(params, dtype=float), n_terms)


def design_model(kind: str, n_terms: int | None = None) -> ModelFunction:
    """Design equation wrapped as a unit-hypercube model (for error studies)."""
    eq = load_design_equations()[str(kind)]
    space = canonical_space()

    def fn(u: np.ndarray) -> np.ndarray:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ExtrapolationWarning)
            return np.asarray(eq.evaluate(map_to_space(u, space), n_terms), dtype=float)

    return ModelFunction(n_dims=5, fn=fn, name=f"design-{kind}" + ("" if n_terms is None else f"@{n_terms}"))


def scaled_l2_error(
    exact: ModelFunction,
    surrogate: ModelFunction,
    samples: SampleSet,
    threads: int = 1,
) -> float:
    """Mean squared surrogate error over the original sample matrix,
    normalized by the exact model's variance estimate on the same rows."""
    if exact.n_dims != surrogate.n_dims or exact.n_dims != samples.n_dims:
        raise ValueError("exact, surrogate and samples must share dimensionality")
    y = _evaluate(exact, samples.original, threads)
    y_hat = _evaluate(surrogate, samples.original, threads)
    mean = float(np.mean(y))
    variance = float(np.mean(y * y) - mean * mean)
    if variance <= 0.0:
        raise ValueError("exact model has zero variance on this sample set")
    return float(np.mean((y - y_hat) ** 2) / variance)


@dataclass(frozen=True)
class TruncationCurve:
    """Scaled L2 error after cumulatively including the fitted terms.

    ``deltas[k]`` uses the constant plus the first ``k`` terms, so
    ``deltas[0]`` measures the constant-only surrogate (about one).
    """

    kind: str
    deltas: tuple[float, ...]
    n_samples: int
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "delta_by_k": list(self.deltas),
        }


def truncation_curve(
    kind: str,
    samples: SampleSet,
    exact: ModelFunction | None = None,
    threads: int = 1,
) -> TruncationCurve:
    """Error-vs-terms curve for one design equation.

    The exact responses are computed once; each truncation level only
    re-evaluates the cheap surrogate.  ``exact`` defaults to the
    transfer-matrix objective of the same kind.
    """
    eq = load_design_equations()[str(kind)]
    if exact is None:
        from .crystal import objective_model

        exact = objective_model(kind)
    y = _evaluate(exact, samples.original, threads)
    mean = float(np.mean(y))
    variance = float(np.mean(y * y) - mean * mean)
    if variance <= 0.0:
        raise ValueError("exact model has zero variance on this sample set")
    pts = map_to_space(samples.original, canonical_space())
    deltas = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        for k in range(eq.n_terms + 1):
            y_hat = np.asarray(eq.evaluate(pts, n_terms=k), dtype=float)
            deltas.append(float(np.mean((y - y_hat) ** 2) / variance))
    return TruncationCurve(
        kind=str(kind), deltas=tuple(deltas), n_samples=samples.n_samples, seed=samples.seed
    )


def fit_polynomial_surrogate(
    inputs: np.ndarray,
    responses: np.ndarray,
    exponents: Sequence[Sequence[int]],
) -> tuple[np.ndarray, float]:
    """Least-squares monomial fit.

    ``exponents`` lists one multi-index per term (matching the input
    column count).  Returns the coefficient vector and the residual
    norm; raises on underdetermined or rank-deficient design matrices.
    """
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(responses, dtype=float).reshape(-1)
    if x.shape[0] != len(y):
        raise ValueError("inputs and responses disagree on the sample count")
    cols = [x[:, k] for k in range(x.shape[1])]
    design = np.column_stack(
        [_poly(np.array([e]), np.array([1.0]), cols) for e in exponents]
    )
    if design.shape[0] <= design.shape[1]:
        raise ValueError("need more samples than coefficients")
    coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise ValueError("rank-deficient design matrix")
    residual = float(np.linalg.norm(y - design @ coeffs))
    return coeffs, residual


def to_hertz(omega_hat: float, cell_height: float, rho1: float, e1: float) -> float:
    """Dimensionless radial frequency -> Hz for a dimensional build.

    The reference time is ``cell_height * sqrt(rho1 / e1)``; dividing
    the cycle count per reference time by it gives Hertz.
    """
    if min(cell_height, rho1, e1) <= 0:
        raise ValueError("cell height, density and modulus must be positive")
    t_ref = cell_height * math.sqrt(rho1 / e1)
    return omega_hat / (2.0 * math.pi * t_ref)
