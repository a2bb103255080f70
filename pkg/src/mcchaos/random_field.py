"""Seeded samples of the stochastic vector and the coefficient/forcing models."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AssemblyError, EvaluationError, InvalidArgument, ParseError
from .mesh_fem import Mesh1D, element_averages


@dataclass(frozen=True)
class SampleSet:
    values: np.ndarray
    seed: int | None = None
    distribution: str = "standard_normal"

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def s_count(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]

    def head(self, s_count: int) -> "SampleSet":
        """The first ``s_count`` samples (nested subsets of one seeded stream)."""
        if s_count > self.s_count:
            raise InvalidArgument(f"requested {s_count} samples, only {self.s_count} available")
        return SampleSet(self.values[:s_count].copy(), self.seed, self.distribution)


def draw_samples(seed: int, s_count: int, n_vars: int) -> SampleSet:
    """i.i.d. standard normals from numpy's PCG64 generator (ziggurat transform).

    The stream fills sample-major, so a larger ``s_count`` with the same seed
    extends the smaller draw instead of reshuffling it.
    """
    if s_count < 1 or n_vars < 1:
        raise InvalidArgument(f"need S >= 1 and N >= 1, got S={s_count}, N={n_vars}")
    rng = np.random.default_rng(seed)
    return SampleSet(rng.standard_normal((s_count, n_vars)), seed=seed)


def save_samples(samples: SampleSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"y{k + 1}" for k in range(samples.n_vars)])
        for row in samples.values:
            writer.writerow([repr(float(v)) for v in row])


def load_samples(path) -> SampleSet:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty sample file", line=1) from None
        expected = [f"y{k + 1}" for k in range(len(header))]
        if [h.strip() for h in header] != expected:
            raise ParseError(f"header must be {','.join(expected)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} columns, found {len(row)}", line=lineno)
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("non-finite sample value", line=lineno)
            rows.append(vals)
    if not rows:
        raise ParseError("sample file has no data rows", line=2)
    return SampleSet(np.array(rows, dtype=float), seed=None, distribution="file")


@dataclass(frozen=True)
class Profile:
    """A spatial profile a_i(x) with an optional declared support interval."""

    func: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float] | None = None
    name: str = ""

    def __call__(self, x):
        return self.func(x)


def bump(lo: float, hi: float, height: float = 1.0) -> Profile:
    """Smooth compactly supported bump on [lo, hi]."""
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def f(x):
        t = (np.asarray(x, dtype=float) - mid) / half
        inside = np.abs(t) < 1.0
        out = np.zeros_like(t)
        out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
        return out

    return Profile(f, support=(lo, hi), name=f"bump[{lo},{hi}]")


@dataclass(frozen=True)
class CoefficientModel:
    """kappa(x, y) = exp(sum_i a_i(x) y_i), or an arbitrary positive callable.

    A general callable takes ``(x, y)`` with ``x`` an array and ``y`` one
    sample point, and must broadcast over ``x``.
    """

    profiles: tuple[Profile, ...] = ()
    general: Callable | None = None
    n_vars_general: int = 0

    @property
    def kind(self) -> str:
        return "general" if self.general is not None else "log_affine"

    @property
    def n_vars(self) -> int:
        return self.n_vars_general if self.general is not None else len(self.profiles)

    @property
    def has_compact_support(self) -> bool:
        return any(p.support is not None for p in self.profiles)


def log_affine(*profiles) -> CoefficientModel:
    profs = tuple(p if isinstance(p, Profile) else Profile(p) for p in profiles)
    if not profs:
        raise InvalidArgument("a log-affine model needs at least one profile")
    return CoefficientModel(profiles=profs)


def general_coefficient(func, n_vars: int) -> CoefficientModel:
    return CoefficientModel(general=func, n_vars_general=n_vars)


@dataclass(frozen=True)
class ForcingModel:
    func: Callable
    n_vars: int = field(default=0)

    def __call__(self, x, y):
        return self.func(x, y)


def kappa_eval(model: CoefficientModel, x, y):
    x = np.asarray(x, dtype=float)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (model.n_vars,):
        raise InvalidArgument(f"point has {y.size} components, model expects {model.n_vars}")
    if model.general is not None:
        val = np.asarray(model.general(x, y), dtype=float)
    else:
        with np.errstate(over="ignore"):  # overflow is reported below
            val = np.exp(sum(p(x) * yi for p, yi in zip(model.profiles, y)))
    if not np.all(np.isfinite(val)) or np.any(val <= 0):
        raise EvaluationError(f"coefficient is not finite and positive at y={y.tolist()}")
    return val if val.ndim else float(val)


def support_elements(model: CoefficientModel, mesh: Mesh1D) -> list[np.ndarray]:
    """Per variable, the elements whose interior meets the declared support.

    Supports are closed intervals, but an element that only touches one at
    an endpoint is excluded: the profile vanishes at every interior Gauss
    point of such an element.
    """
    left, right = mesh.nodes[:-1], mesh.nodes[1:]
    everything = np.arange(mesh.n_elements)
    out = []
    for p in model.profiles:
        if p.support is None:
            out.append(everything)
            continue
        lo, hi = p.support
        out.append(everything[(left < hi) & (right > lo)])
    return out


def element_coefficients(model: CoefficientModel, mesh: Mesh1D, y: np.ndarray,
                         use_support: bool = True) -> np.ndarray:
    """Gauss-averaged kappa per element for a block of samples; returns ``(S, n_elements)``.

    For log-affine models each variable only contributes on its support
    elements, so compactly supported profiles cost work proportional to
    their support.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    xq = mesh.quadrature_points()
    if model.general is not None:
        vals = np.empty((y.shape[0],) + xq.shape)
        for r, yr in enumerate(y):
            vals[r] = model.general(xq, yr)
    else:
        logk = np.zeros((y.shape[0],) + xq.shape)
        supports = support_elements(model, mesh) if use_support else None
        for i, p in enumerate(model.profiles):
            if supports is None or p.support is None:
                logk += y[:, i, None, None] * p(xq)[None]
            else:
                els = supports[i]
                logk[:, els, :] += y[:, i, None, None] * p(xq[els])[None]
        with np.errstate(over="ignore"):
            vals = np.exp(logk)
    bad = ~np.isfinite(vals) | (vals <= 0)
    if bad.any():
        r, e, _ = (int(i) for i in np.argwhere(bad)[0])
        raise AssemblyError("coefficient is not finite and positive", element=e, sample=r)
    return element_averages(vals)


def forcing_quadrature(forcing: ForcingModel, mesh: Mesh1D, y: np.ndarray) -> np.ndarray:
    """Forcing values at the Gauss points for each sample, ``(S, n_elements, 2)``."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    xq = mesh.quadrature_points()
    out = np.empty((y.shape[0],) + xq.shape)
    for r, yr in enumerate(y):
        out[r] = forcing(xq, yr)
    bad = ~np.isfinite(out)
    if bad.any():
        r, e, _ = (int(i) for i in np.argwhere(bad)[0])
        raise AssemblyError("non-finite forcing value", element=e, sample=r)
    return out
