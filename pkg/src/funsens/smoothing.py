"""Penalized B-spline smoothing of discrete time series.

A curve observed at a handful of time points is represented as a B-spline
coefficient expansion fitted by penalized least squares,

    minimize ||y - B c||^2 + lambda * c' R c,

where B is the basis design matrix and R the integrated squared second
derivative of the basis. The smoothing weight is either fixed or selected
by Generalized Cross Validation, GCV(lambda) = n * RSS / (n - tr(S))^2
with S the hat matrix of the penalized fit.

All objects are immutable and all functions pure; fits for different
curves can run concurrently without shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import BSpline
from scipy.linalg import qr, solve_triangular

from .errors import (
    BasisError,
    DomainError,
    GcvUndefinedError,
    NoValidLambdaError,
    SingularFitError,
)

#: Default ladder of smoothing-weight candidates for GCV selection.
DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(-4.0, 6.0, 21))

# Relative slack on the GCV denominator: tr(S) closer to n than this is
# treated as pure interpolation.
_GCV_DENOM_RTOL = 1e-8


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing vector of observation times."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise DomainError("a time grid needs at least 2 points")
        if not np.all(np.diff(pts) > 0):
            raise DomainError("time grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size

    @property
    def span(self) -> tuple[float, float]:
        return float(self.points[0]), float(self.points[-1])


@dataclass(frozen=True)
class SplineBasis:
    """B-spline basis on a closed interval.

    The full knot vector repeats each boundary (degree + 1) times around
    the ordered interior knots, so the basis functions form a partition
    of unity on the whole domain.
    """

    domain: tuple[float, float]
    degree: int
    interior_knots: np.ndarray

    def __post_init__(self):
        lo, hi = float(self.domain[0]), float(self.domain[1])
        if not lo < hi:
            raise DomainError(f"degenerate basis domain [{lo}, {hi}]")
        if self.degree < 0:
            raise BasisError("spline degree must be nonnegative")
        knots = np.asarray(self.interior_knots, dtype=float)
        if knots.size and (np.any(np.diff(knots) < 0) or knots[0] <= lo or knots[-1] >= hi):
            raise BasisError("interior knots must be non-decreasing and inside the domain")
        object.__setattr__(self, "domain", (lo, hi))
        object.__setattr__(self, "interior_knots", knots)

    @property
    def n_basis(self) -> int:
        return self.interior_knots.size + self.degree + 1

    @property
    def knot_vector(self) -> np.ndarray:
        lo, hi = self.domain
        reps = self.degree + 1
        return np.concatenate([np.full(reps, lo), self.interior_knots, np.full(reps, hi)])

    def _check_in_domain(self, x: np.ndarray):
        lo, hi = self.domain
        if np.any(x < lo) or np.any(x > hi):
            bad = x[(x < lo) | (x > hi)][0]
            raise DomainError(f"evaluation point {bad} outside domain [{lo}, {hi}]")

    def design_matrix(self, x) -> np.ndarray:
        """Basis functions evaluated at x, shape (len(x), n_basis)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self._check_in_domain(x)
        return BSpline.design_matrix(x, self.knot_vector, self.degree).toarray()

    def second_derivative_matrix(self, x) -> np.ndarray:
        """Second derivatives of all basis functions at x (inside the domain)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self._check_in_domain(x)
        if self.degree < 2:
            return np.zeros((x.size, self.n_basis))
        spl = BSpline(self.knot_vector, np.eye(self.n_basis), self.degree, extrapolate=True)
        return spl.derivative(2)(x)


def build_basis(domain, n_basis: int, degree: int) -> SplineBasis:
    """Build a basis of `n_basis` B-splines with equally spaced interior knots.

    Requires n_basis >= degree + 1; the number of interior knots is then
    n_basis - degree - 1.
    """
    if degree < 0:
        raise BasisError("spline degree must be nonnegative")
    if n_basis < degree + 1:
        raise BasisError(f"n_basis={n_basis} too small for degree {degree} (need >= {degree + 1})")
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise DomainError(f"degenerate basis domain [{lo}, {hi}]")
    n_interior = n_basis - degree - 1
    interior = np.linspace(lo, hi, n_interior + 2)[1:-1]
    return SplineBasis(domain=(lo, hi), degree=degree, interior_knots=interior)


def penalty_matrix(basis: SplineBasis) -> np.ndarray:
    """Roughness penalty R[i, j] = integral of B_i'' B_j'' over the domain.

    Computed by Gauss-Legendre quadrature per knot span, which is exact:
    second-derivative products are piecewise polynomials of degree
    2 * (degree - 2). Degree < 2 yields the zero matrix.
    """
    m = basis.n_basis
    if basis.degree < 2:
        return np.zeros((m, m))
    lo, hi = basis.domain
    breaks = np.unique(np.concatenate([[lo], basis.interior_knots, [hi]]))
    # 2k - 1 >= 2(degree - 2) requires k >= degree - 1.5
    nodes, weights = leggauss(max(basis.degree - 1, 1))
    R = np.zeros((m, m))
    for a, b in zip(breaks[:-1], breaks[1:]):
        half = 0.5 * (b - a)
        x = a + half * (nodes + 1.0)
        d2 = basis.second_derivative_matrix(x)
        R += half * (d2.T * weights) @ d2
    return 0.5 * (R + R.T)


@dataclass(frozen=True)
class FunctionalSample:
    """A smooth curve: basis plus coefficient vector."""

    basis: SplineBasis
    coefficients: np.ndarray
    source_grid: TimeGrid | None = None

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float)
        if coef.shape != (self.basis.n_basis,):
            raise BasisError(
                f"coefficient length {coef.shape} does not match n_basis {self.basis.n_basis}"
            )
        object.__setattr__(self, "coefficients", coef)

    @property
    def domain(self) -> tuple[float, float]:
        return self.basis.domain

    def at(self, t: float) -> float:
        """Evaluate the curve at a single point of the domain."""
        return float((self.basis.design_matrix([t]) @ self.coefficients)[0])

    def values_on(self, grid) -> np.ndarray:
        """Evaluate the curve on a grid (TimeGrid or array of points)."""
        pts = grid.points if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
        return self.basis.design_matrix(pts) @ self.coefficients


@dataclass(frozen=True)
class GridCurve:
    """A curve known exactly at grid points only.

    Used for synthetic ensembles where evaluation must reproduce the
    generated values bit for bit; real data goes through FunctionalSample.
    """

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.grid),):
            raise DomainError("GridCurve values must match its grid length")
        object.__setattr__(self, "values", vals)

    @property
    def domain(self) -> tuple[float, float]:
        return self.grid.span

    def at(self, t: float) -> float:
        idx = np.nonzero(self.grid.points == t)[0]
        if idx.size == 0:
            raise DomainError(f"GridCurve has no sample at t={t}")
        return float(self.values[idx[0]])

    def values_on(self, grid) -> np.ndarray:
        pts = grid.points if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
        idx = np.searchsorted(self.grid.points, pts)
        idx = np.clip(idx, 0, len(self.grid) - 1)
        if not np.array_equal(self.grid.points[idx], pts):
            raise DomainError("GridCurve evaluated off its sample grid")
        return self.values[idx]


@dataclass(frozen=True)
class SmoothingReport:
    """Diagnostics of one penalized fit."""

    lam: float
    gcv_score: float
    hat_trace: float
    rss: float


def _penalty_root(basis: SplineBasis) -> np.ndarray:
    """Matrix C with C'C equal to the roughness penalty (eigenvalue root).

    Eigenvalues below the rank tolerance are zeroed: round-off in the
    nullspace (constant and linear coefficients) would otherwise get
    amplified by sqrt(lambda) and bias heavily penalized fits.
    """
    R = penalty_matrix(basis)
    eigvals, eigvecs = np.linalg.eigh(R)
    tol = basis.n_basis * np.finfo(float).eps * max(eigvals.max(initial=0.0), 0.0)
    eigvals = np.where(eigvals > tol, eigvals, 0.0)
    return np.sqrt(eigvals)[:, None] * eigvecs.T


def _penalized_solve(grid: TimeGrid, values, basis: SplineBasis, lam: float):
    """Shared core of fit/gcv: returns (coefficients, hat_trace, rss, n).

    Solves the augmented least-squares system [B; sqrt(lam) C] c ~ [y; 0]
    through one QR factorization: stable even for extreme lam, where the
    normal equations B'B + lam R lose the data term to roundoff.
    """
    y = np.asarray(values, dtype=float)
    n = len(grid)
    if y.shape != (n,):
        raise DomainError(f"values length {y.shape} does not match grid length {n}")
    if lam < 0:
        raise DomainError("smoothing weight must be nonnegative")
    B = basis.design_matrix(grid.points)
    m = basis.n_basis
    A = B if (lam == 0 or basis.degree < 2) else np.vstack([B, math.sqrt(lam) * _penalty_root(basis)])
    rhs = np.concatenate([y, np.zeros(A.shape[0] - n)])
    coef, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    if rank < m:
        raise SingularFitError(
            "penalized system is singular; increase lambda or drop basis functions"
        )
    r_fac = qr(A, mode="r")[0][:m]
    half_hat = solve_triangular(r_fac, B.T, trans="T")
    hat_trace = float(np.sum(half_hat * half_hat))
    resid = y - B @ coef
    rss = float(resid @ resid)
    return coef, hat_trace, rss, n


def _gcv_from_parts(n: int, rss: float, hat_trace: float) -> float:
    denom = n - hat_trace
    if denom <= _GCV_DENOM_RTOL * n:
        return math.nan
    return n * rss / denom**2


def fit(grid: TimeGrid, values, basis: SplineBasis, lam: float):
    """Penalized least-squares fit of values observed on grid.

    Returns (FunctionalSample, SmoothingReport). The report's gcv_score is
    NaN when the fit interpolates (use gcv_score() for the erroring form).
    """
    coef, hat_trace, rss, n = _penalized_solve(grid, values, basis, lam)
    report = SmoothingReport(
        lam=float(lam),
        gcv_score=_gcv_from_parts(n, rss, hat_trace),
        hat_trace=hat_trace,
        rss=rss,
    )
    return FunctionalSample(basis=basis, coefficients=coef, source_grid=grid), report


def gcv_score(grid: TimeGrid, values, basis: SplineBasis, lam: float) -> float:
    """GCV criterion n * RSS / (n - tr(S))^2 for one smoothing weight."""
    _, hat_trace, rss, n = _penalized_solve(grid, values, basis, lam)
    score = _gcv_from_parts(n, rss, hat_trace)
    if math.isnan(score):
        raise GcvUndefinedError(f"hat-matrix trace {hat_trace} equals n={n}: GCV undefined")
    return score


def select_lambda(grid: TimeGrid, values, basis: SplineBasis, candidates=DEFAULT_LAMBDA_GRID):
    """Pick the candidate with minimal GCV score; ties go to the smaller weight.

    Returns (lambda, SmoothingReport). Raises NoValidLambdaError when every
    candidate interpolates or is singular.
    """
    best = None
    for lam in sorted(float(c) for c in candidates):
        try:
            coef, hat_trace, rss, n = _penalized_solve(grid, values, basis, lam)
        except SingularFitError:
            continue
        score = _gcv_from_parts(n, rss, hat_trace)
        if math.isnan(score):
            continue
        if best is None or score < best[1].gcv_score:
            best = lam, SmoothingReport(lam=lam, gcv_score=score, hat_trace=hat_trace, rss=rss)
    if best is None:
        raise NoValidLambdaError("no candidate smoothing weight yields a defined GCV score")
    return best
