from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np

from core.exceptions import NotHyperbolic, NotUnimodular, WrongSpectrum, ZeroR
from core.types import SurfaceKind

from .group import AffineMap

if TYPE_CHECKING:
    from .domain import FundamentalDomain

DEFAULT_SM_MATRIX = ((0, 0, 1), (1, 0, 1), (0, 1, 0))
DEFAULT_SPLUS_MATRIX = ((1, 1), (1, 2))
_REAL_TOL = 1e-9


def _as_integer_matrix(matrix: Any, size: int) -> np.ndarray:
    arr = np.asarray(matrix, dtype=float)
    if arr.shape != (size, size):
        raise NotUnimodular(f"expected a {size}x{size} matrix", {"shape": list(arr.shape)})
    if not np.all(arr == np.round(arr)):
        raise NotUnimodular("matrix entries must be integers", {"matrix": arr.tolist()})
    return arr.astype(np.int64)


def integer_det(matrix: np.ndarray) -> int:
    m = [[int(v) for v in row] for row in matrix]
    if len(m) == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def _null_vector(matrix: np.ndarray, eigenvalue: complex) -> np.ndarray:
    shifted = matrix.astype(complex) - eigenvalue * np.eye(matrix.shape[0])
    _, _, vh = np.linalg.svd(shifted)
    vec = vh[-1].conj()
    return vec / vec[np.argmax(np.abs(vec))]


def _refine_root(matrix: np.ndarray, root: complex) -> complex:
    coeffs = np.poly(matrix.astype(float))
    deriv = np.polyder(coeffs)
    for _ in range(3):
        slope = np.polyval(deriv, root)
        if slope == 0:
            break
        root = root - np.polyval(coeffs, root) / slope
    return root


@dataclass(frozen=True, eq=False)
class SurfaceData:
    kind: SurfaceKind = field(init=False)

    @property
    def scale(self) -> float:
        raise NotImplementedError

    @property
    def period(self) -> float:
        return math.log(self.scale)

    @property
    def alpha_weight(self) -> float:
        """Coefficient a of the base form a/y2^2 sqrt(-1) dz2 ^ dz2bar."""
        raise NotImplementedError

    @property
    def circle_length(self) -> float:
        return math.sqrt(2.0 * self.alpha_weight) * self.period

    def generator_power(self, index: int, power: int) -> AffineMap:
        raise NotImplementedError

    @property
    def generators(self) -> tuple[AffineMap, ...]:
        return tuple(self.generator_power(i, 1) for i in range(4))

    @cached_property
    def domain(self) -> "FundamentalDomain":
        from .domain import FundamentalDomain

        return FundamentalDomain(self)

    def to_record(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class SMData(SurfaceData):
    M: np.ndarray
    lam: float
    mu: complex
    ell: np.ndarray
    m_vec: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SurfaceKind.SM)

    @property
    def scale(self) -> float:
        return self.lam

    @property
    def alpha_weight(self) -> float:
        return 0.25

    @cached_property
    def lattice(self) -> np.ndarray:
        """Columns (Re m_j, Im m_j, l_j) spanning the fiber lattice in (x1, y1, x2)."""
        return np.stack([self.m_vec.real, self.m_vec.imag, self.ell], axis=0)

    @cached_property
    def M_inv(self) -> np.ndarray:
        return np.round(np.linalg.inv(self.M)).astype(np.int64)

    def generator_power(self, index: int, power: int) -> AffineMap:
        if index == 0:
            return AffineMap(a=self.mu**power, d=self.lam**power)
        return AffineMap(c=power * self.m_vec[index - 1], e=power * self.ell[index - 1])

    def to_record(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "M": self.M.tolist(),
            "lambda": float(self.lam),
            "mu": [float(self.mu.real), float(self.mu.imag)],
            "ell": [float(v) for v in self.ell],
            "m_vec": [[float(v.real), float(v.imag)] for v in self.m_vec],
            "period": self.period,
            "circle_length": self.circle_length,
        }


@dataclass(frozen=True, eq=False)
class SPlusData(SurfaceData):
    N: np.ndarray
    alpha_ev: float
    a: np.ndarray
    b: np.ndarray
    p: int
    q: int
    r: int
    tau: complex
    c: np.ndarray
    e: np.ndarray
    m_slope: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SurfaceKind.SPLUS)

    @property
    def scale(self) -> float:
        return self.alpha_ev

    @property
    def alpha_weight(self) -> float:
        return 0.5

    @property
    def kappa(self) -> float:
        """Translation length of f3."""
        return float((self.b[0] * self.a[1] - self.b[1] * self.a[0]) / self.r)

    def generator_power(self, index: int, power: int) -> AffineMap:
        if index == 0:
            return AffineMap(c=power * self.tau, d=self.alpha_ev**power)
        if index == 3:
            return AffineMap(c=power * self.kappa)
        j = index - 1
        aj, bj, cj = self.a[j], self.b[j], self.c[j]
        return AffineMap(
            b=power * bj,
            c=power * cj + 0.5 * power * (power - 1) * aj * bj,
            e=power * aj,
        )

    def linear_residual(self) -> float:
        rhs = self.e + self.kappa * np.array([self.p, self.q], dtype=float)
        return float(np.max(np.abs(self.c - self.c @ self.N.T - rhs)))

    def to_record(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "N": self.N.tolist(),
            "alpha": float(self.alpha_ev),
            "a": [float(v) for v in self.a],
            "b": [float(v) for v in self.b],
            "p": self.p,
            "q": self.q,
            "r": self.r,
            "tau": [float(self.tau.real), float(self.tau.imag)],
            "c": [float(v) for v in self.c],
            "e": [float(v) for v in self.e],
            "m_slope": float(self.m_slope),
            "period": self.period,
            "circle_length": self.circle_length,
        }


def construct_sm(M: Any = DEFAULT_SM_MATRIX) -> SMData:
    mat = _as_integer_matrix(M, 3)
    det = integer_det(mat)
    if det != 1:
        raise NotUnimodular(f"det M = {det}, expected 1", {"det": det})

    eigenvalues = np.linalg.eigvals(mat.astype(float))
    real = [ev.real for ev in eigenvalues if abs(ev.imag) < _REAL_TOL]
    complex_ = [ev for ev in eigenvalues if ev.imag >= _REAL_TOL]
    if len(real) != 1 or len(complex_) != 1:
        raise WrongSpectrum(
            "M must have one real eigenvalue and a non-real conjugate pair",
            {"eigenvalues": [[float(ev.real), float(ev.imag)] for ev in eigenvalues]},
        )
    lam = float(_refine_root(mat, real[0]).real)
    if lam <= 1.0:
        raise WrongSpectrum(f"real eigenvalue {lam} is not > 1", {"lambda": lam})
    mu = complex(_refine_root(mat, complex_[0]))

    ell = _null_vector(mat, lam).real
    m_vec = _null_vector(mat, mu)
    return SMData(M=mat, lam=lam, mu=mu, ell=ell, m_vec=m_vec)


def construct_splus(
    N: Any = DEFAULT_SPLUS_MATRIX,
    p: int = 0,
    q: int = 0,
    r: int = 1,
    tau: complex | None = None,
) -> SPlusData:
    if r == 0:
        raise ZeroR("r must be nonzero", {"r": r})
    mat = _as_integer_matrix(N, 2)
    det = integer_det(mat)
    if det != 1:
        raise NotUnimodular(f"det N = {det}, expected 1", {"det": det})
    trace = int(mat[0, 0] + mat[1, 1])
    if trace <= 2:
        raise NotHyperbolic(f"trace N = {trace}; need a real eigenvalue > 1", {"trace": trace})

    alpha = (trace + math.sqrt(trace * trace - 4)) / 2.0
    a = _null_vector(mat, alpha).real
    b = _null_vector(mat, 1.0 / alpha).real

    n = mat
    e = np.array(
        [
            0.5 * n[i, 0] * (n[i, 0] - 1) * a[0] * b[0]
            + 0.5 * n[i, 1] * (n[i, 1] - 1) * a[1] * b[1]
            + n[i, 0] * n[i, 1] * b[0] * a[1]
            for i in range(2)
        ]
    )
    kappa = (b[0] * a[1] - b[1] * a[0]) / r
    rhs = e + kappa * np.array([p, q], dtype=float)
    c = np.linalg.solve(np.eye(2) - mat.astype(float), rhs)

    if tau is None:
        tau = 1j * math.log(alpha)
    tau = complex(tau)
    return SPlusData(
        N=mat,
        alpha_ev=alpha,
        a=a,
        b=b,
        p=int(p),
        q=int(q),
        r=int(r),
        tau=tau,
        c=c,
        e=e,
        m_slope=tau.imag / math.log(alpha),
    )
