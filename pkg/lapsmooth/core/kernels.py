"""
Radial kernels for neighborhood graphs.

A kernel is a profile k on [0, 1], nonincreasing, Lipschitz, with k(1) > 0,
extended by zero beyond 1 and scaled so that K(||z||) integrates to one over
R^d. The scaling is computed by radial quadrature: in polar coordinates
the integral factors into the sphere area times a one-dimensional moment.
"""

from enum import Enum
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, special

from ..exceptions import ConfigurationError, InputError

MASS_TOLERANCE = 1e-6


class KernelFamily(str, Enum):
    """Supported kernel profiles."""

    UNIFORM = "uniform"
    TRUNCATED_GAUSSIAN = "truncated-gaussian"
    EPANECHNIKOV = "epanechnikov-like"
    CUSTOM_TABLE = "custom-table"


_PROFILES: Dict[KernelFamily, Callable[[np.ndarray], np.ndarray]] = {
    KernelFamily.UNIFORM: lambda t: np.ones_like(t),
    KernelFamily.TRUNCATED_GAUSSIAN: lambda t: np.exp(-0.5 * t * t),
    KernelFamily.EPANECHNIKOV: lambda t: 1.0 - 0.5 * t * t,
}


def sphere_area(dimension: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return float(2.0 * np.pi ** (dimension / 2.0) / special.gamma(dimension / 2.0))


class KernelSpec:
    """
    A normalized radial kernel K in dimension d.

    Attributes:
        family: Kernel profile family
        dimension: Ambient dimension d the normalization refers to
        normalization: Constant c with c * integral of k(||z||) dz = 1
        sigma_K: Second moment (1/d) * integral of ||x||^2 K(||x||) dx
    """

    def __init__(
        self,
        family: str = "uniform",
        dimension: int = 1,
        table: Optional[Sequence[float]] = None,
        quadrature_points: int = 64,
    ):
        try:
            self.family = KernelFamily(family)
        except ValueError:
            choices = ", ".join(f.value for f in KernelFamily)
            raise InputError(f"Unknown kernel family {family!r}; choose one of: {choices}")

        if int(dimension) < 1:
            raise InputError(f"Kernel dimension must be a positive integer, got {dimension}")
        self.dimension = int(dimension)

        if self.family is KernelFamily.CUSTOM_TABLE:
            if table is None or len(table) < 2:
                raise InputError("custom-table kernels need a table of at least two values")
            self.table = np.asarray(table, dtype=np.float64)
            self.table_nodes = np.linspace(0.0, 1.0, self.table.shape[0])
        else:
            if table is not None:
                raise InputError(f"A table is only accepted for the custom-table family")
            self.table = None
            self.table_nodes = np.array([0.0, 1.0])

        self._gl_nodes, self._gl_weights = leggauss(quadrature_points)
        self._check_profile()

        area = sphere_area(self.dimension)
        self.normalization = 1.0 / (area * self._radial_moment(self.dimension - 1))
        self.sigma_K = area * self.normalization * self._radial_moment(self.dimension + 1) / self.dimension

        mass = self.mass()
        if abs(mass - 1.0) > MASS_TOLERANCE:
            raise ConfigurationError(
                f"Kernel {self.family.value} in d={self.dimension} integrates to {mass}, not 1"
            )

    def profile(self, t) -> np.ndarray:
        """Unnormalized profile k(t); zero for t > 1."""
        t = np.asarray(t, dtype=np.float64)
        inside = np.clip(t, 0.0, 1.0)
        if self.family is KernelFamily.CUSTOM_TABLE:
            values = np.interp(inside, self.table_nodes, self.table)
        else:
            values = _PROFILES[self.family](inside)
        return np.where(t <= 1.0, values, 0.0)

    def __call__(self, t) -> np.ndarray:
        """Normalized kernel K(t)."""
        return self.normalization * self.profile(t)

    def mass(self) -> float:
        """
        Integral of K(||z||) over R^d, by adaptive quadrature of the radial
        factor (independent of the Gauss-Legendre rule used for normalization).
        """
        def integrand(t: float) -> float:
            return float(self.profile(t)) * t ** (self.dimension - 1)

        radial, _ = integrate.quad(
            integrand, 0.0, 1.0, points=list(self.table_nodes[1:-1]) or None,
            epsabs=1e-13, epsrel=1e-12, limit=200,
        )
        return sphere_area(self.dimension) * self.normalization * radial

    def _radial_moment(self, power: int) -> float:
        # Gauss-Legendre per table segment: exact for the piecewise-linear tables
        total = 0.0
        for lo, hi in zip(self.table_nodes[:-1], self.table_nodes[1:]):
            half = 0.5 * (hi - lo)
            t = lo + half * (self._gl_nodes + 1.0)
            total += half * float(np.sum(self._gl_weights * self.profile(t) * t ** power))
        return total

    def _check_profile(self) -> None:
        grid = np.linspace(0.0, 1.0, 2001)
        values = self.profile(grid)
        if np.any(values < 0):
            raise ConfigurationError("Kernel profile must be nonnegative")
        if np.any(np.diff(values) > 1e-14):
            raise ConfigurationError("Kernel profile must be nonincreasing on [0, 1]")
        if not values[-1] > 0:
            raise ConfigurationError("Kernel profile must satisfy k(1) > 0")

    def describe(self) -> Dict[str, Any]:
        """Plain-dict description for manifests."""
        description: Dict[str, Any] = {
            "family": self.family.value,
            "dimension": self.dimension,
            "normalization": self.normalization,
            "sigma_K": self.sigma_K,
        }
        if self.table is not None:
            description["table"] = self.table.tolist()
        return description

    def __repr__(self) -> str:
        return f"KernelSpec(family={self.family.value!r}, dimension={self.dimension})"
