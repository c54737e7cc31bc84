"""
Synthetic designs, regression functions and noisy responses.

Designs and noise draw from separate keyed streams, so the same design can
be paired with fresh noise and every replicate is reproducible on its own.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import integrate

from ..exceptions import ConfigurationError, InputError, UnsupportedError
from ..utils.rng import keyed_rng
from ..utils.validators import validate_points
from .graph import PointCloud

logger = structlog.get_logger(__name__)

MIN_ACCEPTANCE = 0.01

# swiss roll parameter ranges and the factor mapping it into a unit-sized box
_ROLL_T = (1.5 * np.pi, 4.5 * np.pi)
_ROLL_HEIGHT = (0.0, 10.0)
_ROLL_SCALE = 0.1

# replicate index reserved for Monte Carlo norm estimates
_MC_INDEX = 2 ** 31 - 1


class DesignFamily(str, Enum):
    UNIFORM_CUBE = "uniform-cube"
    LIPSCHITZ_DENSITY = "lipschitz-density"
    CIRCLE = "circle"
    SWISS_ROLL = "swiss-roll"


class SignalFamily(str, Enum):
    COSINE_PRODUCT = "cosine-product"
    LINEAR = "single-coordinate-linear"
    ZERO = "zero"
    CUSTOM = "custom"


class DesignSpec(BaseModel):
    """
    Design distribution P.

    ``domain`` selects [0, 1]^d ("unit") or [-1, 1]^d ("symmetric") for cube
    families. ``tilt`` and the bump parameters shape the lipschitz-density
    family: p(x) is proportional to 1 + tilt * u_1 + bump_height * max(0, 1 - |u| / bump_width),
    where u is x mapped affinely onto [-1, 1]^d.
    """

    family: DesignFamily = DesignFamily.UNIFORM_CUBE
    d: int = Field(1, ge=1)
    m: Optional[int] = None
    domain: str = "unit"
    tilt: float = 0.5
    bump_height: float = Field(0.0, ge=0)
    bump_width: float = Field(0.5, gt=0)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_family(self) -> "DesignSpec":
        if self.domain not in ("unit", "symmetric"):
            raise ValueError(f"domain must be 'unit' or 'symmetric', got {self.domain!r}")
        if self.family == DesignFamily.CIRCLE:
            if self.d < 2:
                raise ValueError("circle designs need ambient dimension d >= 2")
            self.m = 1
        elif self.family == DesignFamily.SWISS_ROLL:
            if self.d != 3:
                raise ValueError("swiss-roll designs live in d = 3")
            self.m = 2
        else:
            if self.m is not None and self.m != self.d:
                raise ValueError("full-dimensional designs have m = d")
            self.m = self.d
            if self.family == DesignFamily.LIPSCHITZ_DENSITY and not abs(self.tilt) < 1:
                raise ValueError(f"tilt must satisfy |tilt| < 1 to keep the density positive")
        return self

    @property
    def is_manifold(self) -> bool:
        return self.family in (DesignFamily.CIRCLE, DesignFamily.SWISS_ROLL)

    @property
    def bounds(self) -> Tuple[float, float]:
        return (-1.0, 1.0) if self.domain == "symmetric" else (0.0, 1.0)


class SignalSpec(BaseModel):
    """
    Regression function f0.

    cosine-product: amplitude * prod_i cos(frequency * pi * x_i).
    single-coordinate-linear: amplitude * x_1.
    custom: ``function`` (and optionally ``gradient``) map an (n, d) array
    to values (n,) and gradients (n, d); they are not serialized.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    family: SignalFamily = SignalFamily.COSINE_PRODUCT
    amplitude: float = 1.0
    frequency: float = Field(1.0, gt=0)
    d: int = Field(1, ge=1)
    function: Optional[Callable[[np.ndarray], np.ndarray]] = Field(default=None, exclude=True)
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = Field(default=None, exclude=True)

    @model_validator(mode="after")
    def _check_custom(self) -> "SignalSpec":
        if self.family == SignalFamily.CUSTOM and self.function is None:
            raise ValueError("custom signals need a function")
        return self

    def scaled(self, amplitude: float) -> "SignalSpec":
        """Copy of this signal with a different amplitude."""
        return self.model_copy(update={"amplitude": float(amplitude)})


@dataclass(frozen=True)
class Dataset:
    """Responses y = f0(X) + noise over a design."""

    points: PointCloud
    y: np.ndarray
    f0_at_points: np.ndarray
    noise_sd: float = 1.0


def _uniform_cube(rng: np.random.Generator, n: int, d: int, bounds: Tuple[float, float]) -> np.ndarray:
    lo, hi = bounds
    return lo + (hi - lo) * rng.random((n, d))


def _lipschitz_weight(spec: DesignSpec, x: np.ndarray) -> np.ndarray:
    lo, hi = spec.bounds
    u = (2.0 * x - lo - hi) / (hi - lo)
    bump = np.maximum(0.0, 1.0 - np.linalg.norm(u, axis=1) / spec.bump_width)
    return 1.0 + spec.tilt * u[:, 0] + spec.bump_height * bump


def _rejection_sample(spec: DesignSpec, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, float]:
    ceiling = 1.0 + abs(spec.tilt) + spec.bump_height
    accepted = []
    count = proposed = 0
    while count < n:
        batch = max(2 * (n - count), 64)
        x = _uniform_cube(rng, batch, spec.d, spec.bounds)
        keep = rng.random(batch) * ceiling <= _lipschitz_weight(spec, x)
        proposed += batch
        accepted.append(x[keep])
        count += int(keep.sum())
        rate = count / proposed
        if rate < MIN_ACCEPTANCE:
            raise ConfigurationError(
                f"Rejection sampler acceptance rate {rate:.4f} is below {MIN_ACCEPTANCE}"
            )
    return np.concatenate(accepted)[:n], count / proposed


def _swiss_roll(rng: np.random.Generator, n: int) -> np.ndarray:
    # area element is proportional to sqrt(1 + t^2); thin t accordingly so the
    # sample is uniform on the surface
    t_lo, t_hi = _ROLL_T
    ceiling = np.sqrt(1.0 + t_hi ** 2)
    ts = []
    count = 0
    while count < n:
        t = rng.uniform(t_lo, t_hi, size=2 * n)
        keep = rng.random(2 * n) * ceiling <= np.sqrt(1.0 + t ** 2)
        ts.append(t[keep])
        count += int(keep.sum())
    t = np.concatenate(ts)[:n]
    height = rng.uniform(*_ROLL_HEIGHT, size=n)
    return _ROLL_SCALE * np.column_stack([t * np.cos(t), height, t * np.sin(t)])


def sample_design(spec: DesignSpec, n: int, seed: Optional[int] = None, index: int = 0) -> PointCloud:
    """
    Draw n iid design points.

    Args:
        spec: Design distribution
        n: Number of points (>= 2)
        seed: Overrides ``spec.seed``
        index: Replicate index; distinct indices give independent streams

    Returns:
        PointCloud with intrinsic_dim set for manifold families and the
        acceptance rate recorded for rejection sampling

    Raises:
        ConfigurationError: if rejection acceptance falls below 1%
    """
    if int(n) < 2:
        raise InputError(f"n must be at least 2, got {n}")
    n = int(n)
    rng = keyed_rng(spec.seed if seed is None else seed, "design", n, index)

    acceptance = None
    if spec.family == DesignFamily.UNIFORM_CUBE:
        points = _uniform_cube(rng, n, spec.d, spec.bounds)
    elif spec.family == DesignFamily.LIPSCHITZ_DENSITY:
        points, acceptance = _rejection_sample(spec, rng, n)
        logger.debug(f"Rejection sampler accepted {acceptance:.3f} of proposals", n=n)
    elif spec.family == DesignFamily.CIRCLE:
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        points = np.zeros((n, spec.d))
        points[:, 0] = np.cos(theta)
        points[:, 1] = np.sin(theta)
    else:
        points = _swiss_roll(rng, n)

    intrinsic = spec.m if spec.is_manifold else None
    return PointCloud(points=points, intrinsic_dim=intrinsic, acceptance_rate=acceptance)


def evaluate_signal(spec: SignalSpec, points) -> np.ndarray:
    """Evaluate f0 at each row of ``points``."""
    X = points.points if isinstance(points, PointCloud) else validate_points(points, min_points=1)
    if spec.family == SignalFamily.ZERO:
        return np.zeros(X.shape[0])
    if spec.family == SignalFamily.COSINE_PRODUCT:
        return spec.amplitude * np.prod(np.cos(spec.frequency * np.pi * X), axis=1)
    if spec.family == SignalFamily.LINEAR:
        return spec.amplitude * X[:, 0]
    return spec.amplitude * np.asarray(spec.function(X), dtype=np.float64).reshape(X.shape[0])


def make_dataset(
    design: DesignSpec,
    signal: SignalSpec,
    n: int,
    seed: Optional[int] = None,
    index: int = 0,
    noise: bool = True,
    points: Optional[PointCloud] = None,
) -> Dataset:
    """
    Draw a design and responses y_i = f0(X_i) + eps_i, eps_i ~ N(0, 1).

    Args:
        design: Design distribution
        signal: Regression function
        n: Sample size
        seed: Master seed (defaults to ``design.seed``)
        index: Replicate index
        noise: False gives noiseless responses y = f0(X)
        points: Reuse an existing design instead of sampling one
    """
    seed = design.seed if seed is None else seed
    cloud = points if points is not None else sample_design(design, n, seed=seed, index=index)
    f0 = evaluate_signal(signal, cloud)
    if noise:
        eps = keyed_rng(seed, "noise", cloud.n, index).standard_normal(cloud.n)
        y = f0 + eps
    else:
        y = f0.copy()
    return Dataset(points=cloud, y=y, f0_at_points=f0, noise_sd=1.0 if noise else 0.0)


def _cosine_square_integral(a: float, lo: float, hi: float) -> float:
    """Integral of cos^2(a pi x) over [lo, hi]."""
    w = a * np.pi
    return (hi - lo) / 2.0 + (np.sin(2 * w * hi) - np.sin(2 * w * lo)) / (4.0 * w)


def _require_cube(design: Optional[DesignSpec]) -> Tuple[float, float]:
    if design is None:
        return (0.0, 1.0)
    if design.family != DesignFamily.UNIFORM_CUBE:
        raise UnsupportedError(f"Closed forms are only available on uniform cube designs")
    return design.bounds


def sobolev_seminorm_oracle(spec: SignalSpec, design: Optional[DesignSpec] = None) -> float:
    """
    |f0|^2_{H^1} = integral over the cube of ||grad f0||^2 (Lebesgue measure).

    Closed form for cosine-product and linear signals; adaptive quadrature
    for custom signals that supply a gradient.

    Raises:
        UnsupportedError: for custom signals without a gradient or non-cube domains
    """
    lo, hi = _require_cube(design)
    d, A = spec.d, spec.amplitude
    if spec.family == SignalFamily.ZERO:
        return 0.0
    if spec.family == SignalFamily.LINEAR:
        return A * A * (hi - lo) ** d
    if spec.family == SignalFamily.COSINE_PRODUCT:
        a = spec.frequency
        cos_sq = _cosine_square_integral(a, lo, hi)
        sin_sq = (hi - lo) - cos_sq
        return d * A * A * (a * np.pi) ** 2 * sin_sq * cos_sq ** (d - 1)
    if spec.gradient is None:
        raise UnsupportedError("custom signal has no gradient; seminorm oracle unavailable")

    def integrand(*x: float) -> float:
        g = np.asarray(spec.gradient(np.array(x)[None, :]), dtype=np.float64).ravel()
        return float(g @ g)

    value, _ = integrate.nquad(integrand, [(lo, hi)] * d, opts={"epsrel": 1e-8, "epsabs": 1e-12})
    return A * A * value


def signal_l2_norm(
    spec: SignalSpec,
    design: DesignSpec,
    n_mc: int = 200_000,
    seed: int = 0,
) -> float:
    """
    ||f0||_{L^2(P)}: closed form on uniform cubes, Monte Carlo otherwise.
    """
    A = spec.amplitude
    if spec.family == SignalFamily.ZERO:
        return 0.0
    if design.family == DesignFamily.UNIFORM_CUBE and spec.family != SignalFamily.CUSTOM:
        lo, hi = design.bounds
        if spec.family == SignalFamily.COSINE_PRODUCT:
            mean_sq = (_cosine_square_integral(spec.frequency, lo, hi) / (hi - lo)) ** spec.d
        else:
            mean_sq = (hi ** 3 - lo ** 3) / (3.0 * (hi - lo))
        return float(abs(A) * np.sqrt(mean_sq))
    sample = sample_design(design, n_mc, seed=seed, index=_MC_INDEX)
    values = evaluate_signal(spec, sample)
    return float(np.sqrt(np.mean(values ** 2)))


def density_bounds(design: DesignSpec, n_mc: int = 65_536, seed: int = 0) -> Tuple[float, float]:
    """
    (p_min, p_max) of the design density with respect to the volume measure
    of its support.
    """
    if design.family == DesignFamily.CIRCLE:
        value = 1.0 / (2.0 * np.pi)
        return value, value
    if design.family == DesignFamily.SWISS_ROLL:
        raise UnsupportedError("density bounds are not tabulated for swiss-roll designs")
    lo, hi = design.bounds
    volume = (hi - lo) ** design.d
    if design.family == DesignFamily.UNIFORM_CUBE:
        return 1.0 / volume, 1.0 / volume
    rng = keyed_rng(seed, "density-bounds", design.d)
    mean_weight = float(np.mean(_lipschitz_weight(design, _uniform_cube(rng, n_mc, design.d, design.bounds))))
    scale = 1.0 / (mean_weight * volume)
    return (1.0 - abs(design.tilt)) * scale, (1.0 + abs(design.tilt) + design.bump_height) * scale


def design_from_dict(document: Any) -> DesignSpec:
    """Build a DesignSpec from a JSON/YAML mapping."""
    try:
        return DesignSpec.model_validate(document)
    except ValueError as e:
        raise ConfigurationError(f"Invalid design specification: {e}")


def signal_from_dict(document: Any) -> SignalSpec:
    """Build a SignalSpec from a JSON/YAML mapping."""
    try:
        return SignalSpec.model_validate(document)
    except ValueError as e:
        raise ConfigurationError(f"Invalid signal specification: {e}")
