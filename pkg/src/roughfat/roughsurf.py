"""Gaussian-correlated rough surface profiles and roughness metrology.

Profiles are sampled as ``z = Rq * L @ w`` where ``L`` is the Cholesky factor of
a squared-exponential autocorrelation matrix built on the (polished) abscissae
and ``w`` is standard white noise drawn from a seeded Philox generator.

All lengths in this module are micrometres.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

#: Identity of the bit generator used for every stochastic draw.
RNG_ALGORITHM = "numpy.random.Philox"

#: rounded engineering Rq/Ra factor; the exact Gaussian value is sqrt(pi/2).
RQ_OVER_RA = 1.25
GAUSSIAN_RQ_OVER_RA = math.sqrt(math.pi / 2.0)

#: ISO 21920-3 evaluation length for Ra in [0.1, 2] um.
DEFAULT_WINDOW_UM = 500.0

JITTER_START = 1e-12
JITTER_MAX = 1e-6
ACF_EPS = 1e-9


class RoughnessError(ValueError):
    """Invalid roughness input (domain error)."""


class CholeskyError(ArithmeticError):
    def __init__(self, jitter: float):
        super().__init__(
            f"autocorrelation matrix not positive definite after jitter {jitter:.1e}"
        )
        self.jitter = jitter


class CorrelationLengthError(RoughnessError):
    """The ACF never crosses the requested threshold within the lag range."""


class ProfileParseError(ValueError):
    def __init__(self, path, lineno: int | None, message: str):
        where = f"{path}:{lineno}" if lineno is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.lineno = lineno


def rng_for_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class RoughnessSpec:
    """Inputs of the surface sampler.

    ``window_dx`` is the sampled length; the point spacing
    ``window_dx / (n_points - 1)`` must resolve the correlation length
    (at most ``corr_length / 5``).
    """

    target_rq: float
    corr_length: float
    n_points: int
    window_dx: float
    seed: int = 0

    def __post_init__(self):
        if not self.target_rq >= 0.0:
            raise RoughnessError(f"target_rq must be >= 0, got {self.target_rq}")
        if not self.corr_length > 0.0:
            raise RoughnessError(f"corr_length must be > 0, got {self.corr_length}")
        if int(self.n_points) < 2:
            raise RoughnessError(f"n_points must be >= 2, got {self.n_points}")
        if not self.window_dx > 0.0:
            raise RoughnessError(f"window_dx must be > 0, got {self.window_dx}")
        if not 0 <= int(self.seed) < 2**64:
            raise RoughnessError("seed must be a 64-bit unsigned integer")
        spacing = self.window_dx / (self.n_points - 1)
        if spacing > self.corr_length / 5.0 * (1.0 + 1e-9):
            raise RoughnessError(
                f"point spacing {spacing:.4g} um exceeds corr_length/5 = "
                f"{self.corr_length / 5.0:.4g} um"
            )

    @classmethod
    def from_ra(cls, ra: float, corr_length: float, n_points: int, window_dx: float,
                seed: int = 0) -> "RoughnessSpec":
        return cls(rq_from_ra(ra), corr_length, n_points, window_dx, seed)

    @classmethod
    def for_abscissae(cls, target_rq: float, corr_length: float, x0, seed: int = 0
                      ) -> "RoughnessSpec":
        """Spec matching irregular abscissae (e.g. mesh boundary nodes).

        The nominal window is the median point spacing times ``n - 1``, so
        gaps between separate edges do not count against the resolution rule.
        """
        x0 = np.asarray(x0, dtype=float)
        if x0.size < 2:
            raise RoughnessError("need at least two abscissae")
        h = float(np.median(np.diff(x0)))
        return cls(target_rq, corr_length, int(x0.size), h * (x0.size - 1), seed)

    @property
    def spacing(self) -> float:
        return self.window_dx / (self.n_points - 1)

    def abscissae(self) -> np.ndarray:
        return np.linspace(0.0, self.window_dx, self.n_points)


@dataclass(frozen=True)
class SurfaceProfile:
    x0: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if x0.ndim != 1 or z.shape != x0.shape:
            raise RoughnessError("x0 and z must be 1-D arrays of equal length")
        if x0.size > 1 and np.any(np.diff(x0) <= 0.0):
            raise RoughnessError("profile abscissae must be strictly increasing")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "z", z)

    def __len__(self):
        return self.z.size

    @property
    def span(self) -> float:
        return float(self.x0[-1] - self.x0[0]) if self.x0.size else 0.0


@dataclass(frozen=True)
class AcfEstimate:
    lags: np.ndarray
    values: np.ndarray
    n_windows: int = 1

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if lags.shape != values.shape or lags.size == 0:
            raise RoughnessError("lags and values must be non-empty and equal length")
        if lags[0] != 0.0 or values[0] != 1.0:
            raise RoughnessError("ACF must start at lag 0 with value 1")
        if np.any(np.abs(values) > 1.0 + ACF_EPS):
            raise RoughnessError("ACF values must satisfy |ACF| <= 1")
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "values", values)


class Criterion(enum.Enum):
    """Threshold conventions for reading a correlation length off an ACF."""

    TEN_PERCENT = 0.1
    ONE_OVER_E = math.exp(-1.0)
    POINT_TWO = 0.2

    @property
    def threshold(self) -> float:
        return float(self.value)

    @classmethod
    def parse(cls, name: str) -> "Criterion":
        aliases = {"10%": cls.TEN_PERCENT, "1/e": cls.ONE_OVER_E, "0.2": cls.POINT_TWO}
        if name in aliases:
            return aliases[name]
        return cls[name.upper()]


def _nonempty(profile: SurfaceProfile) -> np.ndarray:
    z = np.asarray(profile.z, dtype=float)
    if z.size == 0:
        raise RoughnessError("profile is empty")
    return z


def compute_ra(profile: SurfaceProfile) -> float:
    """Arithmetic mean deviation, ``mean(|z|)``."""
    z = _nonempty(profile)
    return float(np.mean(np.abs(z)))


def compute_rq(profile: SurfaceProfile) -> float:
    """Root-mean-square deviation, ``sqrt(mean(z**2))``."""
    z = _nonempty(profile)
    return float(np.sqrt(np.mean(z * z)))


def rq_from_ra(ra: float) -> float:
    """Convert Ra to Rq with the 1.25 engineering factor.

    For a zero-mean Gaussian profile the exact ratio is
    ``sqrt(pi/2) = 1.2533...`` (:data:`GAUSSIAN_RQ_OVER_RA`); the rounded
    factor is kept so that tabulated Ra inputs map onto the same Rq values
    used in the reference studies.
    """
    if ra < 0:
        raise RoughnessError(f"Ra must be >= 0, got {ra}")
    return RQ_OVER_RA * ra


def build_autocorr_matrix(x0, corr_length: float) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1 or x0.size == 0:
        raise RoughnessError("x0 must be a non-empty 1-D array")
    if not np.all(np.isfinite(x0)):
        raise RoughnessError("x0 contains non-finite abscissae")
    if not corr_length > 0:
        raise RoughnessError(f"corr_length must be > 0, got {corr_length}")
    d = x0[:, None] - x0[None, :]
    R = np.exp(-(d * d) / (2.0 * corr_length**2))
    np.fill_diagonal(R, 1.0)
    return R


def cholesky_factor(R: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``R``, adding diagonal jitter when needed.

    The jitter starts at 1e-12 and grows tenfold up to 1e-6.  Returns the
    factor and the jitter that was actually used (0.0 if none).
    """
    try:
        return linalg.cholesky(R, lower=True, check_finite=False), 0.0
    except linalg.LinAlgError:
        pass
    n = R.shape[0]
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            L = linalg.cholesky(R + jitter * np.eye(n), lower=True, check_finite=False)
            logger.debug("cholesky needed jitter %.1e for n=%d", jitter, n)
            return L, jitter
        except linalg.LinAlgError:
            jitter *= 10.0
    raise CholeskyError(jitter / 10.0)


def white_noise(seed: int, n: int) -> np.ndarray:
    return rng_for_seed(seed).standard_normal(n)


def sample_profile(spec: RoughnessSpec, x0=None, factor: np.ndarray | None = None
                   ) -> SurfaceProfile:
    """Draw one rough profile on the abscissae ``x0``.

    Parameters
    ----------
    spec : RoughnessSpec
        Target Rq, correlation length and seed.
    x0 : array_like, optional
        Abscissae in um; defaults to ``spec.abscissae()``.
    factor : ndarray, optional
        Precomputed Cholesky factor for ``x0`` (reused across an ensemble).
    """
    x0 = spec.abscissae() if x0 is None else np.asarray(x0, dtype=float)
    if x0.size != spec.n_points:
        raise RoughnessError(
            f"x0 has {x0.size} points but RoughnessSpec.n_points is {spec.n_points}"
        )
    if factor is None:
        factor, _ = cholesky_factor(build_autocorr_matrix(x0, spec.corr_length))
    w = white_noise(spec.seed, x0.size)
    z = (factor @ w) * spec.target_rq
    return SurfaceProfile(x0, z)


def _uniform(profile: SurfaceProfile) -> tuple[np.ndarray, float]:
    x, z = profile.x0, profile.z
    steps = np.diff(x)
    h = float(np.median(steps))
    if np.allclose(steps, h, rtol=1e-6, atol=0.0):
        return z, h
    n = int(round((x[-1] - x[0]) / h)) + 1
    grid = np.linspace(x[0], x[-1], n)
    return np.interp(grid, x, z), float(grid[1] - grid[0])


def compute_acf(profile: SurfaceProfile, window_dx: float = DEFAULT_WINDOW_UM,
                max_lag: float | None = None) -> AcfEstimate:
    """Normalized autocorrelation averaged over non-overlapping windows.

    The profile mean is removed first.  Within a window of length
    ``window_dx`` the lagged product sum is normalized by the zero-lag sum,
    which keeps ``|ACF| <= 1``.  Non-uniform abscissae are resampled onto a
    uniform grid at the median spacing.
    """
    if len(profile) < 2:
        raise RoughnessError("profile needs at least two points")
    if window_dx > profile.span * (1 + 1e-12):
        raise RoughnessError(
            f"ACF window {window_dx} um is longer than the profile span {profile.span} um"
        )
    z, h = _uniform(profile)
    z = z - z.mean()
    per_window = min(z.size, int(math.floor(window_dx / h + 1e-9)) + 1)
    if per_window < 2:
        raise RoughnessError("ACF window shorter than the point spacing")
    n_windows = z.size // per_window
    n_lags = per_window if max_lag is None else min(per_window, int(max_lag / h) + 1)

    acc = np.zeros(n_lags)
    used = 0
    for k in range(n_windows):
        seg = z[k * per_window:(k + 1) * per_window]
        energy = float(np.dot(seg, seg))
        if energy == 0.0:
            continue
        full = np.correlate(seg, seg, mode="full")[seg.size - 1:]
        acc += full[:n_lags] / energy
        used += 1
    if used == 0:
        raise RoughnessError("profile has zero variance; ACF undefined")
    values = acc / used
    values[0] = 1.0
    values = np.clip(values, -1.0, 1.0)
    return AcfEstimate(np.arange(n_lags) * h, values, used)


def extract_correlation_length(acf: AcfEstimate, criterion: Criterion) -> float:
    """First lag at which the ACF drops to the criterion threshold.

    Linear interpolation between neighbouring lags.
    """
    thr = criterion.threshold
    v = acf.values
    below = np.nonzero(v <= thr)[0]
    if below.size == 0:
        raise CorrelationLengthError(
            f"correlation length not resolved for criterion {criterion.name}"
        )
    k = int(below[0])
    if k == 0:
        return 0.0
    t0, t1 = acf.lags[k - 1], acf.lags[k]
    v0, v1 = v[k - 1], v[k]
    return float(t0 + (v0 - thr) * (t1 - t0) / (v0 - v1))


def kernel_acf(lags, corr_length: float) -> AcfEstimate:
    """The exact target kernel ``exp(-tau^2 / (2 lcor^2))`` as an ACF record."""
    lags = np.asarray(lags, dtype=float)
    return AcfEstimate(lags, np.exp(-(lags**2) / (2.0 * corr_length**2)))


def import_profile(path) -> SurfaceProfile:
    """Read a two-column (x, z) profile in um.

    Columns may be separated by commas or whitespace; lines starting with
    ``#`` are comments.
    """
    path = Path(path)
    xs, zs = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ProfileParseError(path, lineno, f"expected 2 columns, got {len(parts)}")
            try:
                x, z = float(parts[0]), float(parts[1])
            except ValueError:
                raise ProfileParseError(path, lineno, f"non-numeric row {line!r}") from None
            if not (math.isfinite(x) and math.isfinite(z)):
                raise ProfileParseError(path, lineno, "non-finite value")
            xs.append(x)
            zs.append(z)
    if not xs:
        raise ProfileParseError(path, None, "no data rows")
    x0 = np.array(xs)
    if x0.size > 1 and np.any(np.diff(x0) <= 0):
        raise RoughnessError(f"{path}: abscissae must be strictly increasing")
    return SurfaceProfile(x0, np.array(zs))


def export_profile(profile: SurfaceProfile, path, comment: str | None = None) -> None:
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write("# x_um,z_um\n")
        for x, z in zip(profile.x0, profile.z):
            fh.write(f"{float(x)!r},{float(z)!r}\n")


def export_acf(acf: AcfEstimate, path) -> None:
    with open(path, "w") as fh:
        fh.write("tau_um,acf\n")
        for t, v in zip(acf.lags, acf.values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")
