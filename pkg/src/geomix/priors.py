"""Priors over the two embedding spaces.

The homophily prior is an unnormalized exponential lobe on the sphere
(amplitude * exp(concentration * (direction . unit(z) - 1))); only its
log-density up to a constant is ever consumed. The influence prior is an
isotropic Gaussian in geodesic distance on the ball with a closed-form
normalizer Z = Z_angular * Z_radial, where the radial part has an exact
finite-sum expression in erfcx that this module also differentiates with
respect to the dispersion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .manifold import clamp_to_ball, poincare_dist
from .special import gamma_half, log_erfcx

MAX_REJECTIONS = 10**6


class SamplingError(RuntimeError):
    """Raised when rejection sampling exhausts its retry budget."""


@dataclass
class SphericalPrior:
    """Exponential lobe on the homophily sphere."""

    direction: np.ndarray
    concentration: float
    amplitude: float = 1.0

    def __post_init__(self):
        self.direction = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(self.direction)
        if n == 0.0:
            raise ValueError("prior direction must be nonzero")
        self.direction = self.direction / n
        if self.concentration < 0.0:
            raise ValueError("concentration must be nonnegative")
        if self.amplitude <= 0.0:
            raise ValueError("amplitude must be positive")


@dataclass
class HyperbolicPrior:
    """Geodesic Gaussian on the influence ball.

    ``dim`` is the radial exponent d; the ball itself lives in R^(d+1).
    """

    dim: int
    dispersion: float
    center: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.dim < 0:
            raise ValueError("dim must be nonnegative")
        if self.dispersion <= 0.0:
            raise ValueError("dispersion must be positive")
        if self.center is None:
            self.center = np.zeros(self.dim + 1)
        self.center = np.asarray(self.center, dtype=float)
        if self.center.shape != (self.dim + 1,):
            raise ValueError(
                f"center must have {self.dim + 1} coordinates, got {self.center.shape}"
            )
        if np.linalg.norm(self.center) >= 1.0:
            raise ValueError("center must lie in the open unit ball")


def sphere_density(prior: SphericalPrior, z: np.ndarray, w_s: float) -> np.ndarray:
    """Unnormalized lobe density at sphere points ``z`` (radius ``w_s``)."""
    zhat = np.asarray(z, dtype=float) / w_s
    align = np.sum(prior.direction * zhat, axis=-1)
    return prior.amplitude * np.exp(prior.concentration * (align - 1.0))


def unit_ball_volume(d: int) -> float:
    """Angular normalizer: volume of the Euclidean unit d-ball."""
    if d < 0:
        raise ValueError("dimension must be nonnegative")
    return math.pi ** (d / 2.0) / gamma_half(d + 2)


def _signed_log_terms(d: int, zeta: float):
    # log-magnitude and sign of the erfcx sum terms, k = 0..d
    ks = np.arange(d + 1)
    c = (2 * ks - d) / math.sqrt(2.0)
    logs = np.array(
        [math.lgamma(d + 1) - math.lgamma(k + 1) - math.lgamma(d - k + 1) for k in ks]
    )
    logs += np.array([log_erfcx(ci * zeta) for ci in c])
    signs = np.where(ks % 2 == 0, 1.0, -1.0)
    return c, logs, signs


def _signed_logsumexp(logs: np.ndarray, signs: np.ndarray):
    m = float(np.max(logs))
    if not math.isfinite(m):
        return 0.0, -math.inf
    s = float(np.sum(signs * np.exp(logs - m)))
    if s == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, s), m + math.log(abs(s))


def log_radial_normalizer(d: int, zeta: float) -> float:
    """log of Z_radial(zeta) = int_0^inf exp(-r^2/(2 zeta^2)) sinh(r)^d dr.

    Uses the exact alternating erfcx sum; everything is carried in log
    space so large d * zeta products stay finite.
    """
    if zeta <= 0.0:
        raise ValueError("dispersion must be positive")
    _, logs, signs = _signed_log_terms(d, zeta)
    sign, log_s = _signed_logsumexp(logs, signs)
    if sign <= 0.0:
        raise ArithmeticError(f"radial normalizer lost all precision at d={d}, zeta={zeta}")
    return 0.5 * math.log(math.pi / 2.0) + math.log(zeta) - d * math.log(2.0) + log_s


def radial_normalizer(d: int, zeta: float) -> float:
    """Z_radial(zeta); overflows to inf where the true value does."""
    try:
        return math.exp(log_radial_normalizer(d, zeta))
    except OverflowError:
        return math.inf


def log_radial_normalizer_dzeta(d: int, zeta: float) -> float:
    """d/dzeta of log Z_radial, exact up to the same erfcx sum precision."""
    if zeta <= 0.0:
        raise ValueError("dispersion must be positive")
    c, logs, signs = _signed_log_terms(d, zeta)
    sign_s, log_s = _signed_logsumexp(logs, signs)
    if sign_s <= 0.0:
        raise ArithmeticError(f"radial normalizer lost all precision at d={d}, zeta={zeta}")
    # derivative of the sum: sum_k C (-1)^k [2 c_k^2 zeta erfcx(c_k zeta) - 2 c_k / sqrt(pi)]
    with np.errstate(divide="ignore"):
        d_logs = logs + np.log(2.0 * c * c * zeta)
    sign_a, log_a = _signed_logsumexp(d_logs, signs)
    ks = np.arange(d + 1)
    k_sum = sum(
        math.comb(d, int(k)) * (-1) ** int(k) * (2 * int(k) - d) for k in ks
    )
    b = -2.0 / math.sqrt(math.pi) * k_sum / math.sqrt(2.0)
    ratio = sign_a * sign_s * math.exp(log_a - log_s) if math.isfinite(log_a) else 0.0
    ratio += b * sign_s * math.exp(-log_s) if log_s < 700.0 else 0.0
    return 1.0 / zeta + ratio


def ball_density(prior: HyperbolicPrior, z: np.ndarray) -> np.ndarray:
    """Normalized geodesic-Gaussian density at ball points ``z``."""
    dist = poincare_dist(np.asarray(z, dtype=float), prior.center)
    log_z = math.log(unit_ball_volume(prior.dim)) + log_radial_normalizer(
        prior.dim, prior.dispersion
    )
    return np.exp(-(dist**2) / (2.0 * prior.dispersion**2) - log_z)


def sample_sphere(
    prior: SphericalPrior, count: int, w_s: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw sphere points by rejection on uniform directions.

    Proposals are uniform on the unit sphere and accepted with probability
    exp(concentration * (alignment - 1)) <= 1; the retry budget guards
    against extreme concentrations.
    """
    d = prior.direction.shape[0]
    out = np.empty((count, d))
    got = 0
    rejected = 0
    while got < count:
        chunk = max(256, 4 * (count - got))
        u = rng.standard_normal((chunk, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        accept_p = np.exp(prior.concentration * (u @ prior.direction - 1.0))
        keep = rng.random(chunk) < accept_p
        taken = np.flatnonzero(keep)[: count - got]
        out[got : got + taken.size] = u[taken]
        got += taken.size
        rejected += chunk - taken.size
        if rejected > MAX_REJECTIONS:
            raise SamplingError(
                f"sphere sampler exceeded {MAX_REJECTIONS} rejections "
                f"(concentration {prior.concentration:.3g})"
            )
    return w_s * out


def sample_ball_radii(
    d: int, zeta: float, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw geodesic radii from the density prop. to exp(-r^2/2z^2) sinh(r)^d.

    Uses sinh(r) <= exp(r)/2 to build a Gaussian envelope N(d z^2, z^2);
    the acceptance ratio is (1 - exp(-2r))^d.
    """
    out = np.empty(count)
    got = 0
    rejected = 0
    while got < count:
        chunk = max(256, 4 * (count - got))
        r = rng.normal(d * zeta * zeta, zeta, size=chunk)
        ok = r > 0.0
        accept_p = np.where(ok, -np.expm1(-2.0 * np.maximum(r, 0.0)), 0.0) ** d
        keep = ok & (rng.random(chunk) < accept_p)
        taken = np.flatnonzero(keep)[: count - got]
        out[got : got + taken.size] = r[taken]
        got += taken.size
        rejected += chunk - taken.size
        if rejected > MAX_REJECTIONS:
            raise SamplingError(
                f"radial sampler exceeded {MAX_REJECTIONS} rejections "
                f"(d={d}, dispersion {zeta:.3g})"
            )
    return out


def _mobius_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # left translation in the ball; isometry mapping 0 to a
    ab = np.sum(a * b, axis=-1, keepdims=True)
    na2 = np.sum(a * a, axis=-1, keepdims=True)
    nb2 = np.sum(b * b, axis=-1, keepdims=True)
    num = (1.0 + 2.0 * ab + nb2) * a + (1.0 - na2) * b
    return num / (1.0 + 2.0 * ab + na2 * nb2)


def sample_ball(
    prior: HyperbolicPrior, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ball points: rejection radii, uniform directions, tanh map.

    Off-origin centers are reached by a Mobius translation of the
    origin-centered draw, which preserves geodesic distance to the center.
    """
    r = sample_ball_radii(prior.dim, prior.dispersion, count, rng)
    u = rng.standard_normal((count, prior.dim + 1))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    z = np.tanh(r / 2.0)[:, None] * u
    if np.linalg.norm(prior.center) > 0.0:
        z = _mobius_add(prior.center[None, :], z)
    return clamp_to_ball(z)
