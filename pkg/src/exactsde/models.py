"""EA1 diffusion models with unit diffusion coefficient.

A model supplies the drift ``alpha`` and its derivatives, the antiderivative
``A(u) = int_0^u alpha``, the shifted hazard ``phi = (alpha^2 + alpha')/2 - L``
with ``0 <= phi <= M``, an initial distribution for ``X_0`` and a prior on the
scalar parameter ``theta``.

The model functions are compiled with numba and dispatched on an integer
``kind`` so that the HMC and particle kernels can call them without Python
overhead.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit

from .errors import InvalidArgument

HYPERBOLIC = 0
SINE = 1
TEMPERED_SINE = 2
CONSTANT_PHI = 3

# which-function codes for evaluate()
F_ALPHA, F_ALPHA1, F_ALPHA2, F_A, F_PHI, F_PHI1 = range(6)


@njit(cache=True)
def alpha_scalar(kind, p, x):
    if kind == HYPERBOLIC:
        return -p[0] * x / math.sqrt(1.0 + x * x)
    elif kind == SINE:
        return math.sin(x - p[0])
    elif kind == TEMPERED_SINE:
        return p[0] * math.sin(x)
    return 0.0


@njit(cache=True)
def alpha1_scalar(kind, p, x):
    if kind == HYPERBOLIC:
        s = 1.0 + x * x
        return -p[0] / (s * math.sqrt(s))
    elif kind == SINE:
        return math.cos(x - p[0])
    elif kind == TEMPERED_SINE:
        return p[0] * math.cos(x)
    return 0.0


@njit(cache=True)
def alpha2_scalar(kind, p, x):
    if kind == HYPERBOLIC:
        s = 1.0 + x * x
        return 3.0 * p[0] * x / (s * s * math.sqrt(s))
    elif kind == SINE:
        return -math.sin(x - p[0])
    elif kind == TEMPERED_SINE:
        return -p[0] * math.sin(x)
    return 0.0


@njit(cache=True)
def A_scalar(kind, p, x):
    if kind == HYPERBOLIC:
        return p[0] - p[0] * math.sqrt(1.0 + x * x)
    elif kind == SINE:
        return math.cos(p[0]) - math.cos(x - p[0])
    elif kind == TEMPERED_SINE:
        return p[0] - p[0] * math.cos(x)
    return 0.0


@njit(cache=True)
def phi_scalar(kind, p, x):
    if kind == HYPERBOLIC:
        th = p[0]
        s = 1.0 + x * x
        return 0.5 * (th * th * x * x / s - th / (s * math.sqrt(s))) + 0.5 * th
    elif kind == SINE:
        s = math.sin(x - p[0])
        return 0.5 * s * s + 0.5 * math.cos(x - p[0]) + 0.5
    elif kind == TEMPERED_SINE:
        c = p[0]
        s = math.sin(x)
        return 0.5 * c * c * s * s + 0.5 * c * math.cos(x) + 0.5 * c
    return p[0]


@njit(cache=True)
def phi1_scalar(kind, p, x):
    # alpha * alpha' + alpha'' / 2
    if kind == CONSTANT_PHI:
        return 0.0
    return alpha_scalar(kind, p, x) * alpha1_scalar(kind, p, x) + 0.5 * alpha2_scalar(kind, p, x)


@njit(cache=True)
def evaluate(which, kind, p, xs):
    out = np.empty(xs.size)
    for i in range(xs.size):
        x = xs[i]
        if which == F_ALPHA:
            out[i] = alpha_scalar(kind, p, x)
        elif which == F_ALPHA1:
            out[i] = alpha1_scalar(kind, p, x)
        elif which == F_ALPHA2:
            out[i] = alpha2_scalar(kind, p, x)
        elif which == F_A:
            out[i] = A_scalar(kind, p, x)
        elif which == F_PHI:
            out[i] = phi_scalar(kind, p, x)
        else:
            out[i] = phi1_scalar(kind, p, x)
    return out


# ---------------------------------------------------------------------------
# Distributions used for the initial state X_0 and for theta priors.

_INIT_POINT, _INIT_NORMAL, _INIT_FLAT = 0, 1, 2


@dataclass(frozen=True)
class PointMass:
    value: float = 0.0

    def logpdf(self, x):
        return 0.0 if x == self.value else -math.inf

    def sample(self, rng, size=None):
        return self.value if size is None else np.full(size, self.value)

    def in_support(self, x):
        return x == self.value

    @property
    def symmetric(self):
        return self.value == 0.0


@dataclass(frozen=True)
class Normal:
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if not self.sd > 0:
            raise InvalidArgument("Normal sd must be positive")

    def logpdf(self, x):
        z = (x - self.mean) / self.sd
        return -0.5 * z * z - math.log(self.sd) - 0.5 * math.log(2 * math.pi)

    def sample(self, rng, size=None):
        return rng.gen.normal(self.mean, self.sd, size)

    def in_support(self, x):
        return math.isfinite(x)

    @property
    def symmetric(self):
        return self.mean == 0.0


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not self.high > self.low:
            raise InvalidArgument("Uniform needs high > low")

    def logpdf(self, x):
        return -math.log(self.high - self.low) if self.low <= x <= self.high else -math.inf

    def sample(self, rng, size=None):
        return rng.gen.uniform(self.low, self.high, size)

    def in_support(self, x):
        return self.low <= x <= self.high

    @property
    def symmetric(self):
        return self.low == -self.high


@dataclass(frozen=True)
class Exponential:
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidArgument("Exponential rate must be positive")

    def logpdf(self, x):
        return math.log(self.rate) - self.rate * x if x >= 0 else -math.inf

    def sample(self, rng, size=None):
        return rng.gen.exponential(1.0 / self.rate, size)

    def in_support(self, x):
        return x >= 0

    symmetric = False


@dataclass(frozen=True)
class Flat:
    """Improper uniform density on ``[low, high]``; cannot be sampled."""

    low: float = -math.inf
    high: float = math.inf

    def logpdf(self, x):
        return 0.0 if self.low <= x <= self.high else -math.inf

    def sample(self, rng, size=None):
        raise InvalidArgument("cannot sample from an improper flat distribution")

    def in_support(self, x):
        return self.low <= x <= self.high

    @property
    def symmetric(self):
        return self.low == -self.high


def initial_code(dist):
    """Encode an initial distribution as ``(mode, mean, precision)`` for kernels."""
    if isinstance(dist, PointMass):
        return _INIT_POINT, dist.value, 0.0
    if isinstance(dist, Normal):
        return _INIT_NORMAL, dist.mean, 1.0 / dist.sd ** 2
    if isinstance(dist, Flat):
        return _INIT_FLAT, 0.0, 0.0
    raise InvalidArgument(f"unsupported initial distribution {dist!r}")


# ---------------------------------------------------------------------------


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


@dataclass(frozen=True)
class Ea1Model:
    """An immutable EA1 model bound to one value of ``theta``.

    ``L`` and ``M`` are the lower and upper bounds of ``(alpha^2 + alpha')/2``
    shifted so that ``phi = (alpha^2 + alpha')/2 - L`` lies in ``[0, M]``.
    ``sup_A`` is ``sup_u A(u)``, used by the endpoint rejection sampler.
    """

    name: str
    kind: int
    params: tuple
    theta: float
    L: float
    M: float
    sup_A: float
    initial: object = PointMass(0.0)
    theta_prior: object = None
    _factory: Callable = field(default=None, repr=False, compare=False)

    @functools.cached_property
    def p(self) -> np.ndarray:
        return np.asarray(self.params, dtype=float)

    def _eval(self, which, x):
        arr, scalar = _as_array(x)
        out = evaluate(which, self.kind, self.p, arr.ravel()).reshape(arr.shape)
        return float(out) if scalar else out

    def alpha(self, x):
        return self._eval(F_ALPHA, x)

    def alpha_prime(self, x):
        return self._eval(F_ALPHA1, x)

    def alpha_second(self, x):
        return self._eval(F_ALPHA2, x)

    def A(self, x):
        return self._eval(F_A, x)

    def phi(self, x):
        return self._eval(F_PHI, x)

    def phi_prime(self, x):
        return self._eval(F_PHI1, x)

    def with_theta(self, theta: float) -> Ea1Model:
        """The same family member at another parameter value."""
        if theta == self.theta:
            return self
        return self._factory(theta)

    def with_initial(self, initial) -> Ea1Model:
        return self._rebind(initial=initial)

    def with_prior(self, theta_prior) -> Ea1Model:
        return self._rebind(theta_prior=theta_prior)

    def _rebind(self, **changes):
        f = self._factory
        return f.func(*f.args, self.theta, **{**f.keywords, **changes})

    def is_symmetric(self, probes=None) -> bool:
        """Whether the prior path law is invariant under ``x -> -x``.

        Requires ``phi`` and ``A`` even and a symmetric initial distribution;
        checked numerically at probe points.
        """
        if probes is None:
            probes = np.linspace(0.05, 12.0, 97)
        probes = np.asarray(probes, dtype=float)
        even_phi = np.allclose(self.phi(probes), self.phi(-probes), rtol=0, atol=1e-12)
        even_A = np.allclose(self.A(probes), self.A(-probes), rtol=0, atol=1e-12)
        return bool(even_phi and even_A and getattr(self.initial, "symmetric", False))


def hyperbolic_model(theta: float, initial=PointMass(0.0), theta_prior=Exponential(1.0)) -> Ea1Model:
    """Hyperbolic bridge ``dX = -theta X / sqrt(1 + X^2) dt + dB``, theta > 0."""
    if not theta > 0:
        raise InvalidArgument(f"hyperbolic model needs theta > 0, got {theta}")
    factory = functools.partial(hyperbolic_model, initial=initial, theta_prior=theta_prior)
    return Ea1Model(
        name="hyperbolic", kind=HYPERBOLIC, params=(float(theta),), theta=float(theta),
        L=-theta / 2, M=theta ** 2 / 2 + theta / 2, sup_A=0.0,
        initial=initial, theta_prior=theta_prior, _factory=factory,
    )


def sine_model(theta: float = 0.0, initial=PointMass(0.0),
               theta_prior=Uniform(-math.pi, math.pi)) -> Ea1Model:
    """Periodic drift ``dX = sin(X - theta) dt + dB``."""
    factory = functools.partial(sine_model, initial=initial, theta_prior=theta_prior)
    return Ea1Model(
        name="sine", kind=SINE, params=(float(theta),), theta=float(theta),
        L=-0.5, M=9.0 / 8.0, sup_A=math.cos(theta) + 1.0,
        initial=initial, theta_prior=theta_prior, _factory=factory,
    )


def tempered_sine_model(c: float, initial=PointMass(0.0)) -> Ea1Model:
    """``dX = c sin(X) dt + dB`` for an inverse temperature ``c`` in [0, 1].

    ``M_c = (c^2 + c)/2 + 1/8`` bounds phi for every c (tight for c >= 1/2).
    """
    if not 0.0 <= c <= 1.0:
        raise InvalidArgument(f"inverse temperature must lie in [0, 1], got {c}")
    factory = functools.partial(_tempered_from_theta, initial=initial)
    return Ea1Model(
        name="tempered_sine", kind=TEMPERED_SINE, params=(float(c),), theta=float(c),
        L=-c / 2, M=(c * c + c) / 2 + 0.125, sup_A=2.0 * c,
        initial=initial, theta_prior=PointMass(float(c)), _factory=factory,
    )


def constant_phi_model(c: float, M: float, initial=PointMass(0.0), theta_prior=None) -> Ea1Model:
    """Test fixture: zero drift with a declared constant hazard ``phi = c <= M``.

    The path law is Brownian motion; ``c`` only sets the EA1 acceptance
    probability ``exp(-c T)``.  ``L`` is taken as 0.  ``theta`` plays the role of
    the bound ``M`` so that parameter updates have something to act on.
    """
    if c < 0 or M < c or M <= 0:
        raise InvalidArgument(f"constant_phi needs 0 <= c <= M and M > 0, got c={c}, M={M}")
    if theta_prior is None:
        theta_prior = Flat(c, math.inf)
    factory = functools.partial(_constant_phi_from_theta, c, initial=initial, theta_prior=theta_prior)
    return Ea1Model(
        name="constant_phi", kind=CONSTANT_PHI, params=(float(c), float(M)), theta=float(M),
        L=0.0, M=float(M), sup_A=0.0,
        initial=initial, theta_prior=theta_prior, _factory=factory,
    )


def _tempered_from_theta(c, initial, theta_prior=None):
    return tempered_sine_model(c, initial=initial)


def _constant_phi_from_theta(c, theta, initial, theta_prior):
    return constant_phi_model(c, theta, initial=initial, theta_prior=theta_prior)


MODEL_NAMES = ("hyperbolic", "sine", "tempered_sine", "constant_phi")


def build_model(name: str, theta=None, c=None, M=None, initial=PointMass(0.0), theta_prior=None) -> Ea1Model:
    """Construct a shipped model by name, as selected in a config file."""
    kw = {"initial": initial}
    if name == "hyperbolic":
        if theta_prior is not None:
            kw["theta_prior"] = theta_prior
        return hyperbolic_model(1.0 if theta is None else theta, **kw)
    if name == "sine":
        if theta_prior is not None:
            kw["theta_prior"] = theta_prior
        return sine_model(0.0 if theta is None else theta, **kw)
    if name == "tempered_sine":
        return tempered_sine_model(1.0 if c is None else c, **kw)
    if name == "constant_phi":
        c = 0.0 if c is None else c
        return constant_phi_model(c, 1.0 if M is None else M, theta_prior=theta_prior, **kw)
    raise InvalidArgument(f"unknown model {name!r}; expected one of {MODEL_NAMES}")
