"""Boundary parameterization, height-function bijection, phase diagram, and
entropy primitives for the open-boundary TASEP.

Injection/extraction rates (alpha, beta) in (0,1) are equivalently encoded as

    a = (1 - alpha)/alpha,    b = (1 - beta)/beta,

and every other module works in the (a, b) parameterization.  The height
function H(k) = tau_1 + ... + tau_k identifies occupation configurations with
lattice paths started at 0 with increments in {0, 1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import accumulate
from typing import Iterable, Sequence

LOG4 = math.log(4.0)

# Maximum |log a| (or |log b|) accepted when building parameters from the
# scaling window; beyond this exp() is useless anyway.
_MAX_LOG_PARAM = 500.0


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ResourceLimitError(RuntimeError):
    """A requested size exceeds an enumeration or memory cap."""


class NumericConsistencyError(ArithmeticError):
    """An internal numerical self-check failed."""


class VerificationError(RuntimeError):
    """A cross-route verification suite reported a failure."""


@dataclass(frozen=True)
class BoundaryParams:
    """Boundary rates and their (a, b) reparameterization.

    Invariants: alpha, beta in (0,1); a, b > 0; a = (1-alpha)/alpha and
    b = (1-beta)/beta to 1e-14 relative accuracy.
    """

    alpha: float
    beta: float
    a: float
    b: float

    def __post_init__(self) -> None:
        for name, rate in (("alpha", self.alpha), ("beta", self.beta)):
            if not (0.0 < rate < 1.0):
                raise DomainError(f"{name} must lie in (0, 1), got {rate!r}")
        for name, val in (("a", self.a), ("b", self.b)):
            if not val > 0.0:
                raise DomainError(f"{name} must be positive, got {val!r}")
        if not _close_rel(self.a, (1.0 - self.alpha) / self.alpha, 1e-14):
            raise DomainError("a inconsistent with alpha")
        if not _close_rel(self.b, (1.0 - self.beta) / self.beta, 1e-14):
            raise DomainError("b inconsistent with beta")


def _close_rel(x: float, y: float, tol: float) -> bool:
    return abs(x - y) <= tol * max(abs(x), abs(y), 1.0)


def params_from_rates(alpha: float, beta: float) -> BoundaryParams:
    """Build parameters from the boundary rates themselves."""
    for name, rate in (("alpha", alpha), ("beta", beta)):
        if not (0.0 < rate < 1.0):
            raise DomainError(f"{name} must lie in (0, 1), got {rate!r}")
    return BoundaryParams(alpha, beta, (1.0 - alpha) / alpha, (1.0 - beta) / beta)


def params_from_ab(a: float, b: float) -> BoundaryParams:
    """Build parameters from (a, b) directly; alpha = 1/(1+a), beta = 1/(1+b)."""
    if not a > 0.0:
        raise DomainError(f"a must be positive, got {a!r}")
    if not b > 0.0:
        raise DomainError(f"b must be positive, got {b!r}")
    return BoundaryParams(1.0 / (1.0 + a), 1.0 / (1.0 + b), a, b)


def params_from_scaling(u: float, v: float, n: int) -> BoundaryParams:
    """Parameters of the size-n system in the triple-point scaling window.

    a = exp(-u/sqrt(n)), b = exp(-v/sqrt(n)); the rates follow by inverting
    the (a, b) map.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    root = math.sqrt(n)
    for name, val in (("u", u), ("v", v)):
        if abs(val / root) > _MAX_LOG_PARAM:
            raise DomainError(f"|{name}|/sqrt(n) too large: {abs(val) / root:g}")
    a = math.exp(-u / root)
    b = math.exp(-v / root)
    return BoundaryParams(1.0 / (1.0 + a), 1.0 / (1.0 + b), a, b)


@dataclass(frozen=True)
class Occupation:
    """An occupation configuration (tau_1, ..., tau_N), each in {0, 1}."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bits) < 1:
            raise DomainError("occupation needs at least one site")
        if any(bit not in (0, 1) for bit in self.bits):
            raise DomainError("occupation entries must be 0 or 1")

    @property
    def n_sites(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class LatticePath:
    """A path (s_0, ..., s_N) with s_0 = 0 and increments in {0, 1}."""

    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.values) < 1 or self.values[0] != 0:
            raise DomainError("lattice path must start at 0")
        for prev, cur in zip(self.values, self.values[1:]):
            if cur - prev not in (0, 1):
                raise DomainError("lattice path increments must be 0 or 1")

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1


def _bits_of(tau: Occupation | Sequence[int] | Iterable[int]) -> tuple[int, ...]:
    if isinstance(tau, Occupation):
        return tau.bits
    return tuple(int(t) for t in tau)


def _values_of(s: LatticePath | Sequence[int] | Iterable[int]) -> tuple[int, ...]:
    if isinstance(s, LatticePath):
        return s.values
    return tuple(int(v) for v in s)


def height_from_occupation(tau: Occupation | Sequence[int]) -> LatticePath:
    """Partial sums s_k = tau_1 + ... + tau_k (with s_0 = 0)."""
    bits = _bits_of(tau)
    return LatticePath((0,) + tuple(accumulate(bits)))


def occupation_from_height(s: LatticePath | Sequence[int]) -> Occupation:
    """Inverse of height_from_occupation: tau_k = s_k - s_{k-1}."""
    values = _values_of(s)
    if len(values) < 2 or values[0] != 0:
        raise DomainError("height path must start at 0 and have >= 1 step")
    bits = tuple(cur - prev for prev, cur in zip(values, values[1:]))
    if any(bit not in (0, 1) for bit in bits):
        raise DomainError("height path increments must be 0 or 1")
    return Occupation(bits)


@dataclass(frozen=True)
class PhaseInfo:
    """Phase-diagram classification of a parameter point (a, b).

    region is one of "MC", "LD", "HD".  fan means ab < 1, shock means ab > 1.
    On the coexistence line a = b > 1 the density is not self-averaging; we
    report the LD branch value 1/(1+a) and set coexistence=True (the K and
    rate formulas are symmetric under the branch choice there).
    """

    region: str
    rho_bar: float
    fan: bool
    shock: bool
    coexistence: bool


def phase_info(a: float, b: float) -> PhaseInfo:
    """Classify (a, b) and return the limiting particle density rho_bar."""
    if not a > 0.0:
        raise DomainError(f"a must be positive, got {a!r}")
    if not b > 0.0:
        raise DomainError(f"b must be positive, got {b!r}")
    if a > 1.0 and a >= b:
        region, rho = "LD", 1.0 / (1.0 + a)
    elif b > 1.0:
        region, rho = "HD", b / (1.0 + b)
    else:
        region, rho = "MC", 0.5
    return PhaseInfo(
        region=region,
        rho_bar=rho,
        fan=a * b < 1.0,
        shock=a * b > 1.0,
        coexistence=(a == b and a > 1.0),
    )


def normalization_K(a: float, b: float) -> float:
    """Additive normalization K(a, b) = log(rho_bar (1 - rho_bar)).

    Equals the shock-region closed form log((a v b)/(1 + a v b)^2) when
    ab >= 1 and the fan-region three-case form when ab <= 1.
    """
    rho = phase_info(a, b).rho_bar
    return math.log(rho * (1.0 - rho))


def shock_region_K(a: float, b: float) -> float:
    """Closed form log((a v b)/(1 + a v b)^2); valid normalization on ab >= 1."""
    m = max(a, b)
    return math.log(m / (1.0 + m) ** 2)


def fan_region_K(a: float, b: float) -> float:
    """Three-case closed form valid on ab <= 1 (at most one of a, b exceeds 1)."""
    if a > 1.0:
        return math.log(a / (1.0 + a) ** 2)
    if b > 1.0:
        return math.log(b / (1.0 + b) ** 2)
    return -2.0 * math.log(2.0)


def log_c_growth_rate(a: float, b: float) -> float:
    """Limit of log(c_N)/N for the two-line normalizing constant c_N.

    Equals -(K(a, b) + log 4) = -log(4 rho_bar (1 - rho_bar)); zero exactly at
    the triple point a = b = 1 where the pair weight is identically 1.
    """
    return -(normalization_K(a, b) + LOG4)


def entropy_h(x: float) -> float:
    """x log x + (1-x) log(1-x) on [0, 1] (with 0 log 0 = 0), +inf outside."""
    if x < 0.0 or x > 1.0:
        return math.inf
    out = 0.0
    if x > 0.0:
        out += x * math.log(x)
    if x < 1.0:
        out += (1.0 - x) * math.log(1.0 - x)
    return out


def relative_entropy(x: float, y: float) -> float:
    """Bernoulli relative entropy h(x|y) = x log(x/y) + (1-x) log((1-x)/(1-y)).

    Defined for x in [0, 1] (+inf outside) and y in (0, 1); the 0 log 0 = 0
    convention applies at the endpoints of x.
    """
    if not (0.0 < y < 1.0):
        raise DomainError(f"reference probability y must lie in (0, 1), got {y!r}")
    if x < 0.0 or x > 1.0:
        return math.inf
    out = 0.0
    if x > 0.0:
        out += x * math.log(x / y)
    if x < 1.0:
        out += (1.0 - x) * math.log((1.0 - x) / (1.0 - y))
    return out
