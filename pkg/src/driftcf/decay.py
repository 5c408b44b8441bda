"""Decay functions for time-aware item-based collaborative filtering.

A decay spec assigns a nonnegative weight w(t) to a rating of age t
seconds.  Six families are provided:

* ``Constant``    -- w(t) = 1 (plain IBCF, no time-awareness)
* ``Window``      -- w(t) = 1 for t <= T_w, else 0
* ``Logistic``    -- w(t) = 1 / (1 + exp(t/T_g - b))
* ``Exponential`` -- w(t) = exp(-t / T_e)
* ``Outraday``    -- flat within one day, power decay (t/86400)^-K_o after
* ``Piecewise``   -- power decay below T_s, plateau on [T_s, T_l),
                     power decay (t/T_l)^-K_l beyond T_l

All weights are dimensionless and non-increasing in age.  Specs are
immutable values; ``eval_decay`` is pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SECONDS_PER_DAY = 86400

# The piecewise short branch (t/T_s)^-K_s diverges at t = 0.  Timestamps
# have one-second resolution, so ages below one second are clamped to 1 s.
PIECEWISE_AGE_FLOOR = 1.0


class DecayParseError(ValueError):
    """Raised when a decay spec string cannot be parsed."""


def _require_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")


def _require_nonnegative(name: str, value: float) -> None:
    if value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value!r}")


@dataclass(frozen=True)
class Constant:
    """Uniform weighting; reproduces classic item-based CF."""

    def weight(self, age: float) -> float:
        return 1.0


@dataclass(frozen=True)
class Window:
    """Hard cutoff: full weight up to ``t_w`` seconds, zero after."""

    t_w: float

    def __post_init__(self) -> None:
        _require_positive("Tw", self.t_w)

    def weight(self, age: float) -> float:
        return 1.0 if age <= self.t_w else 0.0


@dataclass(frozen=True)
class Logistic:
    """Sigmoid roll-off with time scale ``t_g`` and offset ``b``."""

    t_g: float
    b: float = 5.0

    def __post_init__(self) -> None:
        _require_positive("Tg", self.t_g)

    def weight(self, age: float) -> float:
        x = age / self.t_g - self.b
        # 1 / (1 + e^x), evaluated without overflow for large x
        if x >= 0:
            z = math.exp(-x)
            return z / (1.0 + z)
        return 1.0 / (1.0 + math.exp(x))


@dataclass(frozen=True)
class Exponential:
    """Exponential forgetting with time scale ``t_e``."""

    t_e: float

    def __post_init__(self) -> None:
        _require_positive("Te", self.t_e)

    def weight(self, age: float) -> float:
        return math.exp(-age / self.t_e)


@dataclass(frozen=True)
class Outraday:
    """Full weight within one day, then power decay with exponent ``k_o``.

    The one-day threshold is a fixed constant of the family, not a free
    parameter.
    """

    k_o: float

    def __post_init__(self) -> None:
        _require_nonnegative("Ko", self.k_o)

    def weight(self, age: float) -> float:
        if age < SECONDS_PER_DAY:
            return 1.0
        return (age / SECONDS_PER_DAY) ** -self.k_o


@dataclass(frozen=True)
class Piecewise:
    """Three-phase decay: short-term power decay below ``t_s``, a unit
    plateau on [``t_s``, ``t_l``), and long-term power decay beyond ``t_l``.

    Both branch junctions are continuous: the short branch equals 1 at
    ``t_s`` and the long branch equals 1 at ``t_l``.  Ages below one
    second are clamped (see ``PIECEWISE_AGE_FLOOR``).
    """

    t_s: float
    t_l: float
    k_s: float
    k_l: float

    def __post_init__(self) -> None:
        _require_positive("Ts", self.t_s)
        _require_positive("Tl", self.t_l)
        _require_nonnegative("Ks", self.k_s)
        _require_nonnegative("Kl", self.k_l)
        if self.t_s > self.t_l:
            raise ValueError(f"Ts must not exceed Tl, got Ts={self.t_s!r} Tl={self.t_l!r}")

    def weight(self, age: float) -> float:
        t = age if age > PIECEWISE_AGE_FLOOR else PIECEWISE_AGE_FLOOR
        if t < self.t_s:
            return (t / self.t_s) ** -self.k_s
        if t < self.t_l:
            return 1.0
        return (t / self.t_l) ** -self.k_l


DecaySpec = Constant | Window | Logistic | Exponential | Outraday | Piecewise


def eval_decay(spec: DecaySpec, age: float) -> float:
    """Weight of a rating of ``age`` seconds under ``spec``.

    Raises ValueError for negative ages.
    """
    if age < 0:
        raise ValueError(f"age must be nonnegative, got {age!r}")
    return spec.weight(age)


# Textual spec syntax, e.g. "piecewise:Ts=5e4,Tl=1e6,Ks=0.6,Kl=0.3".
# Family name, then comma-separated key=value parameters.

_FAMILY_PARAMS: dict[str, tuple[tuple[str, bool], ...]] = {
    # (key, required)
    "constant": (),
    "window": (("tw", True),),
    "logistic": (("tg", True), ("b", False)),
    "exp": (("te", True),),
    "outraday": (("ko", True),),
    "piecewise": (("ts", True), ("tl", True), ("ks", True), ("kl", True)),
}

_CANONICAL_KEYS = {
    "tw": "Tw", "tg": "Tg", "b": "b", "te": "Te", "ko": "Ko",
    "ts": "Ts", "tl": "Tl", "ks": "Ks", "kl": "Kl",
}


def parse_decay(text: str) -> DecaySpec:
    """Parse a decay spec string.

    Raises DecayParseError naming the offending key or family on failure.
    """
    head, sep, rest = text.strip().partition(":")
    family = head.strip().lower()
    if family not in _FAMILY_PARAMS:
        known = ", ".join(sorted(_FAMILY_PARAMS))
        raise DecayParseError(f"unknown decay family {head.strip()!r} (known: {known})")

    allowed = _FAMILY_PARAMS[family]
    allowed_keys = [k for k, _req in allowed]
    values: dict[str, float] = {}
    if sep and rest.strip():
        for part in rest.split(","):
            key, eq, val = part.partition("=")
            key = key.strip().lower()
            if not eq:
                raise DecayParseError(f"expected key=value, got {part.strip()!r}")
            if key not in allowed_keys:
                raise DecayParseError(
                    f"unknown parameter {key!r} for family {family!r}"
                    f" (expected: {', '.join(_CANONICAL_KEYS[k] for k in allowed_keys) or 'none'})"
                )
            if key in values:
                raise DecayParseError(f"duplicate parameter {_CANONICAL_KEYS[key]!r}")
            try:
                values[key] = float(val.strip())
            except ValueError:
                raise DecayParseError(
                    f"parameter {_CANONICAL_KEYS[key]!r} has non-numeric value {val.strip()!r}"
                ) from None
    for key, required in allowed:
        if required and key not in values:
            raise DecayParseError(f"missing parameter {_CANONICAL_KEYS[key]!r} for family {family!r}")

    try:
        if family == "constant":
            return Constant()
        if family == "window":
            return Window(values["tw"])
        if family == "logistic":
            return Logistic(values["tg"], values.get("b", 5.0))
        if family == "exp":
            return Exponential(values["te"])
        if family == "outraday":
            return Outraday(values["ko"])
        return Piecewise(values["ts"], values["tl"], values["ks"], values["kl"])
    except ValueError as exc:
        raise DecayParseError(str(exc)) from None


def _fmt(x: float) -> str:
    return format(x, ".12g")


def format_decay(spec: DecaySpec) -> str:
    """Canonical string form of a spec; round-trips through parse_decay."""
    if isinstance(spec, Constant):
        return "constant"
    if isinstance(spec, Window):
        return f"window:Tw={_fmt(spec.t_w)}"
    if isinstance(spec, Logistic):
        return f"logistic:Tg={_fmt(spec.t_g)},b={_fmt(spec.b)}"
    if isinstance(spec, Exponential):
        return f"exp:Te={_fmt(spec.t_e)}"
    if isinstance(spec, Outraday):
        return f"outraday:Ko={_fmt(spec.k_o)}"
    if isinstance(spec, Piecewise):
        return (
            f"piecewise:Ts={_fmt(spec.t_s)},Tl={_fmt(spec.t_l)},"
            f"Ks={_fmt(spec.k_s)},Kl={_fmt(spec.k_l)}"
        )
    raise TypeError(f"not a decay spec: {spec!r}")


def family_name(spec: DecaySpec) -> str:
    """Family identifier used in sweep tables and spec strings."""
    return format_decay(spec).partition(":")[0]
