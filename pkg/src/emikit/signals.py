"""Closed catalogue of time signals for the free coefficients of the families.

A signal is a sum of terms ``amp * exp(rate*t) * trig(omega*t)`` with trig in
{1, cos, sin}.  This covers constants, sinusoids, exponentials, and damped
oscillations, and is closed under scaling and addition.  Crucially, every term
has an exact antiderivative of ``exp(a*t) * term(t)``, which the membrane ODE
solution needs; an adaptive-quadrature route is kept alongside as an
independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .core import NumericError

__all__ = ["SignalTerm", "TimeSignal", "membrane_integral"]

_TRIGS = ("none", "cos", "sin")


@dataclass(frozen=True)
class SignalTerm:
    amplitude: float
    rate: float = 0.0
    omega: float = 0.0
    trig: str = "none"

    def __post_init__(self):
        if self.trig not in _TRIGS:
            raise ValueError(f"trig must be one of {_TRIGS}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.amplitude * np.exp(self.rate * t)
        if self.trig == "cos":
            out = out * np.cos(self.omega * t)
        elif self.trig == "sin":
            out = out * np.sin(self.omega * t)
        return out

    def exp_weighted_integral(self, a: float, t):
        """Exact integral of exp(a*tau) * term(tau) over tau in [0, t]."""
        t = np.asarray(t, dtype=float)
        mu = a + self.rate
        c = self.amplitude
        if self.trig == "none":
            if mu == 0.0:
                return c * t
            return c * np.expm1(mu * t) / mu
        om = self.omega
        denom = mu * mu + om * om
        if denom == 0.0:
            # both mu and omega vanish: integrand is the constant c (cos) or 0 (sin)
            return c * t if self.trig == "cos" else np.zeros_like(t)
        e = np.exp(mu * t)
        if self.trig == "cos":
            return c * (e * (mu * np.cos(om * t) + om * np.sin(om * t)) - mu) / denom
        return c * (e * (mu * np.sin(om * t) - om * np.cos(om * t)) + om) / denom


@dataclass(frozen=True)
class TimeSignal:
    """Sum of catalogue terms; evaluable at any finite time."""

    terms: tuple[SignalTerm, ...]

    @classmethod
    def zero(cls) -> "TimeSignal":
        return cls(())

    @classmethod
    def constant(cls, c: float) -> "TimeSignal":
        return cls((SignalTerm(c),))

    @classmethod
    def sine(cls, c: float, omega: float = 1.0) -> "TimeSignal":
        return cls((SignalTerm(c, omega=omega, trig="sin"),))

    @classmethod
    def cosine(cls, c: float, omega: float = 1.0) -> "TimeSignal":
        return cls((SignalTerm(c, omega=omega, trig="cos"),))

    @classmethod
    def exponential(cls, c: float, rate: float) -> "TimeSignal":
        return cls((SignalTerm(c, rate=rate),))

    @classmethod
    def damped_cosine(cls, c: float, rate: float, omega: float = 1.0) -> "TimeSignal":
        return cls((SignalTerm(c, rate=rate, omega=omega, trig="cos"),))

    @property
    def has_exact_exp_integral(self) -> bool:
        return True

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for term in self.terms:
            out = out + term(t)
        return out if out.ndim else float(out)

    def scaled(self, factor: float) -> "TimeSignal":
        return TimeSignal(tuple(
            SignalTerm(term.amplitude * factor, term.rate, term.omega, term.trig)
            for term in self.terms))

    def __add__(self, other: "TimeSignal") -> "TimeSignal":
        return TimeSignal(self.terms + other.terms)

    def exp_weighted_integral(self, a: float, t):
        """Exact integral of exp(a*tau) * signal(tau) over [0, t]."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for term in self.terms:
            out = out + term.exp_weighted_integral(a, t)
        return out if out.ndim else float(out)

    def exp_weighted_integral_quadrature(self, a: float, t: float,
                                         tol: float = 1e-12) -> float:
        """Same integral by adaptive Gauss-Kronrod quadrature.

        Raises NumericError (reporting the achieved error estimate) if the
        quadrature cannot reach ``tol`` beyond what double precision permits.
        """
        if t == 0.0:
            return 0.0
        value, abserr = quad(lambda tau: math.exp(a * tau) * float(self(tau)),
                             0.0, t, epsabs=tol, epsrel=1e-11,
                             limit=2000, full_output=True)[:2]
        # large integrals are rounding-limited in absolute terms; accept
        # machine-level relative accuracy alongside the absolute target
        allowed = max(tol, 1e-10 * abs(value))
        if abserr > allowed:
            raise NumericError(
                f"quadrature did not converge: achieved {abserr:.3e}, required {allowed:.3e}")
        return value


def membrane_integral(c: float, r: float, rest: float, v0: float,
                      source: TimeSignal, t, method: str = "exact"):
    """Transmembrane potential of the passive membrane ODE at time t.

    Evaluates  v(t) = exp(-t/(c r)) * (v0 + I(t)/c)  with
    I(t) = integral over [0, t] of exp(tau/(c r)) * (rest/r - source(tau)).
    The source is the membrane current magnitude imposed by the field family
    (free coefficient scaled by the geometry factor).

    ``method`` selects the exact antiderivative ("exact") or adaptive
    quadrature ("quadrature"); the two agree to quadrature tolerance and act
    as mutual cross-checks.
    """
    if c <= 0 or r <= 0:
        raise ValueError("capacitance and resistance must be positive")
    a = 1.0 / (c * r)
    weighted = TimeSignal.constant(rest / r) + source.scaled(-1.0)
    if method == "exact":
        integral = weighted.exp_weighted_integral(a, t)
    elif method == "quadrature":
        tarr = np.asarray(t, dtype=float)
        if tarr.ndim == 0:
            integral = weighted.exp_weighted_integral_quadrature(a, float(tarr))
        else:
            integral = np.array([
                weighted.exp_weighted_integral_quadrature(a, float(ti))
                for ti in tarr.ravel()]).reshape(tarr.shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    t = np.asarray(t, dtype=float)
    out = np.exp(-a * t) * (v0 + integral / c)
    return out if out.ndim else float(out)
