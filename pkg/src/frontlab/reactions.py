"""Reaction nonlinearities and the constants (theta1, theta4, f0, zeta)
that enter the lower bounds."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import _kernels as K

log = logging.getLogger(__name__)

N_SAMPLE = 10_000
SAFETY = 0.99


@dataclass(frozen=True)
class ReactionSpec:
    kind: str                 # "kpp" | "ignition" | "arrhenius"
    code: int
    p0: float
    p1: float
    scale: float
    Lf: float
    theta1: float
    theta4: float
    f0: float
    zeta: float
    params: dict

    def f(self, T):
        T = np.asarray(T, dtype=np.float64)
        return K.reaction_array(self.code, self.p0, self.p1, self.scale,
                                np.atleast_1d(T)).reshape(T.shape)

    __call__ = f

    def scaled(self, c: float) -> "ReactionSpec":
        """ReactionSpec of c * f, constants re-extracted."""
        if not c > 0:
            raise ValueError("scale factor must be positive")
        new = replace(self, scale=self.scale * c, Lf=self.Lf * c)
        f0, zeta = extract_constants(new.f, new.theta1, new.theta4, zeta=self.zeta)
        return replace(new, f0=f0, zeta=zeta)


def lipschitz_constant(f: Callable, n: int = 200_001) -> float:
    """max |f'| on [0, 1] from dense one-sided differences."""
    T = np.linspace(0.0, 1.0, n)
    return float(np.abs(np.diff(f(T))).max() / (T[1] - T[0]))


def _sampled_min(f: Callable, a: float, b: float) -> float:
    return float(np.min(f(np.linspace(a, b, N_SAMPLE))))


def extract_constants(f: Callable, theta1: float, theta4: float,
                      zeta: Optional[float] = None):
    """Return (f0, zeta) with f >= f0 > 0 on [theta1 - zeta, theta4 + zeta].

    zeta comes from a dyadic search starting at min(theta1, 1 - theta4) / 2
    (capped at 1/2) unless given; f0 is 0.99 of the sampled minimum.
    """
    if not 0.0 < theta1 < theta4 < 1.0:
        raise ValueError(f"need 0 < theta1 < theta4 < 1, got ({theta1}, {theta4})")
    if _sampled_min(f, theta1, theta4) <= 0.0:
        raise ValueError(f"f vanishes inside [{theta1}, {theta4}]")
    if zeta is None:
        zeta = min(min(theta1, 1.0 - theta4) / 2.0, 0.5)
        while _sampled_min(f, theta1 - zeta, theta4 + zeta) <= 0.0:
            zeta /= 2.0
            if zeta < 1e-12:
                raise ValueError("no admissible zeta found")
    else:
        if not (0.0 < zeta and theta1 - zeta > 0.0 and theta4 + zeta < 1.0):
            raise ValueError(f"zeta={zeta} leaves (0, 1)")
        if _sampled_min(f, theta1 - zeta, theta4 + zeta) <= 0.0:
            raise ValueError(f"f vanishes on the zeta-extended interval (zeta={zeta})")
    f0 = SAFETY * _sampled_min(f, theta1 - zeta, theta4 + zeta)
    return f0, zeta


def _build(kind, code, p0, p1, theta1, theta4, params, Lf=None, zeta=None):
    spec = ReactionSpec(kind, code, float(p0), float(p1), 1.0, 0.0, theta1, theta4,
                        0.0, 0.0, params)
    f = spec.f
    if np.any(f(np.array([0.0, 1.0])) != 0.0):
        raise ValueError("f must vanish at 0 and 1")
    if np.min(f(np.linspace(0.0, 1.0, N_SAMPLE))) < 0.0:
        raise ValueError("f must be nonnegative on [0, 1]")
    Lf = lipschitz_constant(f) if Lf is None else Lf
    f0, zeta = extract_constants(f, theta1, theta4, zeta)
    return replace(spec, Lf=Lf, f0=f0, zeta=zeta)


def make_kpp_logistic(theta1: float = 0.25, theta4: float = 0.75,
                      zeta: Optional[float] = None) -> ReactionSpec:
    """f(T) = T (1 - T)."""
    return _build("kpp", K.LOGISTIC, 0.0, 1.0, theta1, theta4, {}, Lf=1.0, zeta=zeta)


def make_ignition(theta0: float, eps: Optional[float] = None,
                  theta1: Optional[float] = None, theta4: Optional[float] = None,
                  zeta: Optional[float] = None) -> ReactionSpec:
    """f = 0 on [0, theta0], (1 - T) ramp((T - theta0) / eps) above, with the
    C1 ramp 3s^2 - 2s^3 saturating at s = 1."""
    if not 0.0 < theta0 < 1.0:
        raise ValueError(f"theta0 must lie in (0, 1), got {theta0}")
    if eps is None:
        eps = (1.0 - theta0) / 8.0
    if not 0.0 < eps < (1.0 - theta0) / 4.0:
        raise ValueError(f"eps must lie in (0, (1 - theta0)/4), got {eps}")
    q = (1.0 - theta0) / 4.0
    theta1 = theta0 + q if theta1 is None else theta1
    theta4 = 1.0 - q if theta4 is None else theta4
    return _build("ignition", K.IGNITION, theta0, eps, theta1, theta4,
                  {"theta0": theta0, "eps": eps}, zeta=zeta)


def make_arrhenius(A: float, prefactor: float = 1.0, theta1: float = 0.25,
                   theta4: float = 0.75, zeta: Optional[float] = None) -> ReactionSpec:
    """f(T) = prefactor (1 - T) exp(-A / T), extended by f(0) = 0."""
    if not A > 0:
        raise ValueError(f"activation A must be positive, got {A}")
    if not prefactor > 0:
        raise ValueError(f"prefactor must be positive, got {prefactor}")
    return _build("arrhenius", K.ARRHENIUS, A, prefactor, theta1, theta4,
                  {"A": A, "prefactor": prefactor}, zeta=zeta)


def make_reaction(kind: str, **params) -> ReactionSpec:
    builders = {"kpp": make_kpp_logistic, "logistic": make_kpp_logistic,
                "ignition": make_ignition, "arrhenius": make_arrhenius}
    if kind not in builders:
        raise ValueError(f"unknown reaction {kind!r}; choose from {sorted(builders)}")
    return builders[kind](**params)
