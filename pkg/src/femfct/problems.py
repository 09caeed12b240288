"""Built-in manufactured problems for the convergence studies.

Both use the polynomial profile S(x, y) = x^2 (1 - x^2) y (1 - y) (1 - 2y)
on the unit square with b = (2, 3), c = 1 and homogeneous Dirichlet data;
the source term is derived analytically.  The space-study solution grows
linearly in time (100 t S), the time-study solution oscillates
((1 + sin 2 pi t) S), giving a nontrivial second time derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import ProblemSpec


def _profile(x, y):
    return x * x * (1.0 - x * x) * y * (1.0 - y) * (1.0 - 2.0 * y)


def _profile_dx(x, y):
    return (2.0 * x - 4.0 * x**3) * y * (1.0 - y) * (1.0 - 2.0 * y)


def _profile_dy(x, y):
    return x * x * (1.0 - x * x) * (1.0 - 6.0 * y + 6.0 * y * y)


def _profile_lap(x, y):
    xx = (2.0 - 12.0 * x * x) * y * (1.0 - y) * (1.0 - 2.0 * y)
    yy = x * x * (1.0 - x * x) * (12.0 * y - 6.0)
    return xx + yy


@dataclass(frozen=True)
class ExactSolution:
    """Exact solution with gradient, for the error norms."""

    u: Callable  # (t, x, y) -> value
    gradient: Callable  # (t, x, y) -> (du/dx, du/dy)


def _make_problem(scale, scale_dt, eps, tau, t_end):
    """CDR problem with exact solution scale(t) * S(x, y), b=(2,3), c=1."""

    def u(t, x, y):
        return scale(t) * _profile(x, y)

    def gradient(t, x, y):
        return scale(t) * _profile_dx(x, y), scale(t) * _profile_dy(x, y)

    def f(t, x, y):
        adv_reac = 2.0 * _profile_dx(x, y) + 3.0 * _profile_dy(x, y) + _profile(x, y)
        return scale_dt(t) * _profile(x, y) + scale(t) * (
            -eps * _profile_lap(x, y) + adv_reac
        )

    spec = ProblemSpec(
        eps=eps,
        b=lambda t, x, y: (np.full_like(np.asarray(x, dtype=float), 2.0), np.full_like(np.asarray(x, dtype=float), 3.0)),
        c=lambda t, x, y: np.ones_like(np.asarray(x, dtype=float)),
        f=f,
        u0=lambda x, y: scale(0.0) * _profile(x, y),
        c0=1.0,  # c - div(b)/2 = 1
        t_end=t_end,
        tau=tau,
    )
    return spec, ExactSolution(u, gradient)


def space_study_problem(eps=1e-8, tau=1e-3, t_end=1.0):
    """u = 100 t S(x, y): the spatial-accuracy benchmark."""
    return _make_problem(lambda t: 100.0 * t, lambda t: 100.0, eps, tau, t_end)


def time_study_problem(eps=1e-8, tau=1e-2, t_end=1.0):
    """u = (1 + sin 2 pi t) S(x, y): dominating temporal error."""
    return _make_problem(
        lambda t: 1.0 + math.sin(2.0 * math.pi * t),
        lambda t: 2.0 * math.pi * math.cos(2.0 * math.pi * t),
        eps,
        tau,
        t_end,
    )
