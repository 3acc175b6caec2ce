"""Adaptive classic RK4 for the smooth, non-stiff ODEs of this package.

The local error is estimated by step doubling: one step of size ``h`` is
compared with two of size ``h/2``.  Their difference over 15 estimates the
error of the half-step result; the accepted value uses local (Richardson)
extrapolation.  Steps that fail the estimate are halved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exprs import DomainError

__all__ = ["StepCollapseError", "OdeResult", "integrate", "rk4_step", "extrapolated_step"]

Rhs = Callable[[float, np.ndarray], np.ndarray]


class StepCollapseError(ArithmeticError):
    """The adaptive step fell below the minimum step size."""


@dataclass
class OdeResult:
    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    status: str  # "done" | "left-domain"
    message: str = ""


def rk4_step(f: Rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray | None = None) -> np.ndarray:
    if k1 is None:
        k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def extrapolated_step(
    f: Rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """One step-doubled RK4 step.  Returns ``(y_new, |error estimate|)``."""
    if k1 is None:
        k1 = f(t, y)
    full = rk4_step(f, t, y, h, k1)
    mid = rk4_step(f, t, y, 0.5 * h, k1)
    half = rk4_step(f, t + 0.5 * h, mid, 0.5 * h)
    diff = (half - full) / 15.0
    return half + diff, np.abs(diff)


def integrate(
    f: Rhs,
    t0: float,
    y0: np.ndarray,
    t1: float,
    *,
    atol: float = 1e-10,
    rtol: float = 0.0,
    h_max: float = 0.5,
    h_min: float = 1e-12,
    h0: float | None = None,
    t_eval: Sequence[float] = (),
    valid: Callable[[np.ndarray], bool] | None = None,
) -> OdeResult:
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t1`` (either direction).

    Parameters
    ----------
    atol, rtol : float
        Error allowed per step and component: ``atol + rtol * |y_i|``.
    h_max, h_min : float
        Step bounds.  A step below ``h_min`` forced by the error estimate
        raises :class:`StepCollapseError`.
    t_eval : sequence of float
        Extra times that the step sequence must land on exactly.
    valid : callable, optional
        State predicate (e.g. chart membership).  A step that ends in an
        invalid state, or whose right-hand side raises ``DomainError``, is
        shortened; if that drives the step below ``h_min`` the integration
        stops with status ``"left-domain"`` instead of raising.

    Returns
    -------
    OdeResult
        Accepted times, states and right-hand sides.
    """
    y = np.array(y0, dtype=np.result_type(y0, float))
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    marks = sorted({abs(s - t0) for s in t_eval if 0.0 < abs(s - t0) < span} | {span})

    try:
        k1 = np.asarray(f(t0, y))
    except DomainError as err:
        raise ValueError(f"right-hand side undefined at start: {err}") from err
    ts, ys, dys = [t0], [y.copy()], [k1]
    if span == 0.0:
        return OdeResult(np.array(ts), np.array(ys), np.array(dys), "done")

    h = min(h_max, span) if h0 is None else min(abs(h0), h_max)
    s = 0.0  # progress along |t - t0|
    mi = 0
    status, message = "done", ""
    boundary_hit = False
    while mi < len(marks):
        target = marks[mi]
        step = min(h, target - s)
        t = t0 + direction * s
        try:
            y_new, err_vec = extrapolated_step(f, t, y, direction * step, k1)
            err = atol * float(np.max(err_vec / (atol + rtol * np.abs(y)))) if err_vec.size else 0.0
            ok_state = np.all(np.isfinite(y_new)) and (valid is None or valid(y_new))
            k1_new = np.asarray(f(t + direction * step, y_new)) if ok_state else None
        except DomainError:
            ok_state, err, k1_new = False, 0.0, None
        if not ok_state:
            boundary_hit = True
            h = 0.5 * step
            if h < h_min:
                status, message = "left-domain", f"stopped at t={t:.17g}"
                break
            continue
        if err > atol:
            fac = max(0.1, 0.9 * (atol / err) ** 0.2)
            h = step * fac
            if h < h_min:
                raise StepCollapseError(f"step {h:.3e} below minimum at t={t:.17g}")
            continue
        s = target if step == target - s else s + step
        y, k1 = y_new, k1_new
        ts.append(t0 + direction * s)
        ys.append(y.copy())
        dys.append(k1)
        if s >= target:
            mi += 1
        grow = 4.0 if err == 0.0 else min(4.0, 0.9 * (atol / err) ** 0.2)
        if boundary_hit:
            grow = min(grow, 1.0)
        h = min(h_max, max(step, h) * max(grow, 1.0) if err < atol else step)
    return OdeResult(np.array(ts), np.array(ys), np.array(dys), status, message)
