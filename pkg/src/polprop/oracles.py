"""Independent reference computations and seeded generators.

Everything here avoids the code path it is used to check: finite
differences for symbolic derivatives, direct Leibniz expansion for symbol
composition, closed-form flows for flat and conformally flat charts, and the
conformal-rescaling formula for Ricci curvature.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import exprs as ex
from . import symbols as sy
from .geometry import PhasePoint, SpacetimeModel

# Thirty smooth expressions over x0..x3, all defined on the unit box
# [-1, 1]^4 shifted by +2 in x0 (so logs and odd roots stay real).
EXPR_CORPUS: tuple[str, ...] = (
    "x0",
    "x0*x1",
    "x0^2 - x1^2",
    "3*x0^3 - 2*x1 + 7",
    "sin(x2)",
    "cos(x0*x1)",
    "exp(2*x0)",
    "exp(-x1^2)",
    "log(x0)",
    "log(1 + x1^2)",
    "sqrt(x0)",
    "sqrt(1 + x2^2 + x3^2)",
    "tanh(x3)",
    "tanh(x0 - x1)",
    "x0/(1 + x1^2)",
    "1/x0",
    "x0^-2",
    "x0^0.5 * x1",
    "x0^x1",
    "2^x2",
    "sin(x0)*cos(x1)*exp(x2)",
    "exp(sin(x3))",
    "log(x0)*sqrt(x0)",
    "(x0 + x1)^3 / (2 + sin(x2))",
    "-x0^2 + x1*x2 - x3",
    "cos(x0)^2 + sin(x0)^2",
    "exp(x0*x1*x2*x3)",
    "tanh(sin(x1) + cos(x2))",
    "x1*x2/(x0*x0 + x3*x3)",
    "sqrt(x0^2 + x1^2 + x2^2 + x3^2)",
)


def corpus_point(rng: np.random.Generator) -> tuple[float, ...]:
    x = rng.uniform(-1.0, 1.0, size=4)
    x[0] += 2.0
    return tuple(float(v) for v in x)


def central_difference(e: ex.Expr, idx: int, x: Sequence[float], h: float = 1e-6) -> float:
    xp = list(x)
    xm = list(x)
    xp[idx] += h
    xm[idx] -= h
    return (ex.evaluate(e, xp) - ex.evaluate(e, xm)) / (2.0 * h)


def richardson_difference(e: ex.Expr, idx: int, x: Sequence[float], h: float = 1e-3) -> float:
    """Fourth-order central difference, for checks tighter than 1e-6."""
    def at(s):
        y = list(x)
        y[idx] += s
        return ex.evaluate(e, y)

    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12.0 * h)


# ---------------------------------------------------------------------------
# Symbol composition by direct expansion of the differential operators
# ---------------------------------------------------------------------------


def operator_compose(a: sy.PolySymbol, b: sy.PolySymbol) -> dict[tuple[int, ...], sy.Mat]:
    """Coefficients of ``Op(a) Op(b)`` from the Leibniz rule.

    ``A_alpha d^alpha (B_beta d^beta u) = sum_{gamma <= alpha} C(alpha, gamma)
    A_alpha (d^gamma B_beta) d^{alpha - gamma + beta} u``.
    """
    out: dict = {}
    for alpha, A in a.coeffs.items():
        for gamma in _below(alpha):
            binom = math.prod(math.comb(al, g) for al, g in zip(alpha, gamma))
            for beta, Bm in b.coeffs.items():
                dB = Bm
                for mu, g in enumerate(gamma):
                    for _ in range(g):
                        dB = sy.mat_diff(dB, mu)
                if sy.mat_is_zero(dB):
                    continue
                target = tuple(al - g + be for al, g, be in zip(alpha, gamma, beta))
                term = sy.mat_scale(binom, sy.mat_mul(A, dB))
                out[target] = sy.mat_add(out[target], term) if target in out else term
    return out


def _below(alpha):
    return [tuple(g) for g in np.ndindex(*(a + 1 for a in alpha))]


def coefficient_table_values(coeffs: dict, x) -> dict:
    out = {}
    for alpha, mat in coeffs.items():
        out[alpha] = np.array(
            [[ex.evaluate(re, x) + 1j * ex.evaluate(im, x) for re, im in row] for row in mat]
        )
    return out


def table_difference(t1: dict, t2: dict) -> float:
    keys = set(t1) | set(t2)
    worst = 0.0
    for k in keys:
        a = t1.get(k)
        b = t2.get(k)
        if a is None:
            a = np.zeros_like(b)
        if b is None:
            b = np.zeros_like(a)
        worst = max(worst, float(np.abs(a - b).max()))
    return worst


# ---------------------------------------------------------------------------
# Random generators
# ---------------------------------------------------------------------------

_ATOMS = ("x{i}", "sin(x{i})", "cos(x{i})", "x{i}*x{j}", "exp(0.3*x{i})", "tanh(x{i})")
_BOUNDED_ATOMS = ("sin(x{i})", "cos(x{i})", "tanh(x{i})", "sin(x{i})*cos(x{j})")


def random_coefficient(
    rng: np.random.Generator, dim: int, scale: float = 1.0, p_zero: float = 0.3, bounded: bool = False
) -> str:
    """A small smooth expression string (or ``"0"``).

    ``bounded`` restricts to atoms bounded by 1, for fields sampled far from
    the origin (transport along long strips).
    """
    if rng.random() < p_zero:
        return "0"
    c0, c1 = rng.uniform(-1, 1, size=2) * scale
    atoms = _BOUNDED_ATOMS if bounded else _ATOMS
    atom = atoms[rng.integers(len(atoms))].format(i=rng.integers(dim), j=rng.integers(dim))
    return f"{c0:.6f} + {c1:.6f}*{atom}"


def random_matrix(rng, dim: int, rank: int, scale: float = 1.0, p_zero: float = 0.3, bounded: bool = False):
    return [[random_coefficient(rng, dim, scale, p_zero, bounded) for _ in range(rank)] for _ in range(rank)]


def random_symbol(rng, dim: int, rank: int, order: int, p_skip: float = 0.4) -> sy.PolySymbol:
    coeffs = {}
    for deg in range(order + 1):
        for alpha in sy.multi_indices(dim, deg):
            if deg < order and rng.random() < p_skip:
                continue
            coeffs[alpha] = [[ex.parse(s) for s in row] for row in random_matrix(rng, dim, rank)]
    return sy.symbol_from_real(dim, rank, order, coeffs)


def random_first_order(rng, dim: int, rank: int, scale: float = 0.5, bounded: bool = False):
    return [random_matrix(rng, dim, rank, scale, bounded=bounded) for _ in range(dim)]


def random_null_covector(rng, dim: int, future: bool | None = None) -> np.ndarray:
    """``(k0, k_vec)`` with ``k0 = +-|k_vec|`` and ``|k_vec|`` in [0.5, 2].

    ``future=True`` gives ``k0 < 0``, whose flow moves forward in time.
    """
    kv = rng.normal(size=dim - 1)
    kv *= rng.uniform(0.5, 2.0) / np.linalg.norm(kv)
    s = (-1.0 if future else 1.0) if future is not None else rng.choice([-1.0, 1.0])
    return np.concatenate(([s * np.linalg.norm(kv)], kv))


# ---------------------------------------------------------------------------
# Closed-form flows
# ---------------------------------------------------------------------------


def minkowski_flow(x0, k, lam) -> np.ndarray:
    """``x(lambda) = x0 - 2 lambda eta k`` (k is constant)."""
    k = np.asarray(k, dtype=float)
    eta_k = np.concatenate(([k[0]], -k[1:]))
    return np.asarray(x0, dtype=float) - 2.0 * lam * eta_k


def flrw_exp_flow(x0, k, lam, H: float) -> np.ndarray:
    """Null flow for ``a = exp(H x0)`` in conformal time.

    ``k`` is constant; ``exp(2 H t) = exp(2 H t0) - 4 H k_0 lambda`` and the
    spatial path is the coordinate line ``x_i - x0_i = -(k_i / k_0)(t - t0)``.
    """
    x0 = np.asarray(x0, dtype=float)
    k = np.asarray(k, dtype=float)
    e = math.exp(2 * H * x0[0]) - 4.0 * H * k[0] * lam
    if e <= 0:
        raise ValueError("flow reaches the big-bang singularity")
    t = math.log(e) / (2 * H)
    return np.concatenate(([t], x0[1:] - (k[1:] / k[0]) * (t - x0[0])))


def related_pair(model: SpacetimeModel, rng, lam_range=(-5.0, 5.0), H: float = 1.0):
    """A point pair ``(p, p')`` with ``p ~ p'`` from a closed-form flow.

    Returns ``(p, pp, lam)`` where ``p`` sits at affine parameter ``lam`` on
    the strip through ``pp``.
    """
    n = model.dim
    if model.kind == "builtin-minkowski":
        xp = rng.uniform(-1, 1, size=n)
        kp = random_null_covector(rng, n)
        lam = rng.uniform(*lam_range)
        x = minkowski_flow(xp, kp, lam)
    elif model.kind == "builtin-flrw":
        xp = rng.uniform(-0.5, 0.5, size=n)
        kp = random_null_covector(rng, n)
        # keep both ends well inside the time chart
        while True:
            lam = rng.uniform(*lam_range)
            try:
                x = flrw_exp_flow(xp, kp, lam, H)
            except ValueError:
                continue
            if -1.0 < x[0] < 2.0:
                break
    else:
        raise ValueError("closed-form flow only for builtin models")
    return PhasePoint(x, kp), PhasePoint(xp, kp), float(lam)


def flrw_exp_ricci_mtw(H: float, x, dim: int = 4) -> np.ndarray:
    """Covariant Ricci tensor, MTW sign, of ``g = exp(2 H x0) eta``.

    From the conformal rescaling ``g = e^{2w} eta``:
    ``R_{ab} = -(n-2)(d_a d_b w - d_a w d_b w) - (box w + (n-2)|dw|^2) eta_{ab}``
    with ``w = H x0``, ``box w = 0`` and ``|dw|^2 = H^2``.
    """
    n = dim
    dw = np.zeros(n)
    dw[0] = H
    eta = np.diag([1.0] + [-1.0] * (n - 1))
    ddw = np.zeros((n, n))
    grad2 = float(dw @ eta @ dw)
    return -(n - 2) * (ddw - np.outer(dw, dw)) - (0.0 + (n - 2) * grad2) * eta
