"""Lower-bound estimators for the co-spectral radius, plus the cogrowth bridge.

The co-spectral radius of a subgroup is the norm of the Markov averaging
operator M over the symmetric generating set acting on square-summable
functions on the coset space.  Two certified lower bounds are provided:

* the top Rayleigh quotient of M over functions supported on the interior
  of a finite ball (Dirichlet restriction), computed by power iteration on
  the nonnegative shift (I + M)/2, and
* return probabilities, p_{2n}(root, root)^(1/2n) <= rho by self-adjointness.

For f.g. subgroups of free groups the cogrowth base alpha converts to the
exact co-spectral radius through the classical cogrowth formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ValidationError
from .stallings import CogrowthResult
from .words import letters_of_rank

if TYPE_CHECKING:  # pragma: no cover
    from .schreier import SchreierBall, SubgroupOracle

__all__ = [
    "SpectralEstimate",
    "dirichlet_lower_bound",
    "dirichlet_vector",
    "return_probability_bound",
    "grigorchuk_rho",
    "critical_exponent",
]

DEFAULT_STATE_CAP = 5_000_000


@dataclass
class SpectralEstimate:
    """A certified lower bound for the co-spectral radius.

    ``radius`` is the ball radius for the Dirichlet method and the
    truncation radius for the return-probability method (whose step count
    2n is reported as ``iterations``).
    """

    value: float
    method: str
    radius: int
    iterations: int
    residual: float
    truncated: bool
    flags: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "value": self.value,
            "radius": self.radius,
            "iterations": self.iterations,
            "residual": self.residual,
            "truncated": self.truncated,
            "flags": list(self.flags),
        }


def _interior_rows(ball: "SchreierBall", radius: int) -> np.ndarray:
    """Ball vertices within ``radius`` all of whose neighbors stay within."""
    dist_full = ball.dist_full
    cand = np.nonzero(ball.dist <= radius)[0]
    if len(cand) == 0:
        return cand
    ok = (dist_full[ball.nbr[cand]] <= radius).all(axis=1)
    return cand[ok]


def dirichlet_vector(
    ball: "SchreierBall",
    radius: int | None = None,
    tol: float = 1e-10,
    max_iterations: int = 200_000,
) -> tuple[SpectralEstimate, np.ndarray, np.ndarray]:
    """Dirichlet power iteration; also returns the iterate and its support.

    The Rayleigh quotient of the returned vector is a certified lower bound
    whether or not the iteration converged.  Iteration runs on (I + M)/2 to
    stay monotone on bipartite windows and maps back by lambda = 2l' - 1.
    """
    r = ball.radius if radius is None else radius
    if r < 1:
        raise ValidationError(f"dirichlet bound needs ball radius >= 1, got {r}")
    if r > ball.radius:
        raise ValidationError(f"requested radius {r} exceeds ball radius {ball.radius}")
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    if max_iterations < 1:
        raise ValidationError("iteration cap must be >= 1")
    rows = _interior_rows(ball, r)
    if len(rows) == 0:
        estimate = SpectralEstimate(0.0, "dirichlet", r, 0, 0.0, False, ("empty_interior",))
        return estimate, np.zeros(0), rows

    sub_nbr = ball.nbr[rows]
    buf = np.zeros(ball.n_vertices + ball.n_outer)
    v = np.zeros(len(rows))
    if rows[0] == 0:  # root sits in the interior: deterministic localized start
        v[0] = 1.0
    else:
        v[:] = 1.0 / math.sqrt(len(rows))
    v /= np.linalg.norm(v)

    lam_half = 0.0
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        buf[rows] = v
        averaged = buf[sub_nbr].mean(axis=1)
        w = 0.5 * (v + averaged)
        lam_half = float(v @ w)
        residual = 2.0 * float(np.linalg.norm(w - lam_half * v))
        if residual <= tol:
            break
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            break
        v = w / norm_w

    value = min(2.0 * lam_half - 1.0, 1.0)
    flags = () if residual <= tol else ("not_converged",)
    estimate = SpectralEstimate(value, "dirichlet", r, iterations, residual, False, flags)
    return estimate, v, rows


def dirichlet_lower_bound(
    ball: "SchreierBall",
    tol: float = 1e-10,
    max_iterations: int = 200_000,
    radius: int | None = None,
) -> SpectralEstimate:
    """Top Rayleigh quotient of M over functions supported on the interior
    of the radius-R ball: a certified lower bound for the co-spectral radius.

    Passing ``radius`` < ball.radius restricts to the sub-ball (the sub-ball
    of a ball is the ball of that radius, so estimates at several radii can
    share one BFS).
    """
    estimate, _, _ = dirichlet_vector(ball, radius=radius, tol=tol, max_iterations=max_iterations)
    return estimate


def return_probability_bound(
    oracle: "SubgroupOracle",
    n: int,
    truncation_radius: int | None = None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> SpectralEstimate:
    """p_{2n}(root, root)^(1/2n), from exact distribution-vector iteration.

    States are tracked out to ``truncation_radius`` (default n); mass walking
    beyond it is dropped, which only lowers the return probability, so the
    result remains a valid lower bound and is flagged truncated.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    trunc = n if truncation_radius is None else truncation_radius
    if trunc < 0:
        raise ValidationError("truncation radius must be >= 0")
    letters = letters_of_rank(oracle.d)
    share_factor = 1.0 / len(letters)
    act = oracle.act
    root = oracle.root

    probs = {root: 1.0}
    dist = {root: 0}
    truncated = False
    steps = 2 * n
    for _ in range(steps):
        nxt: dict = {}
        for coset, p in probs.items():
            share = p * share_factor
            dc = dist[coset]
            for letter in letters:
                t = act(letter, coset)
                dt = dist.get(t)
                if dt is None:
                    dt = dc + 1
                    if dt > trunc or len(dist) >= state_cap:
                        truncated = True
                        continue
                    dist[t] = dt
                nxt[t] = nxt.get(t, 0.0) + share
        probs = nxt
    p_return = probs.get(root, 0.0)
    value = p_return ** (1.0 / steps) if p_return > 0 else 0.0
    flags = () if p_return > 0 else ("zero_return_probability",)
    return SpectralEstimate(value, "return_probability", trunc, steps, 0.0, truncated, flags)


def grigorchuk_rho(alpha: float, d: int) -> float:
    """Co-spectral radius of a subgroup of F_d from its cogrowth base.

    Below the branch point sqrt(2d-1) the value sits at the regular-tree
    bottom sqrt(2d-1)/d; above it, rho = (alpha + (2d-1)/alpha) / (2d).
    Continuous at the branch point; equals 1 exactly at alpha = 2d-1.
    """
    if d < 2:
        raise ValidationError(f"cogrowth formula needs rank d >= 2, got {d}")
    alpha = float(alpha)
    top = 2 * d - 1
    if alpha < 0:
        if alpha < -1e-12:
            raise ValidationError(f"alpha must be >= 0, got {alpha}")
        alpha = 0.0
    if alpha > top:
        if alpha > top + 1e-9:
            raise ValidationError(f"alpha must be <= 2d-1 = {top}, got {alpha}")
        alpha = float(top)
    branch = math.sqrt(top)
    if alpha <= branch:
        return branch / d
    return (alpha + top / alpha) / (2 * d)


def critical_exponent(cogrowth: CogrowthResult | float) -> float | None:
    """Critical exponent delta = ln(alpha); None for the trivial subgroup."""
    alpha = cogrowth.alpha if isinstance(cogrowth, CogrowthResult) else float(cogrowth)
    if alpha < 0:
        raise ValidationError(f"alpha must be >= 0, got {alpha}")
    return math.log(alpha) if alpha > 0 else None
