"""Market-model algebra for the impulse-control liquidation problem.

A block order of e shares sent after a lag of ``theta`` since the previous
trade fills at price ``p * f(e, theta)`` with

    f(e, theta) = exp(lam * |e / theta|**beta * sgn(e))
                  * (kappa_a if e > 0 else 1 if e == 0 else kappa_b)

so rapid or large orders are penalized on top of a bid/ask spread, and every
trade pays a fixed fee ``eps``.  Solvency is measured through the fee-adjusted
block-liquidation value ``L_eps = max(x, L - eps)``: the investor either dumps
the whole position in one block or abandons the shares and keeps the cash.

All operations here are pure functions of their arguments; parameters are
shared read-only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MarketParams",
    "State",
    "Solvency",
    "impact",
    "liquidation_value",
    "liquidation_value_eps",
    "in_solvency",
    "transact",
    "admissible_interval",
    "utility",
    "liquidation_utility",
    "merton_bound",
]


@dataclass(frozen=True)
class MarketParams:
    """Model constants.  Rates are per year; `T` is the horizon in years."""

    T: float
    b: float          # price drift
    sigma: float      # price volatility, > 0
    lam: float        # temporary impact factor, >= 0
    beta: float       # impact exponent; 0 only allowed together with lam == 0
    kappa_a: float    # ask multiplier, >= 1
    kappa_b: float    # bid multiplier, in (0, 1]
    eps: float        # fixed fee per trade, > 0
    gamma: float      # CRRA utility exponent, in [0, 1)

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if self.beta < 0 or (self.beta == 0 and self.lam != 0):
            raise ValueError(
                f"beta must be positive (0 only with lambda=0), got {self.beta}"
            )
        if not (0 < self.kappa_b <= 1 <= self.kappa_a):
            raise ValueError(
                f"need 0 < kappa_b <= 1 <= kappa_a, got {self.kappa_b}, {self.kappa_a}"
            )
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not 0 <= self.gamma < 1:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")

    @property
    def rho(self) -> float:
        """Rate in the frictionless upper bound exp(rho*(T-t))*(x+y*p)**gamma."""
        return self.gamma / (1.0 - self.gamma) * self.b**2 / (2.0 * self.sigma**2)


@dataclass(frozen=True)
class State:
    """Point (t, x, y, p, theta): time, cash, shares, price, lag since last trade."""

    t: float
    x: float
    y: float
    p: float
    theta: float

    def validate(self, params: MarketParams) -> None:
        if self.y < 0:
            raise ValueError(f"shares must be nonnegative, got {self.y}")
        if not self.p > 0:
            raise ValueError(f"price must be positive, got {self.p}")
        if not 0 <= self.theta <= self.t <= params.T:
            raise ValueError(
                f"need 0 <= theta <= t <= T, got theta={self.theta}, t={self.t}"
            )
        if in_solvency(self, params) is Solvency.OUTSIDE:
            raise ValueError("state lies outside the solvency closure")


class Solvency(enum.Flag):
    """Membership in the fee-adjusted solvency region."""

    OUTSIDE = 0
    INTERIOR = enum.auto()
    BOUNDARY_Y = enum.auto()    # y == 0, L_eps >= 0
    BOUNDARY_L = enum.auto()    # L_eps == 0

    @property
    def in_closure(self) -> bool:
        return self is not Solvency.OUTSIDE


def impact(e, theta: float, params: MarketParams):
    """Execution-price multiplier f(e, theta); elementwise over `e`.

    At theta == 0 the limit conventions apply: 0 for a sell, 1 for e == 0,
    +inf for a buy (an immediate purchase bankrupts the trader).
    """
    if theta < 0:
        raise ValueError(f"theta must be nonnegative, got {theta}")
    ea = np.asarray(e, dtype=float)
    if theta == 0:
        out = np.where(ea < 0, 0.0, np.where(ea > 0, np.inf, 1.0))
    else:
        side = np.where(ea > 0, params.kappa_a, np.where(ea < 0, params.kappa_b, 1.0))
        with np.errstate(over="ignore"):
            out = np.exp(params.lam * np.abs(ea / theta) ** params.beta * np.sign(ea))
        out = out * side
    if np.ndim(e) == 0:
        return float(out)
    return out


def _liq_value(x, y, p, theta: float, params: MarketParams):
    """L(x, y, p, theta) = x + y*p*f(-y, theta), elementwise.

    The product term vanishes for y == 0 whatever f does, so it is safe at
    the theta == 0 sell limit as well.
    """
    ya = np.asarray(y, dtype=float)
    prod = ya * np.asarray(p, dtype=float) * impact(-ya, theta, params)
    out = np.asarray(x, dtype=float) + np.where(ya > 0, prod, 0.0)
    if np.ndim(x) == 0 and np.ndim(y) == 0 and np.ndim(p) == 0:
        return float(out)
    return out


def _liq_value_eps(x, y, p, theta: float, params: MarketParams):
    return np.maximum(np.asarray(x, dtype=float), _liq_value(x, y, p, theta, params) - params.eps)


def liquidation_value(state: State, params: MarketParams) -> float:
    """Cash obtained by selling the whole position in one block."""
    return float(_liq_value(state.x, state.y, state.p, state.theta, params))


def liquidation_value_eps(state: State, params: MarketParams) -> float:
    """Fee-adjusted liquidation value max(x, L - eps): sell the block or bin it."""
    return float(_liq_value_eps(state.x, state.y, state.p, state.theta, params))


def in_solvency(state: State, params: MarketParams) -> Solvency:
    """Classify a state against the solvency region.

    Interior needs y > 0 and L_eps > 0; the y = 0 face and the L_eps = 0 face
    are boundary (their intersection is the corner, flagged as both).  p == 0
    is accepted as the absorbing worthless-asset limit; p < 0 and y < 0 are
    outside.
    """
    if state.y < 0 or state.p < 0:
        return Solvency.OUTSIDE
    le = liquidation_value_eps(state, params)
    flag = Solvency.OUTSIDE
    if state.y == 0 and le >= 0:
        flag |= Solvency.BOUNDARY_Y
    if le == 0:
        flag |= Solvency.BOUNDARY_L
    if flag is not Solvency.OUTSIDE:
        return flag
    if state.y > 0 and le > 0:
        return Solvency.INTERIOR
    return Solvency.OUTSIDE


def transact(state: State, e: float, params: MarketParams) -> State:
    """Apply the trade e: cash -> x - e*p*f(e, theta) - eps, lag resets to 0.

    Admissibility is not checked (see admissible_interval).  A buy at
    theta == 0 propagates the bankruptcy sentinel -inf into cash.
    """
    if e > 0 and state.theta == 0:
        cash = -math.inf
    else:
        cash = state.x - e * state.p * impact(e, state.theta, params) - params.eps
    return State(state.t, cash, state.y + e, state.p, 0.0)


def _bisect(fn, lo, hi, iters: int = 100):
    """Vectorized bisection: fn(lo) and fn(hi) bracket a sign change."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    f_lo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        same = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(same, mid, lo)
        f_lo = np.where(same, f_mid, f_lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def _buy_cost(e, p, theta: float, params: MarketParams):
    # cash spent buying e > 0 shares, fee excluded
    with np.errstate(over="ignore"):
        return e * p * params.kappa_a * np.exp(params.lam * (e / theta) ** params.beta)


def _sell_revenue(u, p, theta: float, params: MarketParams):
    # cash received selling u > 0 shares, fee excluded
    return u * p * params.kappa_b * np.exp(-params.lam * (u / theta) ** params.beta)


def _admissible_bounds(x, y, p, theta: float, params: MarketParams):
    """Vectorized admissible-trade bounds at a common lag theta.

    Returns (lo, hi, nonempty).  Every e in [lo, hi] keeps the post-trade
    state (whose lag is 0, hence whose L_eps equals its cash) inside the
    solvency closure: x - e*p*f(e, theta) - eps >= 0 and y + e >= 0.
    hi is +inf when p == 0 and x >= eps (buying a worthless asset moves no
    cash).  With x < eps only a band of sells can restore solvency; its
    endpoints come from the unimodal sell-revenue curve.
    """
    x, y, p = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(p, dtype=float)
    )
    shape = x.shape
    x, y, p = x.ravel(), y.ravel(), p.ravel()
    eps = params.eps

    lo = -y.copy()
    hi = np.zeros_like(x)
    nonempty = np.zeros(x.shape, dtype=bool)

    if theta == 0:
        ok = x >= eps
        nonempty[:] = ok
        return lo.reshape(shape), hi.reshape(shape), nonempty.reshape(shape)

    rich = x >= eps
    nonempty[rich] = True

    free = rich & (p <= 0)
    hi[free] = np.inf

    buy = rich & (p > 0) & (x > eps)
    if buy.any():
        xb, pb = x[buy], p[buy]
        cap = xb / (pb * params.kappa_a)    # cost(cap) >= x, so the root is below
        hi[buy] = _bisect(
            lambda e: xb - _buy_cost(e, pb, theta, params) - eps, 0.0, cap
        )

    poor = (~rich) & (y > 0) & (p > 0)
    if poor.any():
        xs, ys, ps = x[poor], y[poor], p[poor]
        need = eps - xs
        if params.lam > 0 and params.beta > 0:
            u_star = theta * (1.0 / (params.lam * params.beta)) ** (1.0 / params.beta)
        else:
            u_star = math.inf
        u_peak = np.minimum(u_star, ys)
        feasible = _sell_revenue(u_peak, ps, theta, params) >= need
        if feasible.any():
            xf, yf, pf = xs[feasible], ys[feasible], ps[feasible]
            nf = need[feasible]
            pk = u_peak[feasible]
            # smallest admissible sell: revenue crosses `need` on the rising branch
            u1 = _bisect(lambda u: _sell_revenue(u, pf, theta, params) - nf, 0.0, pk)
            # largest admissible sell: either the whole position or the falling branch
            u2 = yf.copy()
            fall = _sell_revenue(yf, pf, theta, params) < nf
            if fall.any():
                u2[fall] = _bisect(
                    lambda u: _sell_revenue(u, pf[fall], theta, params) - nf[fall],
                    pk[fall],
                    yf[fall],
                )
            idx = np.flatnonzero(poor)[feasible]
            lo[idx] = -u2
            hi[idx] = -u1
            nonempty[idx] = True

    return lo.reshape(shape), hi.reshape(shape), nonempty.reshape(shape)


def admissible_interval(state: State, params: MarketParams):
    """Admissible trade sizes C_eps(z, theta) as an interval, or None if empty.

    At theta == 0 this is [-y, 0] when x >= eps and empty otherwise.  For
    theta > 0 the upper endpoint solves x - e*p*f(e, theta) - eps = 0 by
    bisection (the cash condition is strictly decreasing in e > 0).
    """
    lo, hi, ok = _admissible_bounds(
        np.array([state.x]), np.array([state.y]), np.array([state.p]), state.theta, params
    )
    if not ok[0]:
        return None
    return float(lo[0]), float(hi[0])


def _upow(w, gamma: float):
    """w**gamma with the convention 0**gamma = 0 (also for gamma == 0)."""
    wa = np.asarray(w, dtype=float)
    out = np.where(wa > 0, np.power(np.where(wa > 0, wa, 1.0), gamma), 0.0)
    if np.ndim(w) == 0:
        return float(out)
    return out


def utility(w: float, params: MarketParams) -> float:
    """CRRA utility U(w) = w**gamma, U(0) = 0."""
    if w < 0:
        raise ValueError(f"utility argument must be nonnegative, got {w}")
    return _upow(w, params.gamma)


def liquidation_utility(state: State, params: MarketParams) -> float:
    """U(L_eps(z, theta)); the state must be in the solvency closure."""
    le = liquidation_value_eps(state, params)
    if le < 0:
        raise ValueError(f"negative fee-adjusted liquidation value {le}")
    return _upow(le, params.gamma)


def merton_bound(t: float, x: float, y: float, p: float, params: MarketParams) -> float:
    """Frictionless upper bound exp(rho*(T-t)) * (x + y*p)**gamma."""
    w = x + y * p
    if w < 0:
        raise ValueError(f"x + y*p must be nonnegative, got {w}")
    return math.exp(params.rho * (params.T - t)) * _upow(w, params.gamma)
