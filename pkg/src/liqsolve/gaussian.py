"""Standard-normal pdf/cdf/quantile shared by the quantizer and the simulator.

Both the quantizer initialization and the Monte Carlo increments must go
through the same quantile function, so it lives here once.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

SQRT_2PI = math.sqrt(2.0 * math.pi)


def pdf(u):
    ua = np.asarray(u, dtype=float)
    return np.exp(-0.5 * ua * ua) / SQRT_2PI


def cdf(u):
    return special.ndtr(np.asarray(u, dtype=float))


def quantile(q):
    """Inverse normal cdf (rational approximation via scipy's ndtri)."""
    return special.ndtri(np.asarray(q, dtype=float))
