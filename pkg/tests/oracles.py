"""Independent brute-force reference implementations used by the tests.

These stay loop-based and formula-literal on purpose: they are the oracle
side of the dual-route checks and must not share code with the vectorized
implementations they verify.
"""

from __future__ import annotations

import math


def luma_oracle(rgb) -> list[list[float]]:
    h, w = len(rgb), len(rgb[0])
    out = [[0.0] * w for _ in range(h)]
    for i in range(h):
        for j in range(w):
            r, g, b = rgb[i][j]
            value = 0.299 * r + 0.587 * g + 0.114 * b
            # round half to even, matching the implementation's convention
            out[i][j] = float(_round_half_even(value))
    return out


def _round_half_even(x: float) -> int:
    floor = math.floor(x)
    frac = x - floor
    if frac > 0.5:
        return floor + 1
    if frac < 0.5:
        return floor
    return floor if floor % 2 == 0 else floor + 1


def laplacian_variance_oracle(gray) -> float:
    """Direct convolution with [[0,1,0],[1,-4,1],[0,1,0]] over interior pixels,
    then population variance."""
    h, w = len(gray), len(gray[0])
    responses = []
    for i in range(1, h - 1):
        for j in range(1, w - 1):
            responses.append(
                gray[i - 1][j]
                + gray[i + 1][j]
                + gray[i][j - 1]
                + gray[i][j + 1]
                - 4.0 * gray[i][j]
            )
    mean = sum(responses) / len(responses)
    return sum((r - mean) ** 2 for r in responses) / len(responses)


def ssim_oracle(a, b, c1: float = (0.01 * 255) ** 2, c2: float = (0.03 * 255) ** 2) -> float:
    """Plain single-window SSIM straight from the formula."""
    h, w = len(a), len(a[0])
    n = h * w
    flat_a = [a[i][j] for i in range(h) for j in range(w)]
    flat_b = [b[i][j] for i in range(h) for j in range(w)]
    mu_a = sum(flat_a) / n
    mu_b = sum(flat_b) / n
    var_a = sum((x - mu_a) ** 2 for x in flat_a) / n
    var_b = sum((x - mu_b) ** 2 for x in flat_b) / n
    cov = sum((x - mu_a) * (y - mu_b) for x, y in zip(flat_a, flat_b)) / n
    return ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    )
