from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal


def scaled_round(fraction: float, n: int) -> int:
    """
    round(fraction · n)，.5 向上取整；按 `fraction` 的十进制字面值计算，
    0.7·5 得 4 而不是二进制浮点的 3.4999…。
    """
    value = Decimal(repr(float(fraction))) * Decimal(int(n))
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))
