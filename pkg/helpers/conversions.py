import math
from typing import Any, Sequence


def value_token(value: Any) -> str:
    """Text form of a parameter value as used in cache keys"""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def configuration_key(values: Sequence[Any]) -> str:
    return ",".join(value_token(v) for v in values)


def parse_scalar(token: str) -> Any:
    token = token.strip()
    for cast in (int, float):
        try:
            return cast(token)
        except ValueError:
            continue
    return token


def fraction_count(fraction: float, total: int) -> int:
    """ceil(fraction * total) with a floor of one; zero stays zero"""
    if fraction <= 0:
        return 0
    return max(1, min(total, math.ceil(fraction * total - 1e-12)))


def percent_to_fraction(percent: float) -> float:
    return percent / 100.0
