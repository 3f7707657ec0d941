from fractions import Fraction
from typing import Iterator


def full_mask(n: int) -> int:
    """Return the bit mask of {1, ..., n}."""
    return (1 << n) - 1


def popcount(mask: int) -> int:
    """Return the number of elements of a bit-mask subset."""
    return bin(mask).count("1")


def sign(k: int) -> int:
    """Return (-1)**k for an integer k, also for negative k."""
    return -1 if k & 1 else 1


def elements(mask: int) -> list[int]:
    """Return the 1-indexed elements of a bit-mask subset in increasing order."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def submasks(mask: int) -> Iterator[int]:
    """Iterate over all submasks of mask in increasing order."""
    sub = 0
    while True:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


def fmt_fraction(x: Fraction) -> str:
    """Format a fraction as "p/q", or "p" for integers."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"
