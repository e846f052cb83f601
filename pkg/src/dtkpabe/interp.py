"""Lagrange interpolation over Z_p and in the exponent of a group."""
from __future__ import annotations

from collections.abc import Iterable, Sequence

from .group import Element


def lagrange_coeff(i: int, S: Iterable[int], x: int, p: int) -> int:
    """Delta_{i,S}(x) = prod_{j in S, j != i} (x - j) / (i - j)  mod p."""
    points = [j % p for j in S]
    i %= p
    if len(set(points)) != len(points):
        raise ValueError("interpolation set contains duplicate points")
    if i not in points:
        raise ValueError("i is not a member of S")
    num, den = 1, 1
    for j in points:
        if j == i:
            continue
        num = num * (x - j) % p
        den = den * (i - j) % p
    return num * pow(den, -1, p) % p


def _zero_coeffs(xs: Sequence[int], p: int) -> list[int]:
    xs = [x % p for x in xs]
    if not xs:
        raise ValueError("need at least one point")
    if any(x == 0 for x in xs):
        raise ValueError("evaluation points must be nonzero")
    if len(set(xs)) != len(xs):
        raise ValueError("duplicate x-coordinates")
    # Delta_{i,X}(0) = prod_{j != i} x_j / (x_j - x_i)
    total = 1
    for x in xs:
        total = total * x % p
    out = []
    for i, xi in enumerate(xs):
        den = xi
        for j, xj in enumerate(xs):
            if j != i:
                den = den * (xj - xi) % p
        out.append(total * pow(den, -1, p) % p)
    return out


def interpolate_at_zero(points: Sequence[tuple[int, int]], p: int) -> int:
    """h(0) for the unique degree-(len(points)-1) polynomial through ``points``."""
    coeffs = _zero_coeffs([x for x, _ in points], p)
    return sum(c * y for c, (_, y) in zip(coeffs, points)) % p


def interpolate_exponent_at_zero(points: Sequence[tuple[int, Element]]) -> Element:
    """Given (x_i, B^{h(x_i)}), return B^{h(0)} without learning any h(x_i)."""
    if not points:
        raise ValueError("need at least one point")
    first = points[0][1]
    for _, elem in points:
        if not isinstance(elem, Element):
            raise TypeError("interpolation values must be group elements")
        if elem.group.ident != first.group.ident or elem.kind != first.kind:
            raise TypeError("all values must lie in the same group")
    group = first.group
    coeffs = _zero_coeffs([x for x, _ in points], group.order)
    group.ops.interpolations += 1
    acc = None
    for c, (_, elem) in zip(coeffs, points):
        term = elem if c == 1 else elem ** c
        acc = term if acc is None else acc * term
    return acc


def eval_poly(coeffs: Sequence[int], x: int, p: int) -> int:
    """Horner evaluation; coeffs[0] is the constant term."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc
