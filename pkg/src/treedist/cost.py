"""Edit-operation costs as exact scaled integers.

A cost of ``k`` in a :class:`CostFunction` with ``scale = s`` stands for the
rational ``k / s``.  Everything downstream works on the integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping as TMapping

from .tree import Tree


class CostFileError(ValueError):
    pass


@dataclass(frozen=True)
class CostFunction:
    scale: int = 1
    default_sub: int = 1
    default_del: int = 1
    default_ins: int = 1
    subs: TMapping[tuple[str, str], int] = field(default_factory=dict)
    dels: TMapping[str, int] = field(default_factory=dict)
    inss: TMapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.scale, int) or self.scale <= 0:
            raise ValueError("scale must be a positive integer")

    def sub(self, a: str, b: str) -> int:
        v = self.subs.get((a, b))
        if v is None:
            v = self.subs.get((b, a))
        if v is None:
            v = 0 if a == b else self.default_sub
        return v

    def delete(self, a: str) -> int:
        return self.dels.get(a, self.default_del)

    def insert(self, b: str) -> int:
        return self.inss.get(b, self.default_ins)

    def to_fraction(self, value: int) -> Fraction:
        return Fraction(value, self.scale)

    @classmethod
    def from_rationals(
        cls,
        subs: TMapping[tuple[str, str], Fraction | int | str] | None = None,
        dels: TMapping[str, Fraction | int | str] | None = None,
        inss: TMapping[str, Fraction | int | str] | None = None,
        default_sub: Fraction | int | str = 1,
        default_del: Fraction | int | str = 1,
        default_ins: Fraction | int | str = 1,
    ) -> "CostFunction":
        """Build a cost function from rational costs using their common denominator."""
        subs = {k: Fraction(v) for k, v in (subs or {}).items()}
        dels = {k: Fraction(v) for k, v in (dels or {}).items()}
        inss = {k: Fraction(v) for k, v in (inss or {}).items()}
        defaults = [Fraction(default_sub), Fraction(default_del), Fraction(default_ins)]
        every = [*subs.values(), *dels.values(), *inss.values(), *defaults]
        scale = math.lcm(*(f.denominator for f in every))

        def s(f: Fraction) -> int:
            return int(f * scale)

        return cls(
            scale=scale,
            default_sub=s(defaults[0]),
            default_del=s(defaults[1]),
            default_ins=s(defaults[2]),
            subs={k: s(v) for k, v in subs.items()},
            dels={k: s(v) for k, v in dels.items()},
            inss={k: s(v) for k, v in inss.items()},
        )


def unit_cost() -> CostFunction:
    return CostFunction()


def parse_cost_file(text: str) -> CostFunction:
    """Read the line-oriented cost format.

    ``scale <int>`` first, then any of ``sub a b <int>``, ``del a <int>``,
    ``ins a <int>``, ``default-sub <int>``, ``default-del <int>``,
    ``default-ins <int>``.  Values are in units of ``1/scale``.  Blank lines
    and ``#`` comments are skipped.  Unspecified defaults are one full unit.
    """
    scale = None
    defaults: dict[str, int] = {}
    subs: dict[tuple[str, str], int] = {}
    dels: dict[str, int] = {}
    inss: dict[str, int] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, args = parts[0], parts[1:]
        arity = {"scale": 1, "sub": 3, "del": 2, "ins": 2,
                 "default-sub": 1, "default-del": 1, "default-ins": 1}
        if key not in arity:
            raise CostFileError(f"line {no}: unknown directive {key!r}")
        if len(args) != arity[key]:
            raise CostFileError(f"line {no}: {key} takes {arity[key]} arguments")
        try:
            value = int(args[-1])
        except ValueError:
            raise CostFileError(f"line {no}: cost must be an integer, got {args[-1]!r}") from None
        if key == "scale":
            if scale is not None:
                raise CostFileError(f"line {no}: duplicate scale")
            if value <= 0:
                raise CostFileError(f"line {no}: scale must be positive")
            scale = value
            continue
        if scale is None:
            raise CostFileError(f"line {no}: the first directive must be 'scale <int>'")
        if key == "sub":
            subs[(args[0], args[1])] = value
        elif key == "del":
            dels[args[0]] = value
        elif key == "ins":
            inss[args[0]] = value
        else:
            defaults[key] = value
    if scale is None:
        raise CostFileError("missing 'scale <int>' header")
    return CostFunction(
        scale=scale,
        default_sub=defaults.get("default-sub", scale),
        default_del=defaults.get("default-del", scale),
        default_ins=defaults.get("default-ins", scale),
        subs=subs,
        dels=dels,
        inss=inss,
    )


def validate_metric(c: CostFunction, alphabet: Iterable[str]) -> list[str]:
    """Return every metric-axiom violation over the alphabet plus the blank symbol."""
    sigma = sorted(set(alphabet))
    out: list[str] = []
    for a in sigma:
        if c.delete(a) < 0:
            out.append(f"del({a}) < 0")
        if c.insert(a) < 0:
            out.append(f"ins({a}) < 0")
        if c.sub(a, a) != 0:
            out.append(f"sub({a},{a}) != 0")
    for a in sigma:
        for b in sigma:
            s_ab = c.sub(a, b)
            if s_ab < 0:
                out.append(f"sub({a},{b}) < 0")
            if a < b and s_ab != c.sub(b, a):
                out.append(f"sub({a},{b}) != sub({b},{a})")
            if s_ab > c.delete(a) + c.insert(b):
                out.append(f"sub({a},{b}) > del({a})+ins({b})")
            if c.delete(a) > s_ab + c.delete(b):
                out.append(f"del({a}) > sub({a},{b})+del({b})")
            if c.insert(b) > c.insert(a) + s_ab:
                out.append(f"ins({b}) > ins({a})+sub({a},{b})")
            for z in sigma:
                if c.sub(a, z) > s_ab + c.sub(b, z):
                    out.append(f"sub({a},{z}) > sub({a},{b})+sub({b},{z})")
    return out


def tree_alphabet(*trees: Tree) -> set[str]:
    return {lab for t in trees for lab in t.labels}


def pair_weight(c: CostFunction, a: str, b: str) -> int:
    """Gain of mapping a node labelled ``a`` onto one labelled ``b``."""
    return c.delete(a) + c.insert(b) - c.sub(a, b)


def weight_matrix(c: CostFunction, t1: Tree, t2: Tree, clamp: bool = False) -> list[list[int]]:
    rows = []
    for a in t1.labels:
        row = [pair_weight(c, a, b) for b in t2.labels]
        if clamp:
            row = [max(v, 0) for v in row]
        rows.append(row)
    return rows


def total_indel(c: CostFunction, t1: Tree, t2: Tree) -> int:
    return sum(c.delete(a) for a in t1.labels) + sum(c.insert(b) for b in t2.labels)


def mapping_cost(c: CostFunction, t1: Tree, t2: Tree, m: Iterable[tuple[int, int]]) -> int:
    pairs = list(m)
    left = [x for x, _ in pairs]
    right = [y for _, y in pairs]
    for x, y in pairs:
        if not (0 <= x < len(t1) and 0 <= y < len(t2)):
            raise ValueError(f"pair ({x}, {y}) references a node outside the trees")
    if len(set(left)) != len(left) or len(set(right)) != len(right):
        raise ValueError("mapping is not one-to-one")
    used1, used2 = set(left), set(right)
    cost = sum(c.sub(t1.labels[x], t2.labels[y]) for x, y in pairs)
    cost += sum(c.delete(t1.labels[x]) for x in t1.nodes if x not in used1)
    cost += sum(c.insert(t2.labels[y]) for y in t2.nodes if y not in used2)
    return cost


def distance_from_weight(c: CostFunction, t1: Tree, t2: Tree, total_weight: int) -> int:
    d = total_indel(c, t1, t2) - total_weight
    if d < 0:
        raise ArithmeticError(f"negative distance {d}: total weight {total_weight} exceeds all indels")
    return d
