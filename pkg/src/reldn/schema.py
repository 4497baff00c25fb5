"""Relational vocabulary: populations, functors, and first-order terms.

A schema declares named populations (finite constant sets) and functors.
Each functor maps a tuple of typed arguments to a value from a finite range.
Attribute functors are total over their grounding space; relationship
functors are binary with range {T, F} and follow the closed-world
convention (absent atoms are logically F).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import QueryError, SchemaError

ATTRIBUTE = "attribute"
RELATIONSHIP = "relationship"


@dataclass(frozen=True)
class Var:
    """A first-order variable ranging over one population."""

    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class FunctorDecl:
    """Declaration of one functor: argument population types, range, kind."""

    name: str
    arg_populations: tuple[str, ...]
    range: tuple[str, ...]
    kind: str = ATTRIBUTE

    def __post_init__(self):
        if self.kind not in (ATTRIBUTE, RELATIONSHIP):
            raise SchemaError(f"functor {self.name}: unknown kind {self.kind!r}")
        if len(self.range) < 2:
            raise SchemaError(f"functor {self.name}: range needs at least two values")
        if len(set(self.range)) != len(self.range):
            raise SchemaError(f"functor {self.name}: duplicate range values")
        if self.kind == RELATIONSHIP and set(self.range) != {"T", "F"}:
            raise SchemaError(
                f"relationship {self.name}: range must be exactly {{T, F}}"
            )

    @property
    def arity(self) -> int:
        return len(self.arg_populations)

    def value_id(self, value: str) -> int:
        try:
            return self.range.index(value)
        except ValueError:
            raise QueryError(
                f"functor {self.name}: value {value!r} not in range {self.range}"
            ) from None

    @property
    def false_id(self) -> int:
        """Value id of F; only meaningful for relationships."""
        return self.range.index("F")


class Schema:
    """Populations plus functor declarations, with constant interning."""

    def __init__(self, populations: dict[str, list[str]], functors: list[FunctorDecl]):
        self.populations: dict[str, tuple[str, ...]] = {}
        self._const_ids: dict[str, dict[str, int]] = {}
        for pop, constants in populations.items():
            consts = tuple(constants)
            if len(set(consts)) != len(consts):
                raise SchemaError(f"population {pop}: duplicate constants")
            self.populations[pop] = consts
            self._const_ids[pop] = {c: i for i, c in enumerate(consts)}
        self.functors: dict[str, FunctorDecl] = {}
        for decl in functors:
            if decl.name in self.functors:
                raise SchemaError(f"duplicate functor name {decl.name}")
            for pop in decl.arg_populations:
                if pop not in self.populations:
                    raise SchemaError(
                        f"functor {decl.name}: unknown population {pop!r}"
                    )
            self.functors[decl.name] = decl

    def functor(self, name: str) -> FunctorDecl:
        try:
            return self.functors[name]
        except KeyError:
            raise QueryError(f"unknown functor {name!r}") from None

    def population_size(self, pop: str) -> int:
        return len(self.populations[pop])

    def const_id(self, pop: str, constant: str) -> int:
        try:
            return self._const_ids[pop][constant]
        except KeyError:
            raise QueryError(
                f"constant {constant!r} not in population {pop!r}"
            ) from None

    def has_constant(self, pop: str, constant: str) -> bool:
        return constant in self._const_ids[pop]

    def to_dict(self) -> dict:
        return {
            "populations": {p: list(cs) for p, cs in self.populations.items()},
            "functors": [
                {
                    "name": d.name,
                    "args": list(d.arg_populations),
                    "range": list(d.range),
                    "kind": d.kind,
                }
                for d in self.functors.values()
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Schema":
        try:
            pops = obj["populations"]
            decls = [
                FunctorDecl(
                    name=f["name"],
                    arg_populations=tuple(f["args"]),
                    range=tuple(f["range"]),
                    kind=f.get("kind", ATTRIBUTE),
                )
                for f in obj["functors"]
            ]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema object: {exc}") from exc
        return cls(pops, decls)


def load_schema(path: str | Path) -> Schema:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return Schema.from_dict(obj)


@dataclass(frozen=True)
class PRV:
    """Parametrized random variable: a functor applied to variables/constants."""

    functor: str
    args: tuple  # each element is a Var or a constant string

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def vars(self) -> tuple[Var, ...]:
        seen, out = set(), []
        for a in self.args:
            if isinstance(a, Var) and a not in seen:
                seen.add(a)
                out.append(a)
        return tuple(out)

    @property
    def is_ground(self) -> bool:
        return not any(isinstance(a, Var) for a in self.args)

    def substitute(self, binding: dict[Var, str]) -> "PRV":
        return PRV(
            self.functor,
            tuple(binding.get(a, a) if isinstance(a, Var) else a for a in self.args),
        )

    def __repr__(self) -> str:
        inner = ",".join(a.name if isinstance(a, Var) else str(a) for a in self.args)
        return f"{self.functor}({inner})"


def check_prv(schema: Schema, prv: PRV, var_pops: dict[Var, str] | None = None) -> dict[Var, str]:
    """Type-check a PRV against the schema; returns the variable->population map.

    Extends and returns var_pops, raising on arity mismatch, unknown
    constants, or a variable used at positions with different populations.
    """
    decl = schema.functor(prv.functor)
    if len(prv.args) != decl.arity:
        raise QueryError(
            f"{prv}: expected {decl.arity} argument(s), got {len(prv.args)}"
        )
    out = dict(var_pops or {})
    for arg, pop in zip(prv.args, decl.arg_populations):
        if isinstance(arg, Var):
            prior = out.get(arg)
            if prior is not None and prior != pop:
                raise QueryError(
                    f"variable {arg} used over populations {prior!r} and {pop!r}"
                )
            out[arg] = pop
        else:
            if not schema.has_constant(pop, arg):
                raise QueryError(f"{prv}: constant {arg!r} not in population {pop!r}")
    return out


class Grounding:
    """Immutable binding of variables to constants (an equality constraint)."""

    __slots__ = ("_items",)

    def __init__(self, bindings: dict[Var, str]):
        self._items = tuple(sorted(bindings.items(), key=lambda kv: kv[0].name))

    @property
    def bindings(self) -> dict[Var, str]:
        return dict(self._items)

    @property
    def vars(self) -> frozenset[Var]:
        return frozenset(v for v, _ in self._items)

    def get(self, var: Var) -> str | None:
        for v, c in self._items:
            if v == var:
                return c
        return None

    def restrict(self, keep) -> "Grounding":
        keep = set(keep)
        return Grounding({v: c for v, c in self._items if v in keep})

    def __eq__(self, other) -> bool:
        return isinstance(other, Grounding) and self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __repr__(self) -> str:
        inner = ", ".join(f"{v}={c}" for v, c in self._items)
        return f"{{{inner}}}"


class Conjunction:
    """A set of (PRV, value) literals with an optional equality constraint.

    The same PRV may not appear with two different values; exact duplicates
    are collapsed. Constraint variables must occur in the literals.
    """

    def __init__(self, literals, constraint: Grounding | None = None):
        seen: dict[PRV, str] = {}
        ordered: list[tuple[PRV, str]] = []
        for prv, value in literals:
            if prv in seen:
                if seen[prv] != value:
                    raise QueryError(
                        f"conflicting literals for {prv}: {seen[prv]!r} vs {value!r}"
                    )
                continue
            seen[prv] = value
            ordered.append((prv, value))
        self.literals: tuple[tuple[PRV, str], ...] = tuple(ordered)
        self.constraint = constraint
        if constraint is not None:
            lit_vars = self.vars
            for v in constraint.vars:
                if v not in lit_vars:
                    raise QueryError(
                        f"constraint variable {v} does not occur in the conjunction"
                    )

    @property
    def vars(self) -> frozenset[Var]:
        out = set()
        for prv, _ in self.literals:
            out.update(prv.vars)
        return frozenset(out)

    @property
    def free_vars(self) -> frozenset[Var]:
        if self.constraint is None:
            return self.vars
        return self.vars - self.constraint.vars

    def __repr__(self) -> str:
        parts = [f"{prv}={val}" for prv, val in self.literals]
        body = " & ".join(parts) if parts else "true"
        if self.constraint is not None and len(self.constraint):
            return f"{body} | {self.constraint}"
        return body


_ATOM_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*\(\s*([^()]*)\s*\)\s*$")


def parse_ground_atom(text: str) -> tuple[str, tuple[str, ...]]:
    """Parse ``functor(c1,...,ck)`` with constant arguments."""
    m = _ATOM_RE.match(text)
    if not m:
        raise QueryError(f"cannot parse atom {text!r}")
    functor = m.group(1)
    body = m.group(2).strip()
    args = tuple(a.strip() for a in body.split(",")) if body else ()
    if any(not a for a in args):
        raise QueryError(f"cannot parse atom {text!r}")
    return functor, args


def parse_prv(text: str) -> PRV:
    """Parse ``functor(t1,...,tk)``; capitalized tokens become variables."""
    functor, args = parse_ground_atom(text)
    terms = tuple(Var(a) if a[:1].isupper() else a for a in args)
    return PRV(functor, terms)
