"""Relational database: interned ground atoms with closed-world semantics.

Attribute functors are stored densely (one value id per point of the
grounding space; totality is validated at construction). Relationship
functors are stored sparsely as explicit rows; any absent relationship
atom is logically F. Lookup structures (per-value atom lists and prefix
hash indices keyed on bound argument positions) are built lazily and
cached; a database is immutable after construction, so the caches are
safe to share across readers.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import DataError, QueryError, SchemaError
from .schema import ATTRIBUTE, RELATIONSHIP, FunctorDecl, Schema

# Hard cap on a single functor's grounding space for dense materialization.
_DENSE_LIMIT = 1 << 28


class Geometry:
    """Row-major packing of argument-id tuples into flat indices, per functor."""

    def __init__(self, schema: Schema):
        self.schema = schema
        self.sizes: dict[str, tuple[int, ...]] = {}
        self.strides: dict[str, tuple[int, ...]] = {}
        self.space: dict[str, int] = {}
        for name, decl in schema.functors.items():
            sizes = tuple(schema.population_size(p) for p in decl.arg_populations)
            strides = []
            acc = 1
            for n in reversed(sizes):
                strides.append(acc)
                acc *= n
            self.sizes[name] = sizes
            self.strides[name] = tuple(reversed(strides))
            self.space[name] = acc

    def pack(self, functor: str, ids) -> int:
        st = self.strides[functor]
        return sum(i * s for i, s in zip(ids, st))

    def unpack(self, functor: str, packed: int) -> tuple[int, ...]:
        out = []
        for n, s in zip(self.sizes[functor], self.strides[functor]):
            out.append((packed // s) % n)
        return tuple(out)

    def unpack_column(self, functor: str, packed: np.ndarray, pos: int) -> np.ndarray:
        return (packed // self.strides[functor][pos]) % self.sizes[functor][pos]


class RelationalDatabase:
    """Immutable store of ground atoms over a schema."""

    def __init__(self, schema: Schema):
        self.schema = schema
        self.geom = Geometry(schema)
        self._attr: dict[str, np.ndarray] = {}
        self._rel: dict[str, dict[int, int]] = {}
        self._value_atom_cache: dict[tuple[str, int], np.ndarray] = {}
        self._prefix_cache: dict[tuple, dict] = {}
        self._dense_cache: dict[str, np.ndarray] = {}

    # -- construction ------------------------------------------------------

    @classmethod
    def from_atoms(cls, schema: Schema, atoms) -> "RelationalDatabase":
        """Build a database from (functor, args, value) triples.

        Attribute functors must be total; conflicting duplicates raise.
        """
        db = cls(schema)
        staged_attr: dict[str, np.ndarray] = {}
        for name, decl in schema.functors.items():
            if decl.kind == ATTRIBUTE:
                space = db.geom.space[name]
                if space > _DENSE_LIMIT:
                    raise DataError(
                        f"attribute {name}: grounding space {space} too large"
                    )
                staged_attr[name] = np.full(space, -1, dtype=np.int16)
            else:
                db._rel[name] = {}
        for functor, args, value in atoms:
            decl = schema.functors.get(functor)
            if decl is None:
                raise DataError(f"atom references unknown functor {functor!r}")
            if len(args) != decl.arity:
                raise DataError(f"{functor}{tuple(args)}: arity mismatch")
            try:
                ids = tuple(
                    schema.const_id(pop, c)
                    for pop, c in zip(decl.arg_populations, args)
                )
                vid = decl.value_id(value)
            except QueryError as exc:
                raise DataError(str(exc)) from exc
            packed = db.geom.pack(functor, ids)
            if decl.kind == ATTRIBUTE:
                prev = staged_attr[functor][packed]
                if prev >= 0 and prev != vid:
                    raise DataError(
                        f"conflicting duplicate atom {functor}{tuple(args)}"
                    )
                staged_attr[functor][packed] = vid
            else:
                prev = db._rel[functor].get(packed)
                if prev is not None and prev != vid:
                    raise DataError(
                        f"conflicting duplicate atom {functor}{tuple(args)}"
                    )
                db._rel[functor][packed] = vid
        for name, arr in staged_attr.items():
            missing = np.flatnonzero(arr < 0)
            if missing.size:
                ids = db.geom.unpack(name, int(missing[0]))
                decl = schema.functors[name]
                consts = tuple(
                    schema.populations[pop][i]
                    for pop, i in zip(decl.arg_populations, ids)
                )
                raise DataError(
                    f"attribute {name} is not total: missing value for "
                    f"{name}{consts} ({missing.size} grounding(s) absent)"
                )
            db._attr[name] = arr
        return db

    @classmethod
    def from_arrays(
        cls,
        schema: Schema,
        attr_values: dict[str, np.ndarray],
        rel_true_packed: dict[str, np.ndarray],
    ) -> "RelationalDatabase":
        """Fast constructor from dense attribute arrays and packed T-atom lists."""
        db = cls(schema)
        for name, decl in schema.functors.items():
            if decl.kind == ATTRIBUTE:
                arr = np.asarray(attr_values[name], dtype=np.int16)
                if arr.shape != (db.geom.space[name],):
                    raise DataError(f"attribute {name}: bad dense array shape")
                db._attr[name] = arr
            else:
                t_id = decl.value_id("T")
                packed = rel_true_packed.get(name, np.empty(0, dtype=np.int64))
                db._rel[name] = {int(p): t_id for p in packed}
        return db

    # -- basic accessors ---------------------------------------------------

    @property
    def atom_count(self) -> int:
        """Logical atom count: the full grounding space of every functor."""
        return sum(self.geom.space.values())

    @property
    def stored_atom_count(self) -> int:
        """Physically stored atoms (attribute points plus explicit rows)."""
        n = sum(arr.size for arr in self._attr.values())
        return n + sum(len(d) for d in self._rel.values())

    def value_id(self, functor: str, packed: int) -> int:
        decl = self.schema.functors[functor]
        if decl.kind == ATTRIBUTE:
            return int(self._attr[functor][packed])
        got = self._rel[functor].get(packed)
        return decl.false_id if got is None else got

    def value_of(self, functor: str, args: tuple[str, ...]) -> str:
        decl = self.schema.functor(functor)
        ids = tuple(
            self.schema.const_id(pop, c)
            for pop, c in zip(decl.arg_populations, args)
        )
        return decl.range[self.value_id(functor, self.geom.pack(functor, ids))]

    def atoms(self):
        """Yield stored atoms as (functor, args, value) in deterministic order."""
        for name in self.schema.functors:
            decl = self.schema.functors[name]
            if decl.kind == ATTRIBUTE:
                arr = self._attr[name]
                for packed in range(arr.size):
                    ids = self.geom.unpack(name, packed)
                    args = tuple(
                        self.schema.populations[pop][i]
                        for pop, i in zip(decl.arg_populations, ids)
                    )
                    yield name, args, decl.range[arr[packed]]
            else:
                for packed in sorted(self._rel[name]):
                    ids = self.geom.unpack(name, packed)
                    args = tuple(
                        self.schema.populations[pop][i]
                        for pop, i in zip(decl.arg_populations, ids)
                    )
                    yield name, args, decl.range[self._rel[name][packed]]

    # -- lookup structures ---------------------------------------------------

    def enumerable(self, functor: str, value_id: int) -> bool:
        """Whether atoms with this value can be listed from stored rows.

        False exactly for relationship value F, whose extension is mostly
        implicit under the closed world.
        """
        decl = self.schema.functors[functor]
        return decl.kind == ATTRIBUTE or value_id != decl.false_id

    def value_atoms(self, functor: str, value_id: int) -> np.ndarray:
        """Sorted packed indices of stored atoms carrying value_id."""
        key = (functor, value_id)
        got = self._value_atom_cache.get(key)
        if got is not None:
            return got
        decl = self.schema.functors[functor]
        if decl.kind == ATTRIBUTE:
            arr = np.flatnonzero(self._attr[functor] == value_id).astype(np.int64)
        else:
            if value_id == decl.false_id:
                raise QueryError(
                    f"relationship {functor}: F atoms are implicit, not enumerable"
                )
            arr = np.array(
                sorted(p for p, v in self._rel[functor].items() if v == value_id),
                dtype=np.int64,
            )
        self._value_atom_cache[key] = arr
        return arr

    def prefix_index(self, functor: str, value_id: int, positions: tuple[int, ...]):
        """Hash index: bound-position id tuple -> packed atom indices."""
        key = (functor, value_id, positions)
        got = self._prefix_cache.get(key)
        if got is not None:
            return got
        atoms = self.value_atoms(functor, value_id)
        cols = [self.geom.unpack_column(functor, atoms, p) for p in positions]
        index: dict[tuple, list] = {}
        for row in range(atoms.size):
            k = tuple(int(c[row]) for c in cols)
            index.setdefault(k, []).append(int(atoms[row]))
        self._prefix_cache[key] = index
        return index

    def match(self, functor: str, value_id: int, pattern: tuple):
        """Iterate id-tuples of stored atoms with value_id matching pattern.

        pattern holds a constant id per bound position and None per free one.
        Not usable for relationship value F (implicit extension).
        """
        positions = tuple(i for i, p in enumerate(pattern) if p is not None)
        if positions:
            index = self.prefix_index(functor, value_id, positions)
            bucket = index.get(tuple(pattern[i] for i in positions), ())
        else:
            bucket = self.value_atoms(functor, value_id)
        for packed in bucket:
            yield self.geom.unpack(functor, int(packed))

    def dense_values(self, functor: str) -> np.ndarray:
        """Dense value-id array over the functor's full grounding space."""
        got = self._dense_cache.get(functor)
        if got is not None:
            return got
        decl = self.schema.functors[functor]
        if decl.kind == ATTRIBUTE:
            arr = self._attr[functor]
        else:
            space = self.geom.space[functor]
            if space > _DENSE_LIMIT:
                raise DataError(
                    f"relationship {functor}: grounding space {space} too large "
                    "for a dense pass"
                )
            arr = np.full(space, decl.false_id, dtype=np.int16)
            if self._rel[functor]:
                idx = np.fromiter(self._rel[functor], dtype=np.int64)
                vals = np.fromiter(self._rel[functor].values(), dtype=np.int16)
                arr[idx] = vals
        self._dense_cache[functor] = arr
        return arr

    def overridden(self, functor: str, packed: int):
        return None


class DatabaseView:
    """Read-only window over a database with a few atoms overridden.

    Used to score a masked target atom under each candidate value and to
    clamp evidence atoms without copying the store.
    """

    def __init__(self, db, overrides: dict[tuple[str, tuple[str, ...]], str]):
        self.db = db
        self.schema = db.schema
        self.geom = db.geom
        self._over: dict[str, dict[int, int]] = {}
        for (functor, args), value in overrides.items():
            decl = db.schema.functor(functor)
            ids = tuple(
                db.schema.const_id(pop, c)
                for pop, c in zip(decl.arg_populations, args)
            )
            packed = db.geom.pack(functor, ids)
            self._over.setdefault(functor, {})[packed] = decl.value_id(value)

    def with_override(self, functor: str, args: tuple[str, ...], value: str):
        merged = {
            (f, self._decode_args(f, p)): self.schema.functors[f].range[v]
            for f, d in self._over.items()
            for p, v in d.items()
        }
        merged[(functor, args)] = value
        return DatabaseView(self.db, merged)

    def _decode_args(self, functor: str, packed: int) -> tuple[str, ...]:
        decl = self.schema.functors[functor]
        ids = self.geom.unpack(functor, packed)
        return tuple(
            self.schema.populations[pop][i]
            for pop, i in zip(decl.arg_populations, ids)
        )

    def value_id(self, functor: str, packed: int) -> int:
        d = self._over.get(functor)
        if d is not None:
            got = d.get(packed)
            if got is not None:
                return got
        return self.db.value_id(functor, packed)

    def value_of(self, functor: str, args: tuple[str, ...]) -> str:
        decl = self.schema.functor(functor)
        ids = tuple(
            self.schema.const_id(pop, c)
            for pop, c in zip(decl.arg_populations, args)
        )
        return decl.range[self.value_id(functor, self.geom.pack(functor, ids))]

    def overridden(self, functor: str, packed: int):
        d = self._over.get(functor)
        if d is None:
            return None
        return d.get(packed)

    def enumerable(self, functor: str, value_id: int) -> bool:
        return self.db.enumerable(functor, value_id)

    def value_atoms(self, functor: str, value_id: int) -> np.ndarray:
        # Only used for size estimates; match() applies the overrides.
        return self.db.value_atoms(functor, value_id)

    def match(self, functor: str, value_id: int, pattern: tuple):
        over = self._over.get(functor, {})
        for ids in self.db.match(functor, value_id, pattern):
            packed = self.geom.pack(functor, ids)
            if packed in over and over[packed] != value_id:
                continue
            yield ids
        for packed, vid in over.items():
            if vid != value_id:
                continue
            if self.db.value_id(functor, packed) == value_id:
                continue  # already yielded by the base store
            ids = self.geom.unpack(functor, packed)
            if all(p is None or p == i for p, i in zip(pattern, ids)):
                yield ids


def _read_rows(path: Path, decl: FunctorDecl):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return
        expected = [f"arg{i + 1}" for i in range(decl.arity)] + ["value"]
        if [h.strip() for h in header] != expected:
            raise DataError(
                f"{path.name}: expected header {','.join(expected)}, "
                f"got {','.join(header)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != decl.arity + 1:
                raise DataError(f"{path.name}:{lineno}: expected {decl.arity + 1} fields")
            yield lineno, tuple(c.strip() for c in row[:-1]), row[-1].strip()


def load_database(schema: Schema | str | Path, data_dir: str | Path) -> RelationalDatabase:
    """Load CSV data files (one per functor, named ``<functor>.csv``).

    Attribute files are required and must cover the full grounding space.
    Relationship files are optional and may list only T rows; everything
    absent is F by the closed-world convention.
    """
    if not isinstance(schema, Schema):
        from .schema import load_schema

        schema = load_schema(schema)
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise DataError(f"data directory {data_dir} does not exist")

    def atom_stream():
        for name, decl in schema.functors.items():
            path = data_dir / f"{name}.csv"
            if not path.exists():
                if decl.kind == RELATIONSHIP:
                    continue
                raise DataError(f"missing data file for attribute {name}: {path}")
            for lineno, args, value in _read_rows(path, decl):
                if value not in decl.range:
                    raise DataError(
                        f"{path.name}:{lineno}: value {value!r} not in range "
                        f"of {name}"
                    )
                for pop, c in zip(decl.arg_populations, args):
                    if not schema.has_constant(pop, c):
                        raise DataError(
                            f"{path.name}:{lineno}: constant {c!r} not in "
                            f"population {pop!r}"
                        )
                yield name, args, value

    return RelationalDatabase.from_atoms(schema, atom_stream())


def load_evidence(
    schema: Schema, data_dir: str | Path
) -> dict[tuple[str, tuple[str, ...]], str]:
    """Load a partial assignment: exactly the atoms listed in the files.

    No closed-world completion and no totality check; unlisted atoms stay
    free. Used for sampler evidence.
    """
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise DataError(f"data directory {data_dir} does not exist")
    out: dict[tuple[str, tuple[str, ...]], str] = {}
    for name, decl in schema.functors.items():
        path = data_dir / f"{name}.csv"
        if not path.exists():
            continue
        for lineno, args, value in _read_rows(path, decl):
            if value not in decl.range:
                raise DataError(
                    f"{path.name}:{lineno}: value {value!r} not in range of {name}"
                )
            for pop, c in zip(decl.arg_populations, args):
                if not schema.has_constant(pop, c):
                    raise DataError(
                        f"{path.name}:{lineno}: constant {c!r} not in population {pop!r}"
                    )
            key = (name, args)
            if key in out and out[key] != value:
                raise DataError(f"{path.name}:{lineno}: conflicting duplicate atom")
            out[key] = value
    return out
