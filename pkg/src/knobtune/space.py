"""Declarative model of a tunable configuration space.

A space is an ordered list of knobs loaded from a JSON catalog; the file
order defines the dimension index of each knob. Numeric knobs may carry
*special values*: magic settings (typically 0 or -1) that switch the
underlying feature to an entirely different behavior instead of picking a
point on the regular scale. Special values must sit at the extremes of the
range, so that stripping them leaves a single contiguous interval of
regular values.

Spaces and knobs are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

REAL = "real"
INTEGER = "integer"
CATEGORICAL = "categorical"

# JSON "type" field -> internal kind
_TYPE_NAMES = {"real": REAL, "integer": INTEGER, "enum": CATEGORICAL}
_KIND_NAMES = {REAL: "real", INTEGER: "integer", CATEGORICAL: "enum"}


class SpaceError(ValueError):
    """Malformed space file or knob definition violating a validity rule."""


@dataclass(frozen=True)
class KnobSpec:
    """One tunable knob: a bounded numeric range or a list of choices."""

    name: str
    kind: str
    min: float | int | None = None
    max: float | int | None = None
    choices: tuple[str, ...] = ()
    special_values: tuple[float | int, ...] = ()
    default: float | int | str | None = None


@dataclass(frozen=True)
class ConfigSpace:
    """Ordered, validated collection of knobs. Index = position in file."""

    knobs: tuple[KnobSpec, ...]
    _index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_index", {k.name: i for i, k in enumerate(self.knobs)}
        )

    @property
    def dimension(self) -> int:
        return len(self.knobs)

    def __len__(self) -> int:
        return len(self.knobs)

    def __getitem__(self, name: str) -> KnobSpec:
        return self.knobs[self._index[name]]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index_of(self, name: str) -> int:
        return self._index[name]

    def defaults(self) -> dict[str, float | int | str]:
        """Default configuration, in knob order."""
        return {k.name: k.default for k in self.knobs}

    def to_json_dict(self) -> dict:
        return {"knobs": [_knob_to_json(k) for k in self.knobs]}


def is_hybrid(knob: KnobSpec) -> bool:
    """A hybrid knob is a numeric knob with at least one special value."""
    return len(knob.special_values) > 0


@lru_cache(maxsize=None)
def effective_numeric_range(knob: KnobSpec) -> tuple[float | int, float | int]:
    """The contiguous range left after excluding the knob's special values.

    Equals (min, max) when there are none. Integer knobs shrink by whole
    steps; real knobs shrink to the next representable float, since a real
    special value can only be the exact endpoint.
    """
    if knob.kind == CATEGORICAL:
        raise SpaceError(f"knob {knob.name!r}: categorical knobs have no numeric range")
    if not knob.special_values:
        return (knob.min, knob.max)
    specials = set(knob.special_values)
    if knob.kind == INTEGER:
        lo, hi = knob.min, knob.max
        while lo in specials:
            lo += 1
        while hi in specials:
            hi -= 1
        return (lo, hi)
    lo, hi = float(knob.min), float(knob.max)
    if lo in specials:
        lo = math.nextafter(lo, hi)
    if hi in specials:
        hi = math.nextafter(hi, lo)
    return (lo, hi)


def _fail(name: str, rule: str) -> None:
    raise SpaceError(f"knob {name!r}: {rule}")


def validate_knob(knob: KnobSpec) -> None:
    """Check every knob-level invariant; raises SpaceError naming the rule."""
    if not knob.name or not isinstance(knob.name, str):
        raise SpaceError("knob name must be a non-empty string")
    if knob.kind == CATEGORICAL:
        if len(knob.choices) < 2:
            _fail(knob.name, "categorical knobs need at least 2 choices")
        if len(set(knob.choices)) != len(knob.choices):
            _fail(knob.name, "choices must be distinct")
        if knob.special_values:
            _fail(knob.name, "categorical knobs cannot have special values")
        if knob.default not in knob.choices:
            _fail(knob.name, f"default {knob.default!r} is not one of the choices")
        return
    if knob.kind not in (REAL, INTEGER):
        _fail(knob.name, f"unknown kind {knob.kind!r}")
    if knob.min is None or knob.max is None:
        _fail(knob.name, "numeric knobs need both min and max")
    if not (knob.min < knob.max):
        _fail(knob.name, f"min must be strictly below max, got [{knob.min}, {knob.max}]")
    if knob.kind == INTEGER:
        for bound in (knob.min, knob.max):
            if not _is_integral(bound):
                _fail(knob.name, f"integer knob bound {bound!r} is not an integer")
    if knob.default is None or isinstance(knob.default, str):
        _fail(knob.name, "numeric knobs need a numeric default")
    if not (knob.min <= knob.default <= knob.max):
        _fail(knob.name, f"default {knob.default} outside [{knob.min}, {knob.max}]")
    if knob.kind == INTEGER and not _is_integral(knob.default):
        _fail(knob.name, f"integer knob default {knob.default!r} is not an integer")
    _validate_specials(knob)


def _is_integral(x) -> bool:
    return isinstance(x, int) or (isinstance(x, float) and x.is_integer())


def _validate_specials(knob: KnobSpec) -> None:
    sp = knob.special_values
    if not sp:
        return
    if len(set(sp)) != len(sp):
        _fail(knob.name, "special values must be distinct")
    for s in sp:
        if not (knob.min <= s <= knob.max):
            _fail(knob.name, f"special value {s} outside [{knob.min}, {knob.max}]")
        if knob.kind == INTEGER and not _is_integral(s):
            _fail(knob.name, f"integer knob special value {s!r} is not an integer")
    if knob.kind == INTEGER:
        specials = set(sp)
        lo, hi = knob.min, knob.max
        while lo in specials:
            lo += 1
        while hi in specials:
            hi -= 1
        if hi <= lo:
            _fail(knob.name, "special values leave fewer than 2 regular values")
        for s in sp:
            if lo <= s <= hi:
                _fail(
                    knob.name,
                    f"special value {s} is interior: regular values exist on both sides",
                )
    else:
        for s in sp:
            if s != knob.min and s != knob.max:
                _fail(
                    knob.name,
                    f"special value {s} of a real knob must equal min or max",
                )
        lo, hi = effective_numeric_range(knob)
        if not (lo < hi):
            _fail(knob.name, "special values leave an empty regular range")


def space_from_dict(doc: dict) -> ConfigSpace:
    """Build and validate a ConfigSpace from a parsed space document."""
    if not isinstance(doc, dict) or "knobs" not in doc:
        raise SpaceError('space document must be an object with a "knobs" list')
    raw = doc["knobs"]
    if not isinstance(raw, list) or len(raw) == 0:
        raise SpaceError('"knobs" must be a non-empty list')
    knobs = []
    seen: set[str] = set()
    for i, entry in enumerate(raw):
        try:
            knob = _knob_from_json(entry)
            validate_knob(knob)
        except SpaceError as e:
            raise SpaceError(f"knobs[{i}]: {e}") from None
        if knob.name in seen:
            raise SpaceError(f"knobs[{i}]: duplicate knob name {knob.name!r}")
        seen.add(knob.name)
        knobs.append(knob)
    return ConfigSpace(tuple(knobs))


def parse_space(path) -> ConfigSpace:
    """Load a space catalog from a JSON file.

    Raises SpaceError with a line locus on malformed JSON, or with the knob
    name and violated rule on an invalid definition.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise SpaceError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    try:
        return space_from_dict(doc)
    except SpaceError as e:
        raise SpaceError(f"{path}: {e}") from None


def _knob_from_json(entry) -> KnobSpec:
    if not isinstance(entry, dict):
        raise SpaceError("knob entry must be an object")
    name = entry.get("name")
    if not isinstance(name, str) or not name:
        raise SpaceError('missing or invalid "name" field')
    type_name = entry.get("type")
    if type_name not in _TYPE_NAMES:
        _fail(name, f'"type" must be one of {sorted(_TYPE_NAMES)}, got {type_name!r}')
    kind = _TYPE_NAMES[type_name]
    known = {"name", "type", "min", "max", "choices", "special_values", "default"}
    for key in entry:
        if key not in known:
            _fail(name, f"unknown field {key!r}")
    if kind == CATEGORICAL:
        choices = entry.get("choices")
        if not isinstance(choices, list) or not all(isinstance(c, str) for c in choices):
            _fail(name, '"choices" must be a list of strings')
        for key in ("min", "max", "special_values"):
            if key in entry:
                _fail(name, f'field {key!r} not allowed on enum knobs')
        return KnobSpec(name=name, kind=kind, choices=tuple(choices),
                        default=entry.get("default"))
    for key in ("min", "max"):
        if not isinstance(entry.get(key), (int, float)) or isinstance(entry.get(key), bool):
            _fail(name, f'"{key}" must be a number')
    sp = entry.get("special_values", [])
    if not isinstance(sp, list) or not all(
        isinstance(s, (int, float)) and not isinstance(s, bool) for s in sp
    ):
        _fail(name, '"special_values" must be a list of numbers')
    default = entry.get("default")
    if kind == REAL:
        lo, hi = float(entry["min"]), float(entry["max"])
        sp = tuple(float(s) for s in sp)
        default = float(default) if isinstance(default, (int, float)) else default
    else:
        lo, hi = entry["min"], entry["max"]
        sp = tuple(sp)
    return KnobSpec(name=name, kind=kind, min=lo, max=hi,
                    special_values=sp, default=default)


def _knob_to_json(knob: KnobSpec) -> dict:
    entry: dict = {"name": knob.name, "type": _KIND_NAMES[knob.kind]}
    if knob.kind == CATEGORICAL:
        entry["choices"] = list(knob.choices)
    else:
        entry["min"] = knob.min
        entry["max"] = knob.max
        if knob.special_values:
            entry["special_values"] = list(knob.special_values)
    entry["default"] = knob.default
    return entry


def serialize_space(space: ConfigSpace, path) -> None:
    """Write a space back out in the catalog schema (round-trip stable)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(space.to_json_dict(), fh, indent=2)
        fh.write("\n")


def builtin_space_path(name: str) -> str:
    """Filesystem path of a catalog shipped with the package.

    Available: "postgres96" (90 knobs, 17 hybrid) and "postgres96_mini"
    (5-knob demo subset).
    """
    ref = resources.files("knobtune.spaces").joinpath(f"{name}.json")
    if not ref.is_file():
        raise SpaceError(f"no builtin space named {name!r}")
    return str(ref)
