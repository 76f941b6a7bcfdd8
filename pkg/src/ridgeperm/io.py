"""CSV ingestion, scenario config files and result serialisation."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import InputError, MissingColumn, NonFinite, ParseError
from .methods import Method, MethodSpec
from .perm import TransformKind
from .presets import get_preset
from .sim import Design, ErrorLaw, Mode, Scenario


def ingest_csv(
    path,
    outcome: str,
    interest: list[str],
    nuisance: list[str] | None = None,
    standardize: bool = False,
) -> Dataset:
    """Read a numeric CSV with a header row into a centred :class:`Dataset`.

    Columns not named as outcome or interest are nuisance unless ``nuisance``
    lists them explicitly.
    """
    interest = list(interest)
    if not interest:
        raise InputError("name at least one covariate of interest")
    if outcome in interest:
        raise InputError(f"column {outcome!r} is both outcome and covariate of interest")
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8: {exc.reason}") from None
    if not rows:
        raise ParseError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise ParseError(f"{path}: duplicate column names in header")
    index = {name: i for i, name in enumerate(header)}
    for name in [outcome, *interest, *(nuisance or [])]:
        if name not in index:
            raise MissingColumn(f"column {name!r} not found in header of {path}")
    if nuisance is None:
        taken = {outcome, *interest}
        nuisance = [h for h in header if h not in taken]
    elif set(nuisance) & {outcome, *interest}:
        raise InputError("nuisance columns overlap outcome or interest columns")
    if not nuisance:
        raise InputError("no nuisance columns left after removing outcome and interest")

    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise ParseError(f"{path}: data row {i + 1} has {len(row)} cells, header has {len(header)}")
        for j, cell in enumerate(row):
            values[i, j] = _parse_cell(cell, i + 1, header[j], path)

    def cols(names):
        return values[:, [index[c] for c in names]]

    return Dataset.from_arrays(
        values[:, index[outcome]],
        cols(interest),
        cols(nuisance),
        standardize=standardize,
        x_names=interest,
    )


def _parse_cell(cell: str, row: int, column: str, path) -> float:
    text = cell.strip()
    if not text:
        raise ParseError(f"{path}: blank cell at data row {row}, column {column!r}")
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{path}: cannot parse {text!r} at data row {row}, column {column!r}") from None
    if not math.isfinite(value):
        raise NonFinite(f"{path}: non-finite value {text!r} at data row {row}, column {column!r}")
    return value


def write_csv(path, data: Dataset, outcome: str = "y", interest=None, nuisance=None) -> None:
    """Write a dataset back out with full float precision."""
    interest = list(interest or data.x_names or [f"x{k + 1}" for k in range(data.d)])
    nuisance = list(nuisance or [f"z{k + 1}" for k in range(data.q)])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([outcome, *interest, *nuisance])
        for i in range(data.n):
            writer.writerow([repr(float(v)) for v in (data.y[i], *data.X[i], *data.Z[i])])


def format_number(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def to_json(record: dict) -> str:
    """Flat JSON object; floats carry 17 significant digits."""
    import json

    parts = []
    for key, value in record.items():
        token = json.dumps(value) if isinstance(value, str) else format_number(value)
        parts.append(f"{json.dumps(key)}: {token}")
    return "{" + ", ".join(parts) + "}\n"


def to_tsv(record: dict) -> str:
    cells = [v if isinstance(v, str) else format_number(v) for v in record.values()]
    return "\t".join(record) + "\n" + "\t".join(cells) + "\n"


# -- scenario files ---------------------------------------------------------

_INT_KEYS = {"n", "d", "q", "reps", "w", "seed", "master_seed", "folds"}
_LIST_KEYS = {"beta", "gamma", "alphas", "power_beta", "clusters"}


def parse_list(text: str) -> list[float]:
    """Comma-separated numbers; ``v*k`` repeats ``v`` k times."""
    out: list[float] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        value, star, count = token.partition("*")
        try:
            reps = int(count) if star else 1
            out.extend([float(value)] * reps)
        except ValueError:
            raise ParseError(f"cannot parse list item {token!r}") from None
    return out


def read_scenario_file(path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ParseError(f"{path}:{lineno}: expected 'key = value'")
        entries[key.strip()] = value.strip()
    return entries


def _methods_from(text: str, psi: str, kind: TransformKind) -> tuple[MethodSpec, ...]:
    specs = []
    for name in (t.strip() for t in text.split(",") if t.strip()):
        try:
            method = Method(name)
        except ValueError:
            raise ParseError(f"unknown method {name!r}; choose from {[m.value for m in Method]}") from None
        col = None if method is Method.FLHD_NPC else 0
        specs.append(MethodSpec(method, psi=psi, col=col, kind=kind))
    return tuple(specs)


def build_scenario(entries: dict[str, str]) -> Scenario:
    """Turn ``key = value`` entries (from a file or CLI overrides) into a Scenario.

    A ``preset`` entry supplies defaults; the remaining keys override them.
    """
    entries = dict(entries)
    mode = entries.pop("mode", None)
    base = entries.pop("preset", None)
    fields: dict = {}
    try:
        for key, value in entries.items():
            if key in _INT_KEYS:
                fields["master_seed" if key == "seed" else key] = int(value)
            elif key in _LIST_KEYS:
                fields[key] = tuple(parse_list(value))
            elif key in ("rho", "error_law", "methods", "psi", "kind", "name"):
                fields[key] = value
            else:
                raise ParseError(f"unknown scenario key {key!r}")
    except ValueError as exc:
        raise ParseError(f"bad scenario value: {exc}") from None

    kind_text = fields.pop("kind", "permutation")
    kind = TransformKind("sign_flip" if kind_text in ("flip", "sign_flip") else kind_text)
    psi = fields.pop("psi", "max_abs")
    rho = fields.pop("rho", None)
    clusters = fields.pop("clusters", None)
    if "error_law" in fields:
        fields["error_law"] = ErrorLaw(fields["error_law"])
    if "methods" in fields:
        fields["methods"] = _methods_from(fields["methods"], psi, kind)
    beta = fields.pop("beta", None)
    if base is not None:
        scenario = get_preset(base, **fields)
    else:
        fields.setdefault("name", "custom")
        scenario = Scenario(**fields)
    if rho is not None or clusters is not None:
        design = Design(
            float(rho) if rho is not None else scenario.design.rho,
            tuple(int(c) for c in clusters) if clusters is not None else scenario.design.sizes,
        )
        scenario = scenario.with_(design=design)
    if kind is not TransformKind.PERMUTATION and "methods" not in fields:
        scenario = scenario.with_(methods=tuple(m.with_(kind=kind) for m in scenario.methods))
    # an explicit effect beats the mode's default effect
    if beta is not None:
        return scenario.with_(beta=beta)
    if mode is not None:
        scenario = scenario.for_mode(Mode(mode))
    return scenario
