"""Flow-record datasets: the 27-attribute schema, CSV I/O, label encoding,
and a seeded synthetic corpus generator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

CONTINUOUS = "continuous"
SYMBOLIC = "symbolic"

# Attribute order is part of the on-disk contract and must not change.
# FLAGS and the two node-name columns carry free-form strings; every other
# column must parse to a finite float.
_FEATURE_TABLE: tuple[tuple[str, str], ...] = (
    ("SRC_ADD", CONTINUOUS),
    ("DES_ADD", CONTINUOUS),
    ("PKT_ID", CONTINUOUS),
    ("FROM_NODE", CONTINUOUS),
    ("TO_NODE", CONTINUOUS),
    ("PKT_TYPE", CONTINUOUS),
    ("PKT_SIZE", CONTINUOUS),
    ("FLAGS", SYMBOLIC),
    ("FID", CONTINUOUS),
    ("SEQ_NUMBER", CONTINUOUS),
    ("NUMBER_OF_PKT", CONTINUOUS),
    ("NUMBER_OF_BYTE", CONTINUOUS),
    ("NODE_NAME_FROM", SYMBOLIC),
    ("NODE_NAME_TO", SYMBOLIC),
    ("PKT_IN", CONTINUOUS),
    ("PKT_OUT", CONTINUOUS),
    ("PKTR", CONTINUOUS),
    ("PKT_DELAY_NODE", CONTINUOUS),
    ("PKT_RATE", CONTINUOUS),
    ("BYTE_RATE", CONTINUOUS),
    ("PKT_AVG_SIZE", CONTINUOUS),
    ("UTILIZATION", CONTINUOUS),
    ("PKT_DELAY", CONTINUOUS),
    ("PKT_SEND_TIME", CONTINUOUS),
    ("PKT_RESERVED_TIME", CONTINUOUS),
    ("FIRST_PKT_SENT", CONTINUOUS),
    ("LAST_PKT_RESERVED", CONTINUOUS),
)

N_FEATURES = len(_FEATURE_TABLE)

# Class codes are fixed by this order; every label vector uses them.
CLASS_NAMES = ("Normal", "UDP-Flood", "Smurf", "SIDDOS", "HTTP-Flood")
CLASS_CODES = {name: code for code, name in enumerate(CLASS_NAMES)}
N_CLASSES = len(CLASS_NAMES)

# Reference class mix of a large flow capture (~90% normal, ~9% UDP flood,
# thin tail for the rest); the default proportions for synthetic corpora.
REFERENCE_CLASS_COUNTS = (939648, 97521, 6211, 3198, 1997)
DEFAULT_CLASS_PROPORTIONS = tuple(
    c / sum(REFERENCE_CLASS_COUNTS) for c in REFERENCE_CLASS_COUNTS
)

# Accepted names for the trailing class column, matched case-insensitively.
LABEL_COLUMN_ALIASES = ("pkt_class", "class", "label")


class SchemaError(ValueError):
    """CSV header does not match the 27-attribute schema."""


class ParseError(ValueError):
    """A cell could not be parsed to its declared kind."""


class LabelError(ValueError):
    """A class cell holds an unknown label."""


class EncodingError(ValueError):
    """A symbolic cell holds a category the encoder has never seen."""


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    kind: str


@dataclass(frozen=True)
class FeatureSchema:
    """The fixed 27-column flow-record layout.

    Only the canonical attribute list is valid; constructing a schema with
    different names, kinds, or ordering raises SchemaError.
    """

    features: tuple[FeatureDescriptor, ...]

    def __post_init__(self):
        expected = tuple(FeatureDescriptor(n, k) for n, k in _FEATURE_TABLE)
        if self.features != expected:
            raise SchemaError(
                "feature schema must list the 27 canonical flow attributes in order"
            )

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @property
    def symbolic_indices(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.features) if f.kind == SYMBOLIC)

    @property
    def continuous_indices(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.features) if f.kind == CONTINUOUS)


def flow_schema() -> FeatureSchema:
    """Return the canonical 27-attribute schema."""
    return FeatureSchema(tuple(FeatureDescriptor(n, k) for n, k in _FEATURE_TABLE))


@dataclass(frozen=True)
class FlowRecord:
    """One flow record: 27 cells in schema order plus an optional class name."""

    values: tuple[float | str, ...]
    label: str | None = None


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of flow records validated against a schema."""

    schema: FeatureSchema
    records: tuple[FlowRecord, ...]

    def __post_init__(self):
        symbolic = set(self.schema.symbolic_indices)
        labelled = 0
        for r, rec in enumerate(self.records):
            if len(rec.values) != len(self.schema):
                raise SchemaError(
                    f"record {r}: expected {len(self.schema)} cells, got {len(rec.values)}"
                )
            for i, cell in enumerate(rec.values):
                if i in symbolic:
                    if not isinstance(cell, str):
                        raise ParseError(f"record {r}, column {self.schema.names[i]!r}: "
                                         f"expected a string, got {type(cell).__name__}")
                else:
                    if isinstance(cell, str) or not math.isfinite(cell):
                        raise ParseError(f"record {r}, column {self.schema.names[i]!r}: "
                                         f"expected a finite number, got {cell!r}")
            if rec.label is not None:
                if rec.label not in CLASS_CODES:
                    raise LabelError(f"record {r}: unknown class {rec.label!r}")
                labelled += 1
        if labelled not in (0, len(self.records)):
            raise LabelError("dataset mixes labelled and unlabelled records")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def has_labels(self) -> bool:
        return len(self.records) > 0 and self.records[0].label is not None


def load_csv(path, schema: FeatureSchema | None = None,
             require_label: bool = True) -> Dataset:
    """Load a flow-record CSV.

    The header must contain exactly the 27 schema columns (any order,
    case-insensitive) plus one class column named PKT_CLASS, class, or label.
    The class column may be omitted only when ``require_label`` is False.
    Row numbers in error messages are 1-based data rows.

    Args:
        path: CSV file path.
        schema: feature layout; defaults to the canonical schema.
        require_label: whether the class column must be present.

    Returns:
        Dataset preserving file row order.

    Raises:
        SchemaError: missing, extra, or duplicated columns.
        ParseError: a continuous cell is not a finite number, or a row has
            the wrong number of cells.
        LabelError: a class cell is not one of the five known labels.
        FileNotFoundError: the path does not exist.
    """
    schema = schema or flow_schema()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [cell.strip() for cell in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header row") from None

        lowered = [h.lower() for h in header]
        seen: set[str] = set()
        for h in lowered:
            if h in seen:
                raise SchemaError(f"duplicated column {h!r}")
            seen.add(h)

        positions: dict[str, int] = {h: i for i, h in enumerate(lowered)}
        feature_pos = []
        for name in schema.names:
            if name.lower() not in positions:
                raise SchemaError(f"missing column {name!r}")
            feature_pos.append(positions[name.lower()])

        label_hits = [a for a in LABEL_COLUMN_ALIASES if a in positions]
        if len(label_hits) > 1:
            raise SchemaError(f"multiple class columns: {', '.join(label_hits)}")
        if not label_hits and require_label:
            raise SchemaError(
                "missing class column (expected one of PKT_CLASS, class, label)"
            )
        label_pos = positions[label_hits[0]] if label_hits else None

        used = set(feature_pos)
        if label_pos is not None:
            used.add(label_pos)
        for i, h in enumerate(header):
            if i not in used:
                raise SchemaError(f"unexpected column {h!r}")

        symbolic = set(schema.symbolic_indices)
        records = []
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ParseError(
                    f"row {row_no}: expected {len(header)} cells, found {len(row)}"
                )
            cells: list[float | str] = []
            for feat_idx, pos in enumerate(feature_pos):
                cell = row[pos].strip()
                if feat_idx in symbolic:
                    cells.append(cell)
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"row {row_no}, column {schema.names[feat_idx]!r}: "
                        f"not a number: {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise ParseError(
                        f"row {row_no}, column {schema.names[feat_idx]!r}: "
                        f"not finite: {cell!r}"
                    )
                cells.append(value)
            label = None
            if label_pos is not None:
                label = row[label_pos].strip()
                if label not in CLASS_CODES:
                    raise LabelError(f"row {row_no}: unknown class {label!r}")
            records.append(FlowRecord(tuple(cells), label))

    return Dataset(schema, tuple(records))


def save_csv(ds: Dataset, path) -> None:
    """Write a dataset back to CSV in schema order.

    Continuous cells are written with shortest round-trip float formatting,
    so loading the file again reproduces the stored values exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = list(ds.schema.names)
        if ds.has_labels:
            header.append("PKT_CLASS")
        writer.writerow(header)
        for rec in ds.records:
            row = [cell if isinstance(cell, str) else repr(cell) for cell in rec.values]
            if ds.has_labels:
                row.append(rec.label)
            writer.writerow(row)


def check_duplicates(ds: Dataset) -> int:
    """Count records identical (all cells and label) to an earlier record."""
    seen: set[FlowRecord] = set()
    duplicates = 0
    for rec in ds.records:
        if rec in seen:
            duplicates += 1
        else:
            seen.add(rec)
    return duplicates


@dataclass(frozen=True)
class LabelEncoder:
    """Per-column category-to-code maps for the symbolic attributes.

    Codes are assigned by lexicographic category order, so the encoding
    depends only on the set of categories, never on row order.
    """

    mapping: dict[str, dict[str, int]]
    fitted: bool = True

    def encode_value(self, column: str, value: str) -> int:
        try:
            return self.mapping[column][value]
        except KeyError:
            raise EncodingError(
                f"column {column!r}: unseen category {value!r}"
            ) from None

    def decode_value(self, column: str, code: int) -> str:
        for category, c in self.mapping[column].items():
            if c == code:
                return category
        raise EncodingError(f"column {column!r}: no category with code {code}")

    def categories(self, column: str) -> tuple[str, ...]:
        return tuple(self.mapping[column])


def fit_encoder(ds: Dataset) -> LabelEncoder:
    """Build a label encoder from every symbolic column of the dataset."""
    if len(ds) == 0:
        raise ValueError("cannot fit an encoder on an empty dataset")
    mapping: dict[str, dict[str, int]] = {}
    for idx in ds.schema.symbolic_indices:
        name = ds.schema.names[idx]
        categories = sorted({rec.values[idx] for rec in ds.records})
        mapping[name] = {category: code for code, category in enumerate(categories)}
    return LabelEncoder(mapping)


def encode(ds: Dataset, encoder: LabelEncoder) -> tuple[np.ndarray, np.ndarray | None]:
    """Turn a dataset into a numeric feature matrix and label vector.

    Continuous cells pass through numerically unchanged; symbolic cells are
    replaced by their encoder codes. Row count and order are preserved.

    Args:
        ds: validated dataset.
        encoder: fitted encoder covering every category present.

    Returns:
        (X, y): float64 matrix of shape (n, 27), and int64 class codes, or
        None for y when the dataset carries no labels.

    Raises:
        EncodingError: a symbolic cell holds a category unknown to the encoder.
        ValueError: the encoder is not fitted.
    """
    if not encoder.fitted:
        raise ValueError("encoder is not fitted")
    symbolic = set(ds.schema.symbolic_indices)
    names = ds.schema.names
    X = np.empty((len(ds), len(ds.schema)), dtype=np.float64)
    for r, rec in enumerate(ds.records):
        for i, cell in enumerate(rec.values):
            if i in symbolic:
                X[r, i] = encoder.encode_value(names[i], cell)
            else:
                X[r, i] = cell
    if not ds.has_labels:
        return X, None
    y = np.array([CLASS_CODES[rec.label] for rec in ds.records], dtype=np.int64)
    return X, y


@dataclass(frozen=True)
class ClassDistribution:
    """Per-class record counts and fractions over the five class codes."""

    counts: tuple[int, ...]
    fractions: tuple[float, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)


def class_distribution(y) -> ClassDistribution:
    """Count class codes; fractions are zero for an empty vector."""
    y = np.asarray(y, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= N_CLASSES):
        raise ValueError(f"class codes must lie in [0, {N_CLASSES})")
    counts = np.bincount(y, minlength=N_CLASSES)
    total = int(counts.sum())
    if total == 0:
        fractions = (0.0,) * N_CLASSES
    else:
        fractions = tuple(int(c) / total for c in counts)
    return ClassDistribution(tuple(int(c) for c in counts), fractions)


# Per-class pools for the three symbolic columns of synthetic corpora.
# Distinct pools per class keep the symbolic attributes informative.
_FLAGS_POOLS = (("ack", "psh"), ("udp", "---"), ("icmp", "echo"),
                ("sql", "query"), ("get", "post"))
_NODE_FROM_POOLS = (("client1", "client2"), ("bot1", "bot2"), ("spoof1", "spoof2"),
                    ("web1", "web2"), ("proxy1", "proxy2"))
_NODE_TO_POOLS = (("server1", "server2"), ("victim1", "victim2"), ("bcast1", "bcast2"),
                  ("db1", "db2"), ("edge1", "edge2"))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def generate_synthetic(n: int, proportions=None, separation: float = 6.0,
                       seed: int = 0) -> Dataset:
    """Generate a deterministic synthetic flow corpus.

    Continuous attributes form one isotropic unit-variance Gaussian cluster
    per class; class means are pairwise ``separation`` apart. Symbolic
    attributes are drawn from small per-class category pools. Records are
    grouped by class code in the returned dataset.

    Per-class counts are round(n * fraction) (half-up), with the residual
    after rounding added to the Normal class so counts sum to n.

    Args:
        n: total record count, at least 5.
        proportions: five non-negative fractions summing to 1; defaults to
            the heavily imbalanced reference mix.
        separation: pairwise distance between class means, positive.
        seed: RNG seed; identical seeds give bit-identical datasets.

    Returns:
        Labelled dataset of exactly n records.
    """
    if n < 5:
        raise ValueError("n must be at least 5")
    if separation <= 0:
        raise ValueError("separation must be positive")
    if proportions is None:
        proportions = DEFAULT_CLASS_PROPORTIONS
    proportions = tuple(float(p) for p in proportions)
    if len(proportions) != N_CLASSES:
        raise ValueError(f"expected {N_CLASSES} proportions, got {len(proportions)}")
    if any(p < 0 for p in proportions):
        raise ValueError("proportions must be non-negative")
    if abs(sum(proportions) - 1.0) > 1e-9:
        raise ValueError("proportions must sum to 1")

    counts = [_round_half_up(n * p) for p in proportions]
    counts[0] += n - sum(counts)
    if counts[0] < 0:
        raise ValueError("proportions round to more than n records")

    schema = flow_schema()
    continuous = schema.continuous_indices
    symbolic = schema.symbolic_indices
    flags_idx, node_from_idx, node_to_idx = symbolic

    rs = np.random.RandomState(seed)
    # Class means sit on distinct axes at separation/sqrt(2), which puts every
    # pair of means exactly `separation` apart.
    offset = separation / math.sqrt(2.0)

    records = []
    for code, count in enumerate(counts):
        mean = np.zeros(len(continuous))
        mean[code] = offset
        points = rs.normal(loc=mean, scale=1.0, size=(count, len(continuous)))
        flags = rs.randint(0, len(_FLAGS_POOLS[code]), size=count)
        froms = rs.randint(0, len(_NODE_FROM_POOLS[code]), size=count)
        tos = rs.randint(0, len(_NODE_TO_POOLS[code]), size=count)
        for r in range(count):
            cells: list[float | str] = [0.0] * len(schema)
            for k, idx in enumerate(continuous):
                cells[idx] = float(points[r, k])
            cells[flags_idx] = _FLAGS_POOLS[code][flags[r]]
            cells[node_from_idx] = _NODE_FROM_POOLS[code][froms[r]]
            cells[node_to_idx] = _NODE_TO_POOLS[code][tos[r]]
            records.append(FlowRecord(tuple(cells), CLASS_NAMES[code]))

    return Dataset(schema, tuple(records))
