"""Class-labelled feature banks: validation, binary/CSV i/o, synthesis, concatenation.

On-disk binary format (little-endian), extension ``.fsb``:

    magic   4 bytes   b"FSB1"
    version u32       1
    n       u64       number of samples
    d       u64       feature dimension
    classes u64       number of distinct class ids
    raw     u8        1 if all features are nonnegative (post-ReLU style)
    labels  n x u32   per-sample class id
    payload n*d x f32 features, row-major

The payload is stored as 32-bit floats; in memory everything is float64.
A CSV import path also exists: header ``label,f0,...,f{d-1}``, one row per
sample.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BankFormatError, ValidationError
from .rng import bulk_exponential, bulk_normal

_MAGIC = b"FSB1"
_VERSION = 1
_HEADER = struct.Struct("<4sIQQQB")


@dataclass(frozen=True)
class FeatureBank:
    """Immutable matrix of labelled feature vectors.

    ``features`` is (n, d) float64 with all values finite; ``labels`` holds a
    class id in [0, num_classes) for every row, and every class id has at
    least one sample. A bank flagged ``raw`` contains only nonnegative values
    and is eligible for the power transform.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    raw: bool = False

    def __post_init__(self):
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        labels = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64))
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise ValidationError(f"features must be a nonempty 2-D matrix, got shape {feats.shape}")
        if labels.shape != (feats.shape[0],):
            raise ValidationError(f"labels shape {labels.shape} does not match {feats.shape[0]} samples")
        bad = np.flatnonzero(~np.isfinite(feats).all(axis=1))
        if bad.size:
            raise ValidationError(f"non-finite feature value at row {bad[0]}")
        if self.num_classes < 1:
            raise ValidationError("num_classes must be >= 1")
        out_of_range = np.flatnonzero((labels < 0) | (labels >= self.num_classes))
        if out_of_range.size:
            r = out_of_range[0]
            raise ValidationError(f"label {labels[r]} out of range [0, {self.num_classes}) at row {r}")
        counts = np.bincount(labels, minlength=self.num_classes)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise ValidationError(f"class {empty[0]} has no samples")
        if self.raw and (feats < 0).any():
            r = np.flatnonzero((feats < 0).any(axis=1))[0]
            raise ValidationError(f"bank flagged raw but row {r} has a negative value")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def class_indices(self, class_id: int) -> np.ndarray:
        return np.flatnonzero(self.labels == class_id)


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic bank standing in for backbone features.

    Class means are ``center_scale * relu(z)`` with z standard normal, drawn
    per class and feature; samples add within-class noise of standard
    deviation ``noise_scale``. ``skew_mode`` selects the noise law:
    ``"gaussian"`` (symmetric, may go negative) or ``"exponential"``
    (right-skewed, nonnegative, mimicking post-ReLU activations).
    """

    w_classes: int
    per_class: int
    d: int
    center_scale: float = 1.0
    noise_scale: float = 1.0
    skew_mode: str = "exponential"
    seed: int = 0

    def __post_init__(self):
        if self.w_classes < 1:
            raise ValidationError("w_classes must be >= 1")
        if self.per_class < 1:
            raise ValidationError("per_class must be >= 1")
        if self.d < 1:
            raise ValidationError("d must be >= 1")
        if not self.center_scale >= 0:
            raise ValidationError("center_scale must be nonnegative")
        if not self.noise_scale > 0:
            raise ValidationError("noise_scale must be positive")
        if self.skew_mode not in ("gaussian", "exponential"):
            raise ValidationError(f"unknown skew_mode {self.skew_mode!r}")


def synth_bank(spec: SynthSpec) -> FeatureBank:
    """Generate a deterministic synthetic bank from ``spec``.

    Stream layout (raw SplitMix64 outputs of ``spec.seed``): the first
    ``2*w*d`` feed the class-center normals, the remainder the noise block.
    Samples are grouped by class: rows [j*per_class, (j+1)*per_class) hold
    class j. The payload is quantized to float32 so that a save/load
    round-trip is bit-exact.
    """
    w, m, d = spec.w_classes, spec.per_class, spec.d
    n = w * m
    center_z = bulk_normal(spec.seed, w * d, offset=0).reshape(w, d)
    centers = spec.center_scale * np.maximum(center_z, 0.0)
    labels = np.repeat(np.arange(w, dtype=np.int64), m)
    noise_offset = 2 * w * d
    if spec.skew_mode == "gaussian":
        noise = bulk_normal(spec.seed, n * d, offset=noise_offset).reshape(n, d)
    else:
        noise = bulk_exponential(spec.seed, n * d, offset=noise_offset).reshape(n, d)
    feats = centers[labels] + spec.noise_scale * noise
    feats = feats.astype(np.float32).astype(np.float64)
    return FeatureBank(feats, labels, num_classes=w, raw=spec.skew_mode == "exponential")


def save_bank(bank: FeatureBank, path) -> None:
    """Write ``bank`` to ``path`` in the binary format. Deterministic: two
    saves of the same bank are byte-identical."""
    header = _HEADER.pack(_MAGIC, _VERSION, bank.n, bank.d, bank.num_classes, 1 if bank.raw else 0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(bank.labels.astype("<u4").tobytes())
        fh.write(bank.features.astype("<f4").tobytes())


def load_bank(path) -> FeatureBank:
    """Read a bank from the binary format, validating every invariant.

    Raises :class:`BankFormatError` for structural problems (magic, version,
    truncation, trailing bytes) and :class:`ValidationError` for bad content
    (out-of-range labels, non-finite values), citing the offending row.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise BankFormatError(f"truncated header: need {_HEADER.size} bytes, got {len(blob)}")
    magic, version, n, d, num_classes, raw_flag = _HEADER.unpack_from(blob, 0)
    if magic != _MAGIC:
        raise BankFormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise BankFormatError(f"unsupported version {version}, expected {_VERSION}")
    if n < 1 or d < 1:
        raise BankFormatError(f"empty bank rejected (n={n}, d={d})")
    labels_off = _HEADER.size
    feats_off = labels_off + 4 * n
    end = feats_off + 4 * n * d
    if len(blob) < end:
        raise BankFormatError(f"truncated file: expected {end} bytes, got {len(blob)} (payload starts at offset {labels_off})")
    if len(blob) > end:
        raise BankFormatError(f"trailing data: expected {end} bytes, got {len(blob)}")
    labels = np.frombuffer(blob, dtype="<u4", count=n, offset=labels_off).astype(np.int64)
    feats = np.frombuffer(blob, dtype="<f4", count=n * d, offset=feats_off).astype(np.float64).reshape(n, d)
    return FeatureBank(feats, labels, num_classes=num_classes, raw=bool(raw_flag))


def load_bank_csv(path) -> FeatureBank:
    """Import a bank from CSV with header ``label,f0,...,f{d-1}``.

    The class count is inferred as ``max(label) + 1`` and the raw flag is set
    when every value is nonnegative. Values are quantized to float32 to match
    the binary payload precision.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise BankFormatError("empty CSV file") from None
        d = len(header) - 1
        expected = ["label"] + [f"f{i}" for i in range(d)]
        if d < 1 or header != expected:
            raise BankFormatError(f"bad CSV header {header[:4]}..., expected label,f0,...,f{{d-1}}")
        labels, rows = [], []
        for lineno, row in enumerate(reader, start=1):
            if len(row) != d + 1:
                raise BankFormatError(f"row {lineno}: expected {d + 1} fields, got {len(row)}")
            try:
                labels.append(int(row[0]))
                rows.append([float(x) for x in row[1:]])
            except ValueError as exc:
                raise BankFormatError(f"row {lineno}: {exc}") from None
    if not rows:
        raise BankFormatError("CSV contains no sample rows")
    feats = np.asarray(rows, dtype=np.float32).astype(np.float64)
    labels_arr = np.asarray(labels, dtype=np.int64)
    if labels_arr.min(initial=0) < 0:
        raise ValidationError(f"negative label at row {np.flatnonzero(labels_arr < 0)[0]}")
    num_classes = int(labels_arr.max()) + 1
    return FeatureBank(feats, labels_arr, num_classes=num_classes, raw=bool((feats >= 0).all()))


def open_bank(path) -> FeatureBank:
    """Load a bank from either format, sniffing the binary magic first."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == _MAGIC:
        return load_bank(path)
    return load_bank_csv(path)


def concat_banks(a: FeatureBank, b: FeatureBank) -> FeatureBank:
    """Feature-wise concatenation: row i of the result is a's row i followed
    by b's row i. Requires identical label sequences and class counts."""
    if a.n != b.n:
        raise ValidationError(f"sample count mismatch: {a.n} vs {b.n}")
    if a.num_classes != b.num_classes:
        raise ValidationError(f"class count mismatch: {a.num_classes} vs {b.num_classes}")
    if not np.array_equal(a.labels, b.labels):
        raise ValidationError("label sequences differ; banks must be row-aligned")
    feats = np.hstack([a.features, b.features])
    return FeatureBank(feats, a.labels.copy(), num_classes=a.num_classes, raw=a.raw and b.raw)
