"""Domain types: constellations, bit labels, and channel parameters."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

SCHEMA_VERSION = "phasecon-v1"

# Relative tolerance for detecting tied nearest-neighbour distances.
GRAY_TIE_RTOL = 1e-9


class ConstellationError(ValueError):
    """Invalid constellation content (sizes, labels, degenerate points)."""


class FormatError(ValueError):
    """Malformed constellation file or schema violation."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def gray_code(index: int) -> int:
    """Binary-reflected Gray code of a non-negative integer."""
    if index < 0:
        raise ValueError(f"index must be non-negative, got {index}")
    return index ^ (index >> 1)


@dataclass(frozen=True)
class LabelBits:
    """An m-bit label value attached to one constellation point."""

    value: int
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ConstellationError(f"label width must be >= 1, got {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise ConstellationError(
                f"label value {self.value} does not fit in {self.width} bits"
            )

    def bit(self, position: int) -> int:
        """Bit at `position` (0 = least significant)."""
        if not 0 <= position < self.width:
            raise ConstellationError(f"bit position {position} out of range")
        return (self.value >> position) & 1


def hamming_distance(a: LabelBits, b: LabelBits) -> int:
    """Number of bit positions in which two equal-width labels differ."""
    if a.width != b.width:
        raise ConstellationError(
            f"label widths differ: {a.width} vs {b.width}"
        )
    return (a.value ^ b.value).bit_count()


@dataclass(frozen=True, eq=False)
class Constellation:
    """Immutable set of M = 2^m complex points with a bijective m-bit labeling.

    ``labels[i]`` is the integer whose m-bit pattern labels ``points[i]``.
    Instances are value objects; all operations return new instances.
    Use :func:`make_constellation` to construct with validation.
    """

    points: np.ndarray
    labels: np.ndarray
    m: int

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.complex128)
        labs = np.array(self.labels, dtype=np.int64)
        pts.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Constellation):
            return NotImplemented
        return (
            self.m == other.m
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
        )

    @property
    def size(self) -> int:
        return int(self.points.size)

    def average_power(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    def is_normalized(self, tol: float = 1e-8) -> bool:
        return abs(self.average_power() - 1.0) <= tol

    def label_bits(self, index: int) -> LabelBits:
        return LabelBits(int(self.labels[index]), self.m)

    def fingerprint(self) -> str:
        """Stable short hash of the serialized points and labels."""
        parts = [str(self.m)]
        parts += [f"{p.real:.17g},{p.imag:.17g}" for p in self.points]
        parts += [str(int(v)) for v in self.labels]
        digest = hashlib.sha256(";".join(parts).encode("ascii")).hexdigest()
        return digest[:16]


def make_constellation(points, labels) -> Constellation:
    """Validate and build a constellation.

    Args:
        points: sequence of M complex points, M = 2^m with m >= 1.
        labels: sequence of M integers forming a permutation of 0..M-1.

    Raises:
        ConstellationError: size not a power of two, repeated point,
            or labels not a permutation.
    """
    pts = np.asarray(points, dtype=np.complex128)
    labs = np.asarray(labels, dtype=np.int64)
    if pts.ndim != 1 or labs.ndim != 1:
        raise ConstellationError("points and labels must be one-dimensional")
    if pts.size != labs.size:
        raise ConstellationError(
            f"points ({pts.size}) and labels ({labs.size}) differ in length"
        )
    n = int(pts.size)
    if n < 2 or not _is_power_of_two(n):
        raise ConstellationError(f"constellation size must be 2^m with m >= 1, got {n}")
    if not np.all(np.isfinite(pts.view(np.float64))):
        raise ConstellationError("constellation points must be finite")
    if np.unique(pts).size != n:
        raise ConstellationError("duplicate constellation point")
    if not np.array_equal(np.sort(labs), np.arange(n)):
        raise ConstellationError("labels must be a permutation of 0..M-1")
    return Constellation(points=pts, labels=labs, m=n.bit_length() - 1)


def normalize_average_power(c: Constellation) -> Constellation:
    """Rescale so the average symbol power (1/M) sum |x_i|^2 equals 1."""
    power = c.average_power()
    if power <= 0.0:
        raise ConstellationError("cannot normalize an all-zero constellation")
    scale = 1.0 / math.sqrt(power)
    return Constellation(points=c.points * scale, labels=c.labels, m=c.m)


def is_gray(c: Constellation, rtol: float = GRAY_TIE_RTOL) -> bool:
    """True when every minimum-distance neighbour pair differs in one bit.

    For each point the nearest-neighbour distance is found over the other
    points; every point within a relative tolerance `rtol` of that distance
    counts as a neighbour (ties included).
    """
    pts = c.points
    n = pts.size
    dist = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(dist, np.inf)
    for i in range(n):
        d_min = dist[i].min()
        neighbours = np.nonzero(dist[i] <= d_min * (1.0 + rtol))[0]
        for j in neighbours:
            if (int(c.labels[i]) ^ int(c.labels[j])).bit_count() != 1:
                return False
    return True


def _square_qam_points(levels_i: int, levels_q: int):
    """Rectangular grid points and per-axis Gray labels, unnormalized."""
    bits_q = levels_q.bit_length() - 1
    points, labels = [], []
    for i in range(levels_i):
        for q in range(levels_q):
            re = 2 * i - levels_i + 1
            im = 2 * q - levels_q + 1
            points.append(complex(re, im))
            labels.append((gray_code(i) << bits_q) | gray_code(q))
    return points, labels


def reference_constellation(kind: str, size: int, ring_spec=None) -> Constellation:
    """Standard unit-power reference constellations.

    Args:
        kind: "psk", "qam", or "apsk".
        size: number of points, a power of two >= 2.
        ring_spec: for "apsk" only, a sequence of (count, radius) pairs
            whose counts sum to `size`.

    PSK carries a binary-reflected Gray labeling; QAM uses per-axis Gray
    labels on a square grid (rectangular for odd bit counts); APSK labels
    each ring as a contiguous block, Gray-coded within the ring when the
    ring count is a power of two.
    """
    if not _is_power_of_two(size) or size < 2:
        raise ConstellationError(f"size must be 2^m with m >= 1, got {size}")
    if kind == "psk":
        idx = np.arange(size)
        points = np.exp(2j * np.pi * idx / size)
        labels = np.array([gray_code(i) for i in idx])
        return make_constellation(points, labels)
    if kind == "qam":
        m = size.bit_length() - 1
        bits_i = (m + 1) // 2
        points, labels = _square_qam_points(1 << bits_i, 1 << (m - bits_i))
        return normalize_average_power(make_constellation(points, labels))
    if kind == "apsk":
        if ring_spec is None:
            raise ConstellationError("apsk requires a ring_spec of (count, radius) pairs")
        counts = [int(n) for n, _ in ring_spec]
        radii = [float(r) for _, r in ring_spec]
        if sum(counts) != size:
            raise ConstellationError(
                f"ring counts sum to {sum(counts)}, expected {size}"
            )
        if any(n < 1 for n in counts) or any(r <= 0 for r in radii):
            raise ConstellationError("ring counts must be >= 1 and radii > 0")
        points, labels = [], []
        base = 0
        for n_ring, radius in zip(counts, radii):
            for p in range(n_ring):
                points.append(radius * np.exp(2j * np.pi * p / n_ring))
                offset = gray_code(p) if _is_power_of_two(n_ring) else p
                labels.append(base + offset)
            base += n_ring
        return normalize_average_power(make_constellation(points, labels))
    raise ConstellationError(f"unsupported constellation kind {kind!r}")


# --- channel parameters ----------------------------------------------------


@dataclass(frozen=True)
class ChannelParams:
    """Noise and phase-jitter concentrations for the memoryless channel.

    ``k_n`` is the reciprocal of the per-dimension Gaussian noise variance;
    ``k_phi`` is the von Mises concentration of the residual phase
    (``math.inf`` selects the jitter-free AWGN limit).  SNR is k_n / 2 for
    unit-average-power input.
    """

    k_n: float
    k_phi: float

    def __post_init__(self):
        if not (math.isfinite(self.k_n) and self.k_n > 0):
            raise ValueError(f"k_n must be positive and finite, got {self.k_n}")
        if math.isnan(self.k_phi) or self.k_phi <= 0:
            raise ValueError(f"k_phi must be positive (or inf), got {self.k_phi}")

    @classmethod
    def from_concentrations(cls, k_n: float, k_phi: float) -> "ChannelParams":
        return cls(k_n=float(k_n), k_phi=float(k_phi))

    @classmethod
    def from_snr_pnsd(cls, snr_db: float, pnsd_deg: float) -> "ChannelParams":
        """Build from SNR in dB and phase-noise standard deviation in degrees."""
        if not math.isfinite(snr_db):
            raise ValueError(f"snr_db must be finite, got {snr_db}")
        if pnsd_deg < 0 or math.isnan(pnsd_deg):
            raise ValueError(f"pnsd_deg must be >= 0, got {pnsd_deg}")
        k_n = 2.0 * 10.0 ** (snr_db / 10.0)
        if pnsd_deg == 0.0:
            return cls(k_n=k_n, k_phi=math.inf)
        sigma_rad = math.radians(pnsd_deg)
        return cls(k_n=k_n, k_phi=1.0 / (sigma_rad * sigma_rad))

    @property
    def has_phase_noise(self) -> bool:
        return math.isfinite(self.k_phi)

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.k_n / 2.0)

    @property
    def a_ratio(self) -> float:
        """k_n / k_phi, the weight of the observation against the prior."""
        return 0.0 if not self.has_phase_noise else self.k_n / self.k_phi

    @property
    def pnsd_rad(self) -> float:
        return 0.0 if not self.has_phase_noise else math.sqrt(1.0 / self.k_phi)

    @property
    def pnsd_deg(self) -> float:
        return math.degrees(self.pnsd_rad)


# --- serialization ---------------------------------------------------------


def _g17(x: float) -> str:
    """Format a float with 17 significant digits (binary64 round-trip safe)."""
    return format(float(x), ".17g")


def constellation_to_json(c: Constellation, meta: dict | None = None) -> str:
    """Serialize to the versioned JSON document, deterministically.

    Point coordinates are written with 17 significant digits so the file
    round-trips bit-exactly.
    """
    rows = ",\n    ".join(f"[{_g17(p.real)}, {_g17(p.imag)}]" for p in c.points)
    labels = ", ".join(str(int(v)) for v in c.labels)
    lines = [
        "{",
        f'  "version": {json.dumps(SCHEMA_VERSION)},',
        f'  "m": {c.m},',
        '  "points": [',
        f"    {rows}",
        "  ],",
        f'  "labels": [{labels}]' + ("," if meta is not None else ""),
    ]
    if meta is not None:
        lines.append(f'  "meta": {json.dumps(meta, sort_keys=True)}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def constellation_from_json(text: str) -> tuple[Constellation, dict]:
    """Parse a constellation document; returns (constellation, meta).

    Raises:
        FormatError: on any schema or content violation.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("document root must be an object")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema version {version!r}")
    for key in ("m", "points", "labels"):
        if key not in doc:
            raise FormatError(f"missing required field {key!r}")
    points_raw = doc["points"]
    if not isinstance(points_raw, list) or not all(
        isinstance(p, list) and len(p) == 2 for p in points_raw
    ):
        raise FormatError("points must be a list of [re, im] pairs")
    try:
        points = np.array([complex(p[0], p[1]) for p in points_raw])
        c = make_constellation(points, doc["labels"])
    except (TypeError, ConstellationError) as exc:
        raise FormatError(f"invalid constellation content: {exc}") from exc
    if c.m != doc["m"]:
        raise FormatError(f"field m={doc['m']} disagrees with {c.size} points")
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise FormatError("meta must be an object")
    return c, meta


def save_constellation(path, c: Constellation, meta: dict | None = None) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(constellation_to_json(c, meta))


def load_constellation(path) -> tuple[Constellation, dict]:
    try:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return constellation_from_json(text)
