"""Decode recorded AIS transmissions into replayable obstacle trajectories.

Supports AIVDM/AIVDO position reports (types 1, 2, 3, 18) and static data
(type 5) per the ITU-R M.1371 6-bit payload layout, plus a plain-CSV
format for authoring scenarios without NMEA. Payload UTC seconds are
ignored; message timestamps come from tag blocks, a receiver log column,
or the CSV.
"""

from __future__ import annotations

import csv
import logging
import math
from array import array
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from . import _kernels
from .geometry import (
    KNOTS_TO_MPS,
    VesselState,
    latlon_to_planar,
    planar_distance,
    vector_heading,
)

log = logging.getLogger(__name__)

SUPPORTED_POSITION_TYPES = frozenset({1, 2, 3, 18})
SUPPORTED_STATIC_TYPES = frozenset({5})

_LON_NA = 181 * 600_000  # 0x6791AC0
_LAT_NA = 91 * 600_000
_SOG_NA = 1023
_COG_NA = 3600


class AisDecodeError(ValueError):
    """Base for undecodable input lines."""


class ChecksumMismatch(AisDecodeError):
    pass


class MalformedSentence(AisDecodeError):
    pass


class PayloadTooShort(AisDecodeError):
    pass


class IncompleteGroup(AisDecodeError):
    pass


class InconsistentGroup(AisDecodeError):
    pass


@dataclass(frozen=True)
class StaticInfo:
    """Vessel identity and dimensions from a type-5 report."""

    name: str
    callsign: str
    ship_type: int
    length_m: float
    beam_m: float
    imo: int


@dataclass(frozen=True)
class AisMessage:
    message_type: int
    mmsi: int
    timestamp: float | None = None  # seconds since scenario epoch
    lat: float | None = None  # decimal degrees, None = not available
    lon: float | None = None
    speed_over_ground: float | None = None  # m/s
    course_over_ground: float | None = None  # degrees true [0, 360)
    static_info: StaticInfo | None = None

    @property
    def position_available(self) -> bool:
        return self.lat is not None and self.lon is not None


@dataclass(frozen=True)
class Fragment:
    """One part of a multipart AIVDM group, awaiting assembly."""

    total: int
    index: int
    seq_id: str
    channel: str
    payload: str
    pad_bits: int
    timestamp: float | None = None


@dataclass(frozen=True)
class Unsupported:
    """Valid sentence whose message type is outside the supported set."""

    message_type: int


@dataclass
class ObstacleTrack:
    """Time-ordered trajectory of one recorded vessel, replayed as a moving obstacle."""

    mmsi: int
    samples: list[VesselState]
    track_id: str = ""
    length_m: float | None = None
    beam_m: float | None = None
    _arrays: tuple[array, array, array] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValueError("a track needs at least one sample")
        for a, b in zip(self.samples, self.samples[1:]):
            if b.time <= a.time:
                raise ValueError("track sample timestamps must be strictly increasing")
        if not self.track_id:
            self.track_id = str(self.mmsi)

    def arrays(self) -> tuple[array, array, array]:
        """(times, xs, ys) as double arrays, built once."""
        if self._arrays is None:
            ts = array("d", (s.time for s in self.samples))
            xs = array("d", (s.x for s in self.samples))
            ys = array("d", (s.y for s in self.samples))
            self._arrays = (ts, xs, ys)
        return self._arrays

    @property
    def start_time(self) -> float:
        return self.samples[0].time

    @property
    def end_time(self) -> float:
        return self.samples[-1].time


# --- sentence decoding ---------------------------------------------------


def _nmea_checksum(body: str) -> int:
    c = 0
    for ch in body:
        c ^= ord(ch)
    return c


def _split_tag_block(line: str) -> tuple[float | None, str]:
    """Strip an optional `\\c:<unix-seconds>*hh\\` tag block prefix."""
    if not line.startswith("\\"):
        return None, line
    end = line.find("\\", 1)
    if end < 0:
        raise MalformedSentence("unterminated tag block")
    block = line[1:end]
    rest = line[end + 1 :]
    star = block.rfind("*")
    if star >= 0:
        block = block[:star]
    timestamp = None
    for part in block.split(","):
        if part.startswith("c:"):
            try:
                timestamp = float(part[2:])
            except ValueError as exc:
                raise MalformedSentence(f"bad tag block timestamp {part!r}") from exc
    return timestamp, rest


def _payload_bits(payload: str) -> tuple[int, int]:
    """6-bit de-armor: returns (value, bit_length)."""
    value = 0
    for ch in payload:
        c = ord(ch)
        if 48 <= c <= 87:
            v = c - 48
        elif 96 <= c <= 119:
            v = c - 56
        else:
            raise MalformedSentence(f"invalid payload character {ch!r}")
        value = (value << 6) | v
    return value, 6 * len(payload)


def _bits(value: int, nbits: int, start: int, length: int) -> int:
    return (value >> (nbits - start - length)) & ((1 << length) - 1)


def _signed(raw: int, length: int) -> int:
    if raw & (1 << (length - 1)):
        return raw - (1 << length)
    return raw


_SIXBIT_ASCII = "@ABCDEFGHIJKLMNOPQRSTUVWXYZ[\\]^_ !\"#$%&'()*+,-./0123456789:;<=>?"


def _sixbit_text(value: int, nbits: int, start: int, length: int) -> str:
    chars = []
    for off in range(start, start + length, 6):
        chars.append(_SIXBIT_ASCII[_bits(value, nbits, off, 6)])
    return "".join(chars).replace("@", "").rstrip()


def _decode_latlon(raw_lon: int, raw_lat: int) -> tuple[float | None, float | None]:
    lon: float | None = None
    lat: float | None = None
    if raw_lon != _LON_NA:
        v = _signed(raw_lon, 28) / 600_000.0
        if -180.0 <= v <= 180.0:
            lon = v
    if raw_lat != _LAT_NA:
        v = _signed(raw_lat, 27) / 600_000.0
        if -90.0 <= v <= 90.0:
            lat = v
    if lon is None or lat is None:
        return None, None
    return lat, lon


def _decode_payload(
    payload: str, pad_bits: int, timestamp: float | None
) -> AisMessage | Unsupported:
    bits, nbits = _payload_bits(payload)
    nbits -= pad_bits
    if nbits < 38:
        raise PayloadTooShort(f"{nbits} bits cannot hold a message header")
    # after pad removal the integer keeps its alignment; field offsets are
    # relative to the full unpadded width
    full = 6 * len(payload)
    mtype = _bits(bits, full, 0, 6)
    mmsi = _bits(bits, full, 8, 30)

    if mtype in (1, 2, 3):
        if nbits < 144:
            raise PayloadTooShort(f"type {mtype} needs 144+ bits, got {nbits}")
        raw_sog = _bits(bits, full, 50, 10)
        raw_lon = _bits(bits, full, 61, 28)
        raw_lat = _bits(bits, full, 89, 27)
        raw_cog = _bits(bits, full, 116, 12)
    elif mtype == 18:
        if nbits < 140:
            raise PayloadTooShort(f"type 18 needs 140+ bits, got {nbits}")
        raw_sog = _bits(bits, full, 46, 10)
        raw_lon = _bits(bits, full, 57, 28)
        raw_lat = _bits(bits, full, 85, 27)
        raw_cog = _bits(bits, full, 112, 12)
    elif mtype == 5:
        if nbits < 420:
            raise PayloadTooShort(f"type 5 needs 420+ bits, got {nbits}")
        name = _sixbit_text(bits, full, 112, 120)
        callsign = _sixbit_text(bits, full, 70, 42)
        ship_type = _bits(bits, full, 232, 8)
        to_bow = _bits(bits, full, 240, 9)
        to_stern = _bits(bits, full, 249, 9)
        to_port = _bits(bits, full, 258, 6)
        to_starboard = _bits(bits, full, 264, 6)
        imo = _bits(bits, full, 40, 30)
        return AisMessage(
            message_type=5,
            mmsi=mmsi,
            timestamp=timestamp,
            static_info=StaticInfo(
                name=name,
                callsign=callsign,
                ship_type=ship_type,
                length_m=float(to_bow + to_stern),
                beam_m=float(to_port + to_starboard),
                imo=imo,
            ),
        )
    else:
        return Unsupported(message_type=mtype)

    lat, lon = _decode_latlon(raw_lon, raw_lat)
    sog = None if raw_sog == _SOG_NA else (raw_sog / 10.0) * KNOTS_TO_MPS
    cog = None if raw_cog >= _COG_NA else raw_cog / 10.0
    return AisMessage(
        message_type=mtype,
        mmsi=mmsi,
        timestamp=timestamp,
        lat=lat,
        lon=lon,
        speed_over_ground=sog,
        course_over_ground=cog,
    )


def decode_sentence(
    line: str, timestamp: float | None = None
) -> AisMessage | Fragment | Unsupported:
    """Decode one NMEA text line.

    Returns an AisMessage for supported single-part sentences, a Fragment
    for parts of multipart groups, or an Unsupported marker for valid
    sentences of other types. A tag-block `\\c:` timestamp overrides the
    timestamp argument.
    """
    tag_time, line = _split_tag_block(line.strip())
    if tag_time is not None:
        timestamp = tag_time
    if not line.startswith("!AIVDM") and not line.startswith("!AIVDO"):
        raise MalformedSentence(f"not an AIVDM/AIVDO sentence: {line[:20]!r}")
    star = line.rfind("*")
    if star < 0 or len(line) < star + 3:
        raise MalformedSentence("missing checksum field")
    try:
        declared = int(line[star + 1 : star + 3], 16)
    except ValueError as exc:
        raise MalformedSentence("unreadable checksum") from exc
    if _nmea_checksum(line[1:star]) != declared:
        raise ChecksumMismatch(
            f"checksum {declared:02X} does not match sentence body"
        )
    fields = line[:star].split(",")
    if len(fields) != 7:
        raise MalformedSentence(f"expected 7 fields, got {len(fields)}")
    try:
        total = int(fields[1])
        index = int(fields[2])
        pad_bits = int(fields[6])
    except ValueError as exc:
        raise MalformedSentence("non-numeric fragment/pad field") from exc
    if total < 1 or not (1 <= index <= total) or not (0 <= pad_bits <= 5):
        raise MalformedSentence("fragment or pad count out of range")
    payload = fields[5]
    if not payload:
        raise PayloadTooShort("empty payload")
    if total > 1:
        return Fragment(
            total=total,
            index=index,
            seq_id=fields[3],
            channel=fields[4],
            payload=payload,
            pad_bits=pad_bits,
            timestamp=timestamp,
        )
    return _decode_payload(payload, pad_bits, timestamp)


def assemble_multipart(fragments: Sequence[Fragment]) -> AisMessage | Unsupported:
    """Concatenate a complete fragment group and decode it as one payload."""
    if not fragments:
        raise IncompleteGroup("no fragments")
    first = fragments[0]
    for f in fragments[1:]:
        if (f.seq_id, f.channel) != (first.seq_id, first.channel):
            raise InconsistentGroup("fragments from different groups")
        if f.total != first.total:
            raise InconsistentGroup(
                f"conflicting totals {first.total} and {f.total} in group {first.seq_id!r}"
            )
    by_index = {}
    for f in fragments:
        if f.index in by_index:
            raise InconsistentGroup(f"duplicate fragment index {f.index}")
        by_index[f.index] = f
    if set(by_index) != set(range(1, first.total + 1)):
        missing = sorted(set(range(1, first.total + 1)) - set(by_index))
        raise IncompleteGroup(f"missing fragment(s) {missing}")
    ordered = [by_index[i] for i in range(1, first.total + 1)]
    payload = "".join(f.payload for f in ordered)
    timestamp = next((f.timestamp for f in ordered if f.timestamp is not None), None)
    return _decode_payload(payload, ordered[-1].pad_bits, timestamp)


# --- file inputs ----------------------------------------------------------

AnomalySink = Callable[[str], None]


def _default_sink(message: str) -> None:
    log.warning("%s", message)


def load_nmea_messages(
    lines: Iterable[str], anomaly_sink: AnomalySink | None = None
) -> list[AisMessage]:
    """Decode a stream of NMEA lines, assembling multipart groups.

    Undecodable lines and incomplete groups are logged to the anomaly sink
    and skipped; decoding a recorded file never raises.
    """
    sink = anomaly_sink or _default_sink
    messages: list[AisMessage] = []
    pending: dict[tuple[str, str], list[Fragment]] = {}
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        try:
            out = decode_sentence(raw)
        except AisDecodeError as exc:
            sink(f"line {lineno}: {type(exc).__name__}: {exc}")
            continue
        if isinstance(out, Unsupported):
            sink(f"line {lineno}: unsupported message type {out.message_type}")
            continue
        if isinstance(out, Fragment):
            key = (out.seq_id, out.channel)
            group = pending.setdefault(key, [])
            group.append(out)
            if len(group) == out.total:
                try:
                    assembled = assemble_multipart(group)
                except AisDecodeError as exc:
                    sink(f"line {lineno}: {type(exc).__name__}: {exc}")
                else:
                    if isinstance(assembled, Unsupported):
                        sink(
                            f"line {lineno}: unsupported message type "
                            f"{assembled.message_type}"
                        )
                    else:
                        messages.append(assembled)
                del pending[key]
            continue
        messages.append(out)
    for (seq_id, channel), group in sorted(pending.items()):
        sink(
            f"end of input: incomplete group seq={seq_id!r} channel={channel!r} "
            f"({len(group)}/{group[0].total} fragments)"
        )
    return messages


def load_csv_messages(
    rows: Iterable[str], anomaly_sink: AnomalySink | None = None
) -> tuple[list[AisMessage], bool]:
    """Read the plain traffic format: `t,mmsi,lat,lon,sog_mps,cog_deg`.

    A planar variant `t,mmsi,x,y,sog_mps,cog_deg` is also accepted for
    scenarios authored directly in meters; x/y travel in the lat/lon
    fields. Returns (messages, planar).
    """
    sink = anomaly_sink or _default_sink
    reader = csv.reader(rows)
    try:
        header = next(reader)
    except StopIteration:
        return [], False
    header = [h.strip().lower() for h in header]
    if header[:6] == ["t", "mmsi", "lat", "lon", "sog_mps", "cog_deg"]:
        planar = False
    elif header[:6] == ["t", "mmsi", "x", "y", "sog_mps", "cog_deg"]:
        planar = True
    else:
        raise MalformedSentence(f"unrecognized traffic CSV header: {header}")
    messages = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        try:
            t, mmsi, a, b, sog, cog = (v.strip() for v in row[:6])
            msg = AisMessage(
                message_type=1,
                mmsi=int(mmsi),
                timestamp=float(t),
                lat=float(a),
                lon=float(b),
                speed_over_ground=float(sog),
                course_over_ground=float(cog) % 360.0,
            )
        except (ValueError, IndexError) as exc:
            sink(f"row {lineno}: unreadable traffic row: {exc}")
            continue
        messages.append(msg)
    return messages, planar


# --- track building -------------------------------------------------------


def build_tracks(
    messages: Sequence[AisMessage],
    max_speed: float = 30.0,
    anomaly_sink: AnomalySink | None = None,
    origin: tuple[float, float] | None = None,
    planar: bool = False,
) -> list[ObstacleTrack]:
    """Group position reports into per-vessel tracks in the planar frame.

    Samples are sorted by timestamp per MMSI; duplicate timestamps collapse
    (last one in input order wins); jumps implying speed above max_speed
    split the track and are logged. The projection origin defaults to the
    earliest position report's lat/lon; planar=True reads the position
    fields as already-planar x/y meters.
    """
    sink = anomaly_sink or _default_sink
    statics: dict[int, StaticInfo] = {}
    positions: dict[int, list[AisMessage]] = {}
    skipped = 0
    for msg in messages:
        if msg.message_type in SUPPORTED_STATIC_TYPES and msg.static_info:
            statics[msg.mmsi] = msg.static_info
            continue
        if not msg.position_available or msg.timestamp is None:
            skipped += 1
            continue
        positions.setdefault(msg.mmsi, []).append(msg)
    if skipped:
        sink(f"skipped {skipped} message(s) without position or timestamp")
    if not positions:
        return []

    if origin is None and not planar:
        earliest = min(
            (m for group in positions.values() for m in group),
            key=lambda m: (m.timestamp, m.mmsi),
        )
        origin = (earliest.lat, earliest.lon)  # type: ignore[assignment]

    tracks: list[ObstacleTrack] = []
    for mmsi in sorted(positions):
        group = positions[mmsi]
        # stable sort keeps input order among equal timestamps; last wins
        ordered = sorted(group, key=lambda m: m.timestamp)
        dedup: dict[float, AisMessage] = {}
        for m in ordered:
            dedup[m.timestamp] = m
        samples = []
        for m in (dedup[t] for t in sorted(dedup)):
            if planar:
                x, y = m.lat, m.lon
            else:
                x, y = latlon_to_planar(m.lat, m.lon, origin[0], origin[1])
            samples.append(
                VesselState(
                    x=x,
                    y=y,
                    speed=m.speed_over_ground or 0.0,
                    heading=m.course_over_ground or 0.0,
                    time=m.timestamp,
                )
            )
        pieces: list[list[VesselState]] = [[samples[0]]]
        for prev, cur in zip(samples, samples[1:]):
            implied = planar_distance(prev.x, prev.y, cur.x, cur.y) / (
                cur.time - prev.time
            )
            if implied > max_speed:
                sink(
                    f"mmsi {mmsi}: implied speed {implied:.1f} m/s at "
                    f"t={cur.time:.1f} exceeds {max_speed:.1f}; track split"
                )
                pieces.append([cur])
            else:
                pieces[-1].append(cur)
        info = statics.get(mmsi)
        for n, piece in enumerate(pieces):
            track_id = str(mmsi) if len(pieces) == 1 else f"{mmsi}#{n + 1}"
            tracks.append(
                ObstacleTrack(
                    mmsi=mmsi,
                    samples=piece,
                    track_id=track_id,
                    length_m=info.length_m if info else None,
                    beam_m=info.beam_m if info else None,
                )
            )
    return tracks


def sample_track(track: ObstacleTrack, t: float) -> VesselState:
    """State of a replayed obstacle at time t.

    Linear interpolation between bracketing samples; held stationary
    outside the recorded span. Speed and heading inside a segment come
    from the segment's displacement, not the reported values.
    """
    samples = track.samples
    if t <= samples[0].time:
        first = samples[0]
        return first if t == first.time else VesselState(first.x, first.y, 0.0, first.heading, t)
    if t >= samples[-1].time:
        last = samples[-1]
        return last if t == last.time else VesselState(last.x, last.y, 0.0, last.heading, t)
    ts, xs, ys = track.arrays()
    lo = _bracket(ts, t)
    if ts[lo] == t:
        return samples[lo]
    hi = lo + 1
    # same interpolation expression as the kernels, for bit-equal replay
    f = (t - ts[lo]) / (ts[hi] - ts[lo])
    x = xs[lo] + (xs[hi] - xs[lo]) * f
    y = ys[lo] + (ys[hi] - ys[lo]) * f
    seg_dt = ts[hi] - ts[lo]
    dx = xs[hi] - xs[lo]
    dy = ys[hi] - ys[lo]
    speed = math.sqrt(dx * dx + dy * dy) / seg_dt
    heading = vector_heading(dx, dy) if (dx or dy) else samples[lo].heading
    return VesselState(x, y, speed, heading, t)


def sample_track_positions(
    track: ObstacleTrack, times: Sequence[float]
) -> tuple[array, array]:
    """Batch position samples (the hot path for sweeps and replays)."""
    ts, xs, ys = track.arrays()
    return _kernels.interp_positions(ts, xs, ys, times)


def _bracket(ts: Sequence[float], t: float) -> int:
    lo, hi = 0, len(ts) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ts[mid] <= t:
            lo = mid
        else:
            hi = mid
    return lo


def shift_tracks(tracks: Sequence[ObstacleTrack], offset: float) -> list[ObstacleTrack]:
    """Rebase every sample time by offset (used to align recordings to t=0)."""
    out = []
    for tr in tracks:
        samples = [
            VesselState(s.x, s.y, s.speed, s.heading, s.time + offset)
            for s in tr.samples
        ]
        out.append(
            ObstacleTrack(
                mmsi=tr.mmsi,
                samples=samples,
                track_id=tr.track_id,
                length_m=tr.length_m,
                beam_m=tr.beam_m,
            )
        )
    return out
