"""Test-only helpers: an AIS encoder for round-trip checks and independent
brute-force oracles. Nothing here reuses the decode/check paths it tests."""

from __future__ import annotations

import math
import random

# --- AIS test encoder (ITU-R M.1371 bit packing, independent of the decoder) --


def _armor(value: int) -> str:
    return chr(value + 48) if value < 40 else chr(value + 56)


def encode_payload(fields: list[tuple[int, int]]) -> tuple[str, int]:
    """Pack (value, bit_length) fields MSB-first into an armored payload."""
    bits = 0
    total = 0
    for value, length in fields:
        assert 0 <= value < (1 << length), (value, length)
        bits = (bits << length) | value
        total += length
    pad = (6 - total % 6) % 6
    bits <<= pad
    total += pad
    chars = []
    for shift in range(total - 6, -1, -6):
        chars.append(_armor((bits >> shift) & 0x3F))
    return "".join(chars), pad


def make_sentence(
    payload: str,
    pad: int,
    total: int = 1,
    num: int = 1,
    seq: str = "",
    channel: str = "A",
    talker: str = "AIVDM",
) -> str:
    body = f"{talker},{total},{num},{seq},{channel},{payload},{pad}"
    checksum = 0
    for ch in body:
        checksum ^= ord(ch)
    return f"!{body}*{checksum:02X}"


def to_twos_complement(value: int, length: int) -> int:
    return value & ((1 << length) - 1)


def encode_position_report(
    mtype: int,
    mmsi: int,
    sog_tenth_knots: int,
    lon_raw: int,
    lat_raw: int,
    cog_tenth_deg: int,
) -> str:
    """Types 1/2/3 and 18; unused trailing fields are zero."""
    lon = to_twos_complement(lon_raw, 28)
    lat = to_twos_complement(lat_raw, 27)
    if mtype in (1, 2, 3):
        fields = [
            (mtype, 6),
            (0, 2),  # repeat
            (mmsi, 30),
            (0, 4),  # nav status
            (128, 8),  # rate of turn: not available
            (sog_tenth_knots, 10),
            (0, 1),  # position accuracy
            (lon, 28),
            (lat, 27),
            (cog_tenth_deg, 12),
            (511, 9),  # heading: not available
            (60, 6),  # payload UTC second: not available (ignored anyway)
            (0, 2),
            (0, 3),
            (0, 1),
            (0, 19),
        ]
    elif mtype == 18:
        fields = [
            (mtype, 6),
            (0, 2),
            (mmsi, 30),
            (0, 8),  # reserved
            (sog_tenth_knots, 10),
            (0, 1),
            (lon, 28),
            (lat, 27),
            (cog_tenth_deg, 12),
            (511, 9),
            (60, 6),
            (0, 2),
            (0, 27),  # class-B flags + radio
        ]
    else:
        raise ValueError(mtype)
    payload, pad = encode_payload(fields)
    return make_sentence(payload, pad)


_SIXBIT = "@ABCDEFGHIJKLMNOPQRSTUVWXYZ[\\]^_ !\"#$%&'()*+,-./0123456789:;<=>?"


def _pack_text(text: str, chars: int) -> list[tuple[int, int]]:
    padded = text.upper().ljust(chars, "@")[:chars]
    return [(_SIXBIT.index(c), 6) for c in padded]


def encode_static_report(
    mmsi: int,
    name: str,
    callsign: str,
    ship_type: int,
    to_bow: int,
    to_stern: int,
    to_port: int,
    to_starboard: int,
    imo: int = 0,
) -> list[str]:
    """Type 5 as a two-fragment group (the usual on-air form)."""
    fields = [
        (5, 6),
        (0, 2),
        (mmsi, 30),
        (0, 2),  # ais version
        (imo, 30),
    ]
    fields += _pack_text(callsign, 7)
    fields += _pack_text(name, 20)
    fields += [
        (ship_type, 8),
        (to_bow, 9),
        (to_stern, 9),
        (to_port, 6),
        (to_starboard, 6),
        (0, 4),  # epfd
        (0, 20),  # eta
        (0, 8),  # draught
    ]
    fields += _pack_text("", 20)  # destination
    fields += [(0, 1), (0, 1)]  # dte + spare
    payload, pad = encode_payload(fields)
    split = 40
    part1, part2 = payload[:split], payload[split:]
    return [
        make_sentence(part1, 0, total=2, num=1, seq="1"),
        make_sentence(part2, pad, total=2, num=2, seq="1"),
    ]


def random_position_report(rng: random.Random) -> tuple[str, dict]:
    """A random valid supported position report plus its expected decode."""
    mtype = rng.choice([1, 2, 3, 18])
    mmsi = rng.randrange(100_000_000, 1_000_000_000)
    sog_raw = rng.randrange(0, 1023)  # 1023 = N/A excluded
    lon_raw = rng.randrange(-180 * 600_000, 180 * 600_000 + 1)
    lat_raw = rng.randrange(-90 * 600_000, 90 * 600_000 + 1)
    cog_raw = rng.randrange(0, 3600)
    sentence = encode_position_report(mtype, mmsi, sog_raw, lon_raw, lat_raw, cog_raw)
    expected = {
        "message_type": mtype,
        "mmsi": mmsi,
        "speed_over_ground": (sog_raw / 10.0) * (1852.0 / 3600.0),
        "lat": lat_raw / 600_000.0,
        "lon": lon_raw / 600_000.0,
        "course_over_ground": cog_raw / 10.0,
    }
    return sentence, expected


# --- brute-force oracles ------------------------------------------------------


def interp_track_oracle(samples: list[tuple[float, float, float]], t: float) -> tuple[float, float]:
    """Independent piecewise-linear interpolation: (t, x, y) samples, held ends."""
    if t <= samples[0][0]:
        return samples[0][1], samples[0][2]
    if t >= samples[-1][0]:
        return samples[-1][1], samples[-1][2]
    for (t0, x0, y0), (t1, x1, y1) in zip(samples, samples[1:]):
        if t0 <= t <= t1:
            w = (t - t0) / (t1 - t0)
            return x0 + w * (x1 - x0), y0 + w * (y1 - y0)
    raise AssertionError("unreachable")


def cpa_sampling_oracle(
    own_pos,
    own_vel,
    obs_samples,
    t0: float,
    t1: float,
    steps: int = 200_000,
) -> tuple[float, float]:
    """Dense time sampling of the separation between a constant-velocity own
    ship and a piecewise-linear obstacle."""
    best_t, best_d = t0, math.inf
    for i in range(steps + 1):
        t = t0 + (t1 - t0) * i / steps
        ox = own_pos[0] + own_vel[0] * (t - t0)
        oy = own_pos[1] + own_vel[1] * (t - t0)
        px, py = interp_track_oracle(obs_samples, t)
        d = math.hypot(ox - px, oy - py)
        if d < best_d:
            best_t, best_d = t, d
    return best_t, best_d


def path_safety_oracle(
    waypoints: list[tuple[float, float, float]],
    tracks: list[list[tuple[float, float, float]]],
    threshold: float,
    dt_check: float,
) -> list[tuple[float, int]]:
    """10x-dense sampling filtered to the dt_check instants.

    waypoints: (t, x, y); tracks: lists of (t, x, y). Returns sorted
    (time, track_index) pairs that violate the threshold.
    """
    t0, t1 = waypoints[0][0], waypoints[-1][0]
    fine = dt_check / 10.0
    count = int(math.floor((t1 - t0) / fine + 1e-9))
    instants = [t0 + j * fine for j in range(count + 1)]
    instants += [t for t, _x, _y in waypoints]
    violations = []
    seen = set()
    for t in instants:
        # keep only instants the checker itself uses
        k = (t - t0) / dt_check
        on_main_grid = abs(k - round(k)) < 1e-6
        is_waypoint = any(abs(t - wt) < 1e-12 for wt, _, _ in waypoints)
        if not (on_main_grid or is_waypoint):
            continue
        ox, oy = interp_track_oracle(waypoints, t)
        for idx, track in enumerate(tracks):
            px, py = interp_track_oracle(track, t)
            if math.hypot(ox - px, oy - py) < threshold:
                key = (round(t, 9), idx)
                if key not in seen:
                    seen.add(key)
                    violations.append((t, idx))
    violations.sort()
    return violations
