"""Per-frame flight records, hover dispersion statistics, CSV/JSON export.

The headline statistic is the radial double standard deviation of the
post-settle position (in centimeters), and the hold diameter it implies
for a given airframe size: frame_size_cm + 2 * two_sigma_radial.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

__all__ = [
    "CsvError",
    "DispersionReport",
    "FrameRecord",
    "dispersion_stats",
    "read_csv",
    "write_csv",
    "write_summary_json",
]

CSV_HEADER = (
    "t,pos_x,pos_y,vel_x,vel_y,disp_x,disp_y,disp_d,"
    "cmd_roll,cmd_pitch,n_alive,generation,events"
)
_EVENT_NAMES = ("reacquired", "feature_lost", "blind")


class CsvError(ValueError):
    """Telemetry CSV schema violation; the message carries the location."""


@dataclass(frozen=True)
class FrameRecord:
    """One camera tick: vehicle truth, measurement, command, tracker health.

    Displacement fields are None while blind (no trackable feature).
    """

    t: float
    pos_x: float
    pos_y: float
    vel_x: float
    vel_y: float
    disp_x: float | None
    disp_y: float | None
    disp_d: float | None
    cmd_roll: float
    cmd_pitch: float
    n_alive: int
    generation: int
    events: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        present = (self.disp_x is None, self.disp_y is None, self.disp_d is None)
        if len(set(present)) != 1:
            raise ValueError("disp_x, disp_y, disp_d must be present or absent together")


@dataclass(frozen=True)
class DispersionReport:
    """Hover dispersion over the post-settle portion of a flight.

    Means and per-axis standard deviations are meters; the radial
    2-sigma, max excursion, and hold diameter are centimeters.
    """

    mean_x: float
    mean_y: float
    std_x: float
    std_y: float
    two_sigma_radial: float
    max_excursion: float
    hold_diameter: float
    settle_time_used: float
    blind_fraction: float


def dispersion_stats(
    records: Sequence[FrameRecord], settle_time: float = 5.0, frame_size_cm: float = 58.0
) -> DispersionReport:
    """Population statistics over records with t >= settle_time.

    two_sigma_radial = 2 * sqrt(std_x^2 + std_y^2) in cm; the hold
    diameter adds twice that to the airframe size, matching the
    published diameter arithmetic.
    """
    post = [r for r in records if r.t >= settle_time]
    if len(post) < 2:
        raise ValueError(
            f"need at least 2 records after settle_time={settle_time}, got {len(post)}"
        )
    n = len(post)
    xs = [r.pos_x for r in post]
    ys = [r.pos_y for r in post]
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    var_x = sum((v - mean_x) ** 2 for v in xs) / n
    var_y = sum((v - mean_y) ** 2 for v in ys) / n
    std_x = math.sqrt(var_x)
    std_y = math.sqrt(var_y)
    two_sigma = 2.0 * math.hypot(std_x, std_y) * 100.0
    max_exc = max(math.hypot(x - mean_x, y - mean_y) for x, y in zip(xs, ys)) * 100.0
    blind = sum(1 for r in post if "blind" in r.events) / n
    return DispersionReport(
        mean_x=mean_x,
        mean_y=mean_y,
        std_x=std_x,
        std_y=std_y,
        two_sigma_radial=two_sigma,
        max_excursion=max_exc,
        hold_diameter=frame_size_cm + 2.0 * two_sigma,
        settle_time_used=settle_time,
        blind_fraction=blind,
    )


def _fmt(value: float | None) -> str:
    return "" if value is None else format(value, ".9g")


def write_csv(records: Iterable[FrameRecord]) -> bytes:
    """Serialize records to the fixed 13-column schema, LF line endings."""
    lines = [CSV_HEADER]
    for r in records:
        events = ";".join(name for name in _EVENT_NAMES if name in r.events)
        lines.append(
            ",".join(
                (
                    _fmt(r.t),
                    _fmt(r.pos_x),
                    _fmt(r.pos_y),
                    _fmt(r.vel_x),
                    _fmt(r.vel_y),
                    _fmt(r.disp_x),
                    _fmt(r.disp_y),
                    _fmt(r.disp_d),
                    _fmt(r.cmd_roll),
                    _fmt(r.cmd_pitch),
                    str(r.n_alive),
                    str(r.generation),
                    events,
                )
            )
        )
    return ("\n".join(lines) + "\n").encode("ascii")


def _parse_float(cell: str, row: int, col: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise CsvError(f"row {row}, column {col}: expected a number, got {cell!r}") from None


def _parse_int(cell: str, row: int, col: str) -> int:
    try:
        return int(cell)
    except ValueError:
        raise CsvError(f"row {row}, column {col}: expected an integer, got {cell!r}") from None


def read_csv(data: bytes) -> list[FrameRecord]:
    """Parse telemetry CSV back into records, validating the schema.

    Errors name the offending row (1-based, header is row 1) and column.
    """
    text = data.decode("ascii")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != CSV_HEADER:
        raise CsvError("row 1: header does not match the telemetry schema")
    records = []
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 13:
            raise CsvError(f"row {i}: expected 13 fields, got {len(cells)}")
        disp = cells[5:8]
        blanks = [c == "" for c in disp]
        if any(blanks) and not all(blanks):
            raise CsvError(f"row {i}: disp_x, disp_y, disp_d must be jointly empty or set")
        names = cells[12]
        events = frozenset(n for n in names.split(";") if n)
        unknown = events - set(_EVENT_NAMES)
        if unknown:
            raise CsvError(f"row {i}, column events: unknown flag {sorted(unknown)[0]!r}")
        records.append(
            FrameRecord(
                t=_parse_float(cells[0], i, "t"),
                pos_x=_parse_float(cells[1], i, "pos_x"),
                pos_y=_parse_float(cells[2], i, "pos_y"),
                vel_x=_parse_float(cells[3], i, "vel_x"),
                vel_y=_parse_float(cells[4], i, "vel_y"),
                disp_x=None if blanks[0] else _parse_float(cells[5], i, "disp_x"),
                disp_y=None if blanks[1] else _parse_float(cells[6], i, "disp_y"),
                disp_d=None if blanks[2] else _parse_float(cells[7], i, "disp_d"),
                cmd_roll=_parse_float(cells[8], i, "cmd_roll"),
                cmd_pitch=_parse_float(cells[9], i, "cmd_pitch"),
                n_alive=_parse_int(cells[10], i, "n_alive"),
                generation=_parse_int(cells[11], i, "generation"),
                events=events,
            )
        )
    return records


_REPORT_FIELDS = (
    "mean_x",
    "mean_y",
    "std_x",
    "std_y",
    "two_sigma_radial",
    "max_excursion",
    "hold_diameter",
    "settle_time_used",
    "blind_fraction",
)


def write_summary_json(report: DispersionReport, digest: Mapping[str, object] = ()) -> bytes:
    """One flat JSON object: the optional config digest, then every report field.

    Key order is fixed so identical inputs serialize byte-identically.
    """
    obj: dict[str, object] = dict(digest)
    for name in _REPORT_FIELDS:
        obj[name] = getattr(report, name)
    return (json.dumps(obj, indent=2) + "\n").encode("ascii")
