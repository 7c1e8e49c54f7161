"""Reading and writing point cloud files (.xyz and ascii PLY).

Coordinates are written with shortest round-trip float formatting, so a
write/read cycle reproduces them exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .cloud import PointCloud
from .errors import CloudParseError

__all__ = ["read_cloud", "write_cloud"]


def read_cloud(path) -> PointCloud:
    """Parse a cloud file by extension; errors name the offending line."""
    path = Path(path)
    suffix = path.suffix.lower()
    text = path.read_text()
    if suffix == ".xyz":
        return _read_xyz(text)
    if suffix == ".ply":
        return _read_ply(text)
    raise CloudParseError(f"unsupported cloud format {suffix!r} (use .xyz or .ply)")


def write_cloud(cloud: PointCloud, path) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".xyz":
        path.write_text(_format_xyz(cloud))
    elif suffix == ".ply":
        path.write_text(_format_ply(cloud))
    else:
        raise CloudParseError(f"unsupported cloud format {suffix!r} (use .xyz or .ply)")


def _format_xyz(cloud: PointCloud) -> str:
    lines = [" ".join(repr(float(c)) for c in row) for row in cloud.points]
    return "\n".join(lines) + "\n"


def _format_ply(cloud: PointCloud) -> str:
    header = [
        "ply",
        "format ascii 1.0",
        f"element vertex {cloud.size}",
        "property double x",
        "property double y",
        "property double z",
        "end_header",
    ]
    rows = [" ".join(repr(float(c)) for c in row) for row in cloud.points]
    return "\n".join(header + rows) + "\n"


def _read_xyz(text: str) -> PointCloud:
    pts = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 3:
            raise CloudParseError(
                f"expected 3 coordinates, found {len(fields)}", line=lineno
            )
        try:
            pts.append([float(f) for f in fields])
        except ValueError:
            raise CloudParseError(f"invalid number in {line!r}", line=lineno) from None
    if not pts:
        raise CloudParseError("file contains no points")
    return PointCloud(np.asarray(pts))


def _read_ply(text: str) -> PointCloud:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise CloudParseError("missing 'ply' magic line", line=1)

    elements: list[tuple[str, int]] = []  # declaration order matters
    vertex_props: list[str] = []
    has_list_prop = False
    format_seen = False
    data_start = None
    for lineno, raw in enumerate(lines[1:], start=2):
        fields = raw.strip().split()
        if not fields or fields[0] == "comment":
            continue
        if fields[0] == "format":
            if fields[1:] != ["ascii", "1.0"]:
                raise CloudParseError(
                    f"unsupported format {' '.join(fields[1:])!r}", line=lineno
                )
            format_seen = True
        elif fields[0] == "element":
            if len(fields) != 3:
                raise CloudParseError("malformed element declaration", line=lineno)
            try:
                elements.append((fields[1], int(fields[2])))
            except ValueError:
                raise CloudParseError("bad element count", line=lineno) from None
        elif fields[0] == "property":
            if elements and elements[-1][0] == "vertex":
                if fields[1] == "list":
                    has_list_prop = True
                else:
                    vertex_props.append(fields[-1])
        elif fields[0] == "end_header":
            data_start = lineno + 1
            break
    if data_start is None:
        raise CloudParseError("missing end_header")
    if not format_seen:
        raise CloudParseError("missing 'format ascii 1.0' declaration")
    if not any(name == "vertex" for name, _ in elements):
        raise CloudParseError("no vertex element declared")
    if has_list_prop:
        raise CloudParseError("list properties on the vertex element are unsupported")
    try:
        cols = [vertex_props.index(axis) for axis in ("x", "y", "z")]
    except ValueError:
        raise CloudParseError("vertex element lacks x, y, z properties") from None

    pts = None
    cursor = data_start
    for name, count in elements:
        if name == "vertex":
            rows = np.empty((count, 3))
            for i in range(count):
                lineno = cursor + i
                if lineno - 1 >= len(lines):
                    raise CloudParseError("unexpected end of vertex data", line=lineno)
                fields = lines[lineno - 1].split()
                if len(fields) < len(vertex_props):
                    raise CloudParseError(
                        f"expected {len(vertex_props)} vertex values, found {len(fields)}",
                        line=lineno,
                    )
                try:
                    rows[i] = [float(fields[c]) for c in cols]
                except ValueError:
                    raise CloudParseError("invalid vertex number", line=lineno) from None
            pts = rows
        cursor += count
    if pts is None or len(pts) == 0:
        raise CloudParseError("vertex element is empty")
    return PointCloud(pts)
