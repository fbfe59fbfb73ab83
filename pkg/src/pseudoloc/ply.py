"""ASCII PLY export and import for point clouds (x y z [red green blue])."""

from pathlib import Path

import numpy as np

from .errors import IngestionError, RejectedInputError


def write_ply(path, points, colors=None):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise RejectedInputError(f"points must be (N, 3), got {points.shape}")
    if colors is not None:
        colors = np.asarray(colors)
        if colors.shape != points.shape:
            raise RejectedInputError(f"colors must match points, got {colors.shape}")
        colors = np.clip(colors, 0, 255).astype(np.uint8)
    header = ["ply", "format ascii 1.0", f"element vertex {points.shape[0]}",
              "property double x", "property double y", "property double z"]
    if colors is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header.append("end_header")
    path = Path(path)
    with path.open("w", encoding="ascii", newline="\n") as f:
        f.write("\n".join(header) + "\n")
        if colors is None:
            for p in points:
                f.write(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
        else:
            for p, c in zip(points, colors):
                f.write(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g} {c[0]} {c[1]} {c[2]}\n")
    return path


def read_ply(path):
    """Returns ``(points, colors)``; ``colors`` is None when absent."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="ascii").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(path, f"cannot read PLY: {exc}") from exc
    if not lines or lines[0].strip() != "ply":
        raise IngestionError(path, "missing 'ply' magic line")
    n_vertex = None
    props = []
    try:
        end = lines.index("end_header")
    except ValueError:
        raise IngestionError(path, "missing end_header") from None
    for line in lines[1:end]:
        tok = line.split()
        if tok[:2] == ["format", "ascii"]:
            continue
        if tok[0] == "format":
            raise IngestionError(path, f"only ASCII PLY is supported, got {line!r}")
        if tok[:2] == ["element", "vertex"]:
            n_vertex = int(tok[2])
        elif tok[0] == "property":
            props.append(tok[-1])
    if n_vertex is None or props[:3] != ["x", "y", "z"]:
        raise IngestionError(path, "expected a vertex element with x y z properties")
    body = lines[end + 1 : end + 1 + n_vertex]
    if len(body) != n_vertex:
        raise IngestionError(path, f"header declares {n_vertex} vertices, found {len(body)}")
    data = np.array([row.split() for row in body], dtype=np.float64).reshape(n_vertex, len(props))
    colors = None
    if {"red", "green", "blue"} <= set(props):
        colors = data[:, [props.index(c) for c in ("red", "green", "blue")]].astype(np.uint8)
    return data[:, :3].copy(), colors
