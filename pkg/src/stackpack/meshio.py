"""Mesh file readers (OBJ, STL, OFF) and an OBJ scene writer.

Units are assumed to be meters. Polygonal faces are fan-triangulated.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import MeshFormatError, MeshValidationError
from .geometry import TriangleMesh

_FORMATS = ("obj", "stl", "off")


def load_mesh(path: str | Path, format: str | None = None) -> TriangleMesh:
    """Load a triangle mesh, inferring the format from the extension if not given."""
    path = Path(path)
    if not path.exists():
        raise MeshFormatError(path, "file does not exist")
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in _FORMATS:
        raise MeshFormatError(path, f"unsupported mesh format {fmt!r} (expected one of {_FORMATS})")
    if fmt == "obj":
        verts, tris = _parse_obj(path)
    elif fmt == "off":
        verts, tris = _parse_off(path)
    else:
        verts, tris = _parse_stl(path)
    if not tris:
        raise MeshValidationError(f"{path}: mesh has no faces")
    verts_arr = np.asarray(verts, dtype=np.float64)
    tris_arr = np.asarray(tris, dtype=np.int64)
    if tris_arr.min() < 0 or tris_arr.max() >= len(verts):
        raise MeshValidationError(
            f"{path}: face index out of range (vertex count {len(verts)})"
        )
    return TriangleMesh(verts_arr, tris_arr)


def _fan(indices: list[int]) -> list[tuple[int, int, int]]:
    return [(indices[0], indices[k], indices[k + 1]) for k in range(1, len(indices) - 1)]


def _parse_obj(path: Path):
    verts: list[tuple[float, float, float]] = []
    tris: list[tuple[int, int, int]] = []
    with open(path, "r", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshFormatError(path, "vertex record needs 3 coordinates", line=lineno)
                try:
                    verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError:
                    raise MeshFormatError(path, f"bad vertex coordinate in {line!r}", line=lineno)
            elif tag == "f":
                if len(parts) < 4:
                    raise MeshFormatError(path, "face record needs at least 3 vertices", line=lineno)
                idx = []
                for tok in parts[1:]:
                    head = tok.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise MeshFormatError(path, f"bad face index {tok!r}", line=lineno)
                    # OBJ indices are 1-based; negatives count from the end.
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                tris.extend(_fan(idx))
            # other records (vn, vt, o, g, usemtl, s, mtllib) are ignored
    return verts, tris


def _parse_off(path: Path):
    with open(path, "r", errors="replace") as fh:
        lines = fh.readlines()
    body = [
        (n, ln.strip())
        for n, ln in enumerate(lines, start=1)
        if ln.strip() and not ln.strip().startswith("#")
    ]
    if not body:
        raise MeshFormatError(path, "empty OFF file")
    pos = 0
    lineno, header = body[pos]
    if header.upper().startswith("OFF"):
        rest = header[3:].strip()
        pos += 1
    else:
        rest = header  # headerless variant: counts on the first line
    if rest:
        counts_line, counts_no = rest, lineno
    else:
        if pos >= len(body):
            raise MeshFormatError(path, "missing OFF count line", line=lineno)
        counts_no, counts_line = body[pos]
        pos += 1
    try:
        nv, nf = int(counts_line.split()[0]), int(counts_line.split()[1])
    except (ValueError, IndexError):
        raise MeshFormatError(path, f"bad OFF count line {counts_line!r}", line=counts_no)
    if pos + nv + nf > len(body):
        raise MeshFormatError(path, "OFF file truncated", line=body[-1][0])
    verts = []
    for n in range(nv):
        ln_no, ln = body[pos + n]
        parts = ln.split()
        try:
            verts.append((float(parts[0]), float(parts[1]), float(parts[2])))
        except (ValueError, IndexError):
            raise MeshFormatError(path, f"bad OFF vertex {ln!r}", line=ln_no)
    tris = []
    for n in range(nf):
        ln_no, ln = body[pos + nv + n]
        parts = ln.split()
        try:
            k = int(parts[0])
            idx = [int(p) for p in parts[1 : 1 + k]]
        except (ValueError, IndexError):
            raise MeshFormatError(path, f"bad OFF face {ln!r}", line=ln_no)
        if len(idx) != k or k < 3:
            raise MeshFormatError(path, f"bad OFF face {ln!r}", line=ln_no)
        tris.extend(_fan(idx))
    return verts, tris


def _parse_stl(path: Path):
    data = path.read_bytes()
    if len(data) < 15:
        raise MeshFormatError(path, "file too short for STL", byte=len(data))
    # Binary sizing check takes precedence: some binary files start with "solid".
    if len(data) >= 84:
        (ntri,) = struct.unpack_from("<I", data, 80)
        if len(data) == 84 + 50 * ntri:
            return _parse_stl_binary(path, data, ntri)
    if data[:5].lower() == b"solid":
        return _parse_stl_ascii(path)
    raise MeshFormatError(path, "not a valid ASCII or binary STL", byte=0)


def _dedupe(raw_verts: list[tuple[float, float, float]], raw_tris: list[tuple[int, int, int]]):
    seen: dict[tuple[float, float, float], int] = {}
    remap = []
    verts = []
    for v in raw_verts:
        j = seen.get(v)
        if j is None:
            j = len(verts)
            seen[v] = j
            verts.append(v)
        remap.append(j)
    tris = [(remap[a], remap[b], remap[c]) for a, b, c in raw_tris]
    return verts, tris


def _parse_stl_binary(path: Path, data: bytes, ntri: int):
    raw_verts = []
    raw_tris = []
    off = 84
    for k in range(ntri):
        rec = struct.unpack_from("<12f", data, off)
        base = len(raw_verts)
        raw_verts.append(tuple(rec[3:6]))
        raw_verts.append(tuple(rec[6:9]))
        raw_verts.append(tuple(rec[9:12]))
        raw_tris.append((base, base + 1, base + 2))
        off += 50
    return _dedupe(raw_verts, raw_tris)


def _parse_stl_ascii(path: Path):
    raw_verts: list[tuple[float, float, float]] = []
    raw_tris: list[tuple[int, int, int]] = []
    pending: list[tuple[float, float, float]] = []
    with open(path, "r", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts:
                continue
            if parts[0] == "vertex":
                if len(parts) < 4:
                    raise MeshFormatError(path, "vertex needs 3 coordinates", line=lineno)
                try:
                    pending.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError:
                    raise MeshFormatError(path, f"bad vertex {raw.strip()!r}", line=lineno)
            elif parts[0] == "endfacet":
                if len(pending) != 3:
                    raise MeshFormatError(
                        path, f"facet has {len(pending)} vertices, expected 3", line=lineno
                    )
                base = len(raw_verts)
                raw_verts.extend(pending)
                raw_tris.append((base, base + 1, base + 2))
                pending = []
    if pending:
        raise MeshFormatError(path, "unterminated facet at end of file")
    return _dedupe(raw_verts, raw_tris)


def save_obj(path: str | Path, meshes: list[tuple[str, TriangleMesh]] | TriangleMesh) -> None:
    """Write one or more named meshes into a single OBJ file."""
    if isinstance(meshes, TriangleMesh):
        meshes = [("mesh", meshes)]
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("# stackpack scene export\n")
        offset = 0
        for name, mesh in meshes:
            fh.write(f"o {name}\n")
            for v in mesh.vertices:
                fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
            for t in mesh.triangles:
                fh.write(f"f {t[0] + 1 + offset} {t[1] + 1 + offset} {t[2] + 1 + offset}\n")
            offset += mesh.num_vertices
