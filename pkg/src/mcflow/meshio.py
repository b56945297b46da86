"""OFF / OBJ triangle-mesh reading and OFF writing."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import MeshError, TriMesh


def _tokens(path: Path):
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line.split()


def read_off(path, time: float = 0.0, closed: bool = True) -> TriMesh:
    it = _tokens(path)
    head = next(it)
    if head[0] != "OFF":
        raise MeshError(f"{path}: missing OFF header")
    counts = head[1:] if len(head) > 1 else next(it)
    nv, nf = int(counts[0]), int(counts[1])
    V = np.array([[float(t) for t in next(it)[:3]] for _ in range(nv)])
    F = []
    for _ in range(nf):
        row = next(it)
        if int(row[0]) != 3:
            raise MeshError(f"{path}: only triangular faces are supported")
        F.append([int(t) for t in row[1:4]])
    return TriMesh(V, np.array(F, dtype=np.int64).reshape(-1, 3), time, closed)


def read_obj(path, time: float = 0.0, closed: bool = True) -> TriMesh:
    V, F = [], []
    for tok in _tokens(path):
        if tok[0] == "v":
            V.append([float(t) for t in tok[1:4]])
        elif tok[0] == "f":
            if len(tok) != 4:
                raise MeshError(f"{path}: only triangular faces are supported")
            # "f 1/2/3 ..." -> vertex index before the first slash, 1-based;
            # negative indices count back from the latest vertex
            idx = [int(t.split("/")[0]) for t in tok[1:]]
            F.append([i - 1 if i > 0 else len(V) + i for i in idx])
    return TriMesh(np.array(V), np.array(F, dtype=np.int64).reshape(-1, 3), time, closed)


def read_mesh(path, **kw) -> TriMesh:
    suffix = Path(path).suffix.lower()
    if suffix == ".off":
        return read_off(path, **kw)
    if suffix == ".obj":
        return read_obj(path, **kw)
    raise MeshError(f"unsupported mesh format {suffix!r}")


def write_off(mesh: TriMesh, path) -> None:
    lines = ["OFF", f"{len(mesh.vertices)} {len(mesh.faces)} 0"]
    lines += [" ".join(f"{c:.17g}" for c in v) for v in mesh.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")
