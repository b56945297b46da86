import numpy as np
import pytest

from mcflow import geometry as geo
from mcflow.meshio import read_mesh, read_obj, read_off, write_off


def test_off_round_trip_is_bitwise(tmp_path):
    m = geo.icosphere(2, radius=0.7, center=(0.1, -0.2, 1 / 3))
    write_off(m, tmp_path / "s.off")
    back = read_off(tmp_path / "s.off")
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.faces, m.faces)


def test_off_with_comments_and_split_header(tmp_path):
    (tmp_path / "t.off").write_text(
        "OFF # tetra\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n"
        "3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n"
    )
    m = read_mesh(tmp_path / "t.off")
    assert m.faces.shape == (4, 3)


def test_obj_slashes_and_negative_indices(tmp_path):
    (tmp_path / "t.obj").write_text(
        "# tetra\nv 1 1 1\nv 1 -1 -1\nv -1 1 -1\nv -1 -1 1\nvn 0 0 1\n"
        "f 1//1 2//1 3//1\nf 1/1/1 4/1/1 2/1/1\nf -4 -2 -1\nf 2 4 3\n"
    )
    m = read_obj(tmp_path / "t.obj")
    assert m.faces.tolist() == [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]


def test_non_triangles_rejected(tmp_path):
    (tmp_path / "q.off").write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
    with pytest.raises(geo.MeshError, match="triangular"):
        read_off(tmp_path / "q.off")
    (tmp_path / "q.obj").write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(geo.MeshError, match="triangular"):
        read_obj(tmp_path / "q.obj")


def test_unknown_suffix(tmp_path):
    with pytest.raises(geo.MeshError, match="unsupported"):
        read_mesh(tmp_path / "x.stl")
