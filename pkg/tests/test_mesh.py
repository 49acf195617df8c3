import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvem.bench import rectangle_mesh
from nvem.mesh import (
    Mesh,
    MeshError,
    build_patches,
    dump_mesh,
    element_geometry,
    load_mesh,
    nodal_areas,
    read_mesh,
    write_mesh,
)

from conftest import UNIT_SQUARE_TEXT, hexagon, single_element


def test_load_unit_square():
    mesh = load_mesh(UNIT_SQUARE_TEXT)
    assert mesh.num_nodes == 4 and mesh.num_elements == 1
    assert mesh.areas.sum() == pytest.approx(1.0, abs=1e-15)


def test_load_rejects_clockwise_element():
    text = UNIT_SQUARE_TEXT.replace("4 0 1 2 3", "4 0 3 2 1")
    with pytest.raises(MeshError, match="negative area"):
        load_mesh(text)


def test_clockwise_error_names_element():
    text = UNIT_SQUARE_TEXT.replace("4 0 1 2 3", "4 0 3 2 1")
    with pytest.raises(MeshError, match="element 0"):
        load_mesh(text)


def test_parse_error_reports_line():
    text = UNIT_SQUARE_TEXT.replace("1 1\n0 1", "1 x\n0 1")
    with pytest.raises(MeshError, match="line"):
        load_mesh(text)


def test_bad_header():
    with pytest.raises(MeshError):
        load_mesh("mesh 2\n")


@pytest.mark.parametrize(
    "elements, msg",
    [
        ([[0, 1, 5, 3]], "range"),
        ([[0, 1, 1, 3]], "repeat"),
        ([[0, 1]], "3 vertices"),
    ],
)
def test_invalid_elements(elements, msg):
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(MeshError, match=msg):
        Mesh(nodes, elements, np.zeros((0, 3), int))


def test_non_simple_polygon_rejected():
    # bow-tie with zero net area is caught as non-positive; use a self-touching
    # star with positive shoelace area instead
    nodes = np.array([[0, 0], [2, 0], [2, 2], [1, -1], [0, 2]], float)
    with pytest.raises(MeshError):
        Mesh(nodes, [[0, 1, 2, 3, 4]], np.zeros((0, 3), int))


def test_boundary_edge_must_belong_to_one_element(grid3):
    # interior edge between two elements tagged as boundary
    e = grid3.elements[0]
    bad = np.vstack([grid3.boundary_edges, [[e[1], e[2], 9]]])
    with pytest.raises(MeshError, match="boundary edge"):
        Mesh(grid3.nodes, grid3.elements, bad)


def test_isolated_node_rejected():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [5.0, 5.0]])
    with pytest.raises(MeshError, match="isolated"):
        Mesh(nodes, [[0, 1, 2, 3]], np.zeros((0, 3), int))


def test_structured_3x3():
    mesh = rectangle_mesh(3, 3)
    assert mesh.num_nodes == 16 and mesh.num_elements == 9
    assert mesh.areas.sum() == pytest.approx(1.0, rel=1e-14)


def test_unit_square_geometry(unit_square):
    g = element_geometry(unit_square, 0)
    assert g.area == pytest.approx(1.0)
    np.testing.assert_allclose(g.centroid_of_vertices, [0.5, 0.5])
    np.testing.assert_allclose(g.edge_lengths, 1.0)
    np.testing.assert_allclose(g.edge_normals, [[0, -1], [1, 0], [0, 1], [-1, 0]], atol=1e-15)


def test_scaled_square():
    g = element_geometry(single_element(2.0 * np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)), 0)
    assert g.area == pytest.approx(4.0)
    np.testing.assert_allclose(g.centroid_of_vertices, [1.0, 1.0])


def test_hexagon_area():
    g = element_geometry(single_element(hexagon()), 0)
    assert g.area == pytest.approx(3 * np.sqrt(3) / 2, abs=1e-12)
    assert g.area == pytest.approx(2.598076, abs=1e-6)


def test_degenerate_edge_rejected():
    nodes = np.array([[0, 0], [1, 0], [1, 1e-14], [1, 1], [0, 1]], float)
    with pytest.raises(MeshError):
        Mesh(nodes, [[0, 1, 2, 3, 4]], np.zeros((0, 3), int))


def test_single_element_patches(unit_square):
    patches = build_patches(unit_square)
    assert len(patches) == 4
    for p in patches:
        assert p.nodal_area == pytest.approx(0.25)
        assert p.node in p.patch_nodes


def test_centre_node_patch_2x2():
    mesh = rectangle_mesh(2, 2)
    centre = mesh.node_at((0.5, 0.5))
    p = build_patches(mesh)[centre]
    assert len(p.elements) == 4
    assert p.nodal_area == pytest.approx(0.25, abs=1e-15)
    assert len(p.patch_nodes) == 9


def test_patch_symmetry(voronoi):
    for p in build_patches(voronoi):
        for e, verts in enumerate(voronoi.elements):
            assert (e in p.elements) == (p.node in verts)


def test_area_partition(voronoi):
    assert nodal_areas(voronoi).sum() == pytest.approx(voronoi.areas.sum(), rel=1e-12)
    assert voronoi.areas.sum() == pytest.approx(1.0, rel=1e-12)


def test_closed_polygons(voronoi):
    for e in range(voronoi.num_elements):
        g = element_geometry(voronoi, e)
        closure = (g.edge_lengths[:, None] * g.edge_normals).sum(axis=0)
        assert np.linalg.norm(closure) <= 1e-12 * g.edge_lengths.sum()
        np.testing.assert_allclose(np.linalg.norm(g.edge_normals, axis=1), 1.0, atol=1e-12)


def test_round_trip(tmp_path, voronoi):
    path = tmp_path / "m.mesh"
    write_mesh(voronoi, path)
    again = read_mesh(path)
    np.testing.assert_array_equal(again.nodes, voronoi.nodes)
    assert again.elements == voronoi.elements
    np.testing.assert_array_equal(again.boundary_edges, voronoi.boundary_edges)
    assert dump_mesh(again) == path.read_text()


def test_node_at_snaps_and_errors(grid3):
    assert grid3.node_at((1.0 / 3.0, 0.0)) == grid3.node_at((1.0 / 3.0 + 1e-12, 0.0))
    with pytest.raises(MeshError):
        grid3.node_at((0.5, 0.5))


def test_edges_with_tag_oriented_ccw(grid3):
    # bottom edges run in +x for a CCW boundary
    for i, j in grid3.edges_with_tag(1):
        assert grid3.nodes[j, 0] > grid3.nodes[i, 0]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.floats(0.1, 10), st.floats(0.1, 10))
def test_generated_rectangles_partition_area(nx, ny, w, h):
    mesh = rectangle_mesh(nx, ny, 0, w, 0, h)
    assert nodal_areas(mesh).sum() == pytest.approx(w * h, rel=1e-12)
    assert mesh.areas.sum() == pytest.approx(w * h, rel=1e-12)
