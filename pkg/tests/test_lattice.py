import json

import pytest

from ghlab.errors import DegenerateGeometryError
from ghlab.lattice import (
    ascii_art,
    build_geometry,
    geometry_json,
    logical_supports,
    symmetry_supports,
)


def counts(lx, ly):
    n = (lx - 1) * ly + lx * (ly - 1) + 2 * lx
    return n, lx * ly, (lx - 1) * (ly + 1)


class TestCounts:
    @pytest.mark.parametrize("lx", range(2, 6))
    @pytest.mark.parametrize("ly", range(1, 5))
    def test_counting_identities(self, lx, ly):
        geom = build_geometry(lx, ly)
        n, v, p = counts(lx, ly)
        assert geom.n_links == n
        assert geom.n_vertices == v
        assert geom.n_plaquettes == p
        assert v + p == n - 1

    def test_reference_instances(self):
        g = build_geometry(3, 2)
        assert (g.n_links, g.n_vertices, g.n_plaquettes) == (13, 6, 6)
        g = build_geometry(2, 2)
        assert (g.n_links, g.n_vertices, g.n_plaquettes) == (8, 4, 3)
        g = build_geometry(2, 1)
        assert (g.n_links, g.n_vertices, g.n_plaquettes) == (5, 2, 2)

    def test_degenerate_dimensions_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            build_geometry(1, 2)
        with pytest.raises(DegenerateGeometryError):
            build_geometry(3, 0)


class TestClassification:
    @pytest.mark.parametrize("lx,ly", [(2, 1), (2, 2), (3, 2), (4, 3), (5, 4)])
    def test_class_rules(self, lx, ly):
        geom = build_geometry(lx, ly)
        for link in geom.links:
            cls = geom.link_class[link.id]
            rough = len(link.vertices) < 2
            smooth = len(link.plaquettes) < 2
            assert (cls in ("rough", "corner")) == rough
            assert (cls in ("smooth", "corner")) == smooth

    @pytest.mark.parametrize("lx,ly", [(2, 1), (2, 2), (3, 2), (4, 3)])
    def test_boundary_stabilizers_have_three_links(self, lx, ly):
        geom = build_geometry(lx, ly)
        # plaquettes closing through the rough (dangling) rows
        for p, boundary in enumerate(geom.plaquette_boundaries):
            prow = p // (lx - 1)
            if prow in (0, ly):
                assert len(boundary) == 3
            else:
                assert len(boundary) == 4
        # vertex stars on the smooth columns
        for v, star in enumerate(geom.vertex_stars):
            col = v % lx + 1
            if col in (1, lx):
                assert len(star) == 3
            else:
                assert len(star) == 4

    @pytest.mark.parametrize("lx,ly", [(2, 1), (2, 2), (3, 2), (4, 3)])
    def test_decohered_links(self, lx, ly):
        geom = build_geometry(lx, ly)
        deco = set(geom.decohered_links())
        two_plaquette = {l.id for l in geom.links if len(l.plaquettes) == 2}
        assert deco == two_plaquette
        assert len(deco) == len(geom.dual_adjacency)

    def test_reference_decohered_count(self):
        assert len(build_geometry(3, 2).decohered_links()) == 7
        assert len(build_geometry(2, 2).decohered_links()) == 2
        assert len(build_geometry(2, 1).decohered_links()) == 1


class TestLogicalSupports:
    @pytest.mark.parametrize("lx,ly", [(2, 1), (2, 2), (3, 2), (4, 3), (5, 4)])
    def test_sizes_and_overlap(self, lx, ly):
        geom = build_geometry(lx, ly)
        lx_sup, lz_sup = logical_supports(geom)
        assert len(lx_sup) == lx
        assert len(lz_sup) == ly + 1
        assert len(set(lx_sup) & set(lz_sup)) == 1
        # the shared link is the top-left dangling one
        shared = (set(lx_sup) & set(lz_sup)).pop()
        assert geom.links[shared].kind == "dangling_top"
        assert geom.links[shared].col == 1

    @pytest.mark.parametrize("lx,ly", [(2, 1), (3, 2), (4, 3)])
    def test_logical_z_avoids_channel_support(self, lx, ly):
        geom = build_geometry(lx, ly)
        _, lz_sup = logical_supports(geom)
        assert set(lz_sup).isdisjoint(geom.decohered_links())


class TestSymmetrySupports:
    @pytest.mark.parametrize("lx,ly", [(2, 1), (2, 2), (3, 2), (4, 3)])
    def test_sizes(self, lx, ly):
        geom = build_geometry(lx, ly)
        rough_all, smooth_all = symmetry_supports(geom)
        assert len(rough_all) == 2 * lx
        assert len(smooth_all) == 2 * (ly + 1)

    def test_corners_in_both(self):
        geom = build_geometry(3, 2)
        rough_all, smooth_all = symmetry_supports(geom)
        corners = [l.id for l in geom.links if geom.link_class[l.id] == "corner"]
        assert len(corners) == 4
        assert set(corners) <= set(rough_all)
        assert set(corners) <= set(smooth_all)

    @pytest.mark.parametrize("lx,ly", [(2, 1), (2, 2), (3, 2), (4, 3)])
    def test_parity_overlaps(self, lx, ly):
        geom = build_geometry(lx, ly)
        rough_all, smooth_all = symmetry_supports(geom)
        smooth = set(smooth_all)
        rough = set(rough_all)
        for star in geom.vertex_stars:
            assert len(set(star) & smooth) % 2 == 0
        for boundary in geom.plaquette_boundaries:
            assert len(set(boundary) & rough) % 2 == 0


class TestDuality:
    @pytest.mark.parametrize("lx,ly", [(2, 1), (2, 2), (3, 2), (4, 3)])
    def test_hopping_counts_match_link_classes(self, lx, ly):
        geom = build_geometry(lx, ly)
        flux_hoppings = len(geom.dual_adjacency)
        matter_hoppings = len(geom.non_rough_links())
        n_smooth = len(geom.smooth_links())
        n_rough = len(geom.rough_links())
        assert flux_hoppings == geom.n_links - n_smooth
        assert matter_hoppings == geom.n_links - n_rough


class TestSerialization:
    def test_json_round_trip_and_determinism(self):
        a = geometry_json(build_geometry(3, 2))
        b = geometry_json(build_geometry(3, 2))
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
        assert a["n_links"] == 13
        assert len(a["links"]) == 13

    def test_ascii_art_mentions_counts(self):
        art = ascii_art(build_geometry(3, 2))
        assert "13 links" in art
