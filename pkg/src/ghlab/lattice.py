"""Square lattice with rough top/bottom and smooth left/right boundaries.

Vertices sit on an ``lx`` by ``ly`` grid. Every vertex column carries one
dangling link above the top row and one below the bottom row (the rough
boundaries). Plaquettes fill ``ly + 1`` rows of ``lx - 1`` columns, so the
top and bottom plaquettes close through the dangling links and have three
boundary links, while the leftmost and rightmost vertex stars have three
star links. Link ids are assigned in raster order: top dangling row, then
alternating horizontal and vertical rows, then the bottom dangling row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DegenerateGeometryError


@dataclass
class Link:
    id: int
    kind: str                 # "dangling_top", "h", "v", "dangling_bottom"
    row: int
    col: int
    vertices: tuple           # incident vertex ids (1 for dangling links)
    plaquettes: tuple         # incident plaquette ids (1 on smooth sides)


@dataclass
class LatticeGeometry:
    lx: int
    ly: int
    links: list
    vertex_stars: list        # vertex id -> ordered link ids
    plaquette_boundaries: list
    link_class: list          # per link: "bulk" | "rough" | "smooth" | "corner"
    dual_adjacency: list      # (plaquette, plaquette, link) per two-plaquette link

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_vertices(self) -> int:
        return self.lx * self.ly

    @property
    def n_plaquettes(self) -> int:
        return (self.lx - 1) * (self.ly + 1)

    def vertex_id(self, row: int, col: int) -> int:
        return (row - 1) * self.lx + (col - 1)

    def plaquette_id(self, prow: int, pcol: int) -> int:
        return prow * (self.lx - 1) + (pcol - 1)

    # ----- link classes --------------------------------------------------
    def rough_links(self) -> list:
        return [l.id for l in self.links if self.link_class[l.id] in ("rough", "corner")]

    def smooth_links(self) -> list:
        return [l.id for l in self.links if self.link_class[l.id] in ("smooth", "corner")]

    def bulk_links(self) -> list:
        return [l.id for l in self.links if self.link_class[l.id] == "bulk"]

    def decohered_links(self) -> list:
        """Links the gauge-operator channel acts on: everything not smooth."""
        smooth = set(self.smooth_links())
        return [l.id for l in self.links if l.id not in smooth]

    def non_rough_links(self) -> list:
        rough = set(self.rough_links())
        return [l.id for l in self.links if l.id not in rough]

    # ----- boundary paths -------------------------------------------------
    def left_path(self) -> list:
        """Smooth left column, ordered from the top dangling link downward."""
        return self._side_path(1)

    def right_path(self) -> list:
        return self._side_path(self.lx)

    def _side_path(self, col: int) -> list:
        ids = [self._dangling_top[col - 1]]
        for r in range(1, self.ly):
            ids.append(self._vertical[(r, col)])
        ids.append(self._dangling_bottom[col - 1])
        return ids

    def top_dangling(self) -> list:
        return list(self._dangling_top)

    def bottom_dangling(self) -> list:
        return list(self._dangling_bottom)

    # ----- incidence matrices ---------------------------------------------
    def star_matrix(self):
        import numpy as np

        mat = np.zeros((self.n_vertices, self.n_links), dtype=np.uint8)
        for v, star in enumerate(self.vertex_stars):
            mat[v, star] = 1
        return mat

    def plaquette_matrix(self):
        import numpy as np

        mat = np.zeros((self.n_plaquettes, self.n_links), dtype=np.uint8)
        for p, boundary in enumerate(self.plaquette_boundaries):
            mat[p, boundary] = 1
        return mat


def build_geometry(lx: int, ly: int) -> LatticeGeometry:
    if lx < 2:
        raise DegenerateGeometryError("lx < 2 leaves no plaquette column")
    if ly < 1:
        raise DegenerateGeometryError("ly < 1 leaves no vertex row")

    links = []
    dangling_top = {}
    dangling_bottom = {}
    horizontal = {}
    vertical = {}

    def add(kind, row, col):
        links.append(Link(len(links), kind, row, col, (), ()))
        return links[-1].id

    for c in range(1, lx + 1):
        dangling_top[c - 1] = add("dangling_top", 0, c)
    for r in range(1, ly + 1):
        for c in range(1, lx):
            horizontal[(r, c)] = add("h", r, c)
        if r < ly:
            for c in range(1, lx + 1):
                vertical[(r, c)] = add("v", r, c)
    for c in range(1, lx + 1):
        dangling_bottom[c - 1] = add("dangling_bottom", ly + 1, c)

    geom = LatticeGeometry(lx, ly, links, [], [], [], [])
    geom._dangling_top = [dangling_top[c] for c in range(lx)]
    geom._dangling_bottom = [dangling_bottom[c] for c in range(lx)]
    geom._horizontal = horizontal
    geom._vertical = vertical

    # vertex stars, ordered up / left / right / down
    stars = []
    for r in range(1, ly + 1):
        for c in range(1, lx + 1):
            star = []
            star.append(dangling_top[c - 1] if r == 1 else vertical[(r - 1, c)])
            if c > 1:
                star.append(horizontal[(r, c - 1)])
            if c < lx:
                star.append(horizontal[(r, c)])
            star.append(dangling_bottom[c - 1] if r == ly else vertical[(r, c)])
            stars.append(star)
    geom.vertex_stars = stars

    # plaquette boundaries
    boundaries = []
    for k in range(ly + 1):
        for c in range(1, lx):
            if k == 0:
                boundary = [dangling_top[c - 1], dangling_top[c], horizontal[(1, c)]]
            elif k == ly:
                boundary = [
                    dangling_bottom[c - 1],
                    dangling_bottom[c],
                    horizontal[(ly, c)],
                ]
            else:
                boundary = [
                    horizontal[(k, c)],
                    horizontal[(k + 1, c)],
                    vertical[(k, c)],
                    vertical[(k, c + 1)],
                ]
            boundaries.append(sorted(boundary))
    geom.plaquette_boundaries = boundaries

    # fill link incidences from the star / boundary tables
    vert_of_link = {l.id: [] for l in links}
    for v, star in enumerate(stars):
        for lid in star:
            vert_of_link[lid].append(v)
    plaq_of_link = {l.id: [] for l in links}
    for p, boundary in enumerate(boundaries):
        for lid in boundary:
            plaq_of_link[lid].append(p)
    for l in links:
        l.vertices = tuple(sorted(vert_of_link[l.id]))
        l.plaquettes = tuple(sorted(plaq_of_link[l.id]))

    classes = []
    for l in links:
        rough = len(l.vertices) < 2
        smooth = len(l.plaquettes) < 2
        if rough and smooth:
            classes.append("corner")
        elif rough:
            classes.append("rough")
        elif smooth:
            classes.append("smooth")
        else:
            classes.append("bulk")
    geom.link_class = classes

    geom.dual_adjacency = [
        (l.plaquettes[0], l.plaquettes[1], l.id)
        for l in links
        if len(l.plaquettes) == 2
    ]
    return geom


def logical_supports(geom: LatticeGeometry):
    """Logical X on the top rough row; logical Z down the left smooth column."""
    lx_support = list(geom.top_dangling())
    lz_support = list(geom.left_path())
    return lx_support, lz_support


def symmetry_supports(geom: LatticeGeometry):
    """Charge-parity support (all rough links) and flux-parity support (all smooth)."""
    rough_all = geom.rough_links()
    smooth_all = geom.left_path() + geom.right_path()
    return rough_all, smooth_all


def geometry_json(geom: LatticeGeometry) -> dict:
    return {
        "lx": geom.lx,
        "ly": geom.ly,
        "n_links": geom.n_links,
        "n_vertices": geom.n_vertices,
        "n_plaquettes": geom.n_plaquettes,
        "links": [
            {
                "id": l.id,
                "kind": l.kind,
                "row": l.row,
                "col": l.col,
                "vertices": list(l.vertices),
                "plaquettes": list(l.plaquettes),
                "class": geom.link_class[l.id],
            }
            for l in geom.links
        ],
        "vertex_stars": [list(s) for s in geom.vertex_stars],
        "plaquette_boundaries": [list(b) for b in geom.plaquette_boundaries],
        "logical_x_support": logical_supports(geom)[0],
        "logical_z_support": logical_supports(geom)[1],
        "decohered_links": geom.decohered_links(),
    }


def ascii_art(geom: LatticeGeometry) -> str:
    """Small diagram for docs and eyeballing; o = vertex, dots = dangling."""
    lines = []
    top = "  " + "   ".join("." for _ in range(geom.lx))
    lines.append(top)
    for r in range(1, geom.ly + 1):
        row = "  " + "---".join("o" for _ in range(geom.lx))
        lines.append(row)
        if r < geom.ly:
            lines.append("  " + "   ".join("|" for _ in range(geom.lx)))
    lines.append(top)
    lines.append(f"  ({geom.lx} x {geom.ly} vertices, {geom.n_links} links)")
    return "\n".join(lines)
