"""Conforming triangle meshes with oriented faces.

Faces are stored as sorted vertex pairs (v0 < v1); the face parameter s in
[0, 1] runs from v0 to v1 and the face normal is the clockwise rotation of
that tangent.  Each element records, per local edge, the global face id,
whether its local direction agrees with the global parameter, and the sign
relating the global normal to its own outward normal.  Boundary faces carry
Dirichlet data in this solver.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Mesh:
    vertices: np.ndarray  # (nv, 2)
    elements: np.ndarray  # (ne, 3) counterclockwise
    faces: np.ndarray  # (nf, 2) sorted vertex pairs
    elem_faces: np.ndarray  # (ne, 3) face id of local edge e = (v_e, v_{e+1})
    elem_orient: np.ndarray  # (ne, 3) 0 if local edge runs v0->v1 of the face
    elem_sign: np.ndarray  # (ne, 3) +-1, global normal vs element outward
    face_elems: np.ndarray  # (nf, 2) adjacent elements, -1 for none
    face_normal: np.ndarray  # (nf, 2) unit
    face_len: np.ndarray  # (nf,)
    boundary: np.ndarray  # (nf,) bool
    grid_n: int | None = field(default=None)  # set for uniform_square_mesh

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def n_interior_faces(self):
        return int(np.count_nonzero(~self.boundary))

    def element_corners(self, e):
        return self.vertices[self.elements[e]]

    def dump_text(self):
        """Plain-text listing of vertices, elements, and faces."""
        lines = [f"vertices {self.n_vertices}"]
        for i, (x, y) in enumerate(self.vertices):
            lines.append(f"v {i} {x:.17g} {y:.17g}")
        lines.append(f"elements {self.n_elements}")
        for i, tri in enumerate(self.elements):
            lines.append(f"e {i} {tri[0]} {tri[1]} {tri[2]}")
        lines.append(f"faces {self.n_faces}")
        for i, (a, b) in enumerate(self.faces):
            tag = "boundary" if self.boundary[i] else "interior"
            lines.append(f"f {i} {a} {b} {tag}")
        return "\n".join(lines) + "\n"


def mesh_from_cells(vertices, cells):
    """Build the face topology for given vertices and CCW triangles."""
    vertices = np.ascontiguousarray(vertices, dtype=float)
    cells = np.ascontiguousarray(cells, dtype=np.int64)
    if cells.ndim != 2 or cells.shape[1] != 3:
        raise ValueError("cells must be (ne, 3)")
    v = vertices[cells]
    e1, e2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(cross <= 0):
        bad = int(np.argmax(cross <= 0))
        raise ValueError(f"element {bad} is not counterclockwise (signed area {cross[bad] / 2:.3e})")

    ne = cells.shape[0]
    edges = np.stack(
        [cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]], axis=1
    )  # (ne, 3, 2), local direction
    sorted_edges = np.sort(edges.reshape(-1, 2), axis=1)
    faces, inverse = np.unique(sorted_edges, axis=0, return_inverse=True)
    elem_faces = inverse.reshape(ne, 3).astype(np.int64)
    elem_orient = (edges[:, :, 0] != faces[elem_faces][:, :, 0]).astype(np.int64)

    nf = faces.shape[0]
    face_elems = np.full((nf, 2), -1, dtype=np.int64)
    for e in range(ne):
        for le in range(3):
            f = elem_faces[e, le]
            if face_elems[f, 0] < 0:
                face_elems[f, 0] = e
            elif face_elems[f, 1] < 0:
                face_elems[f, 1] = e
            else:
                raise ValueError(f"face {f} shared by more than two elements")
    boundary = face_elems[:, 1] < 0

    tang = vertices[faces[:, 1]] - vertices[faces[:, 0]]
    face_len = np.linalg.norm(tang, axis=1)
    if np.any(face_len <= 0):
        raise ValueError("zero-length face")
    face_normal = np.column_stack([tang[:, 1], -tang[:, 0]]) / face_len[:, None]

    centroids = v.mean(axis=1)
    mids = 0.5 * (vertices[faces[:, 0]] + vertices[faces[:, 1]])
    d = mids[elem_faces] - centroids[:, None, :]  # (ne, 3, 2)
    elem_sign = np.where(
        np.einsum("efj,efj->ef", d, face_normal[elem_faces]) > 0, 1, -1
    ).astype(np.int64)

    return Mesh(
        vertices=vertices,
        elements=cells,
        faces=faces,
        elem_faces=elem_faces,
        elem_orient=elem_orient,
        elem_sign=elem_sign,
        face_elems=face_elems,
        face_normal=face_normal,
        face_len=face_len,
        boundary=boundary,
    )


def uniform_square_mesh(n):
    """n x n x 2 right-triangle mesh of the unit square.

    Each grid cell splits along its lower-left to upper-right diagonal; both
    triangles are counterclockwise.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    cells = []
    for i in range(n):
        for j in range(n):
            ll, lr = vid(i, j), vid(i + 1, j)
            ul, ur = vid(i, j + 1), vid(i + 1, j + 1)
            cells.append([ll, lr, ur])
            cells.append([ll, ur, ul])
    mesh = mesh_from_cells(vertices, np.array(cells))
    mesh.grid_n = n
    return mesh
