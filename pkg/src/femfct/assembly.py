"""P1 finite element assembly on triangular meshes.

Assembles the consistent mass matrix, the convection-diffusion-reaction
stiffness matrix, and the load vector.  Variable coefficients are
integrated with a 3-point edge-midpoint quadrature rule (exact to degree
2); all matrices share the node-connectivity sparsity pattern.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse

# 3-point edge-midpoint rule, exact for polynomials of degree 2.
QUAD2_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
QUAD2_W = np.array([1.0, 1.0, 1.0]) / 3.0


def _zero(t, x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass
class ProblemSpec:
    """Data of the evolutionary convection-diffusion-reaction problem.

    Coefficient callables take (t, x, y) with array-valued x, y and must
    broadcast; ``b`` returns the velocity pair (bx, by).  ``c0`` is the
    positive lower bound of c - div(b)/2.
    """

    eps: float
    b: Callable
    c: Callable
    f: Callable
    u0: Callable
    c0: float
    t_end: float
    tau: float
    g: Callable = field(default=_zero)
    constant_coefficients: bool = True

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")


def _geometry(mesh):
    """Per-triangle corner coordinates, areas and constant P1 gradients."""
    p = mesh.nodes[mesh.triangles]  # (m, 3, 2)
    v1 = p[:, 1] - p[:, 0]
    v2 = p[:, 2] - p[:, 0]
    area = 0.5 * (v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])
    grads = np.empty((p.shape[0], 3, 2))
    for a in range(3):
        j, k = (a + 1) % 3, (a + 2) % 3
        grads[:, a, 0] = p[:, j, 1] - p[:, k, 1]
        grads[:, a, 1] = p[:, k, 0] - p[:, j, 0]
    grads /= (2.0 * area)[:, None, None]
    return p, area, grads


def _index_arrays(mesh):
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    return rows, cols


def _to_csr(mesh, local):
    rows, cols = _index_arrays(mesh)
    n = mesh.n_nodes
    mat = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sort_indices()
    return mat


def quad_points(mesh, bary):
    """Physical coordinates of barycentric quadrature points, (m, q, 2)."""
    p = mesh.nodes[mesh.triangles]
    return np.einsum("qa,mad->mqd", bary, p)


def assemble_mass(mesh) -> sparse.csr_matrix:
    """Consistent P1 mass matrix (exact element integration)."""
    _, area, _ = _geometry(mesh)
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = area[:, None, None] * ref[None, :, :]
    return _to_csr(mesh, local)


def assemble_stiffness(mesh, spec: ProblemSpec, t: float) -> sparse.csr_matrix:
    """Stiffness matrix of diffusion, convection, and reaction at time t."""
    _, area, grads = _geometry(mesh)
    pts = quad_points(mesh, QUAD2_BARY)  # (m, 3, 2)
    x, y = pts[..., 0], pts[..., 1]
    bx, by = spec.b(t, x, y)
    cval = spec.c(t, x, y)
    bx, by, cval = (np.broadcast_to(np.asarray(v, dtype=float), x.shape) for v in (bx, by, cval))

    local = spec.eps * np.einsum("mid,mjd->mij", grads, grads) * area[:, None, None]
    # (b . grad phi_j) phi_i and c phi_i phi_j with the 3-point rule;
    # phi_i at quadrature point q equals the barycentric coordinate
    bgrad = bx[..., None] * grads[:, None, :, 0] + by[..., None] * grads[:, None, :, 1]
    phi = QUAD2_BARY  # (q, i)
    local += area[:, None, None] * np.einsum("q,qi,mqj->mij", QUAD2_W, phi, bgrad)
    local += area[:, None, None] * np.einsum("q,mq,qi,qj->mij", QUAD2_W, cval, phi, phi)
    return _to_csr(mesh, local)


def assemble_load(mesh, spec: ProblemSpec, t: float) -> np.ndarray:
    """Load vector f_i = (f(t, .), phi_i) with the 3-point rule."""
    _, area, _ = _geometry(mesh)
    pts = quad_points(mesh, QUAD2_BARY)
    fval = np.broadcast_to(
        np.asarray(spec.f(t, pts[..., 0], pts[..., 1]), dtype=float), pts.shape[:2]
    )
    local = area[:, None] * np.einsum("q,mq,qi->mi", QUAD2_W, fval, QUAD2_BARY)
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.triangles.ravel(), local.ravel())
    return out


def apply_dirichlet(matrix, rhs, mesh, spec: ProblemSpec, t: float):
    """Replace boundary rows by identity rows with rhs g(t, node).

    Returns a new (matrix, rhs) pair; interior rows are untouched.
    """
    mat = matrix.tocsr().copy()
    rhs = np.array(rhs, dtype=float, copy=True)
    mask = mesh.boundary_mask
    row_of_entry = np.repeat(np.arange(mat.shape[0]), np.diff(mat.indptr))
    mat.data[mask[row_of_entry]] = 0.0
    diag_pos = np.flatnonzero(mat.indices == row_of_entry)
    drow = row_of_entry[diag_pos]
    mat.data[diag_pos[mask[drow]]] = 1.0
    bn = mesh.boundary_nodes
    rhs[bn] = spec.g(t, mesh.nodes[bn, 0], mesh.nodes[bn, 1])
    return mat, rhs
