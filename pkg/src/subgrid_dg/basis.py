"""Modal Legendre + sub-cell indicator basis, quadrature, and mass matrices.

The local space on an element combines zero-average Legendre modes of degree
1..p with the characteristic functions of the n sub-cells.  For p = 0 this is
the piecewise-constant finite volume space; for n = 1 it is standard modal DG.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg


def legendre_eval(i: int, x) -> np.ndarray | float:
    """Value of the i-th Legendre polynomial, normalized so L_i(1) = 1."""
    if i < 0:
        raise ValueError("mode index must be non-negative")
    coeffs = np.zeros(i + 1)
    coeffs[i] = 1.0
    return npleg.legval(x, coeffs)


def legendre_deriv(i: int, x) -> np.ndarray | float:
    """Derivative of the i-th Legendre polynomial on [-1, 1]."""
    coeffs = np.zeros(i + 1)
    coeffs[i] = 1.0
    return npleg.legval(x, npleg.legder(coeffs))


def gauss_rule(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], exact up to degree 2q-1."""
    if q < 1:
        raise ValueError("quadrature point count must be positive")
    return npleg.leggauss(q)


@dataclass(frozen=True)
class ReferenceElement:
    """Cached quantities on [-1, 1] shared by all elements with the same (p, n).

    Basis ordering: Legendre modes 1..p first, then sub-cell indicators
    left to right.  All mass-type matrices scale to a physical element of
    width h by the factor h/2.
    """

    p: int
    n: int
    n_quad: int
    quad_ref: np.ndarray        # (n, q) quadrature nodes per sub-cell, in [-1, 1]
    quad_w: np.ndarray          # (n, q) weights, summing to 2
    phi: np.ndarray             # (dof, n, q) basis values at quadrature nodes
    dphi_ref: np.ndarray        # (dof, n, q) reference derivatives (0 for indicators)
    sub_edges: np.ndarray       # (n+1,) sub-cell boundaries in [-1, 1]
    leg_face: np.ndarray        # (p+1, n+1) Legendre values (modes 0..p) at sub_edges
    leg_sub_avg: np.ndarray     # (p+1, n) sub-cell averages of Legendre modes 0..p
    mass: np.ndarray            # (dof, dof) Gram matrix on [-1, 1]
    mass_pp: np.ndarray         # (dof, dof) penalty mass: polynomial block only
    proj_ho: np.ndarray         # (p, dof) coefficients of pi_ho of each basis function

    @property
    def dof(self) -> int:
        return self.p + self.n


@lru_cache(maxsize=None)
def reference_element(p: int, n: int, n_quad: int | None = None) -> ReferenceElement:
    if p < 0:
        raise ValueError("polynomial degree must be >= 0")
    if n < 1:
        raise ValueError("sub-cell count must be >= 1")
    q = n_quad if n_quad is not None else p + 2
    dof = p + n

    g, w = gauss_rule(q)
    edges = np.linspace(-1.0, 1.0, n + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 1.0 / n
    quad_ref = mid[:, None] + half * g[None, :]
    quad_w = np.broadcast_to(w[None, :] * half, (n, q)).copy()

    # Legendre modes 0..p at quadrature nodes, faces, and their sub-cell averages
    leg_q = np.empty((p + 1, n, q))
    dleg_q = np.empty((p + 1, n, q))
    leg_face = np.empty((p + 1, n + 1))
    for i in range(p + 1):
        leg_q[i] = legendre_eval(i, quad_ref)
        dleg_q[i] = legendre_deriv(i, quad_ref)
        leg_face[i] = legendre_eval(i, edges)
    # average of L_i over sub-cell s: antiderivative ratio, done by quadrature
    leg_sub_avg = np.einsum("isq,sq->is", leg_q, quad_w) / (2.0 / n)

    phi = np.zeros((dof, n, q))
    dphi = np.zeros((dof, n, q))
    phi[:p] = leg_q[1:]
    dphi[:p] = dleg_q[1:]
    for j in range(n):
        phi[p + j, j, :] = 1.0

    mass = np.einsum("isq,jsq,sq->ij", phi, phi, quad_w)
    mass = 0.5 * (mass + mass.T)

    # pi_ho coefficients of each basis function (zero-average Legendre modes)
    leg_norms = 2.0 / (2.0 * np.arange(1, p + 1) + 1.0)  # (L_i, L_i) on [-1, 1]
    proj_ho = np.zeros((p, dof))
    if p > 0:
        inner = np.einsum("isq,jsq,sq->ij", leg_q[1:], phi, quad_w)  # (p, dof)
        proj_ho = inner / leg_norms[:, None]
    # Penalty mass: Gram matrix of the high-order component of the direct-sum
    # decomposition (polynomial coefficients only).  Penalizing the L2
    # projection pi_ho instead would leave oscillatory piecewise-constant /
    # polynomial combinations unpenalized and the large-gamma limit would not
    # be the monotone sub-cell-average representation.
    mass_pp = np.zeros((dof, dof))
    if p > 0:
        mass_pp[:p, :p] = np.diag(leg_norms)

    return ReferenceElement(
        p=p, n=n, n_quad=q,
        quad_ref=quad_ref, quad_w=quad_w,
        phi=phi, dphi_ref=dphi,
        sub_edges=edges, leg_face=leg_face, leg_sub_avg=leg_sub_avg,
        mass=mass, mass_pp=mass_pp, proj_ho=proj_ho,
    )


@dataclass(frozen=True)
class ElementSpace:
    """Discretization descriptor for one element [x_left, x_right]."""

    p: int
    n: int
    x_left: float = -1.0
    x_right: float = 1.0

    def __post_init__(self):
        if self.x_right <= self.x_left:
            raise ValueError("element must have positive width")
        # trigger validation of (p, n)
        reference_element(self.p, self.n)

    @property
    def ref(self) -> ReferenceElement:
        return reference_element(self.p, self.n)

    @property
    def n_poly(self) -> int:
        return self.p

    @property
    def dof(self) -> int:
        return self.p + self.n

    @property
    def width(self) -> float:
        return self.x_right - self.x_left

    def to_reference(self, x):
        return 2.0 * (np.asarray(x, dtype=float) - self.x_left) / self.width - 1.0

    def to_physical(self, xi):
        return self.x_left + 0.5 * (np.asarray(xi, dtype=float) + 1.0) * self.width

    def quad_points(self) -> np.ndarray:
        """(n, q) physical quadrature nodes."""
        return self.to_physical(self.ref.quad_ref)

    def quad_weights(self) -> np.ndarray:
        """(n, q) physical quadrature weights (sum to element width)."""
        return self.ref.quad_w * (self.width / 2.0)

    def subcell_of(self, x) -> np.ndarray:
        xi = self.to_reference(x)
        idx = np.floor((xi + 1.0) * self.n / 2.0).astype(int)
        return np.clip(idx, 0, self.n - 1)


def basis_eval(space: ElementSpace, i: int, x) -> np.ndarray | float:
    """Value of local basis function i at physical coordinate(s) x."""
    if not 0 <= i < space.dof:
        raise IndexError(f"basis index {i} out of range for dof={space.dof}")
    xi = space.to_reference(x)
    if i < space.p:
        return legendre_eval(i + 1, xi)
    j = i - space.p
    return np.where(space.subcell_of(x) == j, 1.0, 0.0)


def assemble_mass(space: ElementSpace) -> np.ndarray:
    """Element mass matrix M_ij = (phi_j, phi_i)_K."""
    return space.ref.mass * (space.width / 2.0)


def assemble_penalty_mass(space: ElementSpace) -> np.ndarray:
    """Singular penalty mass matrix acting on the polynomial coefficients:
    the Legendre Gram block in the upper-left corner, zero elsewhere."""
    return space.ref.mass_pp * (space.width / 2.0)
