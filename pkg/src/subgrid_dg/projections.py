"""Local projections onto the combined space and the injectivity checker.

Coefficient vectors follow the basis ordering of `basis`: p zero-average
Legendre modes first, then the n sub-cell indicator coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import (
    ElementSpace,
    assemble_mass,
    assemble_penalty_mass,
    gauss_rule,
    legendre_eval,
)

RANK_TOL = 1e-10         # relative singular-value cutoff for injectivity
LSTSQ_COND_LIMIT = 1e7   # beyond this, normal equations would be unreliable


class NonInjectiveError(ValueError):
    """Sub-cell averaging is rank deficient on the polynomial space."""


def _quad_rhs(f, space: ElementSpace, breakpoints=None) -> np.ndarray:
    """Inner products (f, phi_i)_K via per-sub-cell Gauss quadrature.

    `breakpoints` lists known discontinuity locations of f; sub-cells that
    straddle one are integrated piecewise so the rule never crosses a jump.
    """
    ref = space.ref
    g, w = gauss_rule(ref.n_quad)
    b = np.zeros(space.dof)
    edges = space.to_physical(ref.sub_edges)
    for s in range(space.n):
        xl, xr = edges[s], edges[s + 1]
        cuts = [xl, xr]
        if breakpoints is not None:
            cuts += [float(c) for c in breakpoints if xl < c < xr]
        cuts = sorted(cuts)
        for a, c in zip(cuts[:-1], cuts[1:]):
            xq = 0.5 * (a + c) + 0.5 * (c - a) * g
            wq = 0.5 * (c - a) * w
            fv = np.asarray(f(xq), dtype=float)
            xi = space.to_reference(xq)
            for i in range(space.p):
                b[i] += np.sum(wq * fv * legendre_eval(i + 1, xi))
            b[space.p + s] += np.sum(wq * fv)
    return b


def project_l2(f, space: ElementSpace, breakpoints=None) -> np.ndarray:
    """L2 projection of f onto the combined local space; solves M c = b."""
    M = assemble_mass(space)
    b = _quad_rhs(f, space, breakpoints)
    return np.linalg.solve(M, b)


def project_ho(c: np.ndarray, space: ElementSpace) -> np.ndarray:
    """Coefficients (Legendre modes 1..p) of the zero-average polynomial
    L2 projection of the function represented by c."""
    c = np.asarray(c, dtype=float)
    if c.shape[-1] != space.dof:
        raise ValueError("coefficient length does not match space dof")
    return c @ space.ref.proj_ho.T


def project_lo(c: np.ndarray, space: ElementSpace) -> np.ndarray:
    """Sub-cell averages of the function represented by c."""
    c = np.asarray(c, dtype=float)
    if c.shape[-1] != space.dof:
        raise ValueError("coefficient length does not match space dof")
    poly_avg = c[..., : space.p] @ space.ref.leg_sub_avg[1:]
    return poly_avg + c[..., space.p:]


def project_penalized(f, space: ElementSpace, gamma: float, breakpoints=None) -> np.ndarray:
    """Penalized L2 projection: solves (M + gamma * M_pp) c = b.

    gamma = 0 recovers project_l2; gamma -> infinity drives the polynomial
    modes to zero, leaving the monotone sub-cell-average projection.
    """
    if gamma < 0:
        raise ValueError("penalty parameter must be non-negative")
    M = assemble_mass(space) + gamma * assemble_penalty_mass(space)
    b = _quad_rhs(f, space, breakpoints)
    return np.linalg.solve(M, b)


def avg_matrix(space: ElementSpace) -> np.ndarray:
    """(n, p+1) sub-cell averages of the full polynomial basis L_0..L_p."""
    return space.ref.leg_sub_avg.T


def project_avg_preserving(c: np.ndarray, space: ElementSpace) -> np.ndarray:
    """Best full polynomial (L_0..L_p coefficients) matching the sub-cell
    averages of c in the sub-cell-measure weighted least-squares sense.

    Raises NonInjectiveError when averaging is rank deficient on the
    polynomial space (in 1D this happens iff n < p + 1).
    """
    avgs = project_lo(c, space)
    G = avg_matrix(space)
    # uniform sub-grid: all sub-cell measures equal, weights drop out of argmin
    sol, _, rank, sv = np.linalg.lstsq(G, avgs, rcond=RANK_TOL)
    if rank < space.p + 1:
        raise NonInjectiveError(
            f"sub-cell averaging is rank deficient for (p={space.p}, n={space.n})"
        )
    if sv[0] / sv[-1] > LSTSQ_COND_LIMIT:
        # rank-revealing route is already in use; flag pathological conditioning
        raise NonInjectiveError(
            f"average matrix nearly singular for (p={space.p}, n={space.n}): "
            f"cond={sv[0] / sv[-1]:.3e}"
        )
    return sol


@dataclass(frozen=True)
class InjectivityReport:
    p: int
    r: int
    d: int
    n: int
    dofs: int
    injective: bool
    smin: float
    smax: float

    def as_dict(self) -> dict:
        return {
            "p": self.p, "r": self.r, "d": self.d, "n": self.n,
            "dofs": self.dofs, "injective": self.injective,
            "smin": self.smin, "smax": self.smax,
        }


def _simplex_subdivision_2d(r: int) -> list[np.ndarray]:
    """Uniform tiling of the unit triangle into (r+1)^2 congruent triangles."""
    k = r + 1
    tris = []
    for j in range(k):
        for i in range(k - j):
            v = np.array([[i, j], [i + 1, j], [i, j + 1]], dtype=float) / k
            tris.append(v)
            if i + j <= r - 1:
                w = np.array([[i + 1, j], [i + 1, j + 1], [i, j + 1]], dtype=float) / k
                tris.append(w)
    return tris


def _triangle_monomial_averages(tri: np.ndarray, exponents) -> np.ndarray:
    """Averages of x^a y^b over a triangle via a Duffy-mapped Gauss rule."""
    g, w = gauss_rule(12)
    a = 0.5 * (g + 1.0)
    wa = 0.5 * w
    # Duffy map of the unit square onto the reference triangle
    xi = a[:, None] * (1.0 - a[None, :])
    eta = np.broadcast_to(a[None, :], xi.shape)
    jac = (1.0 - a[None, :])
    wq = (wa[:, None] * wa[None, :] * jac).ravel()
    v0, v1, v2 = tri
    x = v0[0] + (v1[0] - v0[0]) * xi + (v2[0] - v0[0]) * eta
    y = v0[1] + (v1[1] - v0[1]) * xi + (v2[1] - v0[1]) * eta
    x, y = x.ravel(), y.ravel()
    # wq integrates over the reference triangle (area 1/2); averages need 1/area_ref
    out = np.array([np.sum(wq * x**ax * y**ay) for ax, ay in exponents])
    return out / 0.5


def check_injectivity(p: int, r: int, d: int) -> InjectivityReport:
    """Numerical rank check of sub-cell averaging on the full polynomial space.

    Builds the matrix of averages of a monomial basis of total degree <= p over
    the uniform sub-division of the unit simplex into (r+1)^d congruent cells
    and inspects its singular values.
    """
    if p < 0 or r < 0:
        raise ValueError("p and r must be non-negative")
    if d not in (1, 2):
        raise ValueError("dimension must be 1 or 2")
    if d == 1:
        k = r + 1
        dofs = p + 1
        edges = np.linspace(0.0, 1.0, k + 1)
        powers = np.arange(p + 1)
        # average of x^m over [a, b] = (b^{m+1} - a^{m+1}) / ((m+1)(b-a))
        upper = edges[1:, None] ** (powers[None, :] + 1)
        lower = edges[:-1, None] ** (powers[None, :] + 1)
        A = (upper - lower) / ((powers[None, :] + 1) * (1.0 / k))
        n = k
    else:
        tris = _simplex_subdivision_2d(r)
        exponents = [(ax, ay) for tot in range(p + 1)
                     for ax in range(tot + 1) for ay in [tot - ax]]
        dofs = (p + 1) * (p + 2) // 2
        A = np.array([_triangle_monomial_averages(t, exponents) for t in tris])
        n = len(tris)

    sv = np.linalg.svd(A, compute_uv=False)
    smax = float(sv[0])
    smin = float(sv[-1]) if A.shape[0] >= A.shape[1] else 0.0
    injective = A.shape[0] >= A.shape[1] and smin > RANK_TOL * smax
    return InjectivityReport(p=p, r=r, d=d, n=n, dofs=dofs,
                             injective=injective, smin=smin, smax=smax)
