"""Conservation laws, Roe numerical fluxes, and boundary conditions.

All state arguments are arrays of shape (m, ...) so the same code path serves
point evaluations and whole-face batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class AdmissibilityError(RuntimeError):
    """State left the admissible set (e.g. non-positive density or pressure)."""


def _as_state(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return u[None] if u.ndim == 0 else u


class ConservationLaw:
    """Base interface: flux, Roe flux, wave speeds, optional source."""

    m: int = 1
    name: str = "law"

    def flux(self, u, x=None) -> np.ndarray:
        raise NotImplementedError

    def roe_flux(self, uL, uR, x=None, entropy_fix: bool = False) -> np.ndarray:
        raise NotImplementedError

    def max_wave_speed(self, u, x=None) -> float:
        raise NotImplementedError

    def source(self, u, x) -> np.ndarray:
        return np.zeros_like(_as_state(u))

    def has_source(self) -> bool:
        return False

    def admissible(self, u) -> np.ndarray:
        """Pointwise physical-admissibility mask (shape of u without the
        component axis)."""
        return np.ones(_as_state(u).shape[1:], dtype=bool)


@dataclass
class Convection(ConservationLaw):
    """Scalar linear convection with constant velocity beta."""

    beta: float = 1.0
    m: int = 1
    name: str = "convection"

    def flux(self, u, x=None):
        return self.beta * _as_state(u)

    def roe_flux(self, uL, uR, x=None, entropy_fix: bool = False):
        uL, uR = _as_state(uL), _as_state(uR)
        return 0.5 * self.beta * (uL + uR) - 0.5 * abs(self.beta) * (uR - uL)

    def max_wave_speed(self, u, x=None):
        return abs(self.beta)


@dataclass
class Burgers(ConservationLaw):
    """Inviscid Burgers equation, F(u) = u^2 / 2."""

    m: int = 1
    name: str = "burgers"

    def flux(self, u, x=None):
        u = _as_state(u)
        return 0.5 * u * u

    def roe_flux(self, uL, uR, x=None, entropy_fix: bool = False):
        uL, uR = _as_state(uL), _as_state(uR)
        a = 0.5 * (uL + uR)  # Roe speed
        return 0.5 * (self.flux(uL) + self.flux(uR)) - 0.5 * np.abs(a) * (uR - uL)

    def max_wave_speed(self, u, x=None):
        return float(np.max(np.abs(u)))


def _euler_primitives(u, gamma_a):
    rho = u[0]
    if np.any(rho <= 0):
        raise AdmissibilityError("non-positive density")
    vel = u[1] / rho
    p = (gamma_a - 1.0) * (u[2] - 0.5 * rho * vel * vel)
    if np.any(p <= 0):
        raise AdmissibilityError("non-positive pressure")
    return rho, vel, p


def euler_state_from_primitives(rho, vel, p, gamma_a) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    return np.stack([
        rho,
        rho * vel,
        np.asarray(p) / (gamma_a - 1.0) + 0.5 * rho * np.asarray(vel) ** 2,
    ])


def _fix_abs(lam, eps, entropy_fix):
    """|lambda|, optionally smoothed near zero (Harten)."""
    a = np.abs(lam)
    if not entropy_fix:
        return a
    small = a < eps
    return np.where(small, lam * lam / (2.0 * eps) + 0.5 * eps, a)


@dataclass
class Euler1D(ConservationLaw):
    """1D compressible Euler equations for an ideal gas."""

    gamma_a: float = 1.4
    m: int = 3
    name: str = "euler1d"

    def primitives(self, u):
        return _euler_primitives(_as_state(u), self.gamma_a)

    def admissible(self, u):
        u = _as_state(u)
        rho = u[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            p = (self.gamma_a - 1.0) * (u[2] - 0.5 * u[1] * u[1] / rho)
        return (rho > 0.0) & (p > 0.0)

    def flux(self, u, x=None):
        u = _as_state(u)
        rho, vel, p = _euler_primitives(u, self.gamma_a)
        return np.stack([u[1], u[1] * vel + p, (u[2] + p) * vel])

    def roe_flux(self, uL, uR, x=None, entropy_fix: bool = False):
        uL, uR = _as_state(uL), _as_state(uR)
        g = self.gamma_a
        rhoL, vL, pL = _euler_primitives(uL, g)
        rhoR, vR, pR = _euler_primitives(uR, g)
        HL = (uL[2] + pL) / rhoL
        HR = (uR[2] + pR) / rhoR
        sL, sR = np.sqrt(rhoL), np.sqrt(rhoR)
        w = sL / (sL + sR)
        vt = w * vL + (1.0 - w) * vR
        Ht = w * HL + (1.0 - w) * HR
        c2 = (g - 1.0) * (Ht - 0.5 * vt * vt)
        if np.any(c2 <= 0):
            raise AdmissibilityError("negative Roe-averaged sound speed")
        ct = np.sqrt(c2)

        d = uR - uL
        a2 = (g - 1.0) / c2 * (d[0] * (Ht - vt * vt) + vt * d[1] - d[2])
        a1 = (d[0] * (vt + ct) - d[1] - ct * a2) / (2.0 * ct)
        a3 = d[0] - a1 - a2

        eps = 0.05 * (np.abs(vt) + ct)
        l1 = _fix_abs(vt - ct, eps, entropy_fix)
        l2 = _fix_abs(vt, eps, entropy_fix)
        l3 = _fix_abs(vt + ct, eps, entropy_fix)

        diss = np.stack([
            a1 * l1 + a2 * l2 + a3 * l3,
            a1 * l1 * (vt - ct) + a2 * l2 * vt + a3 * l3 * (vt + ct),
            a1 * l1 * (Ht - vt * ct) + a2 * l2 * 0.5 * vt * vt + a3 * l3 * (Ht + vt * ct),
        ])
        return 0.5 * (self.flux(uL) + self.flux(uR)) - 0.5 * diss

    def max_wave_speed(self, u, x=None):
        rho, vel, p = _euler_primitives(_as_state(u), self.gamma_a)
        return float(np.max(np.abs(vel) + np.sqrt(self.gamma_a * p / rho)))


def nozzle_area(x) -> tuple[np.ndarray, np.ndarray]:
    """Nozzle cross-section A(x) with throat height 0.8, and its derivative."""
    x = np.asarray(x, dtype=float)
    throat = 0.8
    theta = np.pi * (x - 0.5) / 0.8
    inside = (x >= 0.1) & (x <= 0.9)
    A = np.where(inside, 1.0 - (1.0 - throat) * np.cos(theta) ** 2, 1.0)
    dA = np.where(inside, (1.0 - throat) * (np.pi / 0.8) * np.sin(2.0 * theta), 0.0)
    return A, dA


@dataclass
class NozzleEuler(ConservationLaw):
    """Quasi-1D Euler flow in a duct of area A(x).

    Conserved variables are area-weighted: (A rho, A rho u, A rho E); the
    momentum equation carries the source p * dA/dx.
    """

    gamma_a: float = 1.4
    m: int = 3
    name: str = "nozzle"
    euler: Euler1D = field(init=False)

    def __post_init__(self):
        self.euler = Euler1D(gamma_a=self.gamma_a)

    def flux(self, u, x=None):
        u = _as_state(u)
        A, _ = nozzle_area(x)
        return A * self.euler.flux(u / A)

    def roe_flux(self, uL, uR, x=None, entropy_fix: bool = False):
        uL, uR = _as_state(uL), _as_state(uR)
        A, _ = nozzle_area(x)
        return A * self.euler.roe_flux(uL / A, uR / A, entropy_fix=entropy_fix)

    def source(self, u, x):
        u = _as_state(u)
        A, dA = nozzle_area(x)
        _, _, p = _euler_primitives(u / A, self.gamma_a)
        out = np.zeros_like(u)
        out[1] = p * dA
        return out

    def has_source(self):
        return True

    def max_wave_speed(self, u, x=None):
        u = _as_state(u)
        A, _ = nozzle_area(x) if x is not None else (np.ones_like(u[0]), None)
        return self.euler.max_wave_speed(u / A)

    def admissible(self, u):
        # the positive area factor does not change the signs being tested
        return self.euler.admissible(u)


@dataclass(frozen=True)
class BoundaryCondition:
    """One of periodic | prescribed | wall | farfield.

    prescribed carries a full conserved state; farfield carries (rho, u, M)
    from which the full state is reconstructed via c = u/M, p = rho c^2 / gamma.
    """

    kind: str
    state: tuple | None = None          # conserved state, for "prescribed"
    farfield: tuple | None = None       # (rho, u, M), for "farfield"

    def __post_init__(self):
        if self.kind not in ("periodic", "prescribed", "wall", "farfield"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "farfield":
            if self.farfield is None or self.farfield[2] == 0:
                raise ValueError("farfield needs (rho, u, M) with M != 0")
        if self.kind == "prescribed" and self.state is None:
            raise ValueError("prescribed boundary needs a conserved state")


def farfield_state(rho: float, vel: float, mach: float, gamma_a: float) -> np.ndarray:
    """Full conserved state from (rho, u, M): c = u/M, p = rho c^2 / gamma."""
    if mach == 0:
        raise ValueError("farfield Mach number must be non-zero")
    c = vel / mach
    p = rho * c * c / gamma_a
    return euler_state_from_primitives(rho, vel, p, gamma_a)


def _characteristic_farfield(u_int: np.ndarray, u_far: np.ndarray, side: int,
                             gamma_a: float) -> np.ndarray:
    """Boundary state from linearized characteristic relations.

    Outgoing invariants are extrapolated from the interior; incoming ones are
    taken from the farfield data.  For subsonic outflow this pins the boundary
    pressure to the farfield pressure, which is what selects the choked,
    shock-carrying branch of a transonic duct flow.  ``side`` is the outward
    normal direction (-1 left boundary, +1 right).
    """
    rho_d, u_d, p_d = _primitives(u_int, gamma_a)
    rho_a, u_a, p_a = _primitives(u_far, gamma_a)
    c_d = np.sqrt(gamma_a * p_d / rho_d)
    rc = rho_d * c_d
    qn_d = side * u_d
    if qn_d >= c_d:                      # supersonic outflow: pure extrapolation
        rho_b, u_b, p_b = rho_d, u_d, p_d
    elif qn_d <= -c_d:                   # supersonic inflow: pure farfield
        rho_b, u_b, p_b = rho_a, u_a, p_a
    elif qn_d >= 0.0:                    # subsonic outflow
        p_b = p_a
        rho_b = rho_d + (p_b - p_d) / (c_d * c_d)
        u_b = u_d + side * (p_d - p_b) / rc
    else:                                # subsonic inflow
        p_b = 0.5 * (p_a + p_d - rc * side * (u_a - u_d))
        rho_b = rho_a + (p_b - p_a) / (c_d * c_d)
        u_b = u_a - side * (p_a - p_b) / rc
    return euler_state_from_primitives(rho_b, u_b, p_b, gamma_a)


def _primitives(state: np.ndarray, gamma_a: float):
    rho = state[0]
    vel = state[1] / rho
    p = (gamma_a - 1.0) * (state[2] - 0.5 * rho * vel * vel)
    return rho, vel, p


def boundary_ghost(bc: BoundaryCondition, u_interior, law: ConservationLaw,
                   t: float = 0.0, x: float | None = None,
                   side: int = 1) -> np.ndarray:
    """Ghost state seen across a domain boundary face."""
    u_interior = _as_state(u_interior)
    if bc.kind == "periodic":
        raise ValueError("periodic boundaries are handled by wrap-around, not ghosts")
    if bc.kind == "wall":
        ghost = u_interior.copy()
        ghost[1] = -ghost[1]
        return ghost
    gamma_a = getattr(law, "gamma_a", 1.4)
    if bc.kind == "prescribed":
        ghost = np.asarray(bc.state, dtype=float)
        return ghost.reshape(u_interior.shape[0], *([1] * (u_interior.ndim - 1)))
    far = farfield_state(*bc.farfield, gamma_a)
    area = 1.0
    u_euler = u_interior.reshape(u_interior.shape[0])
    if isinstance(law, NozzleEuler) and x is not None:
        area, _ = nozzle_area(x)
        area = float(area)
        u_euler = u_euler / area
    ghost = _characteristic_farfield(u_euler, far, side, gamma_a) * area
    return ghost.reshape(u_interior.shape[0], *([1] * (u_interior.ndim - 1)))


def make_law(name: str, **kwargs) -> ConservationLaw:
    laws = {
        "convection": Convection,
        "burgers": Burgers,
        "euler1d": Euler1D,
        "nozzle": NozzleEuler,
    }
    if name not in laws:
        raise ValueError(f"unknown conservation law {name!r}")
    return laws[name](**kwargs)
