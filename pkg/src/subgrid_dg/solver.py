"""Semi-discrete DG residual on the combined space and IMEX time stepping.

The state is a dense array U of shape (m, n_elements, dof) with the basis
ordering of `basis` (p Legendre modes, then n indicator coefficients).
Volume terms only touch the polynomial modes (indicators have zero
derivative); every sub-cell face flux is computed once and shared.  Surface
contributions of the continuous polynomial test modes telescope across
interior sub-cell faces, so they only see the element-boundary fluxes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import ElementSpace, reference_element
from .mesh import Mesh
from .physics import AdmissibilityError, BoundaryCondition, ConservationLaw, boundary_ghost
from .sensor import SensorConfig, SensorReport, evaluate_field_sensor

SQRT2 = np.sqrt(2.0)


class SolverAbort(RuntimeError):
    """Time integration failed (NaN/Inf or admissibility loss)."""


@dataclass(frozen=True)
class FieldState:
    """Global coefficient vector with its time stamp."""

    U: np.ndarray    # (m, n_elements, dof)
    time: float

    def copy(self) -> "FieldState":
        return FieldState(U=self.U.copy(), time=self.time)


@dataclass(frozen=True)
class IMEXTableau:
    """Additive Runge-Kutta tableau: implicit A/b, explicit A_hat/b_hat."""

    A: np.ndarray
    A_hat: np.ndarray
    b: np.ndarray
    b_hat: np.ndarray

    @property
    def stages(self) -> int:
        return len(self.b)


def ars222() -> IMEXTableau:
    """ARS(2,2,2) with alpha = 1 - 1/sqrt(2), delta = -2 sqrt(2)/3."""
    alpha = 1.0 - 1.0 / SQRT2
    delta = -2.0 * SQRT2 / 3.0
    A = np.array([
        [0.0, 0.0, 0.0],
        [0.0, alpha, 0.0],
        [0.0, 1.0 - alpha, alpha],
    ])
    A_hat = np.array([
        [0.0, 0.0, 0.0],
        [alpha, 0.0, 0.0],
        [delta, 1.0 - delta, 0.0],
    ])
    b = np.array([0.0, 1.0 - alpha, alpha])
    return IMEXTableau(A=A, A_hat=A_hat, b=b, b_hat=b.copy())


class Discretization:
    """Mesh + space + law + boundary conditions, with cached geometry."""

    def __init__(
        self,
        mesh: Mesh,
        p: int,
        law: ConservationLaw,
        bc_left: BoundaryCondition,
        bc_right: BoundaryCondition,
        sensor_config: SensorConfig = SensorConfig(),
        entropy_fix: bool = False,
    ):
        if (bc_left.kind == "periodic") != (bc_right.kind == "periodic"):
            raise ValueError("periodic boundaries must be applied to both ends")
        self.mesh = mesh
        self.law = law
        self.bc_left = bc_left
        self.bc_right = bc_right
        self.sensor_config = sensor_config
        self.entropy_fix = entropy_fix
        self.periodic = bc_left.kind == "periodic"

        self.p = p
        self.n = mesh.n_sub
        self.ref = reference_element(p, self.n)
        self.dof = self.ref.dof
        self.n_elements = mesh.n_elements
        self.space = ElementSpace(p, self.n)

        h = mesh.widths
        xl = mesh.element_boundaries[:-1]
        self.h = h
        # physical quadrature nodes/weights, shape (E, n, q)
        self.xq = xl[:, None, None] + 0.5 * (self.ref.quad_ref + 1.0)[None] * h[:, None, None]
        self.wq = self.ref.quad_w[None] * (h[:, None, None] / 2.0)
        # all sub-cell face positions, shape (E*n + 1,)
        sub_edges_phys = xl[:, None] + 0.5 * (self.ref.sub_edges[None, :-1] + 1.0) * h[:, None]
        self.xfaces = np.append(sub_edges_phys.ravel(), mesh.b)
        # volume kernel: w_ref * d(phi)/d(xi); the h factors of weight and
        # derivative cancel, so this is element independent
        self.vol_kernel = self.ref.dphi_ref * self.ref.quad_w[None]
        self.mass_inv = np.linalg.inv(self.ref.mass)
        self.leg_face = self.ref.leg_face

    # -- spatial operator ---------------------------------------------------

    def eval_at_quad(self, U: np.ndarray) -> np.ndarray:
        """Field values at all quadrature nodes, shape (m, E, n, q)."""
        return np.einsum("med,dsq->mesq", U, self.ref.phi)

    def face_traces(self, U: np.ndarray, t: float):
        """Left/right states at every sub-cell face, shape (m, E*n + 1)."""
        m = U.shape[0]
        E, n, p = self.n_elements, self.n, self.p
        poly_face = np.einsum("mei,ik->mek", U[:, :, :p], self.leg_face[1:])
        ind = U[:, :, p:]
        trace_l = (poly_face[:, :, :-1] + ind).reshape(m, E * n)  # from inside, at left face
        trace_r = (poly_face[:, :, 1:] + ind).reshape(m, E * n)   # from inside, at right face

        uL = np.empty((m, E * n + 1))
        uR = np.empty((m, E * n + 1))
        uL[:, 1:] = trace_r
        uR[:, :-1] = trace_l
        if self.periodic:
            uL[:, 0] = trace_r[:, -1]
            uR[:, -1] = trace_l[:, 0]
        else:
            uL[:, 0] = boundary_ghost(
                self.bc_left, trace_l[:, :1], self.law, t, x=self.xfaces[0], side=-1
            )[:, 0]
            uR[:, -1] = boundary_ghost(
                self.bc_right, trace_r[:, -1:], self.law, t, x=self.xfaces[-1], side=1
            )[:, 0]
        return uL, uR

    def residual(self, U: np.ndarray, t: float) -> np.ndarray:
        """R(U) of the semi-discrete system M dU/dt = R(U) - penalty."""
        m = U.shape[0]
        E, n, p = self.n_elements, self.n, self.p
        try:
            u_q = self.eval_at_quad(U)
            F_q = self.law.flux(u_q, x=self.xq)
            uL, uR = self.face_traces(U, t)
            F_hat = self.law.roe_flux(uL, uR, x=self.xfaces, entropy_fix=self.entropy_fix)
        except AdmissibilityError as exc:
            raise SolverAbort(f"inadmissible state at t={t:.6g}: {exc}") from exc

        R = np.einsum("mesq,dsq->med", F_q, self.vol_kernel)
        # indicator modes: flux difference across their own sub-cell
        R[:, :, p:] += F_hat[:, :-1].reshape(m, E, n) - F_hat[:, 1:].reshape(m, E, n)
        # polynomial modes: interior faces telescope, element boundaries remain
        if p > 0:
            F_left = F_hat[:, 0: E * n: n]
            F_right = F_hat[:, n:: n]
            R[:, :, :p] += (
                F_left[:, :, None] * self.leg_face[1:, 0][None, None, :]
                - F_right[:, :, None] * self.leg_face[1:, n][None, None, :]
            )
        if self.law.has_source():
            S_q = self.law.source(u_q, self.xq)
            R += np.einsum("mesq,esq,dsq->med", S_q, self.wq, self.ref.phi)
        return R

    def solve_mass(self, R: np.ndarray) -> np.ndarray:
        """Apply M^{-1} elementwise: the physical mass is (h/2) * M_ref."""
        out = np.einsum("med,cd->mec", R, self.mass_inv)
        return out * (2.0 / self.h)[None, :, None]

    def apply_penalty(self, U: np.ndarray, gammas: np.ndarray) -> np.ndarray:
        """Gamma M_pp U, elementwise."""
        out = np.einsum("med,cd->mec", U, self.ref.mass_pp)
        return out * (gammas * self.h / 2.0)[None, :, None]

    # -- diagnostics ----------------------------------------------------------

    def subcell_averages(self, U: np.ndarray) -> np.ndarray:
        """(m, E, n) sub-cell averages of the field."""
        return U[:, :, : self.p] @ self.ref.leg_sub_avg[1:] + U[:, :, self.p:]

    def total_mass(self, U: np.ndarray) -> np.ndarray:
        """Integral of each component over the domain."""
        avg = self.subcell_averages(U)
        w = (self.h / self.n)[None, :, None]
        return np.sum(avg * w, axis=(1, 2))

    def poly_energy(self, U: np.ndarray) -> np.ndarray:
        """(m, E) squared L2 norm of the polynomial part per element."""
        norms = 2.0 / (2.0 * np.arange(1, self.p + 1) + 1.0)
        return (U[:, :, : self.p] ** 2 * norms[None, None, :]).sum(-1) * (self.h / 2.0)

    def field_norm(self, U: np.ndarray, kind: str = "L2") -> np.ndarray:
        """Global L1 or L2 norm of each component."""
        u_q = self.eval_at_quad(U)
        if kind == "L2":
            return np.sqrt(np.einsum("mesq,esq->m", u_q**2, self.wq))
        if kind == "L1":
            return np.einsum("mesq,esq->m", np.abs(u_q), self.wq)
        raise ValueError(f"unknown norm kind {kind!r}")

    def evaluate_sensor(self, U: np.ndarray) -> SensorReport:
        return evaluate_field_sensor(U, self.space, self.sensor_config)

    def max_wave_speed(self, U: np.ndarray) -> float:
        u_q = self.eval_at_quad(U)
        return self.law.max_wave_speed(u_q, x=self.xq)


def imex_step(
    disc: Discretization,
    state: FieldState,
    dt: float,
    gammas: np.ndarray,
    tableau: IMEXTableau | None = None,
) -> FieldState:
    """One ARS(2,2,2) step with the penalty frozen at the given gammas."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    tab = tableau if tableau is not None else ars222()
    U0 = state.U
    s = tab.stages
    r = [np.zeros_like(U0) for _ in range(s)]
    r_hat = [np.zeros_like(U0) for _ in range(s)]
    active = np.flatnonzero(gammas > 0.0)

    for i in range(s):
        Ui = U0.copy()
        for j in range(i):
            if tab.A[i, j] != 0.0:
                Ui += dt * tab.A[i, j] * r[j]
            if tab.A_hat[i, j] != 0.0:
                Ui += dt * tab.A_hat[i, j] * r_hat[j]
        aii = tab.A[i, i]
        used = tab.b[i] != 0.0 or np.any(tab.A[i + 1:, i] != 0.0)
        if active.size and (used or aii != 0.0):
            # (M_ref + dt a_ii gamma Mpp_ref) r = -gamma Mpp_ref U ; h cancels
            g = gammas[active]
            A_stage = (
                disc.ref.mass[None]
                + (dt * aii * g)[:, None, None] * disc.ref.mass_pp[None]
            )
            rhs = -np.einsum("med,cd->ecm", Ui[:, active], disc.ref.mass_pp)
            rhs *= g[:, None, None]
            sol = np.linalg.solve(A_stage, rhs)          # (E_act, dof, m)
            r[i][:, active] = sol.transpose(2, 0, 1)
        R = disc.residual(Ui + dt * aii * r[i], state.time)
        r_hat[i] = disc.solve_mass(R)

    U1 = U0.copy()
    for j in range(s):
        if tab.b[j] != 0.0:
            U1 += dt * tab.b[j] * r[j]
        if tab.b_hat[j] != 0.0:
            U1 += dt * tab.b_hat[j] * r_hat[j]
    return FieldState(U=U1, time=state.time + dt)


def explicit_step(
    disc: Discretization,
    state: FieldState,
    dt: float,
    tableau: IMEXTableau | None = None,
) -> FieldState:
    """Explicit-only path of the same tableau (the Gamma = 0 limit)."""
    return imex_step(disc, state, dt, np.zeros(disc.n_elements), tableau)


@dataclass
class Trajectory:
    states: list[FieldState] = field(default_factory=list)
    sensors: list[SensorReport] = field(default_factory=list)
    step_diffs: list[float] = field(default_factory=list)
    n_steps: int = 0

    @property
    def final(self) -> FieldState:
        return self.states[-1]


def advance(
    disc: Discretization,
    state: FieldState,
    dt: float,
    t_final: float,
    snapshot_times=(),
    force_gamma: tuple[int, float] | None = None,
    tableau: IMEXTableau | None = None,
    on_step=None,
) -> Trajectory:
    """Fixed-step march to t_final; steps are shortened to land exactly on
    snapshot times and on t_final.  Gamma is recomputed once per step."""
    if dt <= 0 or t_final <= state.time:
        raise ValueError("need dt > 0 and t_final beyond the current time")
    tab = tableau if tableau is not None else ars222()
    eps = 1e-12 * max(1.0, abs(t_final))
    marks = sorted({float(ts) for ts in snapshot_times if state.time < ts <= t_final})
    traj = Trajectory()

    def record(st: FieldState, rep: SensorReport):
        traj.states.append(st)
        traj.sensors.append(rep)

    current = state
    rep = disc.evaluate_sensor(current.U)
    record(current, _with_forced(rep, force_gamma))
    next_marks = marks + [t_final]
    for mark in next_marks:
        while current.time < mark - eps:
            step = min(dt, mark - current.time)
            rep = disc.evaluate_sensor(current.U)
            rep = _with_forced(rep, force_gamma)
            new = imex_step(disc, current, step, rep.gamma, tab)
            if not np.all(np.isfinite(new.U)):
                raise SolverAbort(
                    f"non-finite state after step {traj.n_steps + 1} at t={new.time:.6g}"
                )
            traj.step_diffs.append(
                float(np.linalg.norm(new.U - current.U)) / step
            )
            traj.n_steps += 1
            if on_step is not None:
                on_step(new, traj)
            current = new
        record(current, _with_forced(disc.evaluate_sensor(current.U), force_gamma))
    return traj


def _with_forced(rep: SensorReport, force_gamma) -> SensorReport:
    if force_gamma is None:
        return rep
    idx, value = force_gamma
    gamma = rep.gamma.copy()
    gamma[int(idx)] = float(value)
    return SensorReport(s=rep.s, s0=rep.s0, gamma=gamma)
