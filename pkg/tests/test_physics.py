import numpy as np
import pytest

from subgrid_dg.physics import (
    AdmissibilityError,
    BoundaryCondition,
    Burgers,
    Convection,
    Euler1D,
    NozzleEuler,
    boundary_ghost,
    euler_state_from_primitives,
    farfield_state,
    make_law,
    nozzle_area,
)

GAMMA = 1.4


def random_admissible_states(rng, count):
    rho = rng.uniform(0.2, 3.0, count)
    vel = rng.uniform(-2.0, 2.0, count)
    p = rng.uniform(0.2, 5.0, count)
    return euler_state_from_primitives(rho, vel, p, GAMMA)


def test_convection_upwind():
    law = Convection(beta=2.0)
    uL, uR = np.array([[1.0]]), np.array([[5.0]])
    np.testing.assert_allclose(law.roe_flux(uL, uR), 2.0 * uL)
    law_neg = Convection(beta=-2.0)
    np.testing.assert_allclose(law_neg.roe_flux(uL, uR), -2.0 * uR)
    assert law.max_wave_speed(uR) == 2.0


def test_burgers_flux_and_consistency():
    law = Burgers()
    u = np.array([[0.3, -1.2, 2.0]])
    np.testing.assert_allclose(law.flux(u), 0.5 * u * u)
    np.testing.assert_allclose(law.roe_flux(u, u), law.flux(u))
    # supersonic-right pair: pure upwinding from the left
    uL, uR = np.array([[2.0]]), np.array([[1.0]])
    np.testing.assert_allclose(law.roe_flux(uL, uR), law.flux(uL))
    assert law.max_wave_speed(u) == pytest.approx(2.0)


def test_burgers_stationary_shock():
    # equal-and-opposite states: Roe speed 0, central flux is exact there
    law = Burgers()
    uL, uR = np.array([[1.0]]), np.array([[-1.0]])
    np.testing.assert_allclose(law.roe_flux(uL, uR), 0.5)


def test_euler_primitives_roundtrip():
    law = Euler1D()
    rng = np.random.default_rng(0)
    u = random_admissible_states(rng, 20)
    rho, vel, p = law.primitives(u)
    np.testing.assert_allclose(
        euler_state_from_primitives(rho, vel, p, GAMMA), u, atol=1e-13
    )


def test_euler_flux_values():
    law = Euler1D()
    u = euler_state_from_primitives(1.0, 2.0, 3.0, GAMMA)[:, None]
    F = law.flux(u)[:, 0]
    E = 3.0 / 0.4 + 0.5 * 1.0 * 4.0
    np.testing.assert_allclose(F, [2.0, 1.0 * 4.0 + 3.0, (E + 3.0) * 2.0])


def test_euler_roe_consistency():
    law = Euler1D()
    rng = np.random.default_rng(5)
    u = random_admissible_states(rng, 50)
    np.testing.assert_allclose(law.roe_flux(u, u), law.flux(u), atol=1e-12)


def test_euler_roe_supersonic_upwinding():
    # both states and the Roe average move supersonically to the right:
    # the numerical flux reduces to the exact left flux
    law = Euler1D()
    uL = euler_state_from_primitives(1.0, 5.0, 1.0, GAMMA)[:, None]
    uR = euler_state_from_primitives(0.9, 5.2, 1.1, GAMMA)[:, None]
    np.testing.assert_allclose(law.roe_flux(uL, uR), law.flux(uL), atol=1e-12)


def test_euler_roe_entropy_fix_adds_dissipation_near_sonic():
    law = Euler1D()
    # transonic pair: the Roe average has u - c ~ 0, inside the smoothing band
    uL = euler_state_from_primitives(1.0, 0.5, 1.0 / GAMMA, GAMMA)[:, None]
    uR = euler_state_from_primitives(1.0, 1.5, 1.0 / GAMMA, GAMMA)[:, None]
    plain = law.roe_flux(uL, uR, entropy_fix=False)
    fixed = law.roe_flux(uL, uR, entropy_fix=True)
    assert not np.allclose(plain, fixed)


def test_euler_admissibility_errors():
    law = Euler1D()
    bad_rho = np.array([[-1.0], [0.0], [1.0]])
    with pytest.raises(AdmissibilityError):
        law.flux(bad_rho)
    bad_p = np.array([[1.0], [10.0], [1.0]])  # kinetic energy exceeds total
    with pytest.raises(AdmissibilityError):
        law.flux(bad_p)
    assert not law.admissible(bad_p[:, 0])
    good = euler_state_from_primitives(1.0, 0.5, 2.0, GAMMA)
    assert law.admissible(good)


def test_euler_max_wave_speed():
    law = Euler1D()
    u = euler_state_from_primitives(1.0, 2.0, 1.4, GAMMA)[:, None]
    assert law.max_wave_speed(u) == pytest.approx(2.0 + np.sqrt(1.4 * 1.4 / 1.0))


# -- nozzle -------------------------------------------------------------------


def test_nozzle_area_profile():
    x = np.array([0.0, 0.1, 0.5, 0.9, 1.0])
    A, dA = nozzle_area(x)
    np.testing.assert_allclose(A, [1.0, 1.0, 0.8, 1.0, 1.0], atol=1e-14)
    assert dA[2] == pytest.approx(0.0, abs=1e-14)   # throat is a minimum
    assert dA[0] == dA[-1] == 0.0                   # straight ducts outside
    # derivative matches a central difference inside the contoured section
    xs = np.linspace(0.15, 0.85, 41)
    eps = 1e-6
    fd = (nozzle_area(xs + eps)[0] - nozzle_area(xs - eps)[0]) / (2 * eps)
    np.testing.assert_allclose(nozzle_area(xs)[1], fd, atol=1e-8)


def test_nozzle_flux_reduces_to_euler_in_straight_duct():
    law = NozzleEuler()
    euler = Euler1D()
    u = euler_state_from_primitives(1.0, 0.8, 2.0, GAMMA)[:, None]
    x = np.array([0.05])  # A = 1 there
    np.testing.assert_allclose(law.flux(u, x=x), euler.flux(u), atol=1e-14)
    np.testing.assert_allclose(
        law.roe_flux(u, u, x=x), euler.flux(u), atol=1e-12
    )


def test_nozzle_source_momentum_only():
    law = NozzleEuler()
    x = np.array([0.3, 0.7])
    A, dA = nozzle_area(x)
    u = euler_state_from_primitives(
        np.full(2, 1.2), np.full(2, 0.5), np.full(2, 2.0), GAMMA
    ) * A
    S = law.source(u, x)
    assert np.all(S[0] == 0.0)
    assert np.all(S[2] == 0.0)
    np.testing.assert_allclose(S[1], 2.0 * dA, atol=1e-12)
    assert law.has_source()


def test_farfield_state_values():
    # (rho, u, M) = (1, 1, 0.4): c = 2.5, p = rho c^2 / gamma = 6.25 / 1.4
    state = farfield_state(1.0, 1.0, 0.4, GAMMA)
    rho, vel, p = Euler1D().primitives(state[:, None])
    assert rho[0] == pytest.approx(1.0)
    assert vel[0] == pytest.approx(1.0)
    assert p[0] == pytest.approx(6.25 / 1.4)
    with pytest.raises(ValueError):
        farfield_state(1.0, 1.0, 0.0, GAMMA)


# -- boundary ghosts ------------------------------------------------------------


def euler_primitives(state):
    rho = state[0]
    vel = state[1] / rho
    p = (GAMMA - 1.0) * (state[2] - 0.5 * rho * vel * vel)
    return rho, vel, p


def test_wall_ghost_mirrors_momentum():
    law = Euler1D()
    u = euler_state_from_primitives(1.0, 0.7, 2.0, GAMMA)[:, None]
    ghost = boundary_ghost(BoundaryCondition("wall"), u, law)
    np.testing.assert_allclose(ghost[0], u[0])
    np.testing.assert_allclose(ghost[1], -u[1])
    np.testing.assert_allclose(ghost[2], u[2])


def test_prescribed_ghost_returns_state():
    law = Euler1D()
    state = tuple(euler_state_from_primitives(2.0, 0.1, 1.0, GAMMA))
    u = euler_state_from_primitives(1.0, 0.7, 2.0, GAMMA)[:, None]
    ghost = boundary_ghost(BoundaryCondition("prescribed", state=state), u, law)
    np.testing.assert_allclose(ghost[:, 0], state)


def test_periodic_ghost_rejected():
    with pytest.raises(ValueError):
        boundary_ghost(BoundaryCondition("periodic"), np.zeros((3, 1)), Euler1D())


def test_subsonic_outflow_ghost_pins_farfield_pressure():
    law = Euler1D()
    bc = BoundaryCondition("farfield", farfield=(1.0, 1.0, 0.45))
    p_far = 1.0 * (1.0 / 0.45) ** 2 / GAMMA
    interior = euler_state_from_primitives(0.9, 0.8, 3.2, GAMMA)[:, None]
    ghost = boundary_ghost(bc, interior, law, side=1)  # outflow at the right end
    _, _, p_b = euler_primitives(ghost[:, 0])
    assert p_b == pytest.approx(p_far)


def test_supersonic_outflow_ghost_extrapolates_interior():
    law = Euler1D()
    bc = BoundaryCondition("farfield", farfield=(1.0, 1.0, 0.45))
    interior = euler_state_from_primitives(1.0, 5.0, 1.0, GAMMA)[:, None]
    ghost = boundary_ghost(bc, interior, law, side=1)
    np.testing.assert_allclose(ghost, interior, atol=1e-12)


def test_supersonic_inflow_ghost_is_farfield():
    law = Euler1D()
    bc = BoundaryCondition("farfield", farfield=(1.0, 5.0, 2.5))
    interior = euler_state_from_primitives(0.7, 4.0, 0.9, GAMMA)[:, None]
    ghost = boundary_ghost(bc, interior, law, side=-1)  # inflow at the left end
    np.testing.assert_allclose(ghost[:, 0], farfield_state(1.0, 5.0, 2.5, GAMMA))


def test_subsonic_inflow_ghost_consistency():
    # when the interior already equals the farfield, the ghost reproduces it
    law = Euler1D()
    bc = BoundaryCondition("farfield", farfield=(1.0, 1.0, 0.40))
    far = farfield_state(1.0, 1.0, 0.40, GAMMA)
    ghost = boundary_ghost(bc, far[:, None], law, side=-1)
    np.testing.assert_allclose(ghost[:, 0], far, atol=1e-12)


def test_nozzle_farfield_ghost_is_area_weighted():
    law = NozzleEuler()
    bc = BoundaryCondition("farfield", farfield=(1.0, 1.0, 0.40))
    far = farfield_state(1.0, 1.0, 0.40, GAMMA)
    x = 0.0  # A = 1 at the inlet plane
    ghost = boundary_ghost(bc, far[:, None], law, x=x, side=-1)
    np.testing.assert_allclose(ghost[:, 0], far, atol=1e-12)


def test_boundary_condition_validation():
    with pytest.raises(ValueError):
        BoundaryCondition("unknown")
    with pytest.raises(ValueError):
        BoundaryCondition("farfield")
    with pytest.raises(ValueError):
        BoundaryCondition("farfield", farfield=(1.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        BoundaryCondition("prescribed")


def test_make_law():
    assert isinstance(make_law("convection", beta=2.0), Convection)
    assert isinstance(make_law("burgers"), Burgers)
    assert isinstance(make_law("euler1d"), Euler1D)
    assert isinstance(make_law("nozzle"), NozzleEuler)
    with pytest.raises(ValueError):
        make_law("magnetohydrodynamics")
