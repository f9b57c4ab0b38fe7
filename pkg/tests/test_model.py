"""
Test script to verify the lattice, the torques, the equations of motion and the energy
"""
import math

import numpy as np
import pytest

from spin_model.lattice import LatticeState, build_neighbor_table
from spin_model.model import (
    LatticeDynamics,
    eom_rhs,
    pair_coupling_torque,
    torque_nn_vector_oracle,
    torque_sc,
    total_energy,
)
from spin_types.errors import ConfigError, DegenerateChordError
from spin_types.types import ModelParams


def checkerboard(rows, cols, start=0.0):
    theta = np.array([start if (r + c) % 2 == 0 else math.pi - start
                      for r in range(rows) for c in range(cols)])
    return LatticeState(theta, np.zeros(rows * cols))


def numeric_site_torque(state, params, table, site, step=1e-6):
    plus, minus = state.theta.copy(), state.theta.copy()
    plus[site] += step
    minus[site] -= step
    e_plus = total_energy(LatticeState(plus, state.omega), params, table)
    e_minus = total_energy(LatticeState(minus, state.omega), params, table)
    return -(e_plus - e_minus) / (2 * step)


# Lattice

def test_two_site_chain():
    table = build_neighbor_table(1, 2)
    assert table.adjacency == ((1,), (0,))


def test_two_by_two_every_site_has_two_neighbors():
    table = build_neighbor_table(2, 2)
    assert all(len(adj) == 2 for adj in table.adjacency)


def test_three_by_three_open_grid():
    table = build_neighbor_table(3, 3)
    assert len(table.neighbors(4)) == 4
    for corner in (0, 2, 6, 8):
        assert len(table.neighbors(corner)) == 2
    for edge in (1, 3, 5, 7):
        assert len(table.neighbors(edge)) == 3
    # no wrap-around: site 0 and site 2 are not neighbors
    assert 2 not in table.neighbors(0)


def test_neighbor_table_symmetric_without_self_edges():
    table = build_neighbor_table(4, 5)
    for i, adj in enumerate(table.adjacency):
        assert i not in adj
        for j in adj:
            assert i in table.adjacency[j]
    assert len(table.bonds()) == 4 * 4 + 3 * 5


def test_empty_lattice_rejected():
    with pytest.raises(ConfigError):
        build_neighbor_table(0, 3)


# Field torque

def test_field_torque_examples():
    params = ModelParams(mu=1.0, field_b=1.0)
    assert torque_sc(0.0, params) == 0.0
    assert torque_sc(math.pi / 4, params) == pytest.approx(-1.0, abs=1e-15)
    assert torque_sc(math.pi / 2, params) == 0.0
    assert torque_sc(math.pi, params) == 0.0


def test_field_torque_restores_toward_both_poles():
    params = ModelParams()
    assert torque_sc(0.1, params) < 0
    assert torque_sc(-0.1, params) > 0
    assert torque_sc(math.pi - 0.1, params) > 0
    assert torque_sc(math.pi + 0.1, params) < 0
    # pi/2 repels
    assert torque_sc(math.pi / 2 + 0.1, params) > 0
    assert torque_sc(math.pi / 2 - 0.1, params) < 0


def test_field_torque_matches_sin_two_theta():
    params = ModelParams(mu=1.3, field_b=0.7)
    theta = np.random.default_rng(0).uniform(-10, 10, 1000)
    np.testing.assert_allclose(torque_sc(theta, params), -1.3 * 0.7 * np.sin(2 * theta), atol=1e-12)


# Pair coupling

def test_antiparallel_neighbors_are_at_rest_for_a_equal_two():
    params = ModelParams(spring_a=2.0)
    assert pair_coupling_torque(0.0, math.pi, params) == 0.0
    assert pair_coupling_torque(math.pi, 0.0, params) == 0.0


def test_coincident_neighbors_give_zero_torque():
    for a in (0.0, 1.0, 2.0):
        params = ModelParams(spring_a=a)
        assert pair_coupling_torque(0.7, 0.7, params) == 0.0


def test_ferromagnetic_pair_torque_is_sine():
    params = ModelParams(mu=1.0, spring_k=1.0, spring_a=0.0)
    rng = np.random.default_rng(1)
    theta_j, theta_i = rng.uniform(0, 2 * np.pi, (2, 1000))
    np.testing.assert_allclose(pair_coupling_torque(theta_j, theta_i, params), np.sin(theta_i - theta_j), atol=1e-12)


def test_pair_torque_is_odd_in_the_angle_difference():
    params = ModelParams()
    delta = np.random.default_rng(2).uniform(-np.pi, np.pi, 1000)
    np.testing.assert_allclose(pair_coupling_torque(0.0, delta, params),
                               -pair_coupling_torque(0.0, -delta, params), atol=1e-12)


def test_pair_torques_cancel_between_partners():
    params = ModelParams()
    rng = np.random.default_rng(3)
    theta_j, theta_i = rng.uniform(0, 2 * np.pi, (2, 1000))
    on_j = pair_coupling_torque(theta_j, theta_i, params)
    on_i = pair_coupling_torque(theta_i, theta_j, params)
    np.testing.assert_allclose(on_j + on_i, 0.0, atol=1e-12)


def test_torques_are_two_pi_periodic():
    params = ModelParams()
    rng = np.random.default_rng(4)
    theta_j, theta_i = rng.uniform(0, 2 * np.pi, (2, 1000))
    np.testing.assert_allclose(pair_coupling_torque(theta_j, theta_i + 2 * np.pi, params),
                               pair_coupling_torque(theta_j, theta_i, params), atol=1e-9)
    np.testing.assert_allclose(torque_sc(theta_j + 2 * np.pi, params), torque_sc(theta_j, params), atol=1e-12)


# Cartesian oracle

def test_oracle_examples():
    assert torque_nn_vector_oracle(0.0, [math.pi], ModelParams(spring_a=2.0)) == pytest.approx(0.0, abs=1e-14)
    params = ModelParams(mu=1.0, spring_k=1.0, spring_a=0.0)
    assert torque_nn_vector_oracle(0.0, [math.pi / 2], params) == pytest.approx(1.0, abs=1e-14)
    assert torque_nn_vector_oracle(0.4, [0.4 + 0.3, 0.4 - 0.3], params) == pytest.approx(0.0, abs=1e-14)


def test_oracle_rejects_coincident_neighbor():
    with pytest.raises(DegenerateChordError):
        torque_nn_vector_oracle(1.0, [1.0], ModelParams())


@pytest.mark.parametrize("a", [0.0, 2.0])
def test_closed_form_matches_oracle(a):
    params = ModelParams(mu=1.0, spring_k=1.0, spring_a=a)
    rng = np.random.default_rng(5)
    theta_j, theta_i = rng.uniform(0, 2 * np.pi, (2, 10_000))
    chord = 2 * np.abs(np.sin((theta_i - theta_j) / 2))
    checked = 0
    for tj, ti, d in zip(theta_j, theta_i, chord):
        if d <= 1e-2:
            continue
        closed = pair_coupling_torque(tj, ti, params)
        assert abs(closed - torque_nn_vector_oracle(tj, [ti], params)) <= 1e-12
        checked += 1
    assert checked > 9_900


@pytest.mark.parametrize("a", [0.0, 2.0])
def test_closed_form_matches_oracle_at_short_chords(a):
    # the Cartesian difference n_i - n_j loses digits as the chord shrinks
    params = ModelParams(spring_a=a)
    rng = np.random.default_rng(6)
    theta_j = rng.uniform(0, 2 * np.pi, 200)
    delta = rng.choice([-1.0, 1.0], 200) * 10 ** rng.uniform(-6, -2, 200)
    for tj, dl in zip(theta_j, delta):
        chord = 2 * abs(math.sin(dl / 2))
        closed = pair_coupling_torque(tj, tj + dl, params)
        oracle = torque_nn_vector_oracle(tj, [tj + dl], params)
        assert abs(closed - oracle) <= 1e-12 * params.spring_k * (1 + 4 / chord)


# Equations of motion

def test_global_fixed_points():
    params = ModelParams()
    table = build_neighbor_table(3, 3)
    for value in (0.0, math.pi):
        state = LatticeState(np.full(9, value), np.zeros(9))
        deriv = eom_rhs(state, params, table, dissipation_on=True)
        assert np.all(deriv.theta == 0.0)
        assert np.all(deriv.omega == 0.0)


def test_antiferromagnetic_checkerboard_is_at_rest():
    params = ModelParams(spring_a=2.0)
    table = build_neighbor_table(3, 3)
    deriv = eom_rhs(checkerboard(3, 3), params, table, dissipation_on=False)
    assert np.all(deriv.theta == 0.0)
    assert np.all(deriv.omega == 0.0)


def test_single_site_reduces_to_field_torque():
    params = ModelParams(rows=1, cols=1, inertia=2.0, mu=1.5, field_b=0.5)
    table = build_neighbor_table(1, 1)
    state = LatticeState([0.3], [0.0])
    deriv = eom_rhs(state, params, table, dissipation_on=False)
    assert deriv.omega[0] == pytest.approx(-1.5 * 0.5 * math.sin(0.6) / 2.0, rel=1e-14)


def test_dissipation_opposes_angular_velocity():
    params = ModelParams(dissipation_b=0.5)
    table = build_neighbor_table(3, 3)
    state = LatticeState(np.zeros(9), np.linspace(-1, 1, 9))
    free = eom_rhs(state, params, table, dissipation_on=False)
    damped = eom_rhs(state, params, table, dissipation_on=True)
    np.testing.assert_allclose(damped.omega - free.omega, -0.5 * state.omega, atol=1e-15)
    np.testing.assert_array_equal(free.theta, state.omega)


def test_dynamics_commute_with_mirror():
    params = ModelParams()
    dynamics = LatticeDynamics(params)
    rng = np.random.default_rng(7)
    theta, omega = rng.uniform(0, np.pi, 9), rng.normal(size=9)
    forward = dynamics.derivative(np.concatenate((theta, omega)), True)
    mirrored = dynamics.derivative(np.concatenate((np.pi - theta, -omega)), True)
    np.testing.assert_allclose(mirrored, -forward, atol=1e-11)


def test_error_magnitude_is_mirror_invariant():
    dynamics = LatticeDynamics(ModelParams())
    rng = np.random.default_rng(8)
    theta, omega = rng.uniform(-20.0, 20.0, 9), rng.normal(size=9)
    size = dynamics.magnitude(np.concatenate((theta, omega)))
    np.testing.assert_array_equal(size[:9], np.ones(9))
    np.testing.assert_array_equal(size, dynamics.magnitude(np.concatenate((np.pi - theta, -omega))))


def test_winding_changes_only_where_neighbors_coincide():
    params = ModelParams(rows=1, cols=2)
    dynamics = LatticeDynamics(params)
    assert dynamics.has_kinks

    def label(delta):
        return dynamics.winding(np.array([delta, 0.0, 0.0, 0.0]))[0]

    # the spring torque jumps by 2 |mu| k a across coincidence
    jump = pair_coupling_torque(0.0, 1e-9, params) - pair_coupling_torque(0.0, -1e-9, params)
    assert jump == pytest.approx(-40.0, abs=1e-6)
    assert label(0.1) != label(-0.1)
    assert label(2 * math.pi - 0.1) != label(2 * math.pi + 0.1)
    # anti-parallel neighbors are no kink
    assert label(math.pi - 0.01) == label(math.pi + 0.01)
    assert not LatticeDynamics(ModelParams(spring_a=0.0)).has_kinks
    assert not LatticeDynamics(ModelParams(rows=1, cols=1)).has_kinks


# Energy

def test_energy_examples():
    table = build_neighbor_table(1, 2)
    zero = LatticeState([0.0, 0.0], [0.0, 0.0])
    assert total_energy(zero, ModelParams(rows=1, cols=2, spring_a=0.0), table) == pytest.approx(-1.0)
    params = ModelParams(rows=1, cols=2, spring_a=2.0, spring_k=1.0)
    assert total_energy(zero, params, table) == pytest.approx(1.0)


def test_energy_gradient_matches_torques():
    params = ModelParams()
    table = build_neighbor_table(3, 3)
    rng = np.random.default_rng(8)
    for _ in range(20):
        state = LatticeState(rng.uniform(0, 2 * np.pi, 9), np.zeros(9))
        torque = LatticeDynamics(params, table).net_torque(state.theta, state.omega, dissipation_on=False)
        for site in range(9):
            numeric = numeric_site_torque(state, params, table, site)
            assert abs(numeric - torque[site]) <= 1e-5 * max(1.0, abs(torque[site]))


def test_state_rejects_mismatched_lengths():
    with pytest.raises(ValueError):
        LatticeState([0.0, 1.0], [0.0])
