import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

import oracles


from hcoherent.geometry import (
    ActionAngleLabels,
    DegenerateOrbit,
    InconsistentElements,
    OrbitalElements,
    classical_position,
    elements_from_labels,
    elements_from_vectors,
    energy_classical,
    kepler_frequency,
    kepler_period,
    labels_from_elements,
    mean_anomaly,
    orbit_elements,
    packet_phase_point,
    packet_position,
    solve_kepler,
    vectors_from_labels,
)

angle = st.floats(0, 2 * math.pi, exclude_max=True)
polar = st.floats(0, math.pi)
rhos = st.floats(0.5, 200)


def test_vectors_pole():
    a, b = vectors_from_labels(ActionAngleLabels(rho=3.0))
    assert np.allclose(a, [0, 0, 3]) and np.allclose(b, [0, 0, 3])


def test_vectors_antipodal_is_degenerate():
    lab = ActionAngleLabels(rho=1, alpha=0, beta=math.pi / 2, gamma=math.pi, delta=math.pi / 2)
    a, b = vectors_from_labels(lab)
    assert np.allclose(a, [1, 0, 0]) and np.allclose(b, [-1, 0, 0], atol=1e-15)
    with pytest.raises(DegenerateOrbit):
        elements_from_labels(lab)


def test_vectors_tilted_circular():
    lab = ActionAngleLabels(rho=2, beta=math.pi / 3, delta=math.pi / 3)
    a, b = vectors_from_labels(lab)
    assert np.allclose(a, 2 * np.array([math.sqrt(3) / 2, 0, 0.5]))
    el = elements_from_labels(lab)
    assert el.angular_momentum == pytest.approx(2) and el.eccentricity < 1e-15
    assert el.inclination == pytest.approx(math.pi / 3)


def test_circular_equatorial_elements():
    el = elements_from_labels(ActionAngleLabels(rho=7))
    assert el.circular and el.eccentricity == 0 and el.inclination == 0
    assert el.angular_momentum == pytest.approx(7) and el.semi_major == 49
    assert el.periapsis_argument == 0.0 and el.node_longitude == 0.0


def test_eccentric_example_from_tilting_both_spheres():
    # both vectors tilted by w5 toward +x and -x: K = rho sin(w5) x_hat, J = rho cos(w5) z_hat
    w5, rho = 0.6, 10.0
    el = elements_from_labels(ActionAngleLabels(rho=rho, beta=w5, delta=w5, gamma=math.pi))
    assert np.allclose(el.k_vec, [rho * math.sin(w5), 0, 0], atol=1e-13)
    assert np.allclose(el.j_vec, [0, 0, rho * math.cos(w5)], atol=1e-13)
    assert el.eccentricity == pytest.approx(math.sin(w5))
    assert el.periapsis_argument == 0.0


def test_same_tilt_and_azimuth_gives_no_runge_lenz():
    w5 = 0.6
    el = elements_from_labels(ActionAngleLabels(rho=10, beta=w5, delta=w5))
    assert el.circular


@given(rhos, angle, polar, angle, polar, st.floats(-20, 20))
def test_dictionary_invariants(rho, alpha, beta, gamma, delta, theta):
    lab = ActionAngleLabels(rho, alpha, beta, gamma, delta, theta)
    a, b = vectors_from_labels(lab)
    j, k = (a + b) / 2, (a - b) / 2
    assume(np.linalg.norm(j) > 1e-6 * rho)
    el = elements_from_labels(lab)
    assert abs(np.linalg.norm(el.j_vec + el.k_vec) - rho) < 1e-10 * rho
    assert abs(np.linalg.norm(el.j_vec - el.k_vec) - rho) < 1e-10 * rho
    assert abs(el.j_vec @ el.k_vec) < 1e-10 * rho * rho
    assert abs(el.eccentricity**2 + el.angular_momentum**2 / rho**2 - 1) < 1e-12
    assert el.semi_major == pytest.approx(rho * rho)
    assert 0 <= el.inclination <= math.pi
    assert 0 <= el.node_longitude < 2 * math.pi and 0 <= el.periapsis_argument < 2 * math.pi


def _angle_gap(a, b):
    return abs((a - b + math.pi) % (2 * math.pi) - math.pi)


@given(rhos, st.floats(0.01, 0.99), st.floats(0.01, math.pi - 0.01), angle, angle, st.floats(-5, 5))
def test_elements_round_trip(rho, e, incl, node, peri, theta):
    el = orbit_elements(rho, e, incl, node, peri)
    back = elements_from_labels(labels_from_elements(el, theta))
    assert back.eccentricity == pytest.approx(e, abs=1e-10)
    assert back.inclination == pytest.approx(incl, abs=1e-10)
    assert _angle_gap(back.node_longitude, node) < 1e-9
    assert _angle_gap(back.periapsis_argument, peri) < 1e-9
    assert labels_from_elements(el, theta).theta == theta


def test_labels_from_circular_equatorial():
    lab = labels_from_elements(orbit_elements(5.0, 0.0))
    assert (lab.alpha, lab.beta, lab.gamma, lab.delta) == (0.0, 0.0, 0.0, 0.0)
    assert lab.rho == 5.0


def test_labels_from_eccentric_equatorial():
    lab = labels_from_elements(orbit_elements(10.0, 0.6))
    assert lab.beta == pytest.approx(math.asin(0.6)) and lab.delta == pytest.approx(math.asin(0.6))
    assert lab.alpha == pytest.approx(0.0) and lab.gamma == pytest.approx(math.pi)


def test_polar_orbit_round_trip():
    el = orbit_elements(8.0, 0.3, math.pi / 2, 1.1, 2.2)
    back = elements_from_labels(labels_from_elements(el))
    assert np.allclose(back.j_vec, el.j_vec, atol=1e-10) and np.allclose(back.k_vec, el.k_vec, atol=1e-10)


def test_inconsistent_vectors_rejected():
    el = OrbitalElements(np.array([0, 0, 3.0]), np.array([1.0, 0, 0.5]), 0.1, 0, 0, 0, 10, 3.2)
    with pytest.raises(InconsistentElements):
        labels_from_elements(el)


def test_degenerate_vectors():
    with pytest.raises(DegenerateOrbit):
        elements_from_vectors([0, 0, 0], [3.0, 0, 0])


@pytest.mark.parametrize("kwargs", [dict(rho=0), dict(rho=-1), dict(rho=1, beta=-0.1), dict(rho=1, delta=4), dict(rho=math.inf)])
def test_label_validation(kwargs):
    with pytest.raises(ValueError):
        ActionAngleLabels(**kwargs)


def test_unbounded_theta_and_angles_kept():
    lab = ActionAngleLabels(rho=2, alpha=7.5, gamma=-1.0, theta=-1e6)
    assert lab.alpha == 7.5 and lab.gamma == -1.0 and lab.theta == -1e6


# --- Kepler motion -----------------------------------------------------------


def test_classical_position_examples():
    assert np.allclose(classical_position(orbit_elements(1.0, 0.0), 0.0), [1, 0, 0])
    el = orbit_elements(1.0, 0.5)
    assert np.linalg.norm(classical_position(el, 0.0)) == pytest.approx(0.5)
    assert np.linalg.norm(classical_position(el, math.pi)) == pytest.approx(1.5)


def test_classical_position_vectorized():
    pos = classical_position(orbit_elements(3.0, 0.2, 0.4), np.zeros((4, 5)))
    assert pos.shape == (4, 5, 3)


@given(st.floats(-100, 100), st.floats(0, 0.999))
def test_solve_kepler(m, e):
    big_e = solve_kepler(m, e)
    ref = (m + math.pi) % (2 * math.pi) - math.pi
    assert abs(big_e - e * math.sin(big_e) - ref) < 1e-12


def test_conserved_quantities_along_orbit():
    rho, e = 4.0, 0.7
    el = orbit_elements(rho, e, 0.8, 2.0, 1.0)
    omega = kepler_frequency(rho)
    h = 1e-4
    for th in np.linspace(-3, 3, 13):
        x = classical_position(el, th)
        v = (classical_position(el, th + h) - classical_position(el, th - h)) / (2 * h) * omega
        energy = 0.5 * v @ v - 1 / np.linalg.norm(x)
        assert energy == pytest.approx(energy_classical(rho), rel=1e-6)
        assert np.allclose(np.cross(x, v), el.j_vec, rtol=1e-6)


def test_orbit_plane_normal_is_j():
    el = orbit_elements(6.0, 0.4, 1.0, 0.5, 0.3)
    pts = classical_position(el, np.linspace(0, 6, 11))
    assert np.max(np.abs(pts @ el.j_vec)) < 1e-9 * 36 * 6


def test_frequency_energy_examples():
    assert kepler_frequency(1) == 1.0 and kepler_frequency(2) == 0.125
    assert kepler_period(2) == pytest.approx(16 * math.pi)
    assert energy_classical(1) == -0.5 and energy_classical(2) == -0.125
    for n in range(1, 11):
        assert energy_classical(n) == -1 / (2 * n * n)
    for bad in (kepler_frequency, energy_classical):
        with pytest.raises(ValueError):
            bad(0.0)


@pytest.mark.parametrize("rho", [0.7, 3.0, 25.0])
def test_energy_derivative_is_frequency(rho):
    h = 1e-5 * rho
    de = (energy_classical(rho + h) - energy_classical(rho - h)) / (2 * h)
    assert abs(de - kepler_frequency(rho)) < 1e-8 * max(1.0, kepler_frequency(rho))


# --- packet correspondence ---------------------------------------------------


def test_packet_position_circular_reference():
    # theta = 0, no rotation: the packet sits on -x
    assert np.allclose(packet_position(ActionAngleLabels(rho=3.0)), [-9, 0, 0], atol=1e-12)


def test_packet_moves_with_theta():
    a = packet_position(ActionAngleLabels(rho=2.0))
    b = packet_position(ActionAngleLabels(rho=2.0, theta=math.pi / 2))
    assert np.allclose(b, [0, -4, 0], atol=1e-12) and np.linalg.norm(a) == pytest.approx(4)


def test_tilt_family_reaches_periapsis_at_quarter_phase():
    lab = ActionAngleLabels(rho=5.0, beta=0.7, delta=0.7, gamma=math.pi, theta=math.pi / 2)
    el = elements_from_labels(lab)
    assert abs(mean_anomaly(lab)) < 1e-8
    p = packet_position(lab)
    assert np.linalg.norm(p) == pytest.approx(25 * (1 - el.eccentricity))
    assert np.allclose(p / np.linalg.norm(p), el.k_vec / np.linalg.norm(el.k_vec), atol=1e-10)


def test_alpha_gamma_full_turn_moves_packet_half_orbit():
    a = packet_position(ActionAngleLabels(rho=3.0, alpha=0.4, gamma=0.4))
    b = packet_position(ActionAngleLabels(rho=3.0, alpha=0.4 + 2 * math.pi, gamma=0.4))
    assert np.allclose(a, -b, atol=1e-10)


def test_near_circular_limit_is_continuous():
    w = 1e-6
    ecc = ActionAngleLabels(rho=4.0, alpha=1.0, beta=0.5 + w, gamma=1.0, delta=0.5 - w, theta=0.3)
    circ = ActionAngleLabels(rho=4.0, alpha=1.0, beta=0.5, gamma=1.0, delta=0.5, theta=0.3)
    assert np.allclose(packet_position(ecc), packet_position(circ), atol=1e-4)


@given(st.floats(1, 30), angle, polar, angle, polar, st.floats(-4, 4))
def test_phase_point_lies_on_labelled_orbit(rho, alpha, beta, gamma, delta, theta):
    lab = ActionAngleLabels(rho, alpha, beta, gamma, delta, theta)
    a, b = vectors_from_labels(lab)
    assume(np.linalg.norm(a + b) > 1e-3 * rho)
    el = elements_from_labels(lab)
    r, p = packet_phase_point(lab)
    runge_lenz = r * (p @ p) - p * (r @ p) - r / np.linalg.norm(r)
    assert 0.5 * p @ p - 1 / np.linalg.norm(r) == pytest.approx(-0.5 / rho**2, rel=1e-9)
    assert np.allclose(np.cross(r, p), el.j_vec, atol=1e-9 * rho)
    assert np.allclose(rho * runge_lenz, el.k_vec, atol=1e-9 * rho)
    assert np.allclose(classical_position(el, mean_anomaly(lab)), r, atol=1e-9 * rho**2)


@pytest.mark.parametrize("seed", range(6))
def test_phase_point_matches_integrated_flows(seed):
    lab = oracles.random_labels(np.random.default_rng(seed), rho_range=(1.0, 8.0))
    lab = ActionAngleLabels(lab.rho, lab.alpha - 4.0, lab.beta, lab.gamma + 3.0, lab.delta, lab.theta)
    r, p = packet_phase_point(lab)
    r0, p0 = oracles.flowed_phase_point(lab)
    assert np.allclose(r, r0, atol=1e-7 * lab.rho**2)
    assert np.allclose(p, p0, atol=1e-7 / lab.rho)


@pytest.mark.parametrize("delta", [0.7, 0.7 + 1e-7, 0.7 - 1e-7])
def test_phase_point_matches_flows_near_circular(delta):
    lab = ActionAngleLabels(rho=5.0, alpha=0.3, beta=0.7, gamma=0.1, delta=delta, theta=0.4)
    r, _ = packet_phase_point(lab)
    assert np.allclose(r, oracles.flowed_phase_point(lab)[0], atol=1e-8)


def test_rotation_of_both_spins_about_z_rotates_packet():
    base = ActionAngleLabels(rho=3.0, alpha=0.2, beta=1.1, gamma=2.5, delta=0.6, theta=0.4)
    turned = ActionAngleLabels(rho=3.0, alpha=0.9, beta=1.1, gamma=3.2, delta=0.6, theta=0.4)
    c, s = math.cos(0.7), math.sin(0.7)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    assert np.allclose(packet_position(turned), rot @ packet_position(base), atol=1e-8)
