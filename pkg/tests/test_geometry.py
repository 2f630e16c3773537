import math

import numpy as np
import pytest
from scipy import stats

from dasqos.errors import ConfigError
from dasqos.geometry import (
    AntennaVector,
    ClusterLayout,
    UserVector,
    antenna_user_distance,
    cluster_from_centers,
    hex_cluster,
    sample_user_batch,
    sample_user_vector,
    symmetric_circle,
    user_positions,
)


def test_hex_cluster_layout():
    layout = hex_cluster(7, spacing=2.0)
    assert layout.size == 7
    assert layout.centers[0] == (0.0, 0.0)
    assert layout.centers[1] == pytest.approx((2.0, 0.0))
    alt = hex_cluster(7, spacing=math.sqrt(3.0))
    # neighbor 1 sits at sqrt(3) * (cos 60, sin 60)
    assert alt.centers[2][0] == pytest.approx(0.8660, abs=5e-5)
    assert alt.centers[2][1] == pytest.approx(1.5, abs=1e-12)


def test_hex_cluster_single_cell():
    layout = hex_cluster(1)
    assert layout.size == 1


def test_hex_cluster_rejects_other_sizes():
    with pytest.raises(ConfigError):
        hex_cluster(3)
    layout = cluster_from_centers([(0, 0), (1.5, 0.2), (-1, 1)])
    assert layout.size == 3
    with pytest.raises(ConfigError):
        cluster_from_centers([(1, 0), (0, 0)])


def test_distance_user_under_antenna():
    layout = hex_cluster(1)
    antennas = AntennaVector((0.5,), (0.0,), 0.05)
    users = UserVector((0.5,), (0.0,))
    assert antenna_user_distance(layout, antennas, users, 0, 0) == pytest.approx(0.05)


def test_distance_pythagoras():
    layout = hex_cluster(1)
    antennas = AntennaVector((0.5,), (0.0,), 0.05)
    users = UserVector((0.0,), (0.0,))
    assert antenna_user_distance(layout, antennas, users, 0, 0) == pytest.approx(
        math.sqrt(0.25 + 0.0025), rel=1e-12
    )


def test_distance_neighbor_cell():
    # user at the center of neighbor 0 (spacing 2), antenna at (0.58, pi/2)
    layout = hex_cluster(7, spacing=2.0)
    antennas = AntennaVector((0.58,), (math.pi / 2,), 0.05)
    users = UserVector((0.0,) * 7, (0.0,) * 7)
    d = antenna_user_distance(layout, antennas, users, 0, 1)
    assert d == pytest.approx(math.sqrt(4.0 + 0.3364 + 0.0025), rel=1e-9)
    assert d == pytest.approx(2.08300, abs=1e-5)


def test_distance_never_below_height():
    layout = hex_cluster(7)
    rng = np.random.default_rng(5)
    antennas = symmetric_circle(4, 0.4, 0.2, 0.05)
    for _ in range(50):
        users = sample_user_vector(layout, rng)
        for m in range(4):
            for i in range(7):
                assert antenna_user_distance(layout, antennas, users, m, i) >= 0.05


def test_distance_rotation_invariant():
    # rotating antennas, users, and cell centers together preserves distances
    rot = 0.7
    c, s = math.cos(rot), math.sin(rot)
    base_centers = [(0.0, 0.0), (2.0, 0.0), (1.0, 1.7)]
    turned_centers = [(c * x - s * y, s * x + c * y) for x, y in base_centers]
    base = cluster_from_centers(base_centers)
    turned = cluster_from_centers(turned_centers)
    antennas = AntennaVector((0.3, 0.6), (0.5, 2.5), 0.05)
    antennas_t = AntennaVector((0.3, 0.6), (0.5 + rot, 2.5 + rot), 0.05)
    users = UserVector((0.2, 0.9, 0.4), (1.0, 4.0, 0.3))
    users_t = UserVector((0.2, 0.9, 0.4), (1.0 + rot, 4.0 + rot, 0.3 + rot))
    for m in range(2):
        for i in range(3):
            assert antenna_user_distance(base, antennas, users, m, i) == pytest.approx(
                antenna_user_distance(turned, antennas_t, users_t, m, i), rel=1e-12
            )


def test_symmetric_circle_angles():
    v = symmetric_circle(4, 0.58)
    assert v.radii == (0.58,) * 4
    assert v.angles == pytest.approx((0.0, math.pi / 2, math.pi, 3 * math.pi / 2))
    single = symmetric_circle(1, 0.3, 1.1)
    assert single.angles == (1.1,)
    degenerate = symmetric_circle(3, 0.0)
    assert degenerate.radii == (0.0, 0.0, 0.0)


def test_antenna_vector_sorts_and_wraps():
    v = AntennaVector((0.1, 0.2), (3 * math.pi, 0.5))  # 3pi wraps to pi
    assert v.angles[0] == pytest.approx(0.5)
    assert v.angles[1] == pytest.approx(math.pi)
    assert v.radii == (0.2, 0.1)
    w = AntennaVector((0.3,), (-math.pi / 2,))
    assert w.angles[0] == pytest.approx(3 * math.pi / 2)


def test_antenna_vector_validation():
    with pytest.raises(ConfigError):
        AntennaVector((0.1, 0.2), (1.0, 1.0 + 2 * math.pi))  # equal after wrap
    with pytest.raises(ConfigError):
        AntennaVector((1.5,), (0.0,))
    with pytest.raises(ConfigError):
        AntennaVector((0.5,), (0.0,), height=0.0)
    with pytest.raises(ConfigError):
        AntennaVector((), ())
    with pytest.raises(ConfigError):
        UserVector((0.5, 1.2), (0.0, 1.0))


def test_user_positions_shape():
    layout = hex_cluster(7)
    users = sample_user_vector(layout, np.random.default_rng(0))
    pos = user_positions(layout, users)
    assert pos.shape == (7, 2)
    with pytest.raises(ConfigError):
        user_positions(layout, UserVector((0.1,), (0.0,)))


def test_sampling_moments():
    layout = hex_cluster(1)
    rng = np.random.default_rng(12)
    radii = np.array(
        [sample_user_vector(layout, rng).radii[0] for _ in range(200_000)]
    )
    se1 = radii.std(ddof=1) / math.sqrt(radii.size)
    assert abs(radii.mean() - 2.0 / 3.0) < 4 * se1
    sq = radii**2
    se2 = sq.std(ddof=1) / math.sqrt(sq.size)
    assert abs(sq.mean() - 0.5) < 4 * se2


def test_sampling_distribution_fit():
    rng = np.random.default_rng(99)
    layout = hex_cluster(1)
    n = 100_000
    x, y = sample_user_batch(layout, n, rng)
    r = np.hypot(x[:, 0], y[:, 0])
    theta = np.arctan2(y[:, 0], x[:, 0])
    # KS against CDF r^2 on the radius
    d, p_ks = stats.kstest(r, lambda t: np.clip(t, 0, 1) ** 2)
    assert p_ks > 0.01
    counts, _ = np.histogram(theta, bins=24, range=(-math.pi, math.pi))
    chi2 = ((counts - n / 24) ** 2 / (n / 24)).sum()
    assert chi2 < stats.chi2.ppf(0.99, df=23)


def test_sampling_replay():
    layout = hex_cluster(7)
    a = sample_user_vector(layout, np.random.default_rng(314))
    b = sample_user_vector(layout, np.random.default_rng(314))
    assert a == b
    x1, y1 = sample_user_batch(layout, 10, np.random.default_rng(314))
    x2, y2 = sample_user_batch(layout, 10, np.random.default_rng(314))
    np.testing.assert_array_equal(x1, x2)
    np.testing.assert_array_equal(y1, y2)


def test_batch_matches_vector_protocol():
    # row k of the batch and the k-th sequential vector draw see different
    # rng cuts, but one-row batches must reproduce the vector exactly
    layout = hex_cluster(7)
    x, y = sample_user_batch(layout, 1, np.random.default_rng(8))
    users = sample_user_vector(layout, np.random.default_rng(8))
    pos = user_positions(layout, users)
    np.testing.assert_allclose(x[0], pos[:, 0], rtol=0, atol=1e-12)
    np.testing.assert_allclose(y[0], pos[:, 1], rtol=0, atol=1e-12)
