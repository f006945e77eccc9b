import numpy as np

from quadtwin.geometry import (
    SE3,
    quat_conjugate,
    quat_exp,
    quat_from_yaw,
    quat_identity,
    quat_log,
    quat_multiply,
    quat_normalize,
    quat_rotate,
    quat_to_matrix,
    quat_from_matrix,
    so3_exp,
    so3_log,
    wrap_angle,
    yaw_of,
)


def random_quat(rng):
    return quat_normalize(rng.standard_normal(4))


def test_identity_and_normalize():
    q = quat_identity()
    assert np.allclose(q, [1, 0, 0, 0])
    rng = np.random.default_rng(1)
    for _ in range(200):
        q = random_quat(rng)
        assert abs(np.linalg.norm(q) - 1.0) < 1e-12
        assert q[0] >= 0.0  # canonical sign


def test_multiply_rotate_consistency():
    rng = np.random.default_rng(2)
    for _ in range(200):
        qa, qb = random_quat(rng), random_quat(rng)
        v = rng.standard_normal(3)
        lhs = quat_rotate(quat_multiply(qa, qb), v)
        rhs = quat_rotate(qa, quat_rotate(qb, v))
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_rotate_matches_matrix():
    rng = np.random.default_rng(3)
    for _ in range(200):
        q = random_quat(rng)
        v = rng.standard_normal(3)
        assert np.allclose(quat_rotate(q, v), quat_to_matrix(q) @ v, atol=1e-12)
        assert np.allclose(
            quat_rotate(q, v, inverse=True), quat_to_matrix(q).T @ v, atol=1e-12
        )


def test_matrix_round_trip():
    rng = np.random.default_rng(4)
    for _ in range(500):
        q = random_quat(rng)
        r = quat_to_matrix(q)
        q2 = quat_from_matrix(r)
        # same rotation up to sign; canonicalization makes them equal
        assert np.allclose(q, q2, atol=1e-9)


def test_exp_log_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(500):
        theta = rng.uniform(0, np.pi - 1e-3) * random_unit(rng)
        q = quat_exp(theta)
        assert np.allclose(quat_log(q), theta, atol=1e-9)
    # small-angle branch
    tiny = np.array([1e-14, -2e-14, 3e-15])
    assert np.allclose(quat_log(quat_exp(tiny)), tiny, atol=1e-18)


def random_unit(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def test_so3_exp_log():
    rng = np.random.default_rng(6)
    for _ in range(300):
        w = rng.uniform(0, np.pi - 1e-3) * random_unit(rng)
        r = so3_exp(w)
        assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
        assert np.allclose(so3_log(r), w, atol=1e-8)


def test_conjugate_inverts():
    rng = np.random.default_rng(7)
    for _ in range(100):
        q = random_quat(rng)
        assert np.allclose(quat_multiply(q, quat_conjugate(q)), [1, 0, 0, 0], atol=1e-12)


def test_yaw_extraction():
    for yaw in np.linspace(-3.0, 3.0, 25):
        q = quat_from_yaw(yaw)
        assert abs(wrap_angle(yaw_of(q) - yaw)) < 1e-12


def test_wrap_angle_range():
    for a in np.linspace(-20, 20, 1001):
        w = wrap_angle(a)
        assert -np.pi < w <= np.pi
        assert abs(np.sin(w - a)) < 1e-12


def test_se3_compose_inverse_apply():
    rng = np.random.default_rng(8)
    for _ in range(200):
        a = SE3.from_quat_pos(random_quat(rng), rng.standard_normal(3))
        b = SE3.from_quat_pos(random_quat(rng), rng.standard_normal(3))
        pts = rng.standard_normal((5, 3))
        ab = a.compose(b)
        assert np.allclose(ab.apply(pts), a.apply(b.apply(pts)), atol=1e-12)
        ident = a.compose(a.inverse())
        assert np.allclose(ident.apply(pts), pts, atol=1e-10)
        m = a.matrix()
        hom = np.c_[pts, np.ones(5)] @ m.T
        assert np.allclose(hom[:, :3], a.apply(pts), atol=1e-12)


def test_zero_quat_rejected():
    import pytest

    with pytest.raises(ValueError):
        quat_normalize(np.zeros(4))
