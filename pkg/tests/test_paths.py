import numpy as np
import pytest

from semicone.paths import ControlPath, PathError, PolySegment, TrigSegment


class TestPolynomialPaths:
    def test_eval_and_derivatives(self):
        p = ControlPath.from_polynomials([0.0, 1.0, 2.0], [1.0, -1.0])
        t = np.array([0.0, 0.5, 1.0])
        uv = p.eval(t)
        assert np.allclose(uv[:, 0], [0.0, 1.0, 3.0])
        assert np.allclose(uv[:, 1], [1.0, 0.5, 0.0])
        assert np.allclose(p.eval(t, 1)[:, 0], [1.0, 3.0, 5.0])
        assert np.allclose(p.eval(t, 2)[:, 0], [4.0, 4.0, 4.0])

    def test_line(self):
        p = ControlPath.line([1.0, 2.0], [3.0, -2.0])
        assert np.allclose(p.eval(0.5), [2.0, 0.0])
        assert np.allclose(p.eval(0.3, 1), [2.0, -4.0])

    def test_scalar_eval(self):
        p = ControlPath.line([0.0, 0.0], [1.0, 1.0])
        out = p.eval(0.25)
        assert out.shape == (2,)


class TestTrigPaths:
    def test_circle_closure_and_speed(self):
        p = ControlPath.circle(2.0, center=(0.5, -0.5))
        assert np.allclose(p.eval(0.0), p.eval(1.0), atol=1e-12)
        t = np.linspace(0, 1, 100)
        speed = np.linalg.norm(p.eval(t, 1), axis=1)
        assert np.allclose(speed, 2.0 * 2.0 * np.pi)

    def test_derivative_matches_fd(self):
        p = ControlPath.circle(1.3, turns=0.4, phase=0.2)
        h = 1e-6
        for t in (0.2, 0.7):
            fd = (p.eval(t + h) - p.eval(t - h)) / (2 * h)
            assert np.allclose(p.eval(t, 1), fd, atol=1e-6)
            fd2 = (p.eval(t + h, 1) - p.eval(t - h, 1)) / (2 * h)
            assert np.allclose(p.eval(t, 2), fd2, atol=1e-5)


class TestPiecewise:
    def test_segments_must_tile(self):
        with pytest.raises(PathError):
            ControlPath([PolySegment(0.0, 0.4, (0.0,), (0.0,)),
                         PolySegment(0.5, 1.0, (0.0,), (0.0,))])

    def test_restrict_polynomial(self):
        p = ControlPath.from_polynomials([0.0, 1.0, -1.0, 0.5], [1.0, 2.0])
        sub = p.restrict(0.25, 0.75)
        for s in np.linspace(0, 1, 11):
            t = 0.25 + 0.5 * s
            assert np.allclose(sub.eval(s), p.eval(t), atol=1e-12)
            assert np.allclose(sub.eval(s, 1), 0.5 * p.eval(t, 1), atol=1e-12)

    def test_restrict_trig(self):
        p = ControlPath.circle(1.0)
        sub = p.restrict(0.1, 0.6)
        for s in np.linspace(0, 1, 7):
            t = 0.1 + 0.5 * s
            assert np.allclose(sub.eval(s), p.eval(t), atol=1e-12)

    def test_regularity(self):
        good = ControlPath.line([0.0, 0.0], [1.0, 0.0])
        assert good.is_regular()
        stalled = ControlPath.from_polynomials([0.0, 0.0, 1.0], [0.0])
        assert not stalled.is_regular()  # velocity vanishes at t = 0


class TestSerialization:
    def test_roundtrip(self):
        p = ControlPath([
            PolySegment(0.0, 0.5, (0.0, 1.0), (0.0, 0.0, 2.0)),
            TrigSegment(0.5, 1.0, (0.5, 0.2, 3.0, 0.1), (0.0, 0.1, 3.0, 0.4)),
        ])
        q = ControlPath.from_dict(p.to_dict())
        t = np.linspace(0, 1, 23)
        assert np.allclose(p.eval(t), q.eval(t))

    def test_malformed_cites_segment(self):
        with pytest.raises(PathError, match="segment 1"):
            ControlPath.from_dict({"segments": [{"kind": "poly", "t0": 0.0}]})
