import mpmath
import numpy as np
import pytest
from scipy import integrate

from cavprot.faddeeva import faddeeva, faddeeva_derivative


def quad_oracle(z):
    """w(z) = (i/pi) int exp(-t^2) / (z - t) dt, valid for Im z > 0."""
    def part(t, k):
        v = 1j / np.pi * np.exp(-t * t) / (z - t)
        return v.real if k == 0 else v.imag
    pts = [z.real] if abs(z.real) < 30 else None
    lim = max(12.0, abs(z.real) + 12.0)
    re = integrate.quad(part, -lim, lim, args=(0,), points=pts, limit=500, epsabs=0, epsrel=1e-10)[0]
    im = integrate.quad(part, -lim, lim, args=(1,), points=pts, limit=500, epsabs=0, epsrel=1e-10)[0]
    return re + 1j * im


UPPER = [0.3 + 0.2j, 1.0 + 1.0j, -2.5 + 0.5j, 4.0 + 0.1j, 0.0 + 3.0j, 7.5 + 2.0j, -0.7 + 0.05j,
         12.0 + 0.3j, 0.1 + 10.0j]


def test_origin():
    assert faddeeva(0.0) == pytest.approx(1.0, abs=1e-15)


def test_imaginary_unit():
    # e * erfc(1)
    assert abs(faddeeva(1j) - 0.427583576155807) < 1e-14


@pytest.mark.parametrize("z", UPPER)
def test_quadrature_oracle(z):
    ref = quad_oracle(z)
    assert abs(faddeeva(z) - ref) / abs(ref) < 1e-6


def test_mpmath_oracle_grid():
    xs = np.linspace(-8, 8, 17)
    ys = [0.0, 1e-3, 0.5, 3.0]
    for x in xs:
        for y in ys:
            z = complex(x, y)
            ref = complex(mpmath.exp(-mpmath.mpc(z) ** 2) * mpmath.erfc(-1j * mpmath.mpc(z)))
            assert abs(faddeeva(z) - ref) <= 1e-12 * abs(ref)


@pytest.mark.parametrize("phase", np.linspace(0.05, np.pi - 0.05, 7))
def test_asymptote(phase):
    z = 50.0 * np.exp(1j * phase)
    lead = 1j / (np.sqrt(np.pi) * z)
    # two-term expansion i/(sqrt(pi) z) (1 + 1/(2 z^2)) is good to O(|z|^-4)
    assert abs(faddeeva(z) - lead * (1 + 0.5 / z**2)) / abs(lead) < 1e-4
    # the leading term alone is off by exactly the next order, 1/(2|z|^2)
    assert abs(faddeeva(z) - lead) / abs(lead) == pytest.approx(0.5 / 50.0**2, rel=1e-3)


def test_lower_half_plane_continuation():
    # w(z) + w(-z) = 2 exp(-z^2) holds on the whole plane
    z = np.array([0.5 - 0.3j, -1.2 - 0.8j, 2.0 - 0.1j])
    assert np.allclose(faddeeva(z) + faddeeva(-z), 2 * np.exp(-z * z), rtol=1e-12)


def test_derivative_matches_difference():
    z = np.array([0.4 + 0.3j, -1.5 + 0.9j, 2.0 - 0.2j])
    h = 1e-6
    fd = (faddeeva(z + h) - faddeeva(z - h)) / (2 * h)
    assert np.allclose(faddeeva_derivative(z), fd, rtol=1e-8)


def test_array_shape():
    z = np.full((3, 4), 0.5 + 0.5j)
    assert faddeeva(z).shape == (3, 4)
