"""Grid containers, derivative operators and shift sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invisclab.grid import (
    DomainSpec,
    ScalarField,
    Subdomain,
    VelocityField,
    curl,
    ddx,
    ddy,
    divergence,
    restrict,
    shift_sample,
    stream_function,
)


def test_domain_axes(small_domain):
    d = small_domain
    assert d.x.shape == (d.Nx,)
    assert d.y.shape == (d.Ny,)
    assert np.isclose(d.x[1] - d.x[0], d.dx)
    assert np.isclose(d.y[-1], d.H)
    assert d.y[0] == 0.0


def test_domain_validation():
    with pytest.raises(ValueError):
        DomainSpec(Lx=-1.0, H=1.0, Nx=16, Ny=17)
    with pytest.raises(ValueError):
        DomainSpec(Lx=1.0, H=1.0, Nx=16, Ny=4)


def test_ddx_spectral_exact(small_domain):
    d = small_domain
    k = 3
    f = np.cos(k * d.x)[:, None] * np.ones((1, d.Ny))
    expect = -k * np.sin(k * d.x)[:, None] * np.ones((1, d.Ny))
    assert np.max(np.abs(ddx(f, d) - expect)) < 1e-10


def test_ddy_second_order():
    errs = []
    for Ny in (33, 65):
        d = DomainSpec(Lx=1.0, H=1.0, Nx=8, Ny=Ny)
        f = np.sin(2.0 * np.pi * d.y)[None, :] * np.ones((d.Nx, 1))
        expect = 2.0 * np.pi * np.cos(2.0 * np.pi * d.y)[None, :] * np.ones((d.Nx, 1))
        errs.append(np.max(np.abs(ddy(f, d) - expect)))
    assert errs[0] / errs[1] > 3.5


def test_field_shape_mismatch(small_domain):
    with pytest.raises(ValueError):
        ScalarField(np.zeros((3, 3)), small_domain)


def test_curl_divergence_of_stream_function(small_domain):
    """Velocity built as a discrete perpendicular gradient has zero discrete
    divergence away from the walls."""
    d = small_domain
    psi = (
        np.sin(2.0 * d.x)[:, None]
        * np.sin(np.pi * d.y / d.H)[None, :]
    )
    u = ddy(psi, d)
    v = -ddx(psi, d)
    vel = VelocityField(ScalarField(u, d), ScalarField(v, d))
    div = divergence(vel).data
    assert np.max(np.abs(div[:, 1:-1])) < 1e-10
    w = curl(vel).w
    assert w.data.shape == (d.Nx, d.Ny)


def test_shift_sample_grid_aligned_x(small_domain):
    d = small_domain
    f = ScalarField(np.random.default_rng(0).normal(size=(d.Nx, d.Ny)), d)
    s = shift_sample(f, (3 * d.dx, 0.0))
    assert np.array_equal(s.data, np.roll(f.data, -3, axis=0))
    assert np.all(s.valid_rows)


def test_shift_sample_grid_aligned_y(small_domain):
    d = small_domain
    f = ScalarField(np.random.default_rng(1).normal(size=(d.Nx, d.Ny)), d)
    s = shift_sample(f, (0.0, 2 * d.dy))
    assert np.array_equal(s.data[:, : d.Ny - 2], f.data[:, 2:])
    assert not s.valid_rows[-1] and not s.valid_rows[-2]
    assert np.all(s.valid_rows[: d.Ny - 2])


def test_shift_sample_spectral_x_exact_on_mode(small_domain):
    d = small_domain
    f = ScalarField(np.sin(2.0 * d.x)[:, None] * np.ones((1, d.Ny)), d)
    rx = 0.37  # not a grid multiple
    s = shift_sample(f, (rx, 0.0))
    expect = np.sin(2.0 * (d.x + rx))[:, None] * np.ones((1, d.Ny))
    assert np.max(np.abs(s.data - expect)) < 1e-10


def test_shift_out_of_channel_raises(small_domain):
    d = small_domain
    f = ScalarField(np.zeros((d.Nx, d.Ny)), d)
    with pytest.raises(ValueError):
        shift_sample(f, (0.0, d.H))


@settings(max_examples=20, deadline=None)
@given(m=st.integers(min_value=-10, max_value=10))
def test_shift_zero_then_back_is_identity(m):
    d = DomainSpec(Lx=2.0, H=1.0, Nx=32, Ny=33)
    f = ScalarField(np.random.default_rng(7).normal(size=(d.Nx, d.Ny)), d)
    s = shift_sample(f, (m * d.dx, 0.0))
    back = shift_sample(ScalarField(s.data, d), (-m * d.dx, 0.0))
    assert np.allclose(back.data, f.data)


def test_subdomain_validation():
    with pytest.raises(ValueError):
        Subdomain(0.0, 1.0, 0.5, 0.2)
    with pytest.raises(ValueError):
        Subdomain(0.0, 1.0, -0.1, 0.2)
    d = DomainSpec(Lx=1.0, H=1.0, Nx=16, Ny=17)
    with pytest.raises(ValueError):
        Subdomain(0.0, 1.0, 0.5, 1.5).margin(d)


def test_restrict_area(small_domain, mid_subdomain):
    R = restrict(small_domain, mid_subdomain)
    area = mid_subdomain.y_hi - mid_subdomain.y_lo
    assert np.isclose(R.area(), small_domain.Lx * area, rtol=0.05)
    ones = np.ones((small_domain.Nx, small_domain.Ny))
    assert np.isclose(R.integrate(ones), R.area())


def test_restrict_integral_oracle(small_domain, mid_subdomain):
    """Quadrature of a separable function against the analytic integral."""
    d = small_domain
    f = np.cos(d.x)[:, None] ** 2 * d.y[None, :]
    R = restrict(d, mid_subdomain)
    # int cos^2 x over [0, 2pi) = pi; int y dy over [y_lo, y_hi]
    exact = np.pi * 0.5 * (mid_subdomain.y_hi**2 - mid_subdomain.y_lo**2)
    assert np.isclose(R.integrate(f), exact, rtol=1e-3)


def test_stream_function_recovers_velocity(small_domain):
    """Reconstruction from the exact vorticity of an analytic stream
    function returns the discrete perpendicular gradient of (nearly) the
    same psi."""
    from invisclab.grid import VorticityField

    d = small_domain
    psi = np.sin(d.x)[:, None] * np.sin(np.pi * d.y / d.H)[None, :]
    w = (1.0 + (np.pi / d.H) ** 2) * psi  # w = -Lap psi
    vel = stream_function(VorticityField(ScalarField(w, d)))
    u = ddy(psi, d)
    v = -ddx(psi, d)
    scale = np.max(np.abs(u))
    assert np.max(np.abs(vel.u.data - u)) < 2e-3 * scale
    assert np.max(np.abs(vel.v.data - v)) < 2e-3 * scale
    div = divergence(vel).data
    assert np.max(np.abs(div[:, 1:-1])) < 1e-9


def test_kinetic_energy_positive(small_domain):
    d = small_domain
    vel = VelocityField(
        ScalarField(np.ones((d.Nx, d.Ny)), d),
        ScalarField(np.zeros((d.Nx, d.Ny)), d),
    )
    # E = 1/2 int |u|^2 = 1/2 * Lx * H
    assert np.isclose(vel.kinetic_energy(), 0.5 * d.Lx * d.H, rtol=1e-12)
