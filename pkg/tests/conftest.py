import numpy as np
import pytest

from invisclab.grid import DomainSpec, ScalarField, Subdomain, VelocityField


@pytest.fixture
def small_domain():
    return DomainSpec(Lx=2.0 * np.pi, H=np.pi, Nx=64, Ny=65)


@pytest.fixture
def mid_subdomain(small_domain):
    d = small_domain
    return Subdomain(0.0, d.Lx, 0.25 * d.H, 0.75 * d.H)


def single_mode_field(domain, g=None, time=0.0, nu=0.01):
    """u = sin(2 pi x / Lx) g(y), v = 0 (not solenoidal; norms only)."""
    if g is None:
        g = np.sin(np.pi * domain.y / domain.H)
    u = np.sin(2.0 * np.pi * domain.x / domain.Lx)[:, None] * g[None, :]
    return VelocityField(
        ScalarField(u, domain, time),
        ScalarField(np.zeros_like(u), domain, time),
        nu,
    )
