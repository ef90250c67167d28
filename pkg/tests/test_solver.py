"""Time integration: analytic decay oracles, energy accounting, stability."""

import numpy as np
import pytest
from scipy.optimize import brentq

from invisclab.grid import BCKind, DomainSpec, ScalarField, VelocityField, divergence
from invisclab.solver import (
    EnergyLedger,
    RandomSpectrum,
    RunConfig,
    SolverBlowupError,
    Stepper,
    StokesMode,
    make_initial,
    run,
)


def stokes_error(nu, dt, Ny):
    """L2 error of a no-slip single-mode decay against the exact solution."""
    d = DomainSpec(Lx=1.0, H=1.0, Nx=16, Ny=Ny, T_final=0.1)
    cfg = RunConfig(domain=d, nu=nu, dt=dt, init=StokesMode(1), snapshot_every=10**6)
    snaps, ledger = run(cfg)
    lam = np.pi / d.H
    exact = np.sin(lam * d.y)[None, :] * np.exp(-nu * lam**2 * snaps[-1].time)
    diff = snaps[-1].u.data - exact
    err = np.sqrt(np.sum(d.quadrature_weights() * diff**2))
    return err, ledger


def test_stokes_decay_accuracy():
    err, ledger = stokes_error(0.01, 1e-4, 129)
    assert err <= 1e-6
    assert ledger.check()


def test_stokes_decay_second_order():
    e1, _ = stokes_error(0.01, 1e-4, 129)
    e2, _ = stokes_error(0.01, 5e-5, 257)
    assert e1 / e2 >= 3.6


def test_robin_mode_decay():
    """Navier-friction decay rate from the transcendental eigenvalue
    lam tan(lam H / 2) = alpha."""
    alpha, nu = 2.0, 0.01
    d = DomainSpec(
        Lx=1.0, H=1.0, Nx=16, Ny=129, T_final=0.1,
        bc_kind=BCKind.NAVIER_FRICTION, alpha0=alpha, beta=0.0,
    )
    lam = brentq(lambda t: t * np.tan(0.5 * t * d.H) - alpha, 1e-9, np.pi / d.H - 1e-9)
    prof = np.cos(lam * (d.y - 0.5 * d.H))
    state = VelocityField(
        ScalarField(np.tile(prof, (d.Nx, 1)), d),
        ScalarField(np.zeros((d.Nx, d.Ny)), d),
        nu,
    )
    cfg = RunConfig(domain=d, nu=nu, dt=1e-4, init=StokesMode(1), snapshot_every=10**6)
    st = Stepper(cfg, state=state)
    while st.state.time < d.T_final - 1e-12:
        st.step()
    exact = prof[None, :] * np.exp(-nu * lam**2 * st.state.time)
    err = np.sqrt(np.sum(d.quadrature_weights() * (st.state.u.data - exact) ** 2))
    assert err <= 1e-6
    assert st.ledger.check()
    assert st.ledger.dissipation_wall[-1] > 0.0


def test_random_spectrum_initial_data():
    d = DomainSpec(Lx=2.0 * np.pi, H=np.pi, Nx=128, Ny=65)
    init = RandomSpectrum(slope=2.0 / 3.0, k_min=2.0, k_max=8.0, seed=11, amplitude=0.1)
    vel = make_initial(init, d, nu=1e-3)
    assert vel.u.data.shape == (d.Nx, d.Ny)
    # no-slip compatible and discretely solenoidal in the interior
    assert np.max(np.abs(vel.u.data[:, 0])) < 1e-12
    assert np.max(np.abs(vel.v.data[:, -1])) < 1e-12
    div = divergence(vel).data
    scale = np.max(np.abs(vel.u.data)) / d.dx
    assert np.max(np.abs(div[:, 1:-1])) < 1e-8 * scale


def test_random_spectrum_deterministic():
    d = DomainSpec(Lx=2.0 * np.pi, H=np.pi, Nx=64, Ny=33)
    init = RandomSpectrum(slope=1.0, k_min=2.0, k_max=8.0, seed=5, amplitude=0.1)
    a = make_initial(init, d, nu=1e-3)
    b = make_initial(init, d, nu=1e-3)
    assert np.array_equal(a.u.data, b.u.data)
    assert np.array_equal(a.v.data, b.v.data)


def test_run_snapshot_series_times():
    d = DomainSpec(Lx=2.0 * np.pi, H=np.pi, Nx=32, Ny=33, T_final=0.02)
    cfg = RunConfig(
        domain=d, nu=1e-2, dt=1e-3,
        init=RandomSpectrum(slope=1.0, k_min=1.0, k_max=4.0, seed=0, amplitude=0.05),
        snapshot_every=5,
    )
    snaps, ledger = run(cfg)
    t = [s.time for s in snaps]
    assert t[0] == 0.0
    assert np.isclose(t[-1], d.T_final)
    assert all(b > a for a, b in zip(t, t[1:]))
    assert len(ledger.times) == len(ledger.kinetic)


def test_energy_monotone_without_forcing():
    d = DomainSpec(Lx=2.0 * np.pi, H=np.pi, Nx=64, Ny=65, T_final=0.05)
    cfg = RunConfig(
        domain=d, nu=1e-2, dt=1e-3,
        init=RandomSpectrum(slope=1.0, k_min=2.0, k_max=8.0, seed=1, amplitude=0.1),
        snapshot_every=10**6,
    )
    _, ledger = run(cfg)
    E = np.asarray(ledger.kinetic)
    assert np.all(np.diff(E) <= 1e-14 * E[0])
    assert ledger.check()


def test_cfl_dt_halving():
    """A dt far above the CFL limit is reduced automatically instead of
    blowing up."""
    d = DomainSpec(Lx=2.0 * np.pi, H=np.pi, Nx=32, Ny=33, T_final=0.01)
    cfg = RunConfig(
        domain=d, nu=1e-2, dt=1.0,
        init=RandomSpectrum(slope=1.0, k_min=1.0, k_max=4.0, seed=2, amplitude=1.0),
        snapshot_every=10**6,
    )
    st = Stepper(cfg)
    st.step()
    assert st.dt < 1.0


def test_blowup_detection():
    d = DomainSpec(Lx=2.0 * np.pi, H=np.pi, Nx=32, Ny=33, T_final=1.0)
    cfg = RunConfig(
        domain=d, nu=1e-2, dt=1e-3,
        init=RandomSpectrum(slope=1.0, k_min=1.0, k_max=4.0, seed=3, amplitude=0.1),
        snapshot_every=10**6,
    )
    st = Stepper(cfg)
    st.state.u.data[:] = np.inf
    with pytest.raises(SolverBlowupError):
        st.step()


def test_ledger_budget_residual_shape():
    led = EnergyLedger()
    led.start(0.0, 1.0)
    led.record(0.1, 0.9, 0.1, 0.0, 0.0)
    res = led.budget_residuals()
    assert res.shape == (2,)
    assert abs(res[1]) < 1e-15
    assert led.max_step_violation() < 1e-15
