import sys
import os
from math import ceil, log2, pi, sin

import numpy as np
import pytest

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from app.core.config import settings
from app.core.exceptions import BlowUpError, InvalidArgumentError
from app.schemas.models import GridSpec, SpectralState
from app.services.spectral_service import _weights, spectral_service as svc


def smooth_state(M, N, a=0.2, b=0.2, fold=None):
    """Band-limited M-fold symmetric tangent field on the first N/fold nodes."""
    fold = fold or M
    n = N // fold
    s = 2 * pi * np.arange(n) / N
    z = np.exp(1j * s) * (1 + a * np.cos(M * s))
    T = np.column_stack([z.real, z.imag, b * np.sin(M * s)])
    T /= np.linalg.norm(T, axis=1)[:, None]
    X = np.column_stack([np.cos(s), np.sin(s), np.zeros(n)])
    return SpectralState(time=0.0, X=X, T=T, M=M, N=N, fold=fold)


@pytest.mark.parametrize("fold", [3, 1])
def test_derivative_of_band_limited_fields(fold):
    M, N = 3, 48
    s = 2 * pi * np.arange(N // fold) / N
    z = np.exp(1j * s) + 0.3 * np.exp(4j * s) + 0.2 * np.exp(-2j * s)
    dz = 1j * np.exp(1j * s) + 1.2j * np.exp(4j * s) - 0.4j * np.exp(-2j * s)
    d2z = -np.exp(1j * s) - 4.8 * np.exp(4j * s) - 0.8 * np.exp(-2j * s)
    assert np.allclose(svc.spectral_derivative(z, 1, "z", fold, N), dz, atol=1e-12)
    assert np.allclose(svc.spectral_derivative(z, 2, "z", fold, N), d2z, atol=1e-12)

    f = np.cos(M * s) + 0.5 * np.sin(2 * M * s)
    df = -M * np.sin(M * s) + M * np.cos(2 * M * s)
    d2f = -M ** 2 * np.cos(M * s) - 2 * M ** 2 * np.sin(2 * M * s)
    assert np.allclose(svc.spectral_derivative(f, 1, "t3", fold, N), df, atol=1e-11)
    assert np.allclose(svc.spectral_derivative(f, 2, "t3", fold, N), d2f, atol=1e-10)


def test_derivative_of_constant_and_rotating_circle():
    N = 24
    s = 2 * pi * np.arange(8) / N
    assert np.allclose(svc.spectral_derivative(np.ones(8), 1, "t3", 3, N), 0.0)
    circle = np.exp(1j * s)
    assert np.allclose(svc.spectral_derivative(circle, 1, "z", 3, N), 1j * circle)


def test_derivative_argument_checks():
    with pytest.raises(InvalidArgumentError):
        svc.spectral_derivative(np.zeros(8), 1, "x", 3, 24)
    with pytest.raises(InvalidArgumentError):
        svc.spectral_derivative(np.zeros(8), 3, "z", 3, 24)
    with pytest.raises(InvalidArgumentError):
        svc.spectral_derivative(np.zeros(8), 1, "z", 3, 30)


def test_odd_derivative_drops_nyquist_mode():
    w1 = _weights(8, 1, "t3", 1)
    w2 = _weights(8, 1, "t3", 2)
    assert w1[4] == 0
    assert w2[4] == pytest.approx(-16.0)


def test_tangent_derivatives_match_componentwise():
    state = smooth_state(4, 64)
    T_s, T_ss = svc.tangent_derivatives(state.T, state.fold, state.N)
    z = state.T[:, 0] + 1j * state.T[:, 1]
    dz = svc.spectral_derivative(z, 1, "z", 4, 64)
    assert np.allclose(T_s[:, 0], dz.real)
    assert np.allclose(T_s[:, 1], dz.imag)
    assert np.allclose(T_ss[:, 2], svc.spectral_derivative(state.T[:, 2], 2, "t3", 4, 64))


def test_init_state():
    M, N = 4, 64
    state = svc.init_state(M, N)
    assert state.n == N // M
    radius = pi / (M * sin(pi / M))
    corner = -1j * radius * np.exp(-1j * pi / M)
    assert np.allclose(state.X[0], [corner.real, corner.imag, 0.0])
    assert np.allclose(state.T, [1.0, 0.0, 0.0])

    full = svc.init_state(M, N, full=True)
    assert full.fold == 1 and full.n == N
    # the next block starts at the next vertex
    assert np.allclose(full.X[N // M] - full.X[0], [2 * pi / M, 0.0, 0.0])
    steps = np.diff(np.vstack([full.X, full.X[:1]]), axis=0)
    assert np.sum(np.linalg.norm(steps, axis=1)) == pytest.approx(2 * pi)


def test_init_state_rejects_bad_grid():
    with pytest.raises(InvalidArgumentError):
        svc.init_state(3, 40)
    with pytest.raises(InvalidArgumentError):
        svc.init_state(3, 36)


def test_rk4_keeps_unit_tangents():
    state = smooth_state(3, 48)
    for step in range(20):
        state = svc.rk4_step(state, 1e-3, step)
    assert np.allclose(np.linalg.norm(state.T, axis=1), 1.0, atol=1e-14)
    assert state.time == pytest.approx(0.02)


def test_rk4_is_fourth_order():
    t_end = 0.1

    def integrate(n_steps):
        state = smooth_state(3, 24)
        for step in range(n_steps):
            state = svc.rk4_step(state, t_end / n_steps, step)
        return state

    reference = integrate(320)
    errors = []
    for n_steps in (10, 20, 40):
        state = integrate(n_steps)
        errors.append(max(np.max(np.abs(state.T - reference.T)), np.max(np.abs(state.X - reference.X))))
    assert log2(errors[0] / errors[1]) > 3.5
    assert log2(errors[1] / errors[2]) > 3.8


def test_rk4_runs_backwards():
    start = smooth_state(3, 48)
    state = start
    for step in range(20):
        state = svc.rk4_step(state, 1e-3, step)
    for step in range(20):
        state = svc.rk4_step(state, -1e-3, step)
    assert np.max(np.abs(state.T - start.T)) < 1e-8
    assert np.max(np.abs(state.X - start.X)) < 1e-8


def test_reduced_and_full_grids_agree():
    spec = GridSpec(M=3, N=96, n_t=svc.min_steps(3, 96))
    reduced = svc.run(spec, record_full_at=[spec.t_final])
    full = svc.run(spec, record_full_at=[spec.t_final], full_grid=True)
    assert np.allclose(reduced.x0, full.x0, atol=1e-10)
    assert np.allclose(reduced.height, full.height, atol=1e-10)

    expanded = svc.expand_state(reduced.dump_at(spec.t_final))
    full_state = full.dump_at(spec.t_final)
    assert full_state.fold == 1 and expanded.fold == 1
    assert expanded.X.shape == full_state.X.shape == (96, 3)
    assert np.max(np.abs(expanded.X - full_state.X)) < 1e-10
    assert np.max(np.abs(expanded.T - full_state.T)) < 1e-10


def test_run_records_dumps_and_height():
    spec = GridSpec(M=3, N=48, n_t=svc.min_steps(3, 48))
    traj = svc.run(spec, record_full_at=[0.0, spec.t_final])
    assert traj.times.size == spec.n_t + 1
    assert traj.times[-1] == pytest.approx(spec.t_final)
    assert traj.height[0] == 0.0
    assert set(traj.dumps) == {0, spec.n_t}
    assert traj.dump_at(spec.t_final).time == pytest.approx(spec.t_final)
    # the center of mass rises
    assert traj.height[-1] > 0


def test_run_rejects_unstable_step_and_blows_up_when_forced():
    spec = GridSpec(M=3, N=48, n_t=20)
    with pytest.raises(InvalidArgumentError):
        svc.run(spec)
    with pytest.raises(BlowUpError):
        svc.run(spec, enforce_stability=False)
    with pytest.raises(InvalidArgumentError):
        svc.run(GridSpec(M=3, N=48, n_t=200), record_full_at=[1.0])


def test_stability_constant_brackets():
    C = settings.STABILITY_CONSTANT
    assert svc.is_stable(3, 48, 0.9 * C)
    assert not svc.is_stable(3, 48, 4 * C)
    with pytest.raises(InvalidArgumentError):
        svc.measure_stability_constant(3, 48, lower=1.0, upper=2.0)


def test_step_counts():
    assert svc.reference_steps(512) == 151200
    assert svc.reference_steps(2048) == 151200 * 16
    with pytest.raises(InvalidArgumentError):
        svc.reference_steps(300)
    with pytest.raises(InvalidArgumentError):
        svc.reference_steps(256)

    C = settings.STABILITY_CONSTANT
    for M, nodes in [(3, 512), (10, 512), (5, 1024)]:
        N = M * nodes
        n = svc.min_steps(M, N)
        t_final = 2 * pi / M ** 2
        assert t_final / n <= C / N ** 2
        assert t_final / (n - 1) > C / N ** 2
        assert svc.reference_steps(nodes) >= n
    assert svc.min_steps(3, 48, constant=1.0) == ceil(2 * pi / 9 * 48 ** 2)


def test_reduced_derivative_matches_full_extension():
    M, N = 3, 48
    n = N // M
    rng = np.random.default_rng(7)
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    f = rng.normal(size=n)
    z_full = np.concatenate([z * np.exp(2j * pi * b / M) for b in range(M)])
    f_full = np.tile(f, M)
    for order, tol in ((1, 1e-11), (2, 1e-9)):
        reduced = svc.spectral_derivative(z, order, "z", M, N)
        full = svc.spectral_derivative(z_full, order, "z", 1, N)
        assert np.allclose(reduced, full[:n], atol=tol)
        reduced = svc.spectral_derivative(f, order, "t3", M, N)
        full = svc.spectral_derivative(f_full, order, "t3", 1, N)
        assert np.allclose(reduced, full[:n], atol=tol)


def test_vertical_tangent_is_a_fixed_point():
    state = smooth_state(3, 24)
    state = state.model_copy(update={"T": np.tile([0.0, 0.0, 1.0], (8, 1))})
    stepped = svc.rk4_step(state, 1e-3)
    assert np.allclose(stepped.T, state.T, atol=1e-14)
    assert np.allclose(stepped.X, state.X, atol=1e-15)


def test_initial_corner_for_triangle():
    state = svc.init_state(3, 24)
    corner = -1j * pi * np.exp(-1j * pi / 3) / (3 * sin(pi / 3))
    assert np.allclose(state.X[0], [corner.real, corner.imag, 0.0], atol=1e-15)
