import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import rand_field
from viscospec.errors import GridMismatch, InvalidShape
from viscospec.spectral import (Grid, ScalarField, TensorField, VectorField, dealias, divergence_tensor,
                                divergence_vec, fft_forward, fft_inverse, gradient, laplacian,
                                max_divergence, project_divfree_tensor, project_divfree_vec, transfer)


# -- grid -------------------------------------------------------------------------

@pytest.mark.parametrize("bad", [dict(d=1, n=16), dict(d=4, n=16), dict(d=2, n=15), dict(d=2, n=6)])
def test_grid_rejects_bad_parameters(bad):
    with pytest.raises(ValueError):
        Grid(**bad)


def test_wavenumbers_are_integers_in_range():
    g = Grid(2, 16, length=4.0)
    m = g.k * g.length / (2 * np.pi)
    assert np.allclose(m, np.round(m))
    assert m.min() == -8 and m.max() == 7


# -- transforms -------------------------------------------------------------------

def test_constant_field_has_only_mode_zero():
    g = Grid(2, 16)
    hat = fft_forward(np.full(g.shape, 3.5), g)
    assert hat[0, 0] == pytest.approx(3.5)
    hat[0, 0] = 0
    assert np.abs(hat).max() < 1e-15


def test_sine_coefficients():
    g = Grid(2, 16)
    hat = fft_forward(np.sin(g.x[0]), g)
    assert hat[1, 0] == pytest.approx(-0.5j, abs=1e-15)
    assert hat[-1, 0] == pytest.approx(0.5j, abs=1e-15)
    hat[1, 0] = hat[-1, 0] = 0
    assert np.abs(hat).max() < 1e-15


def test_forward_matches_explicit_dft(rng):
    g = Grid(2, 8)
    f = rng.standard_normal(g.shape)
    assert np.allclose(fft_forward(f, g), oracles.dft(f, 2, 8), atol=1e-14)


@pytest.mark.parametrize("d,n", [(2, 16), (3, 8)])
def test_round_trip(rng, d, n):
    g = Grid(d, n)
    f = rng.standard_normal((d,) + g.shape)
    back = fft_inverse(fft_forward(f, g), g)
    assert np.abs(back - f).max() / np.abs(f).max() < 1e-12


def test_conjugate_symmetry(rng):
    g = Grid(2, 16)
    hat = fft_forward(rng.standard_normal(g.shape), g)
    mirror = np.conj(np.roll(np.flip(hat), 1, axis=(0, 1)))
    assert np.allclose(hat, mirror, atol=1e-15)


def test_shape_mismatch_raises():
    g = Grid(2, 16)
    with pytest.raises(InvalidShape):
        fft_forward(np.zeros((8, 8)), g)
    with pytest.raises(InvalidShape):
        VectorField.from_physical(g, np.zeros((3, 16, 16)))


def test_fields_are_immutable(g16, randvec):
    u = randvec(g16)
    with pytest.raises(ValueError):
        u.hat[0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        u.phys[0, 0, 0] = 1.0


def test_physical_and_spectral_agree(g16, randten):
    F = randten(g16, band=False, project=False)
    again = TensorField.from_physical(g16, F.phys)
    assert np.abs(again.hat - F.hat).max() / np.abs(F.hat).max() < 1e-12


# -- differential operators -------------------------------------------------------

def test_divergence_examples():
    g = Grid(2, 16)
    x, y = g.x
    const = VectorField.from_physical(g, np.stack([np.full(g.shape, 2.0), np.full(g.shape, -1.0)]))
    assert np.abs(divergence_vec(const).phys).max() < 1e-14
    shear = VectorField.from_physical(g, np.stack([np.sin(y), np.zeros(g.shape)]))
    assert np.abs(divergence_vec(shear).phys).max() < 1e-14
    u = VectorField.from_physical(g, np.stack([np.sin(x), np.zeros(g.shape)]))
    assert np.abs(divergence_vec(u).phys - np.cos(x)).max() < 1e-12


def test_tensor_divergence_contracts_first_index():
    g = Grid(2, 16)
    x, y = g.x
    F = np.zeros((2, 2) + g.shape)
    F[0, 0] = np.sin(x)
    out = divergence_tensor(TensorField.from_physical(g, F)).phys
    assert np.abs(out[0] - np.cos(x)).max() < 1e-12
    assert np.abs(out[1]).max() < 1e-14
    # an entry depending on y only in the second row feeds component 0 via d_y F_10
    F = np.zeros((2, 2) + g.shape)
    F[1, 0] = np.cos(y)
    out = divergence_tensor(TensorField.from_physical(g, F)).phys
    assert np.abs(out[0] + np.sin(y)).max() < 1e-12
    const = TensorField.from_physical(g, np.ones((2, 2) + g.shape))
    assert np.abs(divergence_tensor(const).phys).max() < 1e-14


def test_gradient_layout():
    g = Grid(2, 16)
    x, y = g.x
    u = VectorField.from_physical(g, np.stack([np.sin(x) * np.cos(2 * y), np.cos(3 * x)]))
    G = gradient(u).phys                       # G[i, j] = d_j u_i
    assert np.abs(G[0, 0] - np.cos(x) * np.cos(2 * y)).max() < 1e-11
    assert np.abs(G[0, 1] + 2 * np.sin(x) * np.sin(2 * y)).max() < 1e-11
    assert np.abs(G[1, 0] + 3 * np.sin(3 * x)).max() < 1e-11
    assert np.abs(G[1, 1]).max() < 1e-11


def test_derivatives_exact_on_trig_polynomials():
    g = Grid(3, 16)
    x, y, z = g.x
    f = np.sin(2 * x + y) * np.cos(3 * z) + np.cos(5 * y)
    s = ScalarField.from_physical(g, f)
    lap = laplacian(s).phys
    exact = -(4 + 1 + 9) * np.sin(2 * x + y) * np.cos(3 * z) - 25 * np.cos(5 * y)
    assert np.abs(lap - exact).max() < 1e-11


# -- projection -------------------------------------------------------------------

def test_gradient_field_is_annihilated():
    g = Grid(2, 16)
    x = g.x[0]
    grad_phi = VectorField.from_physical(g, np.stack([np.cos(x), np.zeros(g.shape)]))
    assert project_divfree_vec(grad_phi).norm() < 1e-14


def test_projection_leaves_divfree_field(g16, randvec):
    u = randvec(g16)
    assert np.abs(project_divfree_vec(u).hat - u.hat).max() < 1e-12 * u.norm()


def test_projection_matches_helmholtz_oracle():
    # u = (sin x, sin x): the x-component is the gradient of -cos x, the y-component
    # is already solenoidal.  Compare with a dense least-squares Helmholtz split.
    g = Grid(2, 16)
    x = g.x[0]
    u = np.stack([np.sin(x), np.sin(x)])
    got = project_divfree_vec(VectorField.from_physical(g, u)).phys
    assert np.abs(got[0]).max() < 1e-14
    assert np.abs(got[1] - np.sin(x)).max() < 1e-14
    # dense oracle: remove the L2-closest gradient of a trig polynomial of degree < 8
    n = 16
    X = oracles.points(2, n)
    ks = [k for k in oracles.wavevectors(2, n) if np.abs(k).max() < n // 2 and k.any()]
    cols = []
    for k in ks:
        for phase in (np.cos, np.sin):
            dphi = np.stack([
                -k[0] * np.sin(X @ k) if phase is np.cos else k[0] * np.cos(X @ k),
                -k[1] * np.sin(X @ k) if phase is np.cos else k[1] * np.cos(X @ k)])
            cols.append(dphi.reshape(-1))
    B = np.array(cols).T
    uf = u.reshape(2, -1).reshape(-1)
    coef, *_ = np.linalg.lstsq(B, uf, rcond=None)
    oracle = (uf - B @ coef).reshape(2, n, n)
    assert np.abs(oracle - got).max() < 1e-10


def test_tensor_projection_examples(g16, randten):
    const = TensorField.from_physical(g16, np.ones((2, 2) + g16.shape) * 0.7)
    assert np.abs(project_divfree_tensor(const).hat - const.hat).max() < 1e-15
    x = g16.x[0]
    F = np.zeros((2, 2) + g16.shape)
    F[0, 0] = np.cos(x)                  # column 0 = grad(sin x)
    F[0, 1] = np.sin(g16.x[1])          # column 1 solenoidal
    P = project_divfree_tensor(TensorField.from_physical(g16, F)).phys
    assert np.abs(P[:, 0]).max() < 1e-14
    assert np.abs(P[:, 1] - F[:, 1]).max() < 1e-14
    R = randten(g16, band=False, project=False)
    PR = project_divfree_tensor(R)
    assert max_divergence(PR) <= 1e-12 * PR.norm()
    assert np.abs(divergence_tensor(PR).hat).max() <= 1e-12 * PR.norm()


def test_projection_matches_mode_loop(rng):
    g = Grid(2, 8)
    F = rand_field(TensorField, g, rng, band=False, project=False)
    assert np.allclose(project_divfree_tensor(F).hat, oracles.project(F.hat, 2, 8), atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 3]))
def test_projection_idempotent_and_symmetric(seed, d):
    rng = np.random.default_rng(seed)
    g = Grid(d, 8)
    u = rand_field(VectorField, g, rng, band=False, project=False)
    v = rand_field(VectorField, g, rng, band=False, project=False)
    Pu, Pv = project_divfree_vec(u), project_divfree_vec(v)
    assert (project_divfree_vec(Pu) - Pu).norm() <= 1e-12 * u.norm()
    assert abs(Pu.inner(v) - u.inner(Pv)) <= 1e-12 * u.norm() * v.norm()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_leray_orthogonality(seed):
    rng = np.random.default_rng(seed)
    g = Grid(2, 16)
    u = rand_field(VectorField, g, rng, band=False, project=False)
    phi = rand_field(ScalarField, g, rng, band=False)
    gphi = gradient(phi)
    assert abs(project_divfree_vec(u).inner(gphi)) <= 1e-12 * u.norm() * gphi.norm()


def test_parseval_100_fields(rng):
    g = Grid(2, 16)
    for _ in range(100):
        f = rand_field(TensorField, g, rng, band=False, project=False)
        assert abs(f.norm() - f.norm_physical()) <= 1e-12 * f.norm()


# -- dealiasing -------------------------------------------------------------------

def test_dealias_keeps_band_and_drops_high_modes(g16):
    hat = np.zeros(g16.shape, complex)
    for m in [(5, 0), (3, 4), (-5, 5)]:
        hat[m] = 1.0 + 0.5j
        hat[tuple(-c for c in m)] = 1.0 - 0.5j
    low = ScalarField.from_spectral(g16, hat)
    assert np.array_equal(dealias(low).hat, low.hat)
    high = np.zeros(g16.shape, complex)
    high[7, 0] = high[-7, 0] = 1.0
    assert np.abs(dealias(ScalarField.from_spectral(g16, high)).hat).max() == 0


def test_dealiased_product_equals_truncated_convolution(rng):
    n = 8
    g = Grid(2, n)
    a = dealias(fft_forward(rng.standard_normal(g.shape), g), g)
    b = dealias(fft_forward(rng.standard_normal(g.shape), g), g)
    prod = dealias(fft_forward(fft_inverse(a, g) * fft_inverse(b, g), g), g)
    assert np.abs(prod - oracles.convolve_band(a, b, n)).max() < 1e-14


def test_dealias_requires_grid_for_raw_arrays():
    with pytest.raises(TypeError):
        dealias(np.zeros((16, 16)))


# -- transfer ---------------------------------------------------------------------

def test_transfer_round_trip(g16, randten):
    F = randten(g16)
    fine = transfer(F, Grid(2, 32))
    assert fine.norm() == pytest.approx(F.norm(), rel=1e-14)
    back = transfer(fine, g16)
    assert np.abs(back.hat - F.hat).max() < 1e-15


def test_transfer_evaluates_same_polynomial(g16, randvec):
    u = randvec(g16)
    fine = transfer(u, Grid(2, 32))
    assert np.abs(fine.phys[:, ::2, ::2] - u.phys).max() < 1e-13


@pytest.mark.parametrize("target", [Grid(2, 24), Grid(3, 16), Grid(2, 32, length=1.0)])
def test_transfer_rejects_incompatible_grids(g16, randvec, target):
    with pytest.raises(GridMismatch):
        transfer(randvec(g16), target)
