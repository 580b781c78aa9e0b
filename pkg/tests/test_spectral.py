import numpy as np
import pytest
import sympy as sp

from hallbkm import spectral as S
from hallbkm.errors import UsageError, ValidationError
from hallbkm.spectral import Field, Grid

from conftest import smooth_random

xs, ys, zs = sp.symbols("x y z", real=True)


def sym_field(grid, exprs):
    """Sample sympy expressions (in x, y, z) on the grid."""
    X, Y, Z = grid.coords()
    vals = []
    for e in exprs:
        fn = sp.lambdify((xs, ys, zs), e, "numpy")
        vals.append(np.broadcast_to(fn(X, Y, Z), grid.physical_shape).astype(float))
    return np.array(vals)


def vec(grid, exprs):
    return Field(grid, sym_field(grid, exprs)).to_spectral()


def phys(f):
    return f.to_physical().data


def test_grid_validation():
    with pytest.raises(UsageError):
        Grid(7)
    with pytest.raises(UsageError):
        Grid(6)
    with pytest.raises(UsageError):
        Grid(16, -1.0)
    g = Grid(32, 4.0)
    assert np.max(np.abs(g.kmag)) <= np.sqrt(3) * np.pi * 32 / 4.0 + 1e-12
    for k, m in zip(g.kvec, g.modes):
        assert np.max(np.abs(k)) <= np.pi * 32 / 4.0


def test_forward_zero_and_constant(grid32):
    z = S.forward_transform(Field(grid32, np.zeros(grid32.physical_shape)))
    assert not np.any(z.data)
    one = S.forward_transform(Field(grid32, np.ones(grid32.physical_shape)))
    assert one.data[0, 0, 0] == pytest.approx(1.0, abs=1e-15)
    rest = one.data.copy()
    rest[0, 0, 0] = 0
    assert np.max(np.abs(rest)) < 1e-15


def test_forward_cos4x_against_direct_summation(grid32):
    n = grid32.n
    X, _, _ = grid32.coords()
    f = Field(grid32, np.cos(4 * X))
    a = S.forward_transform(f).data
    # direct 1D summation oracle along x (field is constant in y and z)
    x = np.arange(n) * grid32.dx
    direct = np.array([np.sum(np.cos(4 * x) * np.exp(-1j * m * x)) / n for m in range(n // 2 + 1)])
    np.testing.assert_allclose(a[0, 0, :], direct, atol=1e-14)
    nz = np.argwhere(np.abs(a) > 1e-12)
    assert nz.tolist() == [[0, 0, 4]]  # +4 stored; -4 implied by symmetry
    assert abs(a[0, 0, 4]) == pytest.approx(0.5, abs=1e-14)


def test_inverse_examples(grid32):
    n = grid32.n
    a = np.zeros(grid32.spectral_shape, complex)
    assert not np.any(S.inverse_transform(Field(grid32, a, True)).data)
    a[0, 0, 0] = 1.0
    np.testing.assert_allclose(S.inverse_transform(Field(grid32, a, True)).data, 1.0, atol=1e-15)
    a[:] = 0
    a[0, 0, 4] = 0.5
    X, _, _ = grid32.coords()
    err = np.max(np.abs(S.inverse_transform(Field(grid32, a, True)).data - np.cos(4 * X)))
    assert err <= 1e-12


def test_representation_errors(grid32):
    f = Field(grid32, np.zeros(grid32.physical_shape))
    with pytest.raises(UsageError):
        S.inverse_transform(f)
    with pytest.raises(UsageError):
        S.forward_transform(f.to_spectral())
    with pytest.raises(UsageError):
        S.gradient(f)


def test_non_hermitian_rejected(grid32):
    a = np.zeros(grid32.spectral_shape, complex)
    a[0, 3, 0] = 1.0  # partner at (0, -3, 0) missing
    with pytest.raises(ValidationError):
        S.inverse_transform(Field(grid32, a, True))


def test_round_trip_random(grid32):
    rng = np.random.default_rng(0)
    for _ in range(100):
        f = rng.standard_normal(grid32.physical_shape)
        back = S.inverse_transform(S.forward_transform(Field(grid32, f))).data
        assert np.max(np.abs(back - f)) <= 1e-12 * np.max(np.abs(f))


def test_gradient_examples(grid32):
    c = Field(grid32, np.full(grid32.physical_shape, 3.0)).to_spectral()
    assert np.max(np.abs(S.gradient(c).data)) == 0
    X, Y, Z = grid32.coords()
    g = S.gradient(Field(grid32, np.sin(X)).to_spectral())
    np.testing.assert_allclose(phys(g), sym_field(grid32, [sp.cos(xs), 0, 0]), atol=1e-13)
    e = sp.sin(2 * ys) * sp.cos(zs)
    expected = sym_field(grid32, [sp.diff(e, s) for s in (xs, ys, zs)])
    got = phys(S.gradient(Field(grid32, sym_field(grid32, [e])[0]).to_spectral()))
    np.testing.assert_allclose(got, expected, atol=1e-13)


def sym_curl(v):
    return [
        sp.diff(v[2], ys) - sp.diff(v[1], zs),
        sp.diff(v[0], zs) - sp.diff(v[2], xs),
        sp.diff(v[1], xs) - sp.diff(v[0], ys),
    ]


def test_curl_examples(grid32):
    const = vec(grid32, [1, 2, 3])
    assert np.max(np.abs(S.curl(const).data)) < 1e-15
    v = [0, 0, sp.sin(xs)]
    np.testing.assert_allclose(phys(S.curl(vec(grid32, v))), sym_field(grid32, sym_curl(v)), atol=1e-13)
    np.testing.assert_allclose(sym_field(grid32, sym_curl(v)), sym_field(grid32, [0, -sp.cos(xs), 0]), atol=1e-15)
    abc = [sp.sin(zs) + sp.cos(ys), sp.sin(xs) + sp.cos(zs), sp.sin(ys) + sp.cos(xs)]
    assert all(sp.simplify(a - b) == 0 for a, b in zip(sym_curl(abc), abc))
    got = S.curl(vec(grid32, abc))
    np.testing.assert_allclose(phys(got), sym_field(grid32, abc), atol=1e-13)
    assert S.max_divergence(got) <= 1e-12


def test_laplacian_examples(grid32):
    assert np.max(np.abs(S.laplacian(vec(grid32, [1, 1, 1])).data)) == 0
    np.testing.assert_allclose(phys(S.laplacian(vec(grid32, [0, 0, sp.sin(xs)]))),
                               sym_field(grid32, [0, 0, -sp.sin(xs)]), atol=1e-13)
    np.testing.assert_allclose(phys(S.laplacian(vec(grid32, [0, sp.sin(2 * xs), 0]))),
                               sym_field(grid32, [0, -4 * sp.sin(2 * xs), 0]), atol=1e-13)


def test_leray_examples(grid32):
    g = S.leray_project(vec(grid32, [sp.cos(xs), 0, 0]))
    assert np.max(np.abs(phys(g))) < 1e-14
    df = vec(grid32, [0, -sp.cos(xs), 0])
    np.testing.assert_allclose(S.leray_project(df).data, df.data, atol=1e-15)
    mixed = S.leray_project(vec(grid32, [sp.cos(xs) + sp.sin(ys), 0, 0]))
    np.testing.assert_allclose(phys(mixed), sym_field(grid32, [sp.sin(ys), 0, 0]), atol=1e-13)
    assert S.max_divergence(mixed) <= 1e-12


def test_dealias_examples(grid32):
    assert grid32.dealias_cutoff == 10
    X, Y, Z = grid32.coords()
    kept = Field(grid32, np.array([np.cos(10 * X) + np.sin(3 * Y), np.cos(Z), 0 * X])).to_spectral()
    np.testing.assert_allclose(S.dealias(kept).data, kept.data, atol=1e-15)
    high = Field(grid32, np.array([np.cos(15 * X), 0 * X, 0 * X])).to_spectral()
    assert np.max(np.abs(S.dealias(high).data)) < 1e-15
    mixed = Field(grid32, np.array([np.cos(4 * X) + np.cos(12 * X), 0 * X, 0 * X])).to_spectral()
    np.testing.assert_allclose(phys(S.dealias(mixed))[0], np.cos(4 * X), atol=1e-14)


def test_sup_norm_examples(grid32):
    X, Y, Z = grid32.coords()
    assert S.sup_norm(S.zeros(grid32)) == 0
    assert S.sup_norm(Field(grid32, np.cos(4 * X))) == pytest.approx(1.0, abs=1e-14)
    assert S.sup_norm(Field(grid32, np.cos(4 * X)), oversample=False) == pytest.approx(1.0, abs=1e-14)
    v = Field(grid32, np.array([np.sin(Z), np.cos(Z), 0 * Z]))
    assert S.sup_norm(v) == pytest.approx(1.0, abs=1e-14)


def test_oversample_tightens_grid_max(grid32):
    # extremum of cos(5x + 0.3) falls between the coarse samples
    X, _, _ = grid32.coords()
    f = Field(grid32, np.cos(5 * X + 0.3))
    coarse = S.sup_norm(f, oversample=False)
    fine = S.sup_norm(f, oversample=True)
    assert coarse <= fine <= 1.0 + 1e-14
    assert fine > coarse


def test_grad_sup_norm_examples(grid32):
    X, Y, Z = grid32.coords()
    assert S.grad_sup_norm(Field(grid32, np.ones((3,) + grid32.physical_shape))) < 1e-14
    assert S.grad_sup_norm(Field(grid32, np.array([np.sin(Z), np.cos(Z), 0 * Z]))) == pytest.approx(1.0, abs=1e-13)
    assert S.grad_sup_norm(Field(grid32, np.array([0 * X, 0 * X, np.sin(2 * X)]))) == pytest.approx(2.0, abs=1e-13)


def test_sobolev_examples(grid32):
    X, _, _ = grid32.coords()
    assert S.l2_norm(S.zeros(grid32)) == 0
    f = Field(grid32, np.sin(X))
    # analytic: int sin^2 x over (2 pi)^3 = (2 pi)^3 / 2 = 4 pi^3
    assert S.l2_norm(f) == pytest.approx(np.sqrt(4 * np.pi**3), rel=1e-13)
    assert S.sobolev_seminorm(f, 1) == pytest.approx(S.l2_norm(f), rel=1e-13)
    with pytest.raises(UsageError):
        S.sobolev_seminorm(f, 6)
    with pytest.raises(UsageError):
        S.sobolev_seminorm(f, -1)


def test_vector_identities_random(grid32, rng):
    for _ in range(10):
        f = smooth_random(grid32, rng, components=())
        assert np.max(np.abs(phys(S.curl(S.gradient(f))))) <= 1e-12 * max(1, S.grad_sup_norm(f.to_physical()))
        v = smooth_random(grid32, rng)
        assert S.max_divergence(S.curl(v)) <= 1e-12 * S.sup_norm(v)
        p = S.leray_project(v)
        np.testing.assert_allclose(S.leray_project(p).data, p.data, atol=1e-12 * np.max(np.abs(p.data)))
        lhs = -S.curl(S.curl(p)).data
        rhs = S.laplacian(p).data
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


def test_parseval_against_quadrature(grid32, rng):
    for _ in range(5):
        v = smooth_random(grid32, rng, band=15)
        quad = np.sqrt(np.sum(phys(v) ** 2) * grid32.dx**3)
        assert S.l2_norm(v) == pytest.approx(quad, rel=1e-10)


def test_resample_round_trip(grid32, rng):
    v = smooth_random(grid32, rng, band=10)
    up = S.resample(v, 64)
    back = S.resample(up, 32)
    np.testing.assert_allclose(back.data, v.data, atol=1e-15)
    # padded samples agree with the original on coincident points
    np.testing.assert_allclose(phys(up)[:, ::2, ::2, ::2], phys(v), atol=1e-13)


def test_general_box_length():
    g = Grid(16, 4.0)
    X, _, _ = g.coords()
    kappa = 2 * np.pi / 4.0
    f = Field(g, np.sin(kappa * X)).to_spectral()
    np.testing.assert_allclose(phys(S.gradient(f))[0], kappa * np.cos(kappa * X), atol=1e-13)
