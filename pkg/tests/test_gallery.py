import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from almostlip.gallery import (
    GallerySpec,
    cantor,
    generate,
    interval,
    nasty_perturbation,
    nasty_required_M,
    orthogonal_sequence,
    product_example,
    psi,
    rho_sequence,
    rotation_map,
    segment,
    verify_claim,
    xstar,
    xstar_values,
)
from almostlip.linear_reduction import make_rng


def test_xstar_values():
    a = xstar_values(4)
    expect = [4.0**-2] + [4.0**-4] * 2 + [4.0**-8] * 4 + [4.0**-16] * 8
    assert a.tolist() == expect
    X = xstar(4)
    assert X.n == 15 and X.dim == 15
    with pytest.raises(ValueError):
        xstar_values(9)
    with pytest.raises(ValueError):
        xstar_values(0)


def test_orthogonal_sequence_shapes():
    X = orthogonal_sequence(5)
    assert np.array_equal(X.coords, np.diag(2.0 ** -np.arange(1, 6)))
    Y = orthogonal_sequence(4, "algebraic", eps=2.0, gamma=3.0, include_origin=True)
    assert Y.n == 5 and np.all(Y.coords[-1] == 0)
    assert Y.coords[1, 1] == 2.0 * 2.0**-3
    with pytest.raises(ValueError):
        orthogonal_sequence(5, "harmonic")
    with pytest.raises(ValueError):
        orthogonal_sequence(300)
    with pytest.raises(ValueError):
        orthogonal_sequence(2000, "geometric")


def test_rho_sequence_starts_at_origin():
    X = rho_sequence(6)
    assert np.all(X.coords[0] == 0)
    assert X.coords[3, 3] == pytest.approx(0.75)


def test_product_example_pairs():
    X = product_example(3)
    assert X.n == 6 and X.dim == 6
    a = xstar_values(2)
    for m in range(3):
        up, low = X.coords[2 * m], X.coords[2 * m + 1]
        assert up[m] == low[m] == 4.0 ** -(m + 1)
        assert up[3 + m] == a[m] and low[3 + m] == 0


def test_cantor_and_interval():
    C = cantor(3)
    assert C.n == 8
    assert sorted(C.coords[:, 0].tolist())[:2] == [0.0, 2 / 27]
    assert interval(5).coords[:, 0].tolist() == [0, 0.25, 0.5, 0.75, 1.0]


def test_spec_validation():
    with pytest.raises(ValueError):
        GallerySpec("moebius")
    with pytest.raises(ValueError):
        GallerySpec("interval", n=0)


def test_psi_profile():
    assert psi(np.array([0.0, 0.75, 1.0, 2.0, 3.0])).tolist() == [0.0, 0.0, 1.0, 0.0, 0.0]
    r = np.linspace(0, 3, 3001)
    slope = np.abs(np.diff(psi(r)) / np.diff(r)).max()
    assert slope <= 7.5 + 1e-6


unit = st.integers(0, 10_000)


@settings(max_examples=40, deadline=None)
@given(unit, st.sampled_from([1.0, 8.0, 64.0]), st.integers(2, 5))
def test_rotation_is_uniformly_bilipschitz(seed, eta, dim):
    rng = make_rng(seed)
    v = rng.standard_normal(dim)
    w = rng.standard_normal(dim)
    f = rotation_map(v / np.linalg.norm(v), w / np.linalg.norm(w), eta)
    # points concentrated on the support annulus
    P = rng.standard_normal((120, dim))
    P *= (rng.uniform(0.5, 2.5, 120) / np.linalg.norm(P, axis=1) / eta)[:, None]
    Q = f(P)
    i, j = np.triu_indices(120, k=1)
    d = np.linalg.norm(P[i] - P[j], axis=1)
    out = np.linalg.norm(Q[i] - Q[j], axis=1)
    L = f.lipschitz_bound
    assert L == pytest.approx(1 + 15 * f.alpha)
    assert np.all(out <= L * d * (1 + 1e-9))
    assert np.all(out >= d / L * (1 - 1e-9))


@settings(max_examples=40, deadline=None)
@given(unit, st.floats(0.1, 100.0))
def test_rotation_sends_v_to_w(seed, eta):
    rng = make_rng(seed)
    v = rng.standard_normal(3)
    w = rng.standard_normal(3)
    v /= np.linalg.norm(v)
    w /= np.linalg.norm(w)
    f = rotation_map(v, w, eta)
    assert np.allclose(f(v[None, :] / eta)[0], w / eta, atol=1e-12 / eta)
    far = np.array([[3.0 / eta, 0, 0], [0.1 / eta, 0, 0]])
    assert np.array_equal(f(far), far)


def test_rotation_antipodal_and_identity():
    e = np.eye(3)
    f = rotation_map(e[0], -e[0])
    assert np.allclose(f(e[:1]), -e[:1])
    g = rotation_map(e[1], e[1])
    assert g.alpha == 0.0 and np.array_equal(g(e), e)
    with pytest.raises(ValueError):
        rotation_map(2 * e[0], e[1])


def test_nasty_perturbation_structure():
    res = nasty_perturbation(segment(512), 3, 0.1)
    assert res.supports_disjoint
    assert res.max_displacement <= 0.1
    assert res.hausdorff <= 0.1
    Y = res.image.coords
    for j in range(4):
        a = res.level_values(j)
        for t, c in zip(res.targets[j], res.center_rows[j]):
            diff = Y[t] - Y[c]
            # x_i + a_j e_ij lies in the image along a fresh direction
            assert np.linalg.norm(diff) == pytest.approx(a, rel=1e-9)
            assert np.count_nonzero(np.abs(diff) > 1e-12 * a) == 1
            assert np.argmax(np.abs(diff)) >= 2
    M = [row["required_M"] for row in nasty_required_M(res)]
    assert all(x < y for x, y in zip(M, M[1:]))


def test_nasty_preconditions():
    with pytest.raises(ValueError):
        nasty_perturbation(segment(512), 6, 0.1)
    with pytest.raises(ValueError):
        nasty_perturbation(segment(8), 3, 0.1)
    with pytest.raises(ValueError):
        nasty_perturbation(segment(512), 2, 0.6)


@pytest.mark.parametrize(
    "spec",
    [
        GallerySpec("orthogonal_sequence", n=48, decay="algebraic", gamma=3.0),
        GallerySpec("orthogonal_sequence", n=14),
        GallerySpec("xstar", depth=5),
        GallerySpec("rho_sequence", n=64),
        GallerySpec("product_example", n=7),
        GallerySpec("cantor", depth=7),
        GallerySpec("interval", n=200),
        GallerySpec("nasty_curve", n=256, depth=2, R=0.1),
    ],
    ids=lambda s: f"{s.kind}-{s.decay}",
)
def test_claims(spec):
    report = verify_claim(spec)
    assert report.status == "passed", report.to_dict()


def test_single_point_is_trivial():
    report = verify_claim(GallerySpec("orthogonal_sequence", n=1))
    assert report.status == "trivial" and report.passed


def test_generate_dispatch():
    for kind in ("orthogonal_sequence", "xstar", "rho_sequence", "product_example", "cantor", "interval"):
        X = generate(GallerySpec(kind, n=6, depth=3))
        assert X.n >= 6
    Y = generate(GallerySpec("nasty_curve", n=64, depth=1, R=0.1))
    assert Y.dim == 2 + 2**3 - 2


def test_orthogonal_fit_small():
    rep = verify_claim(GallerySpec("orthogonal_sequence", n=14))
    assert rep.details["s_hat_X"] <= 0.3
    assert math.isfinite(rep.details["s_hat_XmX"])
