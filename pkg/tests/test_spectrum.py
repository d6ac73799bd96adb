import math

import numpy as np
import pytest

from magtrace import data_path
from magtrace.errors import DataFormatError, DomainError
from magtrace.spectrum import (
    continuous_eigenvalues,
    interior_eigenvalues,
    lambda_scaled,
    load_laplace_spectrum,
    lowering,
    maass_identity_residual,
    parse_laplace_spectrum,
    raising,
)

from oracles import mps_eigenvalues


@pytest.fixture(scope="module")
def bolza():
    return load_laplace_spectrum(data_path("bolza_laplace.txt"))


def test_interior_small_examples():
    assert [(d.nu, d.multiplicity) for d in interior_eigenvalues(1, 2)] == [(1, 1)]
    assert [(d.nu, d.multiplicity) for d in interior_eigenvalues(3, 2)] == [(3, 5), (7, 3), (9, 1)]
    assert all(d.origin == "interior" for d in interior_eigenvalues(3, 2))


@pytest.mark.parametrize("g", [2, 3, 5])
def test_interior_totals_and_extremes(g):
    for N in range(1, 201):
        data = interior_eigenvalues(N, g)
        assert len(data) == N
        assert sum(d.multiplicity for d in data) == (g - 1) * N * N
        assert data[0].nu == N and data[-1].nu == N * N
        assert all(N <= d.nu <= N * N for d in data)


def test_interior_domain():
    with pytest.raises(DomainError):
        interior_eigenvalues(0, 2)
    with pytest.raises(DomainError):
        interior_eigenvalues(3, 1)


def test_continuous_series(bolza):
    for N in (1, 7, 40):
        data = continuous_eigenvalues(bolza, N)
        assert data[0].nu == N * N
        assert data[1].nu - N * N == pytest.approx(bolza.lambdas[1], abs=1e-12)
        nus = [d.nu for d in data]
        assert nus == sorted(nus)
        assert [d.multiplicity for d in data] == list(bolza.multiplicities)


def test_boundary_value_kept_under_both_tags(bolza):
    # nu = N^2 is both the top interior value and the lambda_0 continuous value
    N = 6
    top = interior_eigenvalues(N, 2)[-1]
    bottom = continuous_eigenvalues(bolza, N)[0]
    assert top.nu == bottom.nu == N * N
    assert (top.origin, bottom.origin) == ("interior", "continuous")


def test_interior_continuous_gap(bolza):
    # beyond the shared boundary value, the gap is lambda_1
    N = 10
    interior = max(d.nu for d in interior_eigenvalues(N, 2))
    cont = min(d.nu for d in continuous_eigenvalues(bolza, N) if d.index > 0)
    assert cont - interior == pytest.approx(bolza.lambdas[1], abs=1e-12)


def test_lambda_scaled():
    assert lambda_scaled(0, 5) == 5
    assert lambda_scaled(25, 5) == pytest.approx(5 * math.sqrt(2), rel=1e-15)
    lam = 3.8388880484
    assert lambda_scaled(lam + 49, 7) == pytest.approx(math.sqrt(lam + 98), rel=1e-15)
    out = lambda_scaled(np.array([0.0, 9.0]), 3)
    assert np.allclose(out, [3.0, math.sqrt(18)])
    with pytest.raises(DomainError):
        lambda_scaled(-1.0, 2)


def test_bolza_file(bolza):
    assert bolza.surface == "bolza"
    assert bolza.genus == 2
    assert bolza.lambdas[0] == 0 and bolza.multiplicities[0] == 1
    assert bolza.lambdas[1] == pytest.approx(3.8389, abs=1e-4)
    assert bolza.multiplicities[1] == 3
    assert np.all(np.diff(bolza.lambdas) > 0)
    assert bolza.provenance
    assert bolza.count(bolza.cutoff) == int(bolza.multiplicities.sum())


def _text(lines, area=4 * math.pi, cutoff=None):
    head = ["surface test", f"area {area!r}"] + ([f"cutoff {cutoff}"] if cutoff else [])
    return "\n".join(head + lines) + "\n"


def _weyl_lines(n):
    # n simple eigenvalues evenly spaced so that N(L) ~ L
    return ["0 1"] + [f"{k} 1" for k in range(1, n)]


def test_synthetic_weyl_file_accepted():
    s = parse_laplace_spectrum(_text(_weyl_lines(100)))
    assert s.cutoff == 99 and s.count(50) == 51


@pytest.mark.parametrize("lines, match", [
    (["1 1", "2 1"], "zero mode"),
    (["0 2", "1 1"], "zero mode"),
    (["0 1", "0 1"], "simple"),
    (["0 1", "3 1", "2 1"], "nondecreasing"),
    (["0 1", "2 0"], "positive"),
    (["0 1", "x 1"], "cannot parse"),
    ([], "no eigenvalues"),
])
def test_invalid_files(lines, match):
    with pytest.raises(DataFormatError, match=match):
        parse_laplace_spectrum(_text(lines))


def test_weyl_violation_rejected():
    sparse = ["0 1"] + [f"{10 * k} 1" for k in range(1, 30)]
    with pytest.raises(DataFormatError, match="Weyl"):
        parse_laplace_spectrum(_text(sparse))
    # the check can be switched off for hand-made test spectra
    assert parse_laplace_spectrum(_text(sparse), check_weyl=False).count(15) == 2


def test_missing_header_and_file(tmp_path):
    with pytest.raises(DataFormatError, match="header"):
        parse_laplace_spectrum("0 1\n1 1\n")
    with pytest.raises(DataFormatError, match="cannot read"):
        load_laplace_spectrum(tmp_path / "missing.txt")


def test_provenance_preserved():
    text = "# provenance: hand made\n# ordinary comment\n" + _text(_weyl_lines(50))
    assert parse_laplace_spectrum(text).provenance == ("hand made",)


def test_bolza_even_sector_matches_particular_solutions(bolza):
    # independent method: particular solutions on the octagon for the
    # rotation-invariant, reflection-even sector
    mps = mps_eigenvalues(3.0, 24.0, n_basis=8, step=0.25)
    assert len(mps) == 4
    for lam in mps:
        assert np.min(np.abs(bolza.lambdas - lam)) <= 1e-2


# Maass operators -------------------------------------------------------------

def test_maass_polynomial_exact():
    # differences are exact on quadratics, so only rounding remains; it
    # grows like eps |u| / h^2 and at h = 1e-3 it is about 3e-9
    u = lambda x, y: 1 + 2 * x - 3 * y + x * x + 0.5 * x * y + 2 * y * y  # noqa: E731
    z = 0.3 + 1.2j
    umax = 10.0
    for N in (0, 1, 3):
        for which in ("raise", "lower"):
            for h in (1e-2, 0.0625):
                assert maass_identity_residual(N, u, z, h, which) <= 1e-10
            h = 1e-3
            assert maass_identity_residual(N, u, z, h, which) <= 16 * np.finfo(float).eps * umax / h ** 2


def test_maass_closed_forms():
    # u = e^{ix} y^N: K_N u = (2N - y) u and L_N u = y u
    N, x, y = 3, 0.4, 1.3
    u = lambda x, y: np.exp(1j * x) * y ** N  # noqa: E731
    errs = []
    for h in (1e-2, 5e-3):
        k = raising(u, N, h)(x, y)
        l = lowering(u, N, h)(x, y)
        errs.append(max(abs(k - (2 * N - y) * u(x, y)), abs(l - y * u(x, y))))
        assert errs[-1] <= 10 * h * h
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)


@pytest.mark.parametrize("which", ["raise", "lower"])
def test_maass_second_order(which):
    u = lambda x, y: np.exp(0.7 * x) * np.sin(y) + 1j * np.cos(x * y)  # noqa: E731
    r1 = maass_identity_residual(2, u, 0.2 + 1.1j, 0.02, which)
    r2 = maass_identity_residual(2, u, 0.2 + 1.1j, 0.01, which)
    assert 3.6 <= r1 / r2 <= 4.4


def test_maass_domain():
    u = lambda x, y: x  # noqa: E731
    with pytest.raises(DomainError):
        maass_identity_residual(1, u, 1j, 1.0)
    with pytest.raises(DomainError):
        maass_identity_residual(1, u, 0.5e-4j + 0.1, 1e-3)
    with pytest.raises(DomainError):
        maass_identity_residual(1, u, 1j, 1e-3, "sideways")
