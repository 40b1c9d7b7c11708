import math

import numpy as np
import pytest

from diracshell.effective import (
    DEFAULT_COUPLING,
    assemble_effective,
    assemble_magnetic,
    effective_eigenvalues,
    effective_spectrum_csv,
    gauge_transform_check,
    magnetic_circle_spectrum,
    omega_oneform,
)


def analytic_circle_levels(count):
    # independent Fourier diagonalization oracle on the unit circle
    ns = np.arange(-count - 2, count + 3)
    vals = ((2.0 * math.pi * ns + math.pi - 2.0) / (2.0 * math.pi)) ** 2 - 1.0 / math.pi**2
    return np.sort(vals)[:count]


def test_omega_circle_is_alpha3(fam2, circle):
    om = omega_oneform(fam2, circle, 0.5)
    assert np.abs(om - np.diag([1.0, -1.0])).max() <= 1e-12


def test_omega_structure_matches_curvature(fam2, ellipse):
    # two independent formulas: -i Gamma(nu') Gamma(nu) versus -kappa a_3
    for s in (0.0, 1.3, 4.0, 7.7):
        om = omega_oneform(fam2, ellipse, s)
        kap = float(ellipse.curvature(np.array([s]))[0])
        assert np.abs(om - (-kap) * np.diag([1.0, -1.0])).max() <= 1e-10
        assert np.abs(om - om.conj().T).max() <= 1e-12


def test_omega_vanishing_curvature(fam2):
    from diracshell.geometry import flat_strip

    om = omega_oneform(fam2, flat_strip(5.0), 1.0)
    assert np.abs(om).max() == 0.0


def test_magnetic_circle_analytic(circle):
    mag = assemble_magnetic(circle, 512)
    mu = effective_eigenvalues(mag, 5)
    assert np.abs(mu - analytic_circle_levels(5)).max() <= 1e-6
    assert np.abs(mu - magnetic_circle_spectrum(1.0, 5)).max() <= 1e-6


def test_magnetic_zero_curvature_strip():
    from diracshell.geometry import flat_strip

    mag = assemble_magnetic(flat_strip(2.0 * math.pi), 128)
    mu = effective_eigenvalues(mag, 1)
    assert mu[0] == pytest.approx(((math.pi - 2.0) / (2.0 * math.pi)) ** 2, abs=1e-12)


def test_magnetic_flux_periodicity(ellipse):
    # gauge-periodicity oracle: shifting the flux by 2*pi/L relabels modes
    base = effective_eigenvalues(assemble_magnetic(ellipse, 256), 5)
    flux = (math.pi - 2.0) / ellipse.length
    shifted = effective_eigenvalues(
        assemble_magnetic(ellipse, 256, flux=flux + 2.0 * math.pi / ellipse.length), 5
    )
    assert np.abs(base - shifted).max() <= 1e-9


def test_effective_circle_ground_level(fam2, circle):
    mu = effective_eigenvalues(assemble_effective(fam2, circle, 256), 4)
    expect = ((math.pi - 2.0) / (2.0 * math.pi)) ** 2 - 1.0 / math.pi**2
    assert mu[0] == pytest.approx(expect, abs=1e-10)
    assert mu[1] == pytest.approx(expect, abs=1e-10)
    assert mu[2] - mu[1] > 1e-3


def test_effective_hermitian_real(fam2, ellipse):
    asm = assemble_effective(fam2, ellipse, 128)
    a = asm.pencil.a
    assert np.abs(a - a.conj().T).max() <= 1e-12 * np.abs(a).max()
    mu = effective_eigenvalues(asm, 8)
    assert np.all(np.isreal(mu))


def test_effective_even_multiplicity(fam2, ellipse):
    mu = effective_eigenvalues(assemble_effective(fam2, ellipse, 256), 8)
    pairs = mu.reshape(4, 2)
    scale = 1e-8 * (1.0 + np.abs(mu).max())
    assert np.abs(pairs[:, 1] - pairs[:, 0]).max() <= scale


def test_effective_agrees_with_doubled_magnetic(fam2, circle, ellipse):
    for curve, tol in ((circle, 1e-6), (ellipse, 1e-5)):
        res = gauge_transform_check(fam2, curve, 512)
        assert res.spectral_distance <= tol
        assert res.phase_residual <= 1e-8
        assert res.similarity_residual <= 1e-12


def test_phase_periodicity_uses_total_curvature(fam2, wobble):
    res = gauge_transform_check(fam2, wobble, 128)
    assert res.phase_residual <= 1e-8


def test_coupling_tamper_breaks_gauge(fam2, ellipse):
    # negative control: any coupling other than the derived one must fail
    res = gauge_transform_check(fam2, ellipse, 128, coupling=0.30)
    assert res.spectral_distance > 1e-3


def test_link_scheme_convergence_order(fam2, ellipse):
    # three-grid convergence oracle against a converged spectral reference
    ref = effective_eigenvalues(assemble_effective(fam2, ellipse, 1024), 5)
    errs = []
    for n_s in (64, 128, 256):
        mu = effective_eigenvalues(assemble_effective(fam2, ellipse, n_s, scheme="link"), 5)
        errs.append(np.abs(mu - ref).max())
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(o >= 1.9 for o in orders)


def test_link_scheme_gauge_similarity_exact(fam2, wobble):
    res = gauge_transform_check(fam2, wobble, 256)
    assert res.similarity_residual <= 1e-12


def test_potential_sign(fam2, ellipse):
    asm = assemble_effective(fam2, ellipse, 64)
    assert np.all(asm.potential <= 0.0)
    assert np.allclose(asm.potential, -ellipse.curvature(asm.grid) ** 2 / math.pi**2)


def test_assembly_validation(fam2, circle):
    with pytest.raises(ValueError):
        assemble_effective(fam2, circle, 8)
    with pytest.raises(ValueError):
        assemble_effective(fam2, circle, 33)
    with pytest.raises(ValueError):
        assemble_effective(fam2, circle, 64, scheme="chebyshev")
    from diracshell.clifford import build_clifford

    with pytest.raises(ValueError):
        assemble_effective(build_clifford(3), circle, 64)


def test_effective_spectrum_csv(tmp_path, fam2, circle):
    path = tmp_path / "eff.csv"
    res = effective_spectrum_csv(path, fam2, circle, 128, count=6)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "index,mu_effective,mu_magnetic_pair,abs_diff"
    assert len(rows) == 7
    assert res.spectral_distance <= 1e-8


def test_coupling_constant_value():
    assert DEFAULT_COUPLING == pytest.approx(0.5 - 1.0 / math.pi, abs=1e-16)
