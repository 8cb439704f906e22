import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from drumspec.analytic_spectra import (
    Spectrum,
    bessel_j_zeros,
    disk_spectrum,
    equilateral_triangle_spectrum,
    match_reference_family,
    read_spectrum,
    rectangle_spectrum,
    sector_spectrum,
    spectrum_for_domain,
    weyl_ratio,
    write_spectrum,
)
from drumspec.errors import EmptySpectrumError
from drumspec.geometry import (
    make_disk,
    make_equilateral_triangle,
    make_lshape,
    make_rectangle,
    make_sector,
    make_square,
)

PI = math.pi

# Squared Bessel zeros frozen from the bisection oracle below (mpmath
# ascending-series evaluation, 25 significant digits).
J01_SQ = 5.783185962946785
J11_SQ = 14.681970642123895
J21_SQ = 26.374616427163392
J3HALF1_SQ = 20.19072855642663


def bisection_bessel_zero(nu, k, dps=25):
    """Independent oracle: k-th positive zero of J_nu by interval bisection
    on mpmath's series evaluation (no asymptotic initial guesses)."""
    import mpmath as mp

    with mp.workdps(dps):
        f = lambda x: mp.besselj(mp.mpf(nu), x)
        step = mp.mpf("0.25")
        x = mp.mpf(max(nu, 0.1))
        found = 0
        prev_sign = mp.sign(f(x))
        while found < k:
            x_next = x + step
            s = mp.sign(f(x_next))
            if s != prev_sign and s != 0:
                found += 1
                if found == k:
                    a, b = x, x_next
                    for _ in range(60):
                        m = (a + b) / 2
                        if mp.sign(f(m)) == mp.sign(f(a)):
                            a = m
                        else:
                            b = m
                    return float((a + b) / 2)
            x, prev_sign = x_next, s
        raise AssertionError("unreachable")


class TestBesselZeros:
    def test_oracle_reproduces_frozen_values(self):
        assert_allclose(bisection_bessel_zero(0, 1) ** 2, J01_SQ, rtol=1e-12)
        assert_allclose(bisection_bessel_zero(1, 1) ** 2, J11_SQ, rtol=1e-12)
        assert_allclose(bisection_bessel_zero(2, 1) ** 2, J21_SQ, rtol=1e-12)
        assert_allclose(bisection_bessel_zero(1.5, 1) ** 2, J3HALF1_SQ, rtol=1e-12)

    def test_production_zeros_match_oracle(self):
        for nu in [0, 1, 2.0, 0.5, 1.5, 7.25, 40.0]:
            zeros = bessel_j_zeros(nu, 60.0)
            assert len(zeros) > 0
            for k in sorted({1, len(zeros)}):
                assert_allclose(zeros[k - 1], bisection_bessel_zero(nu, k),
                                rtol=1e-11)

    def test_interlacing(self):
        for nu in [0.0, 1.0, 3.5, 10.0]:
            z0 = bessel_j_zeros(nu, 80.0)
            z1 = bessel_j_zeros(nu + 1.0, 80.0)
            for k in range(len(z1) - 1):
                assert z0[k] < z1[k] < z0[k + 1]

    def test_empty_below_order(self):
        assert bessel_j_zeros(10.0, 5.0).size == 0


class TestRectangle:
    def test_unit_square_ground_state(self):
        spec = rectangle_spectrum(1.0, 1.0, 100.0)
        assert_allclose(spec.eigenvalues[0], 2 * PI ** 2, rtol=1e-14)

    def test_symmetry_multiplicity(self):
        spec = rectangle_spectrum(1.0, 1.0, 100.0)
        lam = spec.eigenvalues
        pair = lam[np.isclose(lam, 5 * PI ** 2)]
        assert len(pair) == 2

    def test_two_by_one(self):
        spec = rectangle_spectrum(2.0, 1.0, 100.0)
        assert_allclose(spec.eigenvalues[0], 5 * PI ** 2 / 4, rtol=1e-14)

    def test_completeness_against_brute_force(self):
        cutoff = 5000.0
        for a, b in [(1.0, 1.0), (1.3, 0.7)]:
            spec = rectangle_spectrum(a, b, cutoff)
            brute = []
            for m in range(1, 200):
                for n in range(1, 200):
                    lam = PI ** 2 * (m * m / a ** 2 + n * n / b ** 2)
                    if lam <= cutoff:
                        brute.append(lam)
            assert len(spec) == len(brute)
            assert_allclose(spec.eigenvalues, np.sort(brute), rtol=1e-13)

    def test_cutoff_below_ground_state(self):
        with pytest.raises(EmptySpectrumError):
            rectangle_spectrum(1.0, 1.0, 10.0)

    def test_domain_monotonicity_nested_rectangles(self):
        inner = rectangle_spectrum(1.0, 1.0, 2.0e4)
        outer = rectangle_spectrum(1.2, 1.1, 2.0e4)
        k = 200
        assert len(inner) >= k and len(outer) >= k
        assert np.all(outer.eigenvalues[:k] <= inner.eigenvalues[:k])


class TestDisk:
    def test_ground_state(self):
        spec = disk_spectrum(1.0, 50.0)
        assert_allclose(spec.eigenvalues[0], J01_SQ, rtol=1e-12)

    def test_first_excited_is_double(self):
        spec = disk_spectrum(1.0, 50.0)
        assert_allclose(spec.eigenvalues[1], J11_SQ, rtol=1e-12)
        assert_allclose(spec.eigenvalues[2], J11_SQ, rtol=1e-12)
        assert spec.eigenvalues[3] > spec.eigenvalues[2] * (1 + 1e-9)

    def test_scaling_law(self):
        s1 = disk_spectrum(1.0, 400.0)
        s2 = disk_spectrum(2.0, 100.0)
        assert len(s2) == len(s1)
        assert_allclose(s2.eigenvalues, s1.eigenvalues / 4.0, rtol=1e-11)


class TestSector:
    def test_quarter_disk(self):
        spec = sector_spectrum(PI / 2, 1.0, 100.0)
        assert_allclose(spec.eigenvalues[0], J21_SQ, rtol=1e-12)

    def test_half_disk(self):
        spec = sector_spectrum(PI, 1.0, 100.0)
        assert_allclose(spec.eigenvalues[0], J11_SQ, rtol=1e-12)

    def test_two_thirds_pi(self):
        spec = sector_spectrum(2 * PI / 3, 1.0, 100.0)
        assert_allclose(spec.eigenvalues[0], J3HALF1_SQ, rtol=1e-12)

    def test_invalid_angle(self):
        with pytest.raises(ValueError):
            sector_spectrum(2 * PI, 1.0, 100.0)


class TestEquilateralTriangle:
    def test_ground_state(self):
        spec = equilateral_triangle_spectrum(1.0, 500.0)
        assert_allclose(spec.eigenvalues[0], 16 * PI ** 2 / 3, rtol=1e-14)

    def test_second_level_is_double(self):
        spec = equilateral_triangle_spectrum(1.0, 500.0)
        lam2 = 16 * PI ** 2 / 9 * 7  # indices (1,2) and (2,1)
        assert_allclose(spec.eigenvalues[1], lam2, rtol=1e-14)
        assert_allclose(spec.eigenvalues[2], lam2, rtol=1e-14)

    def test_scaling_law(self):
        s1 = equilateral_triangle_spectrum(1.0, 2000.0)
        s2 = equilateral_triangle_spectrum(2.0, 500.0)
        assert len(s2) == len(s1)
        assert_allclose(s2.eigenvalues, s1.eigenvalues / 4.0, rtol=1e-13)

    def test_count_matches_weyl_density(self):
        # Ordered-pair indexing must reproduce the Weyl count asymptotically.
        spec = equilateral_triangle_spectrum(1.0, 3.0e5)
        area = math.sqrt(3) / 4
        expect = area * 3.0e5 / (4 * PI)
        assert abs(len(spec) - expect) / expect < 0.02


class TestWeylRatio:
    def test_unit_square_at_ten_thousand(self):
        spec = rectangle_spectrum(1.0, 1.0, 2.0e5)
        ratios = weyl_ratio(spec, 1.0)
        assert abs(ratios[10000 - 1] - 1.0) < 0.02

    def test_unit_disk_at_one_thousand(self):
        spec = disk_spectrum(1.0, 4.6e3)
        ratios = weyl_ratio(spec, PI)
        assert len(spec) >= 1000
        assert abs(ratios[1000 - 1] - 1.0) < 0.05

    def test_ratios_positive(self):
        spec = sector_spectrum(1.1, 1.0, 400.0)
        assert np.all(weyl_ratio(spec, 0.55) > 0)


class TestSpectrumType:
    def test_rejects_descending(self):
        with pytest.raises(ValueError):
            Spectrum([2.0, 1.0], 10.0, "analytic")

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            Spectrum([0.0, 1.0], 10.0, "analytic")

    def test_multiplicity_hints(self):
        spec = Spectrum([1.0, 2.0, 2.0, 3.0], 10.0, "analytic")
        assert list(spec.multiplicity_hints()) == [1, 2, 2, 1]


class TestSpectrumFiles:
    def test_roundtrip(self, tmp_path):
        spec = disk_spectrum(1.0, 200.0)
        path = tmp_path / "disk.spectrum"
        write_spectrum(spec, path)
        back = read_spectrum(path)
        assert_allclose(back.eigenvalues, spec.eigenvalues, rtol=0, atol=0)
        assert back.cutoff == spec.cutoff
        assert back.area_hint == spec.area_hint
        assert back.source == "analytic"

    def test_header_format(self, tmp_path):
        spec = rectangle_spectrum(1.0, 1.0, 100.0)
        path = tmp_path / "sq.spectrum"
        write_spectrum(spec, path)
        first = path.read_text().splitlines()[0]
        assert first.startswith("# cutoff=100 area_hint=1")

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "bad.spectrum"
        path.write_text("index,eigenvalue,multiplicity_hint\n1,2.0,1\n")
        with pytest.raises(ValueError, match="cutoff"):
            read_spectrum(path)


class TestReferenceFamilyDetection:
    def test_square(self):
        fam, params = match_reference_family(make_square())
        assert fam == "rectangle"
        assert_allclose(sorted(params), [1.0, 1.0])

    def test_rotated_rectangle_still_matches(self):
        ang = 0.3
        rot = np.array([[math.cos(ang), -math.sin(ang)],
                        [math.sin(ang), math.cos(ang)]])
        fam, params = match_reference_family(
            make_rectangle(2.0, 1.0).transformed(rot, (0.5, 0.5)))
        assert fam == "rectangle"
        assert_allclose(sorted(params), [1.0, 2.0], rtol=1e-12)

    def test_disk(self):
        fam, radius = match_reference_family(make_disk(1.5))
        assert fam == "disk"
        assert_allclose(radius, 1.5)

    def test_sector(self):
        fam, (theta, radius) = match_reference_family(make_sector(PI / 2))
        assert fam == "sector"
        assert_allclose(theta, PI / 2, rtol=1e-12)
        assert_allclose(radius, 1.0)

    def test_equilateral(self):
        fam, side = match_reference_family(make_equilateral_triangle(2.0))
        assert fam == "equilateral"
        assert_allclose(side, 2.0)

    def test_lshape_falls_through(self):
        assert match_reference_family(make_lshape()) is None

    def test_spectrum_for_domain(self):
        spec = spectrum_for_domain(make_square(), 100.0)
        assert_allclose(spec.eigenvalues[0], 2 * PI ** 2)
        assert spectrum_for_domain(make_lshape(), 100.0) is None
