"""Smoke test for the toral_nodal extension module."""

import math

import toral_nodal as tn


def main():
    assert tn.is_sum_of_two_squares(25) and not tn.is_sum_of_two_squares(3)
    pts = tn.lattice_points(25)
    assert len(pts) == 12 and pts == sorted(pts)
    assert tn.minimally_vanishing_count(65, 3) == 0

    nu0 = tn.SpectralMeasure.named("cilleruelo")
    nu1 = tn.SpectralMeasure.named("tilted")
    re, im = nu0.fourier_coefficient(4)
    assert abs(re - 1.0) < 1e-12 and abs(im) < 1e-12
    assert abs(nu0.prokhorov_distance(nu1) - 0.125) < 1e-9
    assert tn.SpectralMeasure.from_json(nu0.to_json()).atoms() == nu0.atoms()
    assert abs(tn.SpectralMeasure.named("uniform").kac_rice_intensity((1.0, 0.0)) - math.sqrt(2)) < 1e-12

    f = tn.Eigenfunction(25, "random:7")
    assert len(f) == 12
    value, d1, d2 = f.evaluate((0.1, 0.2))
    assert all(math.isfinite(v) for v in (value, d1, d2))
    assert f.count_nodal_domains() >= 2
    re, im = f.bk_moment(2, 1e-3, "1:1:1")
    assert abs(re - 1.0) < 1e-12 and abs(im) < 1e-12
    assert tn.gaussian_joint_moment("1:2:2;2:1:1") == 2.0

    csv = tn.run_comparison("energies=3\ntrials=8\nseeds=1\n")
    assert csv.splitlines()[1].endswith("E not in S")
    print("smoke test passed")


if __name__ == "__main__":
    main()
