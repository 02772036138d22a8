#include <doctest.h>

#include <cmath>

#include "opo/cavity.hpp"
#include "opo/crystal.hpp"

using namespace opo;

namespace {

CrystalParams bench_crystal() { return CrystalParams::from_mean_index(0.01, 1.8, -0.09); }

CavityGeometry bench_cavity() { return CavityGeometry{}; }

// Independent oracle for the calibration: invert the full 2x2 system
//   [-c_s  -c_i] [a_s]   [t_plus ]
//   [-c_s  +c_i] [a_i] = [t_minus]
// by Cramer's rule, with c_j recomputed from scratch.
std::pair<double, double> oracle_solve(const CrystalParams& cr, const CavityGeometry& geo,
                                       double t_plus, double t_minus) {
    const double nu = constants::speed_of_light / (2.0 * geo.pump_wavelength);
    const double cs = nu / (geo.air_path_L + cr.n_signal * cr.length_l);
    const double ci = nu / (geo.air_path_L + cr.n_idler * cr.length_l);
    const double det = (-cs) * (ci) - (-ci) * (-cs);
    const double a_s = (t_plus * ci - (-ci) * t_minus) / det;
    const double a_i = ((-cs) * t_minus - t_plus * (-cs)) / det;
    return {a_s, a_i};
}

}  // namespace

TEST_CASE("indices from mean and birefringence") {
    const auto cr = bench_crystal();
    CHECK(cr.n_signal == doctest::Approx(1.755));
    CHECK(cr.n_idler == doctest::Approx(1.845));
    CHECK(cr.n_mean() == doctest::Approx(1.8));
    CHECK(cr.birefringence() == doctest::Approx(-0.09));
}

TEST_CASE("optical path at the calibration point is exactly n*l") {
    const auto cr = bench_crystal();
    const double T0 = cr.reference_temperature;
    CHECK(optical_path(cr, Polarization::signal, T0, 0.0, 0.0) == cr.n_signal * cr.length_l);
    CHECK(optical_path(cr, Polarization::idler, T0, 0.0, 0.0) == cr.n_idler * cr.length_l);
    // one path is ~17.55 mm, the other ~18.45 mm
    CHECK(optical_path(cr, Polarization::signal, T0, 0.0, 0.0) ==
          doctest::Approx(17.55e-3).epsilon(1e-12));
    CHECK(optical_path(cr, Polarization::idler, T0, 0.0, 0.0) ==
          doctest::Approx(18.45e-3).epsilon(1e-12));
}

TEST_CASE("optical path is affine in T, V and x") {
    auto cr = bench_crystal();
    cr.dpath_dT_signal = 3.7e-7;
    cr.dpath_dV_signal = -3.8e-10;
    cr.dbirefringence_dx = 5.0;
    const double T0 = cr.reference_temperature;

    // second differences vanish identically
    for (double h : {1e-3, 0.1, 3.0}) {
        const double f0 = optical_path(cr, Polarization::signal, T0 - h, 0.0, 0.0);
        const double f1 = optical_path(cr, Polarization::signal, T0, 0.0, 0.0);
        const double f2 = optical_path(cr, Polarization::signal, T0 + h, 0.0, 0.0);
        CHECK(std::abs((f2 - f1) - (f1 - f0)) < 1e-18);
    }
    const double g0 = optical_path(cr, Polarization::signal, T0, -5.0, 0.0);
    const double g1 = optical_path(cr, Polarization::signal, T0, 0.0, 0.0);
    const double g2 = optical_path(cr, Polarization::signal, T0, 5.0, 0.0);
    CHECK(std::abs((g2 - g1) - (g1 - g0)) < 1e-18);

    // transverse term splits with opposite signs between the polarizations
    const double xs = optical_path(cr, Polarization::signal, T0, 0.0, 1e-3) -
                      optical_path(cr, Polarization::signal, T0, 0.0, 0.0);
    const double xi = optical_path(cr, Polarization::idler, T0, 0.0, 1e-3) -
                      optical_path(cr, Polarization::idler, T0, 0.0, 0.0);
    CHECK(xs == doctest::Approx(0.5 * 5.0 * 0.01 * 1e-3));
    CHECK(xi == doctest::Approx(-xs));
}

TEST_CASE("calibration reproduces the measured temperature coefficients") {
    const auto cr = bench_crystal();
    const auto geo = bench_cavity();
    // (-2.12, +0.24) MHz/mK and (1.34, 0.59) MHz/V
    const std::pair tT{-2.12e9, 0.24e9};
    const std::pair tV{1.34e6, 0.59e6};
    const auto cal = calibrate_derivatives(cr, geo, tT, tV);

    const auto [aTs, aTi] = oracle_solve(cr, geo, tT.first, tT.second);
    CHECK(cal.dpath_dT_signal == doctest::Approx(aTs).epsilon(1e-12));
    CHECK(cal.dpath_dT_idler == doctest::Approx(aTi).epsilon(1e-12));
    // expected scale: ~3.7e-10 m per mK for the signal, ~4.6e-10 for the idler
    CHECK(cal.dpath_dT_signal * 1e-3 == doctest::Approx(3.7e-10).epsilon(0.02));
    CHECK(cal.dpath_dT_idler * 1e-3 == doctest::Approx(4.6e-10).epsilon(0.02));

    const auto [bVs, bVi] = oracle_solve(cr, geo, tV.first, tV.second);
    CHECK(cal.dpath_dV_signal == doctest::Approx(bVs).epsilon(1e-12));
    CHECK(cal.dpath_dV_idler == doctest::Approx(bVi).epsilon(1e-12));
    CHECK(cal.dpath_dV_signal < 0.0);
    CHECK(cal.dpath_dV_idler < 0.0);
    CHECK(std::abs(cal.dpath_dV_signal) > 1e-10);
    CHECK(std::abs(cal.dpath_dV_signal) < 1e-9);
    CHECK(std::abs(cal.dpath_dV_idler) > 1e-10);
    CHECK(std::abs(cal.dpath_dV_idler) < 1e-9);
}

TEST_CASE("a millikelvin step adds exactly the calibrated path increment") {
    const auto geo = bench_cavity();
    const auto cal = calibrate_derivatives(bench_crystal(), geo, {-2.12e9, 0.24e9},
                                           {1.34e6, 0.59e6});
    const double T0 = cal.reference_temperature;
    const double base = optical_path(cal, Polarization::signal, T0, 0.0, 0.0);
    const double warm = optical_path(cal, Polarization::signal, T0 + 1e-3, 0.0, 0.0);
    CHECK(warm - base == doctest::Approx(cal.dpath_dT_signal * 1e-3).epsilon(1e-9));
    // the calibrated signal derivative is ~3.7e-10 m per millikelvin
    CHECK(warm - base == doctest::Approx(3.7e-13).epsilon(0.02));
}

TEST_CASE("zero targets calibrate to exactly zero derivatives") {
    const auto cal = calibrate_derivatives(bench_crystal(), bench_cavity(), {0.0, 0.0}, {0.0, 0.0});
    CHECK(cal.dpath_dT_signal == 0.0);
    CHECK(cal.dpath_dT_idler == 0.0);
    CHECK(cal.dpath_dV_signal == 0.0);
    CHECK(cal.dpath_dV_idler == 0.0);
}

TEST_CASE("calibration round-trips through the tuning matrix") {
    const auto geo = bench_cavity();
    const std::pair tT{-2.12e9, 0.24e9};
    const std::pair tV{1.34e6, 0.59e6};
    const auto cal = calibrate_derivatives(bench_crystal(), geo, tT, tV);
    const auto m = tuning_matrix(cal, geo);
    CHECK(m.plus[TuningMatrix::col_T] == doctest::Approx(tT.first).epsilon(1e-9));
    CHECK(m.minus[TuningMatrix::col_T] == doctest::Approx(tT.second).epsilon(1e-9));
    CHECK(m.plus[TuningMatrix::col_V] == doctest::Approx(tV.first).epsilon(1e-9));
    CHECK(m.minus[TuningMatrix::col_V] == doctest::Approx(tV.second).epsilon(1e-9));
}

TEST_CASE("swapping the signal/idler labels negates the nu_minus rows only") {
    const auto geo = bench_cavity();
    auto cal = calibrate_derivatives(bench_crystal(), geo, {-2.12e9, 0.24e9}, {1.34e6, 0.59e6});
    CrystalParams swapped = cal;
    std::swap(swapped.n_signal, swapped.n_idler);
    std::swap(swapped.dpath_dT_signal, swapped.dpath_dT_idler);
    std::swap(swapped.dpath_dV_signal, swapped.dpath_dV_idler);
    const auto a = tuning_matrix(cal, geo);
    const auto b = tuning_matrix(swapped, geo);
    for (int col = 0; col < 4; ++col) {
        CHECK(b.plus[col] == doctest::Approx(a.plus[col]).epsilon(1e-14));
        if (a.minus[col] == 0.0)
            CHECK(b.minus[col] == 0.0);
        else
            CHECK(b.minus[col] == doctest::Approx(-a.minus[col]).epsilon(1e-14));
    }
}

TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS(CrystalParams::from_mean_index(-0.01, 1.8, -0.09));
    CHECK_THROWS(CrystalParams::from_mean_index(0.01, 0.9, 0.0));
    const auto cr = bench_crystal();
    CHECK_THROWS(optical_path(cr, static_cast<Polarization>(42), cr.reference_temperature,
                              0.0, 0.0));
}
