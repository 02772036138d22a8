#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "opo/cavity.hpp"
#include "opo/crystal.hpp"
#include "opo/rng.hpp"

using namespace opo;

namespace {

constexpr double c_light = constants::speed_of_light;

CrystalParams bench_crystal() { return CrystalParams::from_mean_index(0.01, 1.8, -0.09); }
CavityGeometry bench_cavity() { return CavityGeometry{}; }

OperatingPoint nominal(const CrystalParams& cr, const CavityGeometry& geo) {
    return OperatingPoint{geo.air_path_L, cr.reference_temperature, 0.0, 0.0};
}

}  // namespace

TEST_CASE("geometry validation") {
    const auto cr = bench_crystal();
    auto geo = bench_cavity();
    CHECK_NOTHROW(geo.validate(cr));
    geo.mirror_separation = 0.2;
    CHECK_THROWS(geo.validate(cr));
    geo = bench_cavity();
    geo.mirror_R_signal_in = 1.2;
    CHECK_THROWS(geo.validate(cr));
}

TEST_CASE("resonance frequency basics") {
    const auto cr = bench_crystal();
    const auto geo = bench_cavity();
    const auto at = nominal(cr, geo);

    // oracle: p = round(2(L + n l)/lambda), then evaluate
    const double lambda = geo.degenerate_wavelength();
    const double path = at.L + optical_path(cr, Polarization::idler, at.T, at.V, at.x);
    const auto p = static_cast<int64_t>(std::llround(2.0 * path / lambda));
    CHECK(p == 207613);
    const double nu = resonance_frequency(cr, Polarization::idler, p, at);
    const double fsr_i = fsr(cr, Polarization::idler, at);
    CHECK(std::abs(nu - c_light / lambda) < fsr_i);  // within one FSR of c/1064 nm
    CHECK(nu == doctest::Approx(281.76e12).epsilon(2e-4));

    // p = 1 is one FSR
    CHECK(resonance_frequency(cr, Polarization::idler, 1, at) == fsr_i);

    // doubling the optical path at fixed p halves the frequency
    auto long_at = at;
    long_at.L = at.L + path;  // doubles L + n l
    CHECK(resonance_frequency(cr, Polarization::idler, p, long_at) ==
          doctest::Approx(0.5 * nu).epsilon(1e-12));

    CHECK_THROWS(resonance_frequency(cr, Polarization::idler, 0, at));
}

TEST_CASE("free spectral ranges") {
    const auto cr = bench_crystal();
    const auto geo = bench_cavity();
    const auto at = nominal(cr, geo);

    // L = 9.2 cm with mean-index crystal path 18 mm gives ~1.363 GHz
    const double fsr_s = fsr(cr, Polarization::signal, at);
    const double fsr_i = fsr(cr, Polarization::idler, at);
    CHECK(0.5 * (fsr_s + fsr_i) == doctest::Approx(c_light / (2.0 * 0.110)).epsilon(2e-3));
    CHECK(fsr_s + fsr_i == doctest::Approx(2.73e9).epsilon(2e-3));

    // empty-crystal limit reduces to c/(2L)
    auto empty = cr;
    empty.length_l = 1e-30;
    CHECK(fsr(empty, Polarization::signal, at) ==
          doctest::Approx(c_light / (2.0 * at.L)).epsilon(1e-9));
}

TEST_CASE("length tuning rate") {
    const auto cr = bench_crystal();
    const auto geo = bench_cavity();
    const auto at = nominal(cr, geo);

    const double rate_s = length_tuning_rate(cr, geo, Polarization::signal, at);
    const double rate_i = length_tuning_rate(cr, geo, Polarization::idler, at);
    CHECK(rate_s == doctest::Approx(-2.55e15).epsilon(0.015));
    CHECK(rate_i == doctest::Approx(-2.55e15).epsilon(0.015));
    // sum over both polarizations ~ -5.11 MHz/nm (2%)
    CHECK(rate_s + rate_i == doctest::Approx(-5.11e15).epsilon(0.02));

    // exact identity rate*(L + n l) + nu = 0
    const double path = at.L + optical_path(cr, Polarization::signal, at.T, at.V, at.x);
    CHECK(rate_s * path + geo.degenerate_frequency() == doctest::Approx(0.0).scale(1e15));
}

TEST_CASE("tuning matrix at the bench geometry") {
    const auto geo = bench_cavity();
    const auto cal =
        calibrate_derivatives(bench_crystal(), geo, {-2.12e9, 0.24e9}, {1.34e6, 0.59e6});
    const auto m = tuning_matrix(cal, geo);

    // length column (-5.11, -0.02) MHz/nm: dominant entry within 2 percent,
    // the one-digit -0.02 quote within its own rounding quantum (0.005 MHz/nm)
    CHECK(m.plus[TuningMatrix::col_L] == doctest::Approx(-5.11e15).epsilon(0.02));
    CHECK(m.minus[TuningMatrix::col_L] < 0.0);
    CHECK(std::abs(m.minus[TuningMatrix::col_L] - (-0.02e15)) < 0.005e15);

    // pump column exactly (1, 0)
    CHECK(m.plus[TuningMatrix::col_pump] == 1.0);
    CHECK(m.minus[TuningMatrix::col_pump] == 0.0);

    // zero crystal derivatives give zero T and V columns
    const auto m0 = tuning_matrix(bench_crystal(), geo);
    CHECK(m0.plus[TuningMatrix::col_T] == 0.0);
    CHECK(m0.minus[TuningMatrix::col_T] == 0.0);
    CHECK(m0.plus[TuningMatrix::col_V] == 0.0);
    CHECK(m0.minus[TuningMatrix::col_V] == 0.0);
}

TEST_CASE("mode hop spacing") {
    const auto cr = bench_crystal();
    const auto geo = bench_cavity();

    const double spacing = mode_hop_spacing(cr, geo);
    CHECK(spacing == doctest::Approx(2.18e-9).epsilon(0.02));  // measured value rounds to 2.2 nm
    CHECK(spacing == doctest::Approx(0.09 / (1.8 + geo.air_path_L / cr.length_l) *
                                     geo.pump_wavelength / 2.0)
                         .epsilon(1e-14));

    auto degenerate = CrystalParams::from_mean_index(0.01, 1.8, 0.0);
    CHECK(mode_hop_spacing(degenerate, geo) == 0.0);

    // longer cavity at fixed crystal shrinks the spacing monotonically
    auto far = geo;
    double prev = spacing;
    for (double L : {0.2, 1.0, 10.0}) {
        far.air_path_L = L;
        const double s = mode_hop_spacing(cr, far);
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("doubly resonant pairs satisfy energy conservation and zero detuning") {
    const auto cr = bench_crystal();
    const auto geo = bench_cavity();
    const auto at = nominal(cr, geo);

    const auto entries = find_cluster_modes(cr, geo, 600e-9, at, 30e9);
    REQUIRE(!entries.empty());
    for (const auto& e : entries) {
        CHECK(std::abs(e.pair.nu_signal + e.pair.nu_idler - geo.pump_frequency()) <=
              1e-12 * geo.pump_frequency());
        // at its own doubly resonant length the pair is exactly resonant
        auto shifted = at;
        shifted.L = at.L + e.L_offset;
        const auto pr = mode_pair_at(cr, geo, e.pair.p_signal, e.pair.p_idler, shifted);
        CHECK(std::abs(pr.detuning_signal) < 1.0);  // Hz; solver is ~1e-13 relative
        CHECK(std::abs(pr.detuning_idler) < 1.0);
    }
}

TEST_CASE("cluster map matches exhaustive integer enumeration on a toy cavity") {
    // small mode numbers so the brute force stays cheap
    const auto cr = CrystalParams::from_mean_index(1e-3, 1.8, -0.09);
    CavityGeometry geo;
    geo.air_path_L = 4e-3;
    geo.mirror_separation = 5e-3;
    const OperatingPoint at{geo.air_path_L, cr.reference_temperature, 0.0, 0.0};
    const double span = 4.0 * geo.pump_wavelength;
    const double max_beat = 3e11;

    const auto fast = find_cluster_modes(cr, geo, span, at, max_beat);
    REQUIRE(!fast.empty());

    // brute force: try every integer pair in a generous window
    std::vector<ClusterEntry> brute;
    const double lambda = geo.degenerate_wavelength();
    const double path_s = optical_path(cr, Polarization::signal, at.T, at.V, at.x);
    const double path_i = optical_path(cr, Polarization::idler, at.T, at.V, at.x);
    const auto p_s0 = static_cast<int64_t>(std::llround(2.0 * (at.L + path_s) / lambda));
    const auto p_i0 = static_cast<int64_t>(std::llround(2.0 * (at.L + path_i) / lambda));
    for (int64_t ps = p_s0 - 60; ps <= p_s0 + 60; ++ps) {
        for (int64_t pi = p_i0 - 60; pi <= p_i0 + 60; ++pi) {
            const auto [L, pair] = doubly_resonant_length(cr, geo, ps, pi, at);
            if (std::abs(L - at.L) > 0.5 * span) continue;
            if (std::abs(pair.beat) > max_beat) continue;
            brute.push_back(ClusterEntry{L - at.L, pair, 0, 0});
        }
    }
    std::sort(brute.begin(), brute.end(), [](const ClusterEntry& a, const ClusterEntry& b) {
        return a.L_offset < b.L_offset;
    });

    REQUIRE(fast.size() == brute.size());
    for (size_t i = 0; i < fast.size(); ++i) {
        CHECK(fast[i].pair.p_signal == brute[i].pair.p_signal);
        CHECK(fast[i].pair.p_idler == brute[i].pair.p_idler);
        CHECK(fast[i].L_offset == doctest::Approx(brute[i].L_offset).epsilon(1e-12));
    }
}

TEST_CASE("cluster structure at the bench geometry") {
    const auto cr = bench_crystal();
    const auto geo = bench_cavity();
    const auto at = nominal(cr, geo);

    const auto entries = find_cluster_modes(cr, geo, 1200e-9, at, 30e9);
    REQUIRE(entries.size() > 10);

    // consecutive even-cluster centers (intra label 0) sit exactly lambda_p apart,
    // i.e. lambda_p/2 per unit cluster label
    std::vector<const ClusterEntry*> centers;
    for (const auto& e : entries)
        if (e.intra_label == 0) centers.push_back(&e);
    REQUIRE(centers.size() >= 3);
    for (size_t i = 1; i < centers.size(); ++i) {
        const double step = centers[i]->L_offset - centers[i - 1]->L_offset;
        const int dk = centers[i]->cluster_label - centers[i - 1]->cluster_label;
        CHECK(step / dk == doctest::Approx(geo.pump_wavelength / 2.0).epsilon(1e-7));
    }

    // intra-cluster neighbors: spacing ~2.2 nm, within 5% (first order in dn)
    // of the closed-form value, and beat steps of one FSR sum
    const double fsr_sum =
        fsr(cr, Polarization::signal, at) + fsr(cr, Polarization::idler, at);
    const double spacing = mode_hop_spacing(cr, geo);
    int checked = 0;
    for (const auto& e : entries) {
        if (e.cluster_label != 0 || e.intra_label == 0) continue;
        for (const auto& f : entries) {
            if (f.cluster_label != 0 || f.intra_label != e.intra_label + 2) continue;
            CHECK(f.L_offset - e.L_offset == doctest::Approx(spacing).epsilon(0.05));
            CHECK(std::abs(f.pair.beat - e.pair.beat) ==
                  doctest::Approx(fsr_sum).epsilon(1e-3));
            ++checked;
        }
    }
    CHECK(checked >= 4);
}

TEST_CASE("single and double resonance mode hop identities") {
    const auto cr = bench_crystal();
    const auto geo = bench_cavity();
    const auto at = nominal(cr, geo);
    const double lambda = geo.degenerate_wavelength();

    // single resonance: at fixed frequency, L(p+1) - L(p) = lambda/2
    const double path_s = optical_path(cr, Polarization::signal, at.T, at.V, at.x);
    const auto p = static_cast<int64_t>(std::llround(2.0 * (at.L + path_s) / lambda));
    const double L_p = static_cast<double>(p) * lambda / 2.0 - path_s;
    const double L_p1 = static_cast<double>(p + 1) * lambda / 2.0 - path_s;
    CHECK(L_p1 - L_p == doctest::Approx(lambda / 2.0).epsilon(1e-12));

    // double resonance: raising both mode numbers by one advances the doubly
    // resonant length by half a pump wavelength per unit of (dp_s + dp_i)
    const auto entries = find_cluster_modes(cr, geo, 1200e-9, at, 5e9);
    const ClusterEntry* base = nullptr;
    const ClusterEntry* up = nullptr;
    for (const auto& e : entries) {
        if (e.cluster_label == 0 && e.intra_label == 0) base = &e;
        if (e.cluster_label == 2 && e.intra_label == 0) up = &e;
    }
    REQUIRE(base);
    REQUIRE(up);
    CHECK(up->pair.p_signal == base->pair.p_signal + 1);
    CHECK(up->pair.p_idler == base->pair.p_idler + 1);
    CHECK(up->L_offset - base->L_offset ==
          doctest::Approx(geo.pump_wavelength).epsilon(1e-7));
}

TEST_CASE("mode selection") {
    const auto cr = bench_crystal();
    const auto geo = bench_cavity();
    const auto at = nominal(cr, geo);
    const double hwhm = geo.cold_hwhm;

    auto entries = find_cluster_modes(cr, geo, 80e-9, at, 30e9);
    REQUIRE(!entries.empty());
    std::vector<ModePair> candidates;
    for (auto& e : entries) {
        auto p = mode_pair_at(cr, geo, e.pair.p_signal, e.pair.p_idler, at);
        candidates.push_back(p);
    }

    SUBCASE("zero-detuning pair wins when pumped above threshold") {
        ModePair perfect = candidates.front();
        perfect.detuning_signal = 0.0;
        perfect.detuning_idler = 0.0;
        candidates.push_back(perfect);
        const auto win = select_oscillating_mode(candidates, 0.1, 0.0256, hwhm);
        REQUIRE(win.has_value());
        CHECK(win->detuning_signal == 0.0);
        CHECK(win->detuning_idler == 0.0);
    }

    SUBCASE("below-threshold pump selects nothing") {
        CHECK(!select_oscillating_mode(candidates, 1e-6, 0.0256, hwhm).has_value());
    }

    SUBCASE("deterministic tie break: smaller |beat| then smaller p_signal") {
        ModePair a{1000, 1010, 2e14, 2e14, 0.0, 0.0, +2.73e9};
        ModePair b{1001, 1009, 2e14, 2e14, 0.0, 0.0, -2.73e9};
        ModePair c{999, 1011, 2e14, 2e14, 0.0, 0.0, +2.73e9};
        // brute force over the synthetic cluster: all costs equal, so the
        // documented order decides
        const auto win = select_oscillating_mode({a, b, c}, 0.1, 0.0256, hwhm);
        REQUIRE(win.has_value());
        CHECK(win->p_signal == 999);

        ModePair closer = a;
        closer.beat = 1e9;
        const auto win2 = select_oscillating_mode({a, b, c, closer}, 0.1, 0.0256, hwhm);
        REQUIRE(win2.has_value());
        CHECK(win2->beat == 1e9);
    }

    SUBCASE("argmin is invariant under common positive rescaling") {
        Rng rng(7);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<ModePair> set;
            const int n = 2 + static_cast<int>(rng.next_u64() % 6);
            for (int i = 0; i < n; ++i) {
                ModePair p;
                p.p_signal = 1000 + i;
                p.p_idler = 1000 - i;
                p.detuning_signal = rng.uniform_sym() * 5e6;
                p.detuning_idler = rng.uniform_sym() * 5e6;
                p.beat = rng.uniform_sym() * 5e9;
                set.push_back(p);
            }
            const double scale = std::exp(rng.uniform_sym() * 3.0);
            const auto w1 = select_oscillating_mode(set, 0.1, 0.0256, hwhm);
            const auto w2 = select_oscillating_mode(set, 0.1 * scale, 0.0256 * scale, hwhm);
            REQUIRE(w1.has_value() == w2.has_value());
            if (w1) {
                CHECK(w1->p_signal == w2->p_signal);
                CHECK(w1->p_idler == w2->p_idler);
            }
        }
    }
}

TEST_CASE("waist formulas") {
    const auto cr = bench_crystal();
    const auto geo = bench_cavity();
    const auto w = waists(geo, cr);
    CHECK(w.boyd_ashkin == doctest::Approx(31e-6).epsilon(0.02));
    CHECK(w.boyd_kleinman == doctest::Approx(18e-6).epsilon(0.02));
    CHECK(w.boyd_kleinman == 0.59 * w.boyd_ashkin);

    // quadrupling the crystal length doubles the waist
    auto cr4 = cr;
    cr4.length_l = 4.0 * cr.length_l;
    CHECK(waists(geo, cr4).boyd_ashkin == doctest::Approx(2.0 * w.boyd_ashkin).epsilon(1e-12));
}
