#include "opo/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace opo {

namespace {
constexpr double c_light = constants::speed_of_light;
}

void CavityGeometry::validate(const CrystalParams& crystal) const {
    if (!(air_path_L > 0.0)) throw std::invalid_argument("cavity: air_path_L must be > 0");
    if (!(cold_hwhm > 0.0)) throw std::invalid_argument("cavity: cold_hwhm must be > 0");
    if (!(pump_wavelength > 0.0)) throw std::invalid_argument("cavity: pump_wavelength must be > 0");
    for (double r : {mirror_R_signal_in, mirror_R_signal_out, mirror_R_pump_in, mirror_R_pump_out}) {
        if (r < 0.0 || r > 1.0)
            throw std::invalid_argument("cavity: mirror reflectivity outside [0,1]");
    }
    const double expected = air_path_L + crystal.length_l;
    if (std::abs(mirror_separation - expected) > 0.01 * mirror_separation)
        throw std::invalid_argument(
            "cavity: mirror_separation inconsistent with air path + crystal length (>1%)");
    if (std::abs(detuning_pulling) >= 1.0)
        throw std::invalid_argument("cavity: |detuning_pulling| must be < 1");
}

double resonance_frequency(const CrystalParams& crystal, Polarization pol, int64_t p,
                           const OperatingPoint& at) {
    if (p < 1) throw std::invalid_argument("resonance_frequency: p must be >= 1");
    const double path = at.L + optical_path(crystal, pol, at.T, at.V, at.x);
    return static_cast<double>(p) * c_light / (2.0 * path);
}

double fsr(const CrystalParams& crystal, Polarization pol, const OperatingPoint& at) {
    const double path = at.L + optical_path(crystal, pol, at.T, at.V, at.x);
    return c_light / (2.0 * path);
}

double length_tuning_rate(const CrystalParams& crystal, const CavityGeometry& geometry,
                          Polarization pol, const OperatingPoint& at) {
    const double path = at.L + optical_path(crystal, pol, at.T, at.V, at.x);
    return -geometry.degenerate_frequency() / path;
}

TuningMatrix tuning_matrix(const CrystalParams& crystal, const CavityGeometry& geometry) {
    return tuning_matrix(crystal, geometry,
                         OperatingPoint{geometry.air_path_L, crystal.reference_temperature,
                                        0.0, 0.0});
}

TuningMatrix tuning_matrix(const CrystalParams& crystal, const CavityGeometry& geometry,
                           const OperatingPoint& at) {
    const double nu = geometry.degenerate_frequency();
    const double cs = nu / (at.L + optical_path(crystal, Polarization::signal, at.T, at.V, at.x));
    const double ci = nu / (at.L + optical_path(crystal, Polarization::idler, at.T, at.V, at.x));

    TuningMatrix m;
    const auto fill = [&](int col, double ds, double di) {
        m.plus[col] = -cs * ds - ci * di;
        m.minus[col] = -cs * ds + ci * di;
    };
    fill(TuningMatrix::col_L, 1.0, 1.0);
    fill(TuningMatrix::col_T, crystal.dpath_dT_signal, crystal.dpath_dT_idler);
    fill(TuningMatrix::col_V, crystal.dpath_dV_signal, crystal.dpath_dV_idler);
    m.plus[TuningMatrix::col_pump] = 1.0;
    m.minus[TuningMatrix::col_pump] = 0.0;
    return m;
}

std::pair<double, double> transverse_tuning(const CrystalParams& crystal,
                                            const CavityGeometry& geometry,
                                            const OperatingPoint& at) {
    const double nu = geometry.degenerate_frequency();
    const double cs = nu / (at.L + optical_path(crystal, Polarization::signal, at.T, at.V, at.x));
    const double ci = nu / (at.L + optical_path(crystal, Polarization::idler, at.T, at.V, at.x));
    const double ds = optical_path_dx(crystal, Polarization::signal);
    const double di = optical_path_dx(crystal, Polarization::idler);
    return {-cs * ds - ci * di, -cs * ds + ci * di};
}

double mode_hop_spacing(const CrystalParams& crystal, const CavityGeometry& geometry) {
    const double dn = std::abs(crystal.birefringence());
    return dn / (crystal.n_mean() + geometry.air_path_L / crystal.length_l) *
           geometry.pump_wavelength / 2.0;
}

ModePair mode_pair_at(const CrystalParams& crystal, const CavityGeometry& geometry,
                      int64_t p_signal, int64_t p_idler, const OperatingPoint& at) {
    const double nu_p = geometry.pump_frequency();
    const double res_s = resonance_frequency(crystal, Polarization::signal, p_signal, at);
    const double res_i = resonance_frequency(crystal, Polarization::idler, p_idler, at);
    // Sum detuning split equally between signal and idler (equal linewidths).
    const double sum_detuning = nu_p - res_s - res_i;

    ModePair pair;
    pair.p_signal = p_signal;
    pair.p_idler = p_idler;
    pair.nu_signal = res_s + 0.5 * sum_detuning;
    pair.nu_idler = nu_p - pair.nu_signal;  // energy conservation, exact
    pair.detuning_signal = pair.nu_signal - res_s;
    pair.detuning_idler = pair.nu_idler - res_i;
    pair.beat = pair.nu_signal - pair.nu_idler;
    return pair;
}

std::pair<double, ModePair> doubly_resonant_length(const CrystalParams& crystal,
                                                   const CavityGeometry& geometry,
                                                   int64_t p_signal, int64_t p_idler,
                                                   const OperatingPoint& at) {
    const double nu_p = geometry.pump_frequency();
    const double path_s = optical_path(crystal, Polarization::signal, at.T, at.V, at.x);
    const double path_i = optical_path(crystal, Polarization::idler, at.T, at.V, at.x);
    const double d = path_s - path_i;
    const double ps = static_cast<double>(p_signal);
    const double pi_ = static_cast<double>(p_idler);

    // p_s c/(2u) - p_i c/(2(nu_p - u)) = d  =>  2d u^2 - (2d nu_p + (p_s+p_i)c) u + p_s c nu_p = 0
    const double A = 2.0 * d;
    const double B = -(2.0 * d * nu_p + (ps + pi_) * c_light);
    const double C = ps * c_light * nu_p;
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0) throw std::runtime_error("doubly_resonant_length: no real solution");
    const double q = 0.5 * (-B + std::sqrt(disc));  // B < 0 for physical inputs
    const double u = C / q;                         // root near nu_p * p_s/(p_s+p_i)

    const double L = ps * c_light / (2.0 * u) - path_s;

    ModePair pair;
    pair.p_signal = p_signal;
    pair.p_idler = p_idler;
    pair.nu_signal = u;
    pair.nu_idler = nu_p - u;
    pair.detuning_signal = 0.0;
    pair.detuning_idler = 0.0;
    pair.beat = u - pair.nu_idler;
    return {L, pair};
}

std::vector<ClusterEntry> find_cluster_modes(const CrystalParams& crystal,
                                             const CavityGeometry& geometry, double span,
                                             const OperatingPoint& at, double max_beat) {
    std::vector<ClusterEntry> out;
    if (!(span > 0.0)) return out;

    const double lambda_deg = geometry.degenerate_wavelength();
    const double path_s = optical_path(crystal, Polarization::signal, at.T, at.V, at.x);
    const double path_i = optical_path(crystal, Polarization::idler, at.T, at.V, at.x);
    const int64_t p_s0 = static_cast<int64_t>(std::llround(2.0 * (at.L + path_s) / lambda_deg));
    const int64_t p_i0 = static_cast<int64_t>(std::llround(2.0 * (at.L + path_i) / lambda_deg));

    const double fsr_sum = fsr(crystal, Polarization::signal, at) +
                           fsr(crystal, Polarization::idler, at);
    const double half_cluster_step = geometry.pump_wavelength / 2.0;
    const int k_max = static_cast<int>(std::ceil(0.5 * span / half_cluster_step)) + 2;
    const int m_max = static_cast<int>(std::ceil(max_beat / (0.5 * fsr_sum))) + 1;

    for (int k = -k_max; k <= k_max; ++k) {
        for (int m = -m_max; m <= m_max; ++m) {
            if (((k + m) & 1) != 0) continue;  // dp_s, dp_i integers require same parity
            const int64_t dps = (k + m) / 2;
            const int64_t dpi = (k - m) / 2;
            const int64_t ps = p_s0 + dps;
            const int64_t pi_ = p_i0 + dpi;
            if (ps < 1 || pi_ < 1) continue;
            auto [L, pair] = doubly_resonant_length(crystal, geometry, ps, pi_, at);
            const double offset = L - at.L;
            if (std::abs(offset) > 0.5 * span) continue;
            if (std::abs(pair.beat) > max_beat) continue;
            out.push_back(ClusterEntry{offset, pair, k, m});
        }
    }
    std::sort(out.begin(), out.end(), [](const ClusterEntry& a, const ClusterEntry& b) {
        return std::tie(a.L_offset, a.pair.p_signal) < std::tie(b.L_offset, b.pair.p_signal);
    });
    return out;
}

std::optional<ModePair> select_oscillating_mode(const std::vector<ModePair>& candidates,
                                                double pump_power_W, double threshold_min_W,
                                                double cold_hwhm) {
    std::optional<ModePair> best;
    double best_cost = 0.0;
    for (const ModePair& cand : candidates) {
        const double ds = cand.detuning_signal / cold_hwhm;
        const double di = cand.detuning_idler / cold_hwhm;
        const double cost = threshold_min_W * (1.0 + ds * ds) * (1.0 + di * di);
        if (pump_power_W <= cost) continue;
        const auto key = [cold_hwhm](double c, const ModePair& p) {
            return std::tuple(c, std::abs(p.beat), p.p_signal);
        };
        if (!best || key(cost, cand) < key(best_cost, *best)) {
            best = cand;
            best_cost = cost;
        }
    }
    return best;
}

Waists waists(const CavityGeometry& geometry, const CrystalParams& crystal) {
    const double lambda = geometry.degenerate_wavelength();
    const double w_ba = std::sqrt(crystal.length_l * lambda /
                                  (2.0 * constants::pi * crystal.n_mean()));
    return Waists{w_ba, 0.59 * w_ba};
}

}  // namespace opo
