#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "opo/constants.hpp"
#include "opo/crystal.hpp"

namespace opo {

// Standing-wave cavity, doubly resonant for the cross-polarized signal and
// idler; the pump is essentially non-resonant (R = 0.6 / 0.1).
struct CavityGeometry {
    double air_path_L = 0.092;         // m, path outside the crystal
    double pump_wavelength = 532e-9;   // m
    double cold_hwhm = 3e6;            // Hz, cold-cavity half width at half maximum
    double mirror_R_signal_in = 0.999;
    double mirror_R_signal_out = 0.990;
    double mirror_R_pump_in = 0.6;
    double mirror_R_pump_out = 0.1;
    double mirror_curvature = 0.05;    // m
    double mirror_separation = 0.102;  // m

    // Frequency pulling of the beat note by the sum detuning, caused by
    // unequal signal/idler round-trip losses: the oscillating pair splits a
    // nonzero sum detuning unevenly, shifting the beat by
    // pulling * (nu_p - sum of resonances). Dimensionless, |pulling| < 1;
    // zero for perfectly balanced losses. Calibrated against the observed
    // free-running beat drift (the tuning matrix itself is evaluated on the
    // nu_minus = 0, zero-detuning branch and does not contain this term).
    double detuning_pulling = 0.56;

    double pump_frequency() const { return constants::speed_of_light / pump_wavelength; }
    double degenerate_frequency() const { return 0.5 * pump_frequency(); }
    double degenerate_wavelength() const { return 2.0 * pump_wavelength; }

    // throws if reflectivities leave [0,1] or the mirror separation is
    // inconsistent with air path + crystal length beyond 1%
    void validate(const CrystalParams& crystal) const;
};

// Operating point of the tunable degrees of freedom.
struct OperatingPoint {
    double L = 0.092;    // m, air path
    double T = 293.15;   // K
    double V = 0.0;      // volts across the crystal
    double x = 0.0;      // m, transverse crystal position
};

// One (p_s, p_i) longitudinal mode pair under the energy-conservation
// constraint nu_signal + nu_idler = nu_pump (imposed exactly).
struct ModePair {
    int64_t p_signal = 0;
    int64_t p_idler = 0;
    double nu_signal = 0.0;        // Hz
    double nu_idler = 0.0;         // Hz
    double detuning_signal = 0.0;  // Hz, offset from the nearest cavity resonance
    double detuning_idler = 0.0;   // Hz
    double beat = 0.0;             // Hz, nu_signal - nu_idler
};

// 2x4 array of (d nu_plus/dX, d nu_minus/dX) for X in {L, T, V, nu_p}.
struct TuningMatrix {
    enum Column { col_L = 0, col_T = 1, col_V = 2, col_pump = 3 };
    double plus[4] = {};   // Hz/m, Hz/K, Hz/V, dimensionless
    double minus[4] = {};
};

struct ClusterEntry {
    double L_offset = 0.0;  // m, doubly resonant length relative to scan center
    ModePair pair;
    int cluster_label = 0;  // delta p_s + delta p_i relative to the reference pair
    int intra_label = 0;    // delta p_s - delta p_i
};

// nu = p * c / (2 * (L + optical_path)). p >= 1.
double resonance_frequency(const CrystalParams& crystal, Polarization pol, int64_t p,
                           const OperatingPoint& at);

// Free spectral range c / (2 * (L + optical_path)).
double fsr(const CrystalParams& crystal, Polarization pol, const OperatingPoint& at);

// d nu/dL at fixed mode number: -nu/(L + n*l), evaluated at the degenerate
// frequency.
double length_tuning_rate(const CrystalParams& crystal, const CavityGeometry& geometry,
                          Polarization pol, const OperatingPoint& at);

// Analytic chain rule through the optical paths on the nu_minus = 0,
// mode-hop-free branch. The pump column is exactly (1, 0).
TuningMatrix tuning_matrix(const CrystalParams& crystal, const CavityGeometry& geometry);
TuningMatrix tuning_matrix(const CrystalParams& crystal, const CavityGeometry& geometry,
                           const OperatingPoint& at);

// (d nu_plus/dx, d nu_minus/dx) from the transverse birefringence gradient.
std::pair<double, double> transverse_tuning(const CrystalParams& crystal,
                                            const CavityGeometry& geometry,
                                            const OperatingPoint& at);

// |dn| / (n_mean + L/l) * lambda_p / 2: length displacement between adjacent
// intra-cluster modes, first order in the birefringence.
double mode_hop_spacing(const CrystalParams& crystal, const CavityGeometry& geometry);

// Evaluates pair (p_s, p_i) at a fixed operating point: resonances, the
// energy-conservation-consistent frequencies (sum detuning split equally
// between signal and idler), detunings and beat.
ModePair mode_pair_at(const CrystalParams& crystal, const CavityGeometry& geometry,
                      int64_t p_signal, int64_t p_idler, const OperatingPoint& at);

// Exact doubly resonant length for pair (p_s, p_i): solves
// p_s c/(2 nu_s) - n_s l = p_i c/(2 (nu_p - nu_s)) - n_i l for nu_s near
// degeneracy, then L from the signal resonance condition. Returns
// (L_absolute, pair at that length).
std::pair<double, ModePair> doubly_resonant_length(const CrystalParams& crystal,
                                                   const CavityGeometry& geometry,
                                                   int64_t p_signal, int64_t p_idler,
                                                   const OperatingPoint& at);

// Enumerates mode pairs whose doubly resonant lengths fall inside
// [center - span/2, center + span/2], labeled by cluster (dp_s + dp_i) and
// intra-cluster (dp_s - dp_i) index relative to the degeneracy-closest pair
// at the scan center. Pairs with |beat| > max_beat are not enumerated.
std::vector<ClusterEntry> find_cluster_modes(const CrystalParams& crystal,
                                             const CavityGeometry& geometry, double span,
                                             const OperatingPoint& at,
                                             double max_beat = 100e9);

// Mode competition: effective threshold threshold_min * (1 + ds^2)(1 + di^2)
// with d_j = detuning_j / cold_hwhm. Returns the candidate of minimal
// effective threshold if the pump exceeds it; ties break toward smaller
// |beat|, then smaller p_signal.
std::optional<ModePair> select_oscillating_mode(const std::vector<ModePair>& candidates,
                                                double pump_power_W, double threshold_min_W,
                                                double cold_hwhm);

struct Waists {
    double boyd_ashkin = 0.0;    // m, sqrt(l*lambda/(2 pi n))
    double boyd_kleinman = 0.0;  // m, 0.59 * boyd_ashkin
};

Waists waists(const CavityGeometry& geometry, const CrystalParams& crystal);

}  // namespace opo
