#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace opo {

// Above-threshold conversion efficiency law rho = (K/N)(sqrt(N) - 1) with
// N = P_pump / P_threshold. K is 2 for a standing-wave cavity with a
// single-pass pump and up to 4 with a reflected pump; it stays a free fit
// parameter because the mirror phase shift is unknown.
struct EfficiencyModel {
    double p_threshold = 0.0256;  // W
    double k_factor = 3.26;

    void validate(bool physical_range = false) const;
};

struct EfficiencyPoint {
    double pump_power = 0.0;  // W
    double efficiency = 0.0;  // (P_s + P_i)/P_p
    double sigma = 0.0;       // optional per-point uncertainty; 0 = none
};

using EfficiencyDataset = std::vector<EfficiencyPoint>;

// rho(P_p); exactly 0 at or below threshold (no oscillation).
double conversion_efficiency(double pump_power_W, const EfficiencyModel& model);

// Analytic Jacobian of rho with respect to (p_threshold, k_factor).
std::pair<double, double> efficiency_gradient(double pump_power_W, const EfficiencyModel& model);

struct EfficiencyFit {
    EfficiencyModel model;
    double chi_squared = 0.0;
    double sigma_p_threshold = 0.0;
    double sigma_k = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

// Damped Gauss-Newton (Levenberg style) over (P_th, K). Unweighted residual
// sum of squares unless `weighted` and per-point sigmas are set. Converges to
// gradient norm <= 1e-10 or 200 iterations; a step that would push P_th at or
// above the smallest pump power is damped and retried.
EfficiencyFit fit_efficiency(const EfficiencyDataset& data, const EfficiencyModel& initial_guess,
                             bool weighted = false);

// Stationary point of the efficiency law: N_opt = 4, rho_max = K/4.
std::pair<double, double> optimum_operating_point(const EfficiencyModel& model);

// Synthetic dataset with N evenly spaced in [n_min, n_max] and optional
// multiplicative Gaussian noise on rho.
EfficiencyDataset generate_efficiency_dataset(const EfficiencyModel& model, int n_points,
                                              double n_min, double n_max, double noise_fraction,
                                              uint64_t seed);

}  // namespace opo
