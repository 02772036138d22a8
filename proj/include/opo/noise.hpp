#pragma once

#include <utility>
#include <vector>

#include "opo/rng.hpp"

namespace opo {

// One mechanical resonance of the table, driving the crystal transversally.
struct VibrationLine {
    double frequency_hz = 100.0;
    double quality = 30.0;
    double displacement_rms_m = 6e-10;  // stationary RMS displacement
};

// Stochastic drivers of the run. Sigmas sit at or below the measured bench
// bounds; the vibration amplitudes are calibrated, not assumed.
struct NoiseBudget {
    // pump frequency: bounded random walk (fast) plus a linear ramp (slow drift)
    double pump_walk_hz_per_ms = 10e3;   // 1-sigma frequency change over 1 ms
    double pump_walk_corner_s = 3.0;     // relaxation time that bounds the walk
    double pump_drift_hz_per_min = 0.2e6;  // 1-sigma of the per-run ramp slope

    // temperature servo residual, band-limited
    double temp_sigma_K = 1.5e-4;
    double temp_bandwidth_hz = 1.0;

    // cavity length noise, band-limited
    double length_sigma_m = 1e-11;  // 0.01 nm
    double length_bandwidth_hz = 3e3;

    std::vector<VibrationLine> vibration_lines = {VibrationLine{70.0, 25.0, 9.4e-11},
                                                  VibrationLine{100.0, 30.0, 9.4e-11}};

    std::pair<double, double> jitter_band_hz = {100.0, 500.0};  // observed beat-jitter band

    void validate() const;
};

// Evolving values of the drivers.
struct NoiseState {
    double pump_walk_hz = 0.0;
    double pump_ramp_hz_per_s = 0.0;  // drawn once per run
    double pump_ramp_hz = 0.0;
    double temp_K = 0.0;
    double length_m = 0.0;
    struct Line {
        double x = 0.0;  // m
        double v = 0.0;  // m/s
    };
    std::vector<Line> lines;
    double transverse_m = 0.0;  // sum of the line displacements

    double pump_total_hz() const { return pump_walk_hz + pump_ramp_hz; }
};

// Advances a NoiseState on a fixed tick. Band-limited (first-order) processes
// use the exact Ornstein-Uhlenbeck update so the statistics do not depend on
// the tick; the resonant lines integrate a second-order section.
class NoiseStepper {
public:
    NoiseStepper(const NoiseBudget& budget, double tick_s);

    NoiseState init_state(Rng& rng) const;
    void step(NoiseState& state, Rng& rng) const;

    double tick() const { return tick_; }

    // One-sided analytic PSDs, for the property checks and docs.
    static double ou_psd(double f_hz, double sigma, double bandwidth_hz);
    static double line_displacement_psd(double f_hz, const VibrationLine& line);

private:
    NoiseBudget budget_;
    double tick_;
    double pump_decay_, pump_kick_;
    double temp_decay_, temp_kick_;
    double length_decay_, length_kick_;
    struct LineCoeff {
        double omega0, gamma, kick;
    };
    std::vector<LineCoeff> lines_;
};

}  // namespace opo
