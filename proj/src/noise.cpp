#include "opo/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "opo/constants.hpp"

namespace opo {

namespace {
constexpr double two_pi = 2.0 * constants::pi;
}

void NoiseBudget::validate() const {
    if (pump_walk_hz_per_ms < 0.0 || pump_drift_hz_per_min < 0.0 || temp_sigma_K < 0.0 ||
        length_sigma_m < 0.0)
        throw std::invalid_argument("noise: sigmas must be >= 0");
    if (!(temp_bandwidth_hz > 0.0) || !(length_bandwidth_hz > 0.0) ||
        !(pump_walk_corner_s > 0.0))
        throw std::invalid_argument("noise: bandwidths must be > 0");
    for (const auto& line : vibration_lines) {
        if (!(line.frequency_hz > 0.0) || !(line.quality > 0.0) || line.displacement_rms_m < 0.0)
            throw std::invalid_argument("noise: malformed vibration line");
    }
}

NoiseStepper::NoiseStepper(const NoiseBudget& budget, double tick_s)
    : budget_(budget), tick_(tick_s) {
    budget.validate();
    if (!(tick_s > 0.0)) throw std::invalid_argument("noise: tick must be > 0");

    // exact OU update x' = a x + k xi with stationary sigma and corner theta:
    // a = exp(-theta dt), k = sigma sqrt(1 - a^2)
    const auto ou = [tick_s](double sigma, double theta, double& decay, double& kick) {
        decay = std::exp(-theta * tick_s);
        kick = sigma * std::sqrt(1.0 - decay * decay);
    };

    // the walk rate fixes the short-time increments: sigma(dt) = s sqrt(dt)
    // with s = rate / sqrt(1 ms); the corner bounds the excursion at
    // sigma_inf = s sqrt(tau/2)
    const double s = budget.pump_walk_hz_per_ms / std::sqrt(1e-3);
    const double theta_pump = 1.0 / budget.pump_walk_corner_s;
    const double sigma_pump = s * std::sqrt(budget.pump_walk_corner_s / 2.0);
    ou(sigma_pump, theta_pump, pump_decay_, pump_kick_);

    ou(budget.temp_sigma_K, two_pi * budget.temp_bandwidth_hz, temp_decay_, temp_kick_);
    ou(budget.length_sigma_m, two_pi * budget.length_bandwidth_hz, length_decay_, length_kick_);

    for (const auto& line : budget.vibration_lines) {
        LineCoeff c;
        c.omega0 = two_pi * line.frequency_hz;
        c.gamma = c.omega0 / line.quality;
        // white drive scaled for stationary displacement variance rms^2
        c.kick = line.displacement_rms_m * std::sqrt(2.0 * c.gamma) * c.omega0;
        lines_.push_back(c);
    }
}

NoiseState NoiseStepper::init_state(Rng& rng) const {
    NoiseState st;
    st.pump_ramp_hz_per_s = budget_.pump_drift_hz_per_min / 60.0 * rng.gaussian();
    st.lines.resize(lines_.size());
    // start the stationary processes in their stationary distribution
    const double s = budget_.pump_walk_hz_per_ms / std::sqrt(1e-3);
    st.pump_walk_hz = s * std::sqrt(budget_.pump_walk_corner_s / 2.0) * rng.gaussian();
    st.temp_K = budget_.temp_sigma_K * rng.gaussian();
    st.length_m = budget_.length_sigma_m * rng.gaussian();
    for (size_t i = 0; i < lines_.size(); ++i) {
        const auto& c = lines_[i];
        const double rms = budget_.vibration_lines[i].displacement_rms_m;
        st.lines[i].x = rms * rng.gaussian();
        st.lines[i].v = rms * c.omega0 * rng.gaussian();
        st.transverse_m += st.lines[i].x;
    }
    return st;
}

void NoiseStepper::step(NoiseState& st, Rng& rng) const {
    st.pump_walk_hz = pump_decay_ * st.pump_walk_hz + pump_kick_ * rng.gaussian();
    st.pump_ramp_hz += st.pump_ramp_hz_per_s * tick_;
    st.temp_K = temp_decay_ * st.temp_K + temp_kick_ * rng.gaussian();
    st.length_m = length_decay_ * st.length_m + length_kick_ * rng.gaussian();

    const double sqrt_dt = std::sqrt(tick_);
    st.transverse_m = 0.0;
    for (size_t i = 0; i < lines_.size(); ++i) {
        auto& ln = st.lines[i];
        const auto& c = lines_[i];
        ln.v += tick_ * (-c.gamma * ln.v - c.omega0 * c.omega0 * ln.x) +
                c.kick * sqrt_dt * rng.gaussian();
        ln.x += tick_ * ln.v;
        st.transverse_m += ln.x;
    }
}

double NoiseStepper::ou_psd(double f_hz, double sigma, double bandwidth_hz) {
    const double u = f_hz / bandwidth_hz;
    return 2.0 * sigma * sigma / (constants::pi * bandwidth_hz) / (1.0 + u * u);
}

double NoiseStepper::line_displacement_psd(double f_hz, const VibrationLine& line) {
    const double w0 = two_pi * line.frequency_hz;
    const double w = two_pi * f_hz;
    const double gamma = w0 / line.quality;
    const double drive = 2.0 * gamma * w0 * w0 * line.displacement_rms_m * line.displacement_rms_m;
    const double denom = (w0 * w0 - w * w) * (w0 * w0 - w * w) + gamma * gamma * w * w;
    // one-sided: 2x the two-sided response, and the drive PSD is two-sided
    return 2.0 * drive / denom;
}

}  // namespace opo
