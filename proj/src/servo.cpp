#include "opo/servo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "opo/constants.hpp"

namespace opo {

namespace {
constexpr double c_light = constants::speed_of_light;
constexpr double two_pi = 2.0 * constants::pi;
constexpr double nominal_noise_tick_s = 2.5e-5;  // effective noise sample rate 40 kHz

double pick_dt(const ServoConfig* servo) {
    if (!servo) return nominal_noise_tick_s;
    return std::min(nominal_noise_tick_s, 1.0 / (10.0 * servo->dither_frequency_hz));
}

int pick_stride(double dt) {
    return std::max(1, static_cast<int>(std::llround(nominal_noise_tick_s / dt)));
}
}  // namespace

void ServoConfig::validate() const {
    if (!(dither_frequency_hz > servo_bandwidth_hz))
        throw std::invalid_argument("servo: dither frequency must exceed the loop bandwidth");
    if (dither_amplitude_m < 0.0) throw std::invalid_argument("servo: dither amplitude < 0");
    if (!(lockin_time_constant_s > 0.0))
        throw std::invalid_argument("servo: lockin time constant must be > 0");
    if (!(actuator_range_m > 0.0)) throw std::invalid_argument("servo: actuator range must be > 0");
    if (!std::isfinite(loop_prop_gain_m_per_hz) || !std::isfinite(loop_int_gain_m_per_hz_s))
        throw std::invalid_argument("servo: gains must be finite");
    if (!(error_signal_snr > 0.0)) throw std::invalid_argument("servo: error snr must be > 0");
}

SimStepper::SimStepper(const CrystalParams& crystal, const CavityGeometry& geometry,
                       const NoiseBudget& budget, const ServoConfig* servo,
                       const EfficiencyModel& efficiency, double pump_power_W,
                       double beat_target_hz, bool closed_loop)
    : crystal_(crystal),
      geometry_(geometry),
      budget_(budget),
      servo_(servo ? std::optional(*servo) : std::nullopt),
      closed_loop_(closed_loop && servo != nullptr),
      pump_power_(pump_power_W),
      beat_target_(beat_target_hz),
      dt_(pick_dt(servo)),
      noise_stride_(pick_stride(dt_)),
      noise_stepper_(budget, static_cast<double>(noise_stride_) * dt_) {
    if (servo_) servo_->validate();
    geometry.validate(crystal);

    p_max_ = conversion_efficiency(pump_power_W, efficiency) * pump_power_W;
    if (!(p_max_ > 0.0))
        throw std::invalid_argument("sim: pump power at or below threshold, no oscillation");

    nu_pump0_ = geometry.pump_frequency();
    const double T0 = crystal.reference_temperature;
    base_path_s_ = optical_path(crystal, Polarization::signal, T0, 0.0, 0.0);
    base_path_i_ = optical_path(crystal, Polarization::idler, T0, 0.0, 0.0);
    dxs_ = optical_path_dx(crystal, Polarization::signal);
    dxi_ = optical_path_dx(crystal, Polarization::idler);

    const double lambda_deg = geometry.degenerate_wavelength();
    p_s0_ = static_cast<int64_t>(std::llround(2.0 * (geometry.air_path_L + base_path_s_) /
                                              lambda_deg));
    p_i0_ = static_cast<int64_t>(std::llround(2.0 * (geometry.air_path_L + base_path_i_) /
                                              lambda_deg));

    half_hop_spacing_ = 0.5 * mode_hop_spacing(crystal, geometry);
    pulling_ = geometry.detuning_pulling;

    const auto m = tuning_matrix(crystal, geometry);
    g_length_hz_per_m_ = m.plus[TuningMatrix::col_L];

    if (servo_) {
        error_sigma_hz_ = geometry.cold_hwhm / servo_->error_signal_snr;
        dphase_ = two_pi * servo_->dither_frequency_hz * dt_;
        lockin_alpha_ = dt_ / servo_->lockin_time_constant_s;
        eo_alpha_ = dt_ / servo_->eo_time_constant_s;
        demod_period_steps_ = static_cast<size_t>(
            std::max<int64_t>(1, std::llround(1.0 / (servo_->dither_frequency_hz * dt_))));
        warmup_steps_ = 2 * static_cast<int64_t>(demod_period_steps_);
    } else {
        error_sigma_hz_ = 0.0;
        dphase_ = 0.0;
        lockin_alpha_ = 0.0;
        eo_alpha_ = 0.0;
    }
}

void SimStepper::evaluate_oscillator(SimState& st, double dither_m) const {
    const double L_tot = geometry_.air_path_L + st.actuator_m + dither_m + st.noise.length_m;
    const double dT = st.noise.temp_K;
    const double x = st.noise.transverse_m;

    const double path_s =
        base_path_s_ + crystal_.dpath_dT_signal * dT + crystal_.dpath_dV_signal * st.volts +
        dxs_ * x;
    const double path_i =
        base_path_i_ + crystal_.dpath_dT_idler * dT + crystal_.dpath_dV_idler * st.volts +
        dxi_ * x;

    const double res_s = static_cast<double>(st.p_signal) * (c_light / 2.0) / (L_tot + path_s);
    const double res_i = static_cast<double>(st.p_idler) * (c_light / 2.0) / (L_tot + path_i);
    const double nu_pump = nu_pump0_ + st.noise.pump_total_hz();

    st.nu_plus_detuning = nu_pump - res_s - res_i - st.sum_offset_hz;
    st.nu_minus = (res_s - res_i) + pulling_ * st.nu_plus_detuning + st.beat_offset_hz;

    const double u = st.nu_plus_detuning / geometry_.cold_hwhm;
    st.output_power = p_max_ / (1.0 + u * u);
}

void SimStepper::maybe_hop(SimState& st, double dither_m) const {
    const double L_tot = geometry_.air_path_L + st.actuator_m + dither_m + st.noise.length_m;
    if (std::abs(L_tot - st.hop_ref_m) <= half_hop_spacing_) return;

    const double dT = st.noise.temp_K;
    const double x = st.noise.transverse_m;
    const double path_s =
        base_path_s_ + crystal_.dpath_dT_signal * dT + crystal_.dpath_dV_signal * st.volts +
        dxs_ * x;
    const double path_i =
        base_path_i_ + crystal_.dpath_dT_idler * dT + crystal_.dpath_dV_idler * st.volts +
        dxi_ * x;
    const double nu_pump = nu_pump0_ + st.noise.pump_total_hz();

    // competition among neighboring integer pairs, equal-split detunings
    int64_t best_ps = st.p_signal, best_pi = st.p_idler;
    double best_cost = 0.0, best_beat = 0.0;
    bool first = true;
    for (int ds = -2; ds <= 2; ++ds) {
        for (int di = -2; di <= 2; ++di) {
            const int64_t ps = st.p_signal + ds;
            const int64_t pi_ = st.p_idler + di;
            const double rs = static_cast<double>(ps) * (c_light / 2.0) / (L_tot + path_s);
            const double ri = static_cast<double>(pi_) * (c_light / 2.0) / (L_tot + path_i);
            const double det = nu_pump - rs - ri - st.sum_offset_hz;
            const double half = 0.5 * det / geometry_.cold_hwhm;
            const double cost = (1.0 + half * half) * (1.0 + half * half);
            const double beat = (rs - ri) + pulling_ * det + st.beat_offset_hz;
            const bool better =
                first || cost < best_cost ||
                (cost == best_cost &&
                 (std::abs(beat) < std::abs(best_beat) ||
                  (std::abs(beat) == std::abs(best_beat) && ps < best_ps)));
            if (better) {
                best_ps = ps;
                best_pi = pi_;
                best_cost = cost;
                best_beat = beat;
                first = false;
            }
        }
    }
    if (best_ps != st.p_signal || best_pi != st.p_idler) {
        st.p_signal = best_ps;
        st.p_idler = best_pi;
        st.hop_flag = true;
    }
    st.hop_ref_m = L_tot;
}

SimState SimStepper::init(Rng& rng, double initial_sum_detuning_hz) const {
    SimState st;
    st.noise = noise_stepper_.init_state(rng);
    st.p_signal = p_s0_;
    st.p_idler = p_i0_;
    if (servo_) st.demod_ring.assign(demod_period_steps_, 0.0);

    // lock-point offsets: the run starts with the pair resonant (up to the
    // requested initial detuning) and the beat at its target, standing in for
    // the slow manual adjustments that precede a locked measurement
    st.sum_offset_hz = 0.0;
    st.beat_offset_hz = 0.0;
    evaluate_oscillator(st, 0.0);
    st.sum_offset_hz = st.nu_plus_detuning - initial_sum_detuning_hz;
    evaluate_oscillator(st, 0.0);
    st.beat_offset_hz = beat_target_ - st.nu_minus;
    evaluate_oscillator(st, 0.0);

    st.hop_ref_m = geometry_.air_path_L + st.actuator_m + st.noise.length_m;
    return st;
}

void SimStepper::step(SimState& st, Rng& rng) const {
    // noise advances on its own coarser tick
    if (st.step_count % noise_stride_ == 0) {
        noise_stepper_.step(st.noise, rng);
        if (servo_) st.error_noise_hz = error_sigma_hz_ * rng.gaussian();
    }

    double dither_m = 0.0;
    double dither_sin = 0.0;
    if (servo_) {
        st.dither_phase += dphase_;
        if (st.dither_phase > two_pi) st.dither_phase -= two_pi;
        dither_sin = std::sin(st.dither_phase);
        dither_m = servo_->dither_amplitude_m * dither_sin;
    }

    evaluate_oscillator(st, dither_m);

    if (servo_) {
        const ServoConfig& sc = *servo_;
        const double g_abs = std::abs(g_length_hz_per_m_);

        // lock-in: mix the normalized intensity with the dither reference,
        // comb-average over exactly one dither period (kills the reference
        // feedthrough and its harmonics), then smooth with a one-pole filter
        const double mix = (st.output_power / p_max_) * 2.0 * dither_sin;
        st.demod_sum += mix - st.demod_ring[st.demod_idx];
        st.demod_ring[st.demod_idx] = mix;
        st.demod_idx = (st.demod_idx + 1) % st.demod_ring.size();
        const double combed = st.demod_sum / static_cast<double>(st.demod_ring.size());
        // the comb is meaningful only once its ring holds a full period
        if (st.step_count >= static_cast<int64_t>(demod_period_steps_))
            st.lockin_filt += lockin_alpha_ * (combed - st.lockin_filt);

        const double kappa = geometry_.cold_hwhm;
        const double discriminant = 2.0 * g_abs * sc.dither_amplitude_m / (kappa * kappa);
        // demodulated slope is -2 dither_hz/kappa^2 per Hz of detuning
        st.error_hz = -st.lockin_filt / discriminant + st.error_noise_hz;

        if (closed_loop_ && st.step_count >= warmup_steps_) {
            // PI filter in frequency units, converted to PZT meters
            st.integrator_hz += sc.loop_int_gain_m_per_hz_s * g_abs * st.error_hz * dt_;
            const double span_hz = sc.actuator_range_m * g_abs;
            st.integrator_hz = std::clamp(st.integrator_hz, -span_hz, span_hz);
            const double u_hz =
                sc.loop_prop_gain_m_per_hz * g_abs * st.error_hz + st.integrator_hz;
            // detuning rises with cavity length, so the actuator pushes against u
            double act = -u_hz / g_abs;
            if (std::abs(act) > sc.actuator_range_m) {
                act = std::clamp(act, -sc.actuator_range_m, sc.actuator_range_m);
                st.saturated = true;  // lock ran out of range; keep going
            }
            st.actuator_m = act;
        }

        if (closed_loop_ && sc.eo_loop_enabled) {
            st.eo_filt_hz += eo_alpha_ * ((st.nu_minus - beat_target_) - st.eo_filt_hz);
            st.eo_integrator_hz += sc.eo_int_gain_v_per_hz_s * st.eo_filt_hz * dt_;
            const double u_v = sc.eo_prop_gain_v_per_hz * st.eo_filt_hz + st.eo_integrator_hz;
            st.volts = -u_v;  // d nu_minus/dV > 0: push against the error
        }
    }

    maybe_hop(st, dither_m);
    ++st.step_count;
    st.time += dt_;
}

RunRecord run_simulation(const CrystalParams& crystal, const CavityGeometry& geometry,
                         const NoiseBudget& budget, const ServoConfig& servo,
                         const EfficiencyModel& efficiency, const SimConfig& config) {
    const SimStepper stepper(crystal, geometry, budget, config.locked ? &servo : nullptr,
                             efficiency, config.pump_power_W, config.beat_target_hz);
    Rng rng(config.seed);
    SimState st = stepper.init(rng);

    const double dt = stepper.dt();
    const auto steps_per_sample =
        std::max<int64_t>(1, std::llround(1.0 / (config.sample_rate_hz * dt)));
    const auto n_samples = static_cast<int64_t>(
        std::llround(config.duration_s * config.sample_rate_hz));

    RunRecord rec;
    rec.dt = static_cast<double>(steps_per_sample) * dt;
    rec.nu_minus.reserve(static_cast<size_t>(n_samples));
    rec.nu_plus_detuning.reserve(static_cast<size_t>(n_samples));
    rec.power.reserve(static_cast<size_t>(n_samples));
    rec.hop.reserve(static_cast<size_t>(n_samples));

    for (int64_t s = 0; s < n_samples; ++s) {
        double acc_minus = 0.0, acc_plus = 0.0, acc_pow = 0.0;
        st.hop_flag = false;
        for (int64_t k = 0; k < steps_per_sample; ++k) {
            stepper.step(st, rng);
            acc_minus += st.nu_minus;
            acc_plus += st.nu_plus_detuning;
            acc_pow += st.output_power;
        }
        const double inv = 1.0 / static_cast<double>(steps_per_sample);
        rec.nu_minus.push_back(acc_minus * inv);
        rec.nu_plus_detuning.push_back(acc_plus * inv);
        rec.power.push_back(acc_pow * inv);
        rec.hop.push_back(st.hop_flag ? 1 : 0);
        if (st.hop_flag) ++rec.hop_count;
    }
    rec.saturated = st.saturated;
    return rec;
}

double beat_range(const RunRecord& record) {
    if (record.nu_minus.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(record.nu_minus.begin(), record.nu_minus.end());
    return *hi - *lo;
}

namespace {

constexpr int vibration_probe_seeds = 5;   // locked probes are expensive
constexpr int pulling_probe_seeds = 10;    // free-running probes are cheap

}  // namespace

VibrationCalibration calibrate_vibration_coupling(double target_range_hz,
                                                  const CrystalParams& crystal,
                                                  const CavityGeometry& geometry,
                                                  const NoiseBudget& budget,
                                                  const ServoConfig& servo,
                                                  const EfficiencyModel& efficiency,
                                                  const SimConfig& config, double tolerance) {
    if (!(target_range_hz >= 0.0))
        throw std::invalid_argument("calibrate_vibration_coupling: target must be >= 0");

    const auto scaled_budget = [&](double scale) {
        NoiseBudget b = budget;
        for (auto& line : b.vibration_lines) line.displacement_rms_m *= scale;
        return b;
    };
    const auto probe = [&](double scale) {
        const NoiseBudget b = scaled_budget(scale);
        double sum = 0.0;
        for (uint64_t k = 0; k < vibration_probe_seeds; ++k) {
            SimConfig c = config;
            c.locked = true;
            c.seed = config.seed * 1000003 + k;
            sum += beat_range(run_simulation(crystal, geometry, b, servo, efficiency, c));
        }
        return sum / vibration_probe_seeds;
    };

    VibrationCalibration out;
    bool have_lines = false;
    for (const auto& line : budget.vibration_lines)
        if (line.displacement_rms_m > 0.0) have_lines = true;

    const double base = probe(have_lines ? 1.0 : 0.0);
    if (target_range_hz == 0.0 || !have_lines) {
        out.budget = scaled_budget(have_lines ? 1.0 : 0.0);
        out.scale = 1.0;
        out.achieved_hz = base;
        out.bracketed = base <= target_range_hz || target_range_hz == 0.0;
        if (target_range_hz == 0.0 && base <= 0.0) out.bracketed = true;
        return out;
    }
    if (std::abs(base / target_range_hz - 1.0) <= tolerance) {
        out.budget = scaled_budget(1.0);
        out.scale = 1.0;
        out.achieved_hz = base;
        out.bracketed = true;
        return out;
    }

    // secant-style first guess, then expand into a bracket on a log scale
    double lo = 1.0, hi = 1.0, f_lo = base, f_hi = base;
    if (base < target_range_hz) {
        hi = std::min(4096.0, 1.5 * target_range_hz / base);
        f_hi = probe(hi);
        for (int i = 0; i < 12 && f_hi < target_range_hz && hi < 4096.0; ++i) {
            lo = hi;
            f_lo = f_hi;
            hi = std::min(4096.0, hi * 2.0);
            f_hi = probe(hi);
        }
    } else {
        lo = std::max(1.0 / 4096.0, 0.3 * target_range_hz / base);
        f_lo = probe(lo);
        for (int i = 0; i < 12 && f_lo > target_range_hz && lo > 1.0 / 4096.0; ++i) {
            hi = lo;
            f_hi = f_lo;
            lo = std::max(1.0 / 4096.0, lo * 0.5);
            f_lo = probe(lo);
        }
    }
    if (f_hi < target_range_hz || f_lo > target_range_hz) {
        // unreachable: report the closest achieved range
        out.scale = f_hi < target_range_hz ? hi : lo;
        out.budget = scaled_budget(out.scale);
        out.achieved_hz = f_hi < target_range_hz ? f_hi : f_lo;
        out.bracketed = false;
        return out;
    }

    double best_x = f_lo < f_hi ? hi : lo;
    double best_f = f_lo < f_hi ? f_hi : f_lo;
    for (int i = 0; i < 16; ++i) {
        const double mid = std::sqrt(lo * hi);  // log-scale midpoint
        const double f_mid = probe(mid);
        if (std::abs(f_mid - target_range_hz) < std::abs(best_f - target_range_hz)) {
            best_x = mid;
            best_f = f_mid;
        }
        if (std::abs(f_mid / target_range_hz - 1.0) <= tolerance) break;
        if (f_mid < target_range_hz)
            lo = mid;
        else
            hi = mid;
    }
    out.scale = best_x;
    out.budget = scaled_budget(best_x);
    out.achieved_hz = best_f;
    out.bracketed = true;
    return out;
}

PullingCalibration calibrate_detuning_pulling(double target_range_hz,
                                              const CrystalParams& crystal,
                                              const CavityGeometry& geometry,
                                              const NoiseBudget& budget,
                                              const EfficiencyModel& efficiency,
                                              const SimConfig& config, double tolerance) {
    if (!(target_range_hz > 0.0))
        throw std::invalid_argument("calibrate_detuning_pulling: target must be > 0");

    ServoConfig unused;
    const auto probe = [&](double pulling) {
        CavityGeometry g = geometry;
        g.detuning_pulling = pulling;
        double sum = 0.0;
        for (uint64_t k = 0; k < pulling_probe_seeds; ++k) {
            SimConfig c = config;
            c.locked = false;
            c.seed = config.seed * 2000003 + k;
            sum += beat_range(run_simulation(crystal, g, budget, unused, efficiency, c));
        }
        return sum / pulling_probe_seeds;
    };

    PullingCalibration out;
    out.geometry = geometry;

    const double base = probe(geometry.detuning_pulling);
    if (std::abs(base / target_range_hz - 1.0) <= tolerance) {
        out.achieved_hz = base;
        out.bracketed = true;
        return out;
    }

    double lo = 0.0, hi = 0.95;
    double f_lo = probe(lo), f_hi = probe(hi);
    if (f_lo >= target_range_hz || f_hi <= target_range_hz) {
        const bool low_side = f_lo >= target_range_hz;
        out.geometry.detuning_pulling = low_side ? lo : hi;
        out.achieved_hz = low_side ? f_lo : f_hi;
        out.bracketed = false;
        return out;
    }
    // plain bisection (linear in the pulling coefficient)
    double best_x = hi, best_f = f_hi;
    for (int i = 0; i < 24; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = probe(mid);
        if (std::abs(f_mid - target_range_hz) < std::abs(best_f - target_range_hz)) {
            best_x = mid;
            best_f = f_mid;
        }
        if (std::abs(f_mid / target_range_hz - 1.0) <= tolerance) break;
        if (f_mid < target_range_hz)
            lo = mid;
        else
            hi = mid;
    }
    out.geometry.detuning_pulling = best_x;
    out.achieved_hz = best_f;
    out.bracketed = true;
    return out;
}

}  // namespace opo
