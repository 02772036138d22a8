#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "opo/cavity.hpp"
#include "opo/crystal.hpp"
#include "opo/efficiency.hpp"
#include "opo/noise.hpp"
#include "opo/rng.hpp"

namespace opo {

// Dither lock: the cavity length is modulated at the dither frequency, the
// output intensity is demodulated by a lock-in into an error signal that is
// odd in the sum detuning, and a PI filter drives the PZT. An optional second
// loop actuates the crystal voltage on the beat note (the proposed
// electro-optic servo).
struct ServoConfig {
    double dither_frequency_hz = 25e3;
    double dither_amplitude_m = 5e-11;
    double lockin_time_constant_s = 3e-5;
    double loop_prop_gain_m_per_hz = 1.37e-16;   // PZT meters per Hz of error
    double loop_int_gain_m_per_hz_s = 3.71e-12;  // integrator, ~3 kHz unity gain
    double servo_bandwidth_hz = 3e3;
    double actuator_range_m = 1e-6;
    double error_signal_snr = 100.0;  // error noise: cold_hwhm / snr per tick

    bool eo_loop_enabled = false;
    double eo_prop_gain_v_per_hz = 5.1e-7;
    double eo_int_gain_v_per_hz_s = 6.4e-3;  // ~600 Hz unity gain on nu_minus
    double eo_time_constant_s = 2e-4;

    void validate() const;
};

struct SimConfig {
    double duration_s = 60.0;
    double sample_rate_hz = 1000.0;  // recorded (decimated) rate
    bool locked = true;
    uint64_t seed = 1;
    double pump_power_W = 0.1024;    // 4x the fitted 25.6 mW threshold
    double beat_target_hz = 4e6;     // beat at the start of the run
};

struct SimState {
    double time = 0.0;
    int64_t step_count = 0;

    // tunable degrees of freedom (deviations where linear)
    double actuator_m = 0.0;      // servo PZT output
    double dither_phase = 0.0;
    double volts = 0.0;           // electro-optic actuator
    NoiseState noise;

    // oscillator
    int64_t p_signal = 0;
    int64_t p_idler = 0;
    double nu_plus_detuning = 0.0;  // Hz
    double nu_minus = 0.0;          // Hz
    double output_power = 0.0;      // W

    // servo internals
    std::vector<double> demod_ring;  // one dither period of mixer output
    size_t demod_idx = 0;
    double demod_sum = 0.0;
    double lockin_filt = 0.0;
    double error_hz = 0.0;
    double integrator_hz = 0.0;
    double error_noise_hz = 0.0;
    double eo_filt_hz = 0.0;
    double eo_integrator_hz = 0.0;
    bool saturated = false;
    bool hop_flag = false;          // sticky until harvested by the recorder
    double hop_ref_m = 0.0;         // total length at the last hop check

    // lock-point offsets established at t = 0
    double sum_offset_hz = 0.0;
    double beat_offset_hz = 0.0;
};

// Precomputes everything a single time step needs. One stepper instance
// drives one run; independent runs (seed sweeps, calibration probes) share
// nothing mutable.
class SimStepper {
public:
    // servo == nullptr: free-running (no dither, no feedback).
    // closed_loop == false with a servo: dither applied, loop open.
    SimStepper(const CrystalParams& crystal, const CavityGeometry& geometry,
               const NoiseBudget& budget, const ServoConfig* servo,
               const EfficiencyModel& efficiency, double pump_power_W,
               double beat_target_hz, bool closed_loop = true);

    double dt() const { return dt_; }

    SimState init(Rng& rng, double initial_sum_detuning_hz = 0.0) const;
    void step(SimState& state, Rng& rng) const;

private:
    void evaluate_oscillator(SimState& st, double dither_m) const;
    void maybe_hop(SimState& st, double dither_m) const;

    CrystalParams crystal_;
    CavityGeometry geometry_;
    NoiseBudget budget_;
    std::optional<ServoConfig> servo_;
    bool closed_loop_;
    double pump_power_;
    double p_max_;
    double beat_target_;

    double dt_;
    int noise_stride_;
    NoiseStepper noise_stepper_;

    double nu_pump0_;
    double base_path_s_, base_path_i_;
    double dxs_, dxi_;
    int64_t p_s0_, p_i0_;
    double half_hop_spacing_;
    double pulling_;
    double g_length_hz_per_m_;  // d nu_plus / dL, for gain normalization
    double error_sigma_hz_;
    double dphase_;
    double lockin_alpha_, eo_alpha_;
    size_t demod_period_steps_ = 0;
    int64_t warmup_steps_ = 0;  // comb must fill before the loop closes
};

struct RunRecord {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> nu_minus;            // Hz
    std::vector<double> nu_plus_detuning;    // Hz
    std::vector<double> power;               // W
    std::vector<uint8_t> hop;
    int hop_count = 0;
    bool saturated = false;
};

// Deterministic given (configs, seed); bit-identical on reruns. Records are
// boxcar-decimated to the requested sample rate, which nulls the dither line
// when the dither frequency is a multiple of the sample rate.
RunRecord run_simulation(const CrystalParams& crystal, const CavityGeometry& geometry,
                         const NoiseBudget& budget, const ServoConfig& servo,
                         const EfficiencyModel& efficiency, const SimConfig& config);

// max - min of the recorded beat note: the max-hold drift range.
double beat_range(const RunRecord& record);

struct VibrationCalibration {
    NoiseBudget budget;      // with rescaled vibration amplitudes
    double scale = 1.0;
    double achieved_hz = 0.0;
    bool bracketed = false;  // false: target unreachable, achieved reported
};

// Scales the vibration-line displacement amplitudes by bisection until the
// locked 60 s beat drift range matches the target within tolerance. Probes
// use the median over three seeds derived from config.seed.
VibrationCalibration calibrate_vibration_coupling(double target_range_hz,
                                                  const CrystalParams& crystal,
                                                  const CavityGeometry& geometry,
                                                  const NoiseBudget& budget,
                                                  const ServoConfig& servo,
                                                  const EfficiencyModel& efficiency,
                                                  const SimConfig& config,
                                                  double tolerance = 0.03);

struct PullingCalibration {
    CavityGeometry geometry;  // with calibrated detuning_pulling
    double achieved_hz = 0.0;
    bool bracketed = false;
};

// Calibrates the beat pulling coefficient against the free-running drift
// range (same probing scheme).
PullingCalibration calibrate_detuning_pulling(double target_range_hz,
                                              const CrystalParams& crystal,
                                              const CavityGeometry& geometry,
                                              const NoiseBudget& budget,
                                              const EfficiencyModel& efficiency,
                                              const SimConfig& config,
                                              double tolerance = 0.03);

}  // namespace opo
