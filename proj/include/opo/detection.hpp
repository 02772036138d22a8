#pragma once

#include <cstdint>

#include "opo/spectrum.hpp"
#include "opo/timeseries.hpp"

namespace opo {

// Half-wave plate + polarizing splitter: effective beam-splitter reflectivity
// R = cos^2(2 alpha). alpha = 0 separates the twin beams; alpha = pi/8 mixes
// them like a balanced splitter (shot-noise reference).
struct SplitterConfig {
    double alpha = 0.0;                 // rad
    double crosstalk_power = 6.30957344480193e-6;  // 10^-5.2, residual mixing at alpha = 0

    double reflectivity() const;
};

struct DetectorPair {
    double quantum_efficiency = 0.95;   // each photodiode, > 0.95 in hardware
    double cmrr_db = 42.0;              // common-mode rejection at the reference frequency
    double cmrr_ref_hz = 100e3;
    double electronic_noise_floor = 0.1;  // PSD relative to shot (dark electronics)

    void validate() const;
};

// Semiclassical spectral model of the twin beams at the detectors.
struct TwinBeamModel {
    double eta = 0.665024;     // lumped correlation/escape efficiency (calibrated)
    double corner_hz = 3e6;    // cold-cavity HWHM, width of the inverted Lorentzian
    double beat_hz = 4e6;      // signal-idler beat tone
    double beat_power = 1e8;   // beat tone power in shot units * Hz (balanced splitter)
    double cm_tone_hz = 0.0;   // injected common-mode intensity modulation
    double cm_tone_power = 0.0;
    bool dark = false;         // no light: electronic floor only
};

struct DetectionRequest {
    double sample_rate = 81.92e6;  // Hz
    size_t nfft = 8192;
    size_t n_segments = 2000;      // Welch averages (50% overlap)
};

// Intensity-difference PSD of the twin beams in shot-noise units:
// 1 - eta / (1 + (f/f_c)^2). Rejects eta outside [0,1].
double squeezing_psd(double f_hz, double eta, double corner_hz);

// Lumped eta such that the full detection chain (electronic floor included,
// spectrum referred to the measured shot reference) reads `target_db` at f0.
double calibrate_eta(double target_db, double f0_hz, double corner_hz,
                     double electronic_noise_floor);

// Mean output powers of the splitter for unit twin-beam inputs; conserves
// total power for every alpha.
std::pair<double, double> splitter_output_powers(const SplitterConfig& splitter,
                                                 double p_signal, double p_idler);

struct DifferenceSpectrumResult {
    Spectrum spectrum;          // PSD relative to the shot reference level
    double reference_level;     // raw PSD of the alpha = pi/8 chain (1 + floor)
    double beat_amplitude;      // coherent beat amplitude seen in the difference
    double cm_amplitude;        // coherent leak of the injected common-mode tone
};

// Synthesizes the subtracted photocurrent for the given wave-plate angle and
// estimates its PSD. Deterministic for a given seed.
DifferenceSpectrumResult difference_spectrum(const SplitterConfig& splitter,
                                             const DetectorPair& detectors,
                                             const TwinBeamModel& model,
                                             const DetectionRequest& request, uint64_t seed);

// Swept spectrum-analyzer emulation of the beat note: synthesizes a unit
// tone with instantaneous frequency nu_minus(t), one Gaussian-windowed sweep
// per `sweep_time`, max hold over `n_sweeps`. `rbw` is the half width at
// half maximum of the displayed response to a constant tone.
Spectrum beat_spectrum(const TimeSeries& nu_minus, double rbw_hz, double sweep_time_s,
                       int n_sweeps, double center_hz, double span_hz, size_t n_bins = 512);

}  // namespace opo
