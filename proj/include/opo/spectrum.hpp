#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "opo/timeseries.hpp"

namespace opo {

// One-sided spectral record. `psd` is in units^2/Hz (or relative to a stated
// reference); `max_hold` when present is the pointwise maximum over repeated
// sweeps and dominates every contributing trace.
struct Spectrum {
    std::vector<double> frequency;  // Hz, strictly increasing
    std::vector<double> psd;
    std::vector<double> max_hold;   // empty unless the producer tracks max hold
    double rbw = 0.0;               // Hz
    double sweep_time = 0.0;        // s
};

// Streaming Welch estimator: Hann window, 50% overlap, one-sided PSD
// normalized so that sum(psd) * df equals the time-domain variance.
class WelchAccumulator {
public:
    WelchAccumulator(double sample_rate, size_t nfft);

    void push(double x);
    void push(const std::vector<double>& xs) {
        for (double x : xs) push(x);
    }

    size_t segments() const { return segments_; }
    Spectrum finalize() const;  // throws if no complete segment was seen

private:
    void consume_segment();

    double fs_;
    size_t nfft_;
    size_t hop_;
    std::vector<double> window_;
    double window_power_;  // sum of w^2
    std::vector<double> buffer_;
    size_t filled_ = 0;
    std::vector<double> accum_;
    std::vector<std::complex<double>> work_;
    size_t segments_ = 0;
};

// Coherent single-frequency probe: least-squares amplitude of
// a cos(2 pi f t) + b sin(2 pi f t) over the pushed stream.
class ToneProbe {
public:
    ToneProbe(double frequency_hz, double sample_rate);
    void push(double x);
    double amplitude() const;  // sqrt(a^2 + b^2)
    double power() const {
        const double a = amplitude();
        return 0.5 * a * a;
    }

private:
    double cos_sum_ = 0.0, sin_sum_ = 0.0;
    size_t n_ = 0;
    double phase_ = 0.0, dphase_;
};

// Averaged-periodogram estimate of a whole record.
// segment_length must be a power of two and <= series length.
Spectrum psd_estimate(const TimeSeries& series, size_t segment_length);

// Linear-interpolated half width at half maximum of the tallest peak.
double spectrum_hwhm(const std::vector<double>& frequency, const std::vector<double>& psd);

// Pointwise max-hold accumulation (the traces must share the grid).
void max_hold_update(std::vector<double>& hold, const std::vector<double>& sweep);

}  // namespace opo
