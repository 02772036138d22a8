#include "opo/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "opo/constants.hpp"
#include "opo/fft.hpp"

namespace opo {

WelchAccumulator::WelchAccumulator(double sample_rate, size_t nfft)
    : fs_(sample_rate), nfft_(nfft), hop_(nfft / 2) {
    if (!(sample_rate > 0.0)) throw std::invalid_argument("welch: sample rate must be > 0");
    if (nfft < 8 || (nfft & (nfft - 1)) != 0)
        throw std::invalid_argument("welch: nfft must be a power of two >= 8");
    window_.resize(nfft_);
    window_power_ = 0.0;
    for (size_t n = 0; n < nfft_; ++n) {
        window_[n] = 0.5 * (1.0 - std::cos(2.0 * constants::pi * static_cast<double>(n) /
                                           static_cast<double>(nfft_)));
        window_power_ += window_[n] * window_[n];
    }
    buffer_.resize(nfft_);
    accum_.assign(nfft_ / 2 + 1, 0.0);
    work_.resize(nfft_);
}

void WelchAccumulator::push(double x) {
    buffer_[filled_++] = x;
    if (filled_ == nfft_) {
        consume_segment();
        std::copy(buffer_.begin() + static_cast<long>(hop_), buffer_.end(), buffer_.begin());
        filled_ = nfft_ - hop_;
    }
}

void WelchAccumulator::consume_segment() {
    for (size_t n = 0; n < nfft_; ++n) work_[n] = buffer_[n] * window_[n];
    fft_inplace(work_);
    // one-sided PSD, normalized so sum(psd)*df == variance
    const double scale = 1.0 / (fs_ * window_power_);
    for (size_t k = 0; k <= nfft_ / 2; ++k) {
        const double mag2 = std::norm(work_[k]);
        const double onesided = (k == 0 || k == nfft_ / 2) ? 1.0 : 2.0;
        accum_[k] += onesided * mag2 * scale;
    }
    ++segments_;
}

Spectrum WelchAccumulator::finalize() const {
    if (segments_ == 0) throw std::invalid_argument("welch: no complete segment accumulated");
    Spectrum s;
    const double df = fs_ / static_cast<double>(nfft_);
    s.frequency.resize(accum_.size());
    s.psd.resize(accum_.size());
    for (size_t k = 0; k < accum_.size(); ++k) {
        s.frequency[k] = df * static_cast<double>(k);
        s.psd[k] = accum_[k] / static_cast<double>(segments_);
    }
    s.rbw = df;
    return s;
}

ToneProbe::ToneProbe(double frequency_hz, double sample_rate)
    : dphase_(2.0 * constants::pi * frequency_hz / sample_rate) {}

void ToneProbe::push(double x) {
    cos_sum_ += x * std::cos(phase_);
    sin_sum_ += x * std::sin(phase_);
    phase_ += dphase_;
    if (phase_ > 2.0 * constants::pi) phase_ -= 2.0 * constants::pi;
    ++n_;
}

double ToneProbe::amplitude() const {
    if (n_ == 0) return 0.0;
    const double scale = 2.0 / static_cast<double>(n_);
    return std::hypot(cos_sum_ * scale, sin_sum_ * scale);
}

Spectrum psd_estimate(const TimeSeries& series, size_t segment_length) {
    if (series.values.empty()) throw std::invalid_argument("psd_estimate: empty series");
    if (segment_length > series.values.size())
        throw std::invalid_argument("psd_estimate: segment longer than series");
    WelchAccumulator acc(series.sample_rate(), segment_length);
    acc.push(series.values);
    return acc.finalize();
}

double spectrum_hwhm(const std::vector<double>& frequency, const std::vector<double>& psd) {
    if (frequency.size() != psd.size() || psd.size() < 3)
        throw std::invalid_argument("spectrum_hwhm: malformed spectrum");
    const size_t peak =
        static_cast<size_t>(std::max_element(psd.begin(), psd.end()) - psd.begin());
    const double half = 0.5 * psd[peak];

    const auto cross = [&](bool upward) -> double {
        if (upward) {  // walk toward higher frequency
            for (size_t k = peak; k + 1 < psd.size(); ++k) {
                if (psd[k + 1] <= half) {
                    const double t = (psd[k] - half) / (psd[k] - psd[k + 1]);
                    return frequency[k] + t * (frequency[k + 1] - frequency[k]);
                }
            }
        } else {
            for (size_t k = peak; k > 0; --k) {
                if (psd[k - 1] <= half) {
                    const double t = (psd[k] - half) / (psd[k] - psd[k - 1]);
                    return frequency[k] - t * (frequency[k] - frequency[k - 1]);
                }
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    };

    const double hi = cross(true);
    const double lo = cross(false);
    if (std::isnan(hi) && std::isnan(lo))
        throw std::runtime_error("spectrum_hwhm: peak does not fall to half maximum");
    if (std::isnan(hi)) return frequency[peak] - lo;
    if (std::isnan(lo)) return hi - frequency[peak];
    return 0.5 * (hi - lo);
}

void max_hold_update(std::vector<double>& hold, const std::vector<double>& sweep) {
    if (hold.empty()) {
        hold = sweep;
        return;
    }
    if (hold.size() != sweep.size())
        throw std::invalid_argument("max_hold_update: grid mismatch");
    for (size_t i = 0; i < hold.size(); ++i) hold[i] = std::max(hold[i], sweep[i]);
}

}  // namespace opo
