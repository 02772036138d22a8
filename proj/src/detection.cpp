#include "opo/detection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "opo/constants.hpp"
#include "opo/fft.hpp"
#include "opo/rng.hpp"

namespace opo {

namespace {
constexpr double two_pi = 2.0 * constants::pi;
}

double SplitterConfig::reflectivity() const {
    const double c = std::cos(2.0 * alpha);
    return c * c;
}

void DetectorPair::validate() const {
    if (quantum_efficiency < 0.0 || quantum_efficiency > 1.0)
        throw std::invalid_argument("detector: quantum_efficiency outside [0,1]");
    if (electronic_noise_floor < 0.0)
        throw std::invalid_argument("detector: electronic_noise_floor must be >= 0");
    if (cmrr_db < 0.0) throw std::invalid_argument("detector: cmrr_db must be >= 0");
}

double squeezing_psd(double f_hz, double eta, double corner_hz) {
    if (eta < 0.0 || eta > 1.0)
        throw std::invalid_argument("squeezing_psd: eta outside [0,1] breaks the sub-shot bound");
    if (f_hz < 0.0) throw std::invalid_argument("squeezing_psd: negative frequency");
    if (!(corner_hz > 0.0)) throw std::invalid_argument("squeezing_psd: corner must be > 0");
    const double u = f_hz / corner_hz;
    return 1.0 - eta / (1.0 + u * u);
}

double calibrate_eta(double target_db, double f0_hz, double corner_hz,
                     double electronic_noise_floor) {
    const double r = std::pow(10.0, target_db / 10.0);
    const double u = f0_hz / corner_hz;
    const double eta = (1.0 + u * u) * (1.0 + electronic_noise_floor) * (1.0 - r);
    if (eta < 0.0 || eta > 1.0)
        throw std::invalid_argument("calibrate_eta: target unreachable with eta in [0,1]");
    return eta;
}

std::pair<double, double> splitter_output_powers(const SplitterConfig& splitter, double p_signal,
                                                 double p_idler) {
    const double r = splitter.reflectivity();
    return {r * p_signal + (1.0 - r) * p_idler, (1.0 - r) * p_signal + r * p_idler};
}

DifferenceSpectrumResult difference_spectrum(const SplitterConfig& splitter,
                                             const DetectorPair& detectors,
                                             const TwinBeamModel& model,
                                             const DetectionRequest& request, uint64_t seed) {
    detectors.validate();
    const size_t nfft = request.nfft;
    if (nfft < 16 || (nfft & (nfft - 1)) != 0)
        throw std::invalid_argument("difference_spectrum: nfft must be a power of two");
    const double fs = request.sample_rate;
    const double floor_psd = detectors.electronic_noise_floor;

    // Target one-sided PSD of the subtracted photocurrent, relative to shot.
    // The twin-difference (squeezed) quadrature enters with weight (2R-1)^2,
    // the orthogonal mixture is plain shot noise; dark runs see only the
    // electronics.
    const double r = splitter.reflectivity();
    const double w = 2.0 * r - 1.0;
    std::vector<double> target(nfft / 2 + 1, 0.0);
    const double df = fs / static_cast<double>(nfft);
    for (size_t k = 0; k < target.size(); ++k) {
        const double f = df * static_cast<double>(k);
        double s = floor_psd;
        if (!model.dark)
            s += w * w * squeezing_psd(f, model.eta, model.corner_hz) + (1.0 - w * w);
        target[k] = s;
    }

    // Coherent tones. The beat rides on the mixing term 2 sqrt(R(1-R)) of the
    // splitter, plus the residual polarization crosstalk at alpha = 0; the
    // common-mode tone leaks through the finite CMRR of the subtraction.
    const double beat_weight2 = 4.0 * r * (1.0 - r) + splitter.crosstalk_power;
    const double beat_amp = model.dark ? 0.0 : std::sqrt(2.0 * model.beat_power * beat_weight2);
    const double cm_leak = std::pow(10.0, -detectors.cmrr_db / 20.0);
    const double cm_amp =
        (model.dark || model.cm_tone_power <= 0.0)
            ? 0.0
            : cm_leak * std::sqrt(2.0 * model.cm_tone_power);

    // WOLA synthesis: per-block frequency-domain Gaussians shaped to the
    // target PSD, sqrt-Hann windows overlap-added at half-block hop.
    const size_t hop = nfft / 2;
    const size_t needed = (request.n_segments + 1) * hop;
    std::vector<double> win(nfft);
    for (size_t n = 0; n < nfft; ++n)
        win[n] = std::sqrt(0.5 * (1.0 - std::cos(two_pi * static_cast<double>(n) /
                                                 static_cast<double>(nfft))));

    Rng rng(seed);
    WelchAccumulator welch(fs, nfft);
    ToneProbe beat_probe(model.beat_hz, fs);
    ToneProbe cm_probe(model.cm_tone_hz > 0.0 ? model.cm_tone_hz : 1.0, fs);

    std::vector<std::complex<double>> block(nfft);
    std::vector<double> overlap(hop, 0.0);
    const double beat_dphi = two_pi * model.beat_hz / fs;
    const double cm_dphi = two_pi * model.cm_tone_hz / fs;
    double beat_phi = 0.0, cm_phi = 0.0;

    size_t produced = 0;
    while (produced < needed) {
        for (size_t k = 1; k < nfft / 2; ++k) {
            const double sigma = std::sqrt(target[k] * fs * static_cast<double>(nfft) / 4.0);
            const std::complex<double> g(rng.gaussian() * sigma, rng.gaussian() * sigma);
            block[k] = g;
            block[nfft - k] = std::conj(g);
        }
        block[0] = 0.0;
        block[nfft / 2] = 0.0;
        fft_inplace(block, true);

        for (size_t n = 0; n < hop && produced < needed; ++n, ++produced) {
            double x = overlap[n] + block[n].real() * win[n];
            if (beat_amp != 0.0) {
                x += beat_amp * std::cos(beat_phi);
                beat_phi += beat_dphi;
                if (beat_phi > two_pi) beat_phi -= two_pi;
            }
            if (cm_amp != 0.0) {
                x += cm_amp * std::cos(cm_phi);
                cm_phi += cm_dphi;
                if (cm_phi > two_pi) cm_phi -= two_pi;
            }
            welch.push(x);
            beat_probe.push(x);
            if (cm_amp != 0.0) cm_probe.push(x);
        }
        for (size_t n = 0; n < hop; ++n)
            overlap[n] = block[hop + n].real() * win[hop + n];
    }

    DifferenceSpectrumResult out;
    out.reference_level = 1.0 + floor_psd;  // alpha = pi/8 chain, shot + electronics
    out.spectrum = welch.finalize();
    for (double& v : out.spectrum.psd) v /= out.reference_level;
    out.beat_amplitude = beat_probe.amplitude();
    out.cm_amplitude = cm_amp != 0.0 ? cm_probe.amplitude() : 0.0;
    return out;
}

Spectrum beat_spectrum(const TimeSeries& nu_minus, double rbw_hz, double sweep_time_s,
                       int n_sweeps, double center_hz, double span_hz, size_t n_bins) {
    if (nu_minus.values.empty()) throw std::invalid_argument("beat_spectrum: empty series");
    if (!(sweep_time_s > 0.0)) throw std::invalid_argument("beat_spectrum: sweep_time must be > 0");
    if (rbw_hz < 1.0 / sweep_time_s)
        throw std::invalid_argument("beat_spectrum: rbw finer than 1/sweep_time is unresolvable");
    if (!(span_hz > 0.0)) throw std::invalid_argument("beat_spectrum: span must be > 0");
    if (n_bins < 8 || (n_bins & (n_bins - 1)) != 0)
        throw std::invalid_argument("beat_spectrum: n_bins must be a power of two");
    if (n_sweeps < 1) throw std::invalid_argument("beat_spectrum: need at least one sweep");

    const auto available = static_cast<int>(nu_minus.duration() / sweep_time_s);
    if (available < 1)
        throw std::invalid_argument("beat_spectrum: series shorter than one sweep");
    n_sweeps = std::min(n_sweeps, available);

    const double fs = 4.0 * span_hz;
    const size_t nfft = 4 * n_bins;  // FFT grid aligned with the output grid
    const double df = span_hz / static_cast<double>(n_bins);

    // Gaussian window whose displayed power response to a constant tone has
    // half width rbw at half maximum.
    const double sigma_t = std::sqrt(std::log(2.0)) / (two_pi * rbw_hz);
    const double half_support = std::min(4.0 * sigma_t, 0.5 * sweep_time_s);
    const auto half_n = static_cast<long>(std::floor(half_support * fs));
    if (2 * half_n + 1 > static_cast<long>(nfft))
        throw std::invalid_argument("beat_spectrum: rbw too fine for the bin grid; raise n_bins");

    // prefix integral of (nu - center) over the recorded grid, for the phase
    const std::vector<double>& nu = nu_minus.values;
    std::vector<double> integral(nu.size() + 1, 0.0);
    for (size_t j = 0; j < nu.size(); ++j)
        integral[j + 1] = integral[j] + (nu[j] - center_hz) * nu_minus.dt;
    const auto phase_at = [&](double t) -> double {
        double tau = t - nu_minus.t0;
        tau = std::clamp(tau, 0.0, nu_minus.duration() - 1e-12);
        const auto j = static_cast<size_t>(tau / nu_minus.dt);
        const size_t jj = std::min(j, nu.size() - 1);
        const double frac_t = tau - static_cast<double>(jj) * nu_minus.dt;
        return two_pi * (integral[jj] + (nu[jj] - center_hz) * frac_t);
    };

    std::vector<std::complex<double>> work(nfft);
    std::vector<double> sweep_trace(n_bins, 0.0);
    Spectrum out;
    out.rbw = rbw_hz;
    out.sweep_time = sweep_time_s;
    out.frequency.resize(n_bins);
    for (size_t j = 0; j < n_bins; ++j)
        out.frequency[j] =
            center_hz + (static_cast<double>(j) - static_cast<double>(n_bins) / 2.0) * df;

    double window_sum = 0.0;
    for (long n = -half_n; n <= half_n; ++n) {
        const double t = static_cast<double>(n) / fs;
        window_sum += std::exp(-t * t / (2.0 * sigma_t * sigma_t));
    }

    for (int sweep = 0; sweep < n_sweeps; ++sweep) {
        const double t_center = nu_minus.t0 + (static_cast<double>(sweep) + 0.5) * sweep_time_s;
        std::fill(work.begin(), work.end(), std::complex<double>(0.0, 0.0));
        for (long n = -half_n; n <= half_n; ++n) {
            const double dt_off = static_cast<double>(n) / fs;
            const double t = t_center + dt_off;
            const double w = std::exp(-dt_off * dt_off / (2.0 * sigma_t * sigma_t));
            const double phi = phase_at(t);
            // demodulate so that FFT bin q corresponds to offset q*df from center
            const std::complex<double> z(std::cos(phi), std::sin(phi));
            const size_t slot = static_cast<size_t>((n + static_cast<long>(nfft)) %
                                                    static_cast<long>(nfft));
            work[slot] += w * z;
        }
        fft_inplace(work);
        for (size_t j = 0; j < n_bins; ++j) {
            const long q = static_cast<long>(j) - static_cast<long>(n_bins) / 2;
            const size_t bin = static_cast<size_t>((q + static_cast<long>(nfft)) %
                                                   static_cast<long>(nfft));
            const double a = std::abs(work[bin]) / window_sum;
            sweep_trace[j] = a * a;
        }
        max_hold_update(out.max_hold, sweep_trace);
        if (sweep == n_sweeps - 1) out.psd = sweep_trace;
    }
    return out;
}

}  // namespace opo
