// opotk: doubly resonant type-II OPO simulator and analysis toolkit.
//
// Subcommands mirror the standard bench measurements: cluster map, tuning
// matrix, locked/free time-domain runs, beat-note and intensity-difference
// spectra, conversion-efficiency fits. Every artifact embeds the resolved
// config and seed, and identical invocations produce identical bytes.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <string>

#include "opo/cavity.hpp"
#include "opo/config.hpp"
#include "opo/constants.hpp"
#include "opo/crystal.hpp"
#include "opo/csv.hpp"
#include "opo/detection.hpp"
#include "opo/efficiency.hpp"
#include "opo/servo.hpp"
#include "opo/timeseries.hpp"
#include "opo/version.hpp"

namespace {

using namespace opo;

struct CommonOpts {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
};

ScenarioConfig load_config(const CommonOpts& common) {
    ScenarioConfig cfg = common.config_path.empty() ? ScenarioConfig::defaults()
                                                    : ScenarioConfig::from_file(common.config_path);
    if (common.seed_set) cfg.seed = common.seed;
    return cfg;
}

double parse_alpha(const std::string& text) {
    if (text.rfind("pi/", 0) == 0) {
        const double denom = std::stod(text.substr(3));
        if (denom == 0.0) throw ConfigError("alpha: division by zero", "detection.alpha_rad");
        return constants::pi / denom;
    }
    if (text == "pi") return constants::pi;
    try {
        size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("alpha: expected radians or pi/<n>, got '" + text + "'",
                          "detection.alpha_rad");
    }
}

OperatingPoint nominal_point(const ScenarioConfig& cfg) {
    return OperatingPoint{cfg.cavity.air_path_L, cfg.crystal.reference_temperature, 0.0, 0.0};
}

int cmd_cluster_map(const CommonOpts& common, double span_nm, double max_beat_ghz,
                    const std::string& out) {
    const auto cfg = load_config(common);
    const auto entries = find_cluster_modes(cfg.crystal, cfg.cavity, span_nm * 1e-9,
                                            nominal_point(cfg), max_beat_ghz * 1e9);

    CsvWriter csv(out, cfg);
    csv.comment("cluster map: doubly resonant (p_s, p_i) pairs vs cavity length offset");
    csv.columns({"L_offset_nm", "p_s", "p_i", "nu_s_Hz", "nu_i_Hz", "beat_Hz", "cluster_label",
                 "intra_label"});
    for (const auto& e : entries)
        csv.row({e.L_offset * 1e9, static_cast<double>(e.pair.p_signal),
                 static_cast<double>(e.pair.p_idler), e.pair.nu_signal, e.pair.nu_idler,
                 e.pair.beat, static_cast<double>(e.cluster_label),
                 static_cast<double>(e.intra_label)});

    const double spacing = mode_hop_spacing(cfg.crystal, cfg.cavity);
    std::printf("%zu mode pairs in %.1f nm span; intra-cluster spacing %.3f nm, clusters every %.1f nm\n",
                entries.size(), span_nm, spacing * 1e9, cfg.cavity.pump_wavelength * 0.5e9);
    return 0;
}

int cmd_tune_matrix(const CommonOpts& common, const std::string& out) {
    const auto cfg = load_config(common);
    const auto m = tuning_matrix(cfg.crystal, cfg.cavity);

    if (!out.empty()) {
        CsvWriter csv(out, cfg);
        csv.comment("tuning matrix d(nu_plus, nu_minus)/d(L, T, V, nu_p)");
        csv.columns({"dnu_plus_dL_Hz_per_m", "dnu_minus_dL_Hz_per_m", "dnu_plus_dT_Hz_per_K",
                     "dnu_minus_dT_Hz_per_K", "dnu_plus_dV_Hz_per_V", "dnu_minus_dV_Hz_per_V",
                     "dnu_plus_dnup", "dnu_minus_dnup"});
        csv.row({m.plus[TuningMatrix::col_L], m.minus[TuningMatrix::col_L],
                 m.plus[TuningMatrix::col_T], m.minus[TuningMatrix::col_T],
                 m.plus[TuningMatrix::col_V], m.minus[TuningMatrix::col_V],
                 m.plus[TuningMatrix::col_pump], m.minus[TuningMatrix::col_pump]});
    }

    std::printf("d(nu+,nu-)/dL    = (%.3f, %.3f) MHz/nm\n", m.plus[TuningMatrix::col_L] * 1e-15,
                m.minus[TuningMatrix::col_L] * 1e-15);
    std::printf("d(nu+,nu-)/dT    = (%.3f, %.3f) MHz/mK\n", m.plus[TuningMatrix::col_T] * 1e-9,
                m.minus[TuningMatrix::col_T] * 1e-9);
    std::printf("d(nu+,nu-)/dV    = (%.3f, %.3f) MHz/V\n", m.plus[TuningMatrix::col_V] * 1e-6,
                m.minus[TuningMatrix::col_V] * 1e-6);
    std::printf("d(nu+,nu-)/dnu_p = (%g, %g)\n", m.plus[TuningMatrix::col_pump],
                m.minus[TuningMatrix::col_pump]);
    return 0;
}

int cmd_tune_calibrate(const CommonOpts& common, const std::string& t_pair,
                       const std::string& v_pair, const std::string& out) {
    auto cfg = load_config(common);

    const auto parse_pair = [](const std::string& text, double scale) {
        const auto comma = text.find(',');
        if (comma == std::string::npos)
            throw ConfigError("expected 'plus,minus' pair, got '" + text + "'");
        return std::pair{std::stod(text.substr(0, comma)) * scale,
                         std::stod(text.substr(comma + 1)) * scale};
    };
    const auto targets_T = parse_pair(t_pair, 1e9);  // MHz/mK -> Hz/K
    const auto targets_V = parse_pair(v_pair, 1e6);  // MHz/V  -> Hz/V

    const auto cal = calibrate_derivatives(cfg.crystal, cfg.cavity, targets_T, targets_V);
    cfg.crystal = cal;

    CsvWriter csv(out, cfg);
    csv.comment("calibrated optical-path derivatives; config keys:");
    csv.comment("  [crystal] dpath_dT_signal_m_per_K, dpath_dT_idler_m_per_K,");
    csv.comment("            dpath_dV_signal_m_per_V, dpath_dV_idler_m_per_V");
    csv.columns({"dpath_dT_signal_m_per_K", "dpath_dT_idler_m_per_K", "dpath_dV_signal_m_per_V",
                 "dpath_dV_idler_m_per_V"});
    csv.row({cal.dpath_dT_signal, cal.dpath_dT_idler, cal.dpath_dV_signal, cal.dpath_dV_idler});

    std::printf("d(n l)/dT = (%.6g, %.6g) m/K\n", cal.dpath_dT_signal, cal.dpath_dT_idler);
    std::printf("d(n l)/dV = (%.6g, %.6g) m/V\n", cal.dpath_dV_signal, cal.dpath_dV_idler);
    return 0;
}

int cmd_sim(const CommonOpts& common, bool locked, double duration_s, double sample_rate_hz,
            bool eo_loop, const std::string& out) {
    auto cfg = load_config(common);
    if (duration_s > 0.0) cfg.sim.duration_s = duration_s;
    if (sample_rate_hz > 0.0) cfg.sim.sample_rate_hz = sample_rate_hz;
    cfg.sim.locked = locked;
    cfg.sim.seed = cfg.seed;
    if (eo_loop) cfg.servo.eo_loop_enabled = true;

    const auto rec = run_simulation(cfg.crystal, cfg.cavity, cfg.noise, cfg.servo, cfg.efficiency,
                                    cfg.sim);

    CsvWriter csv(out, cfg);
    csv.comment(locked ? "locked run (dither lock engaged)" : "free-running cavity");
    csv.columns({"t_s", "nu_minus_Hz", "nu_plus_detuning_Hz", "power_W", "hop_flag"});
    for (size_t i = 0; i < rec.nu_minus.size(); ++i)
        csv.row({rec.t0 + rec.dt * static_cast<double>(i + 1), rec.nu_minus[i],
                 rec.nu_plus_detuning[i], rec.power[i], static_cast<double>(rec.hop[i])});

    std::printf("%s run: %.0f s, beat drift range %.1f kHz, %d hop(s)%s\n",
                locked ? "locked" : "free", cfg.sim.duration_s, beat_range(rec) / 1e3,
                rec.hop_count, rec.saturated ? ", actuator saturated" : "");
    return 0;
}

int cmd_spectrum_beat(const CommonOpts& common, const std::string& in, double rbw_hz,
                      double sweep_ms, int maxhold_n, double center_hz, double span_hz,
                      const std::string& out) {
    const auto cfg = load_config(common);
    const auto table = read_csv(in);
    TimeSeries nu;
    const auto t = table.column("t_s");
    nu.values = table.column("nu_minus_Hz");
    if (t.size() >= 2) nu.dt = t[1] - t[0];
    nu.t0 = t.empty() ? 0.0 : t.front() - nu.dt;

    if (center_hz <= 0.0) {
        double mean = 0.0;
        for (double v : nu.values) mean += v;
        mean /= static_cast<double>(nu.values.size());
        center_hz = std::round(mean / 1e3) * 1e3;  // deterministic kHz grid
    }

    const auto s = beat_spectrum(nu, rbw_hz, sweep_ms * 1e-3, maxhold_n, center_hz, span_hz);

    CsvWriter csv(out, cfg);
    csv.comment("swept beat-note spectrum; psd normalized to a full-scale constant tone");
    csv.columns({"f_Hz", "psd_norm", "maxhold_norm"});
    for (size_t k = 0; k < s.frequency.size(); ++k)
        csv.row({s.frequency[k], s.psd[k], s.max_hold[k]});

    std::printf("beat spectrum: %zu bins, rbw %.0f Hz, single-sweep hwhm %.1f kHz, maxhold hwhm %.1f kHz\n",
                s.frequency.size(), rbw_hz, spectrum_hwhm(s.frequency, s.psd) / 1e3,
                spectrum_hwhm(s.frequency, s.max_hold) / 1e3);
    return 0;
}

int cmd_spectrum_diff(const CommonOpts& common, const std::string& alpha_text, bool dark,
                      int segments, const std::string& out) {
    auto cfg = load_config(common);
    const double alpha = alpha_text.empty() ? cfg.detection_alpha_rad : parse_alpha(alpha_text);
    cfg.detection_alpha_rad = alpha;

    const SplitterConfig splitter{alpha, cfg.detection_crosstalk_power};
    TwinBeamModel model = cfg.detection_model;
    model.dark = dark;
    DetectionRequest request;
    if (segments > 0) request.n_segments = static_cast<size_t>(segments);

    const auto res = difference_spectrum(splitter, cfg.detectors, model, request, cfg.seed);

    CsvWriter csv(out, cfg);
    csv.comment("intensity-difference spectrum relative to the shot-noise reference");
    csv.columns({"f_Hz", "psd_rel_shot", "psd_db"});
    for (size_t k = 0; k < res.spectrum.frequency.size(); ++k)
        csv.row({res.spectrum.frequency[k], res.spectrum.psd[k],
                 10.0 * std::log10(std::max(res.spectrum.psd[k], 1e-30))});

    std::printf("difference spectrum: alpha = %.6g rad, R = %.4f, beat amplitude %.6g\n", alpha,
                splitter.reflectivity(), res.beat_amplitude);
    return 0;
}

int cmd_fit_efficiency(const CommonOpts& common, const std::string& data_path, bool weighted,
                       const std::string& out) {
    const auto cfg = load_config(common);
    const auto table = read_csv(data_path);
    EfficiencyDataset data;
    const auto pump = table.column("pump_W");
    const auto rho = table.column("rho");
    const bool has_sigma = table.has_column("sigma");
    const auto sigma = has_sigma ? table.column("sigma") : std::vector<double>();
    for (size_t i = 0; i < pump.size(); ++i)
        data.push_back({pump[i], rho[i], has_sigma ? sigma[i] : 0.0});

    double p_min = 1e300;
    for (const auto& pt : data) p_min = std::min(p_min, pt.pump_power);
    const EfficiencyModel guess{0.8 * p_min, 3.0};
    const auto fit = fit_efficiency(data, guess, weighted);
    if (!fit.converged)
        throw std::runtime_error("efficiency fit failed: " + fit.message);

    const auto [n_opt, rho_max] = optimum_operating_point(fit.model);

    CsvWriter csv(out, cfg);
    csv.comment("conversion-efficiency fit: rho = (K/N)(sqrt(N)-1), N = P/P_th");
    csv.columns({"p_threshold_W", "k_factor", "sigma_p_threshold_W", "sigma_k", "chi_squared",
                 "iterations", "n_opt", "rho_max"});
    csv.row({fit.model.p_threshold, fit.model.k_factor, fit.sigma_p_threshold, fit.sigma_k,
             fit.chi_squared, static_cast<double>(fit.iterations), n_opt, rho_max});

    std::printf("P_th = %.4g(%.1g) mW, K = %.4g(%.1g), chi2 = %.3g (%d iterations)\n",
                fit.model.p_threshold * 1e3, fit.sigma_p_threshold * 1e3, fit.model.k_factor,
                fit.sigma_k, fit.chi_squared, fit.iterations);
    return 0;
}

int cmd_gen_efficiency(const CommonOpts& common, double pth, double k, int n_points, double noise,
                       const std::string& out) {
    auto cfg = load_config(common);
    if (pth > 0.0) cfg.efficiency.p_threshold = pth;
    if (k > 0.0) cfg.efficiency.k_factor = k;

    const auto data =
        generate_efficiency_dataset(cfg.efficiency, n_points, 1.04, 4.0, noise, cfg.seed);

    CsvWriter csv(out, cfg);
    csv.comment("synthetic conversion-efficiency dataset");
    csv.columns(noise > 0.0 ? std::vector<std::string>{"pump_W", "rho", "sigma"}
                            : std::vector<std::string>{"pump_W", "rho"});
    for (const auto& pt : data) {
        if (noise > 0.0)
            csv.row({pt.pump_power, pt.efficiency, pt.sigma});
        else
            csv.row({pt.pump_power, pt.efficiency});
    }
    std::printf("wrote %zu points to %s\n", data.size(), out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"doubly resonant type-II OPO simulator and analysis toolkit"};
    app.set_version_flag("--version", std::string(opo::tool_name) + " " + opo::tool_version);
    app.require_subcommand(1);
    app.fallthrough();  // --config/--seed may follow the subcommand

    CommonOpts common;
    app.add_option("--config", common.config_path, "scenario config file");
    app.add_option("--seed", common.seed, "override the config seed")
        ->each([&common](const std::string&) { common.seed_set = true; });

    // cluster map
    auto* cluster = app.add_subcommand("cluster", "cavity mode cluster tools");
    auto* cluster_map = cluster->add_subcommand("map", "enumerate doubly resonant pairs");
    double span_nm = 600.0, max_beat_ghz = 30.0;
    std::string cluster_out = "cluster_map.csv";
    cluster_map->add_option("--span-nm", span_nm, "cavity length scan span");
    cluster_map->add_option("--max-beat-ghz", max_beat_ghz, "beat-note enumeration window");
    cluster_map->add_option("--out", cluster_out, "output csv");

    // tune matrix / calibrate
    auto* tune = app.add_subcommand("tune", "tuning coefficients");
    auto* tune_matrix_cmd = tune->add_subcommand("matrix", "print the 2x4 tuning matrix");
    std::string matrix_out;
    tune_matrix_cmd->add_option("--out", matrix_out, "optional output csv");
    auto* tune_cal = tune->add_subcommand("calibrate", "fit path derivatives to tuning targets");
    std::string t_pair = "-2.12,0.24", v_pair = "1.34,0.59", cal_out = "calibration.csv";
    tune_cal->add_option("--dnu-dt-mhz-per-mk", t_pair, "target (plus,minus) in MHz/mK");
    tune_cal->add_option("--dnu-dv-mhz-per-v", v_pair, "target (plus,minus) in MHz/V");
    tune_cal->add_option("--out", cal_out, "output csv");

    // sim lock / free
    auto* sim = app.add_subcommand("sim", "time-domain runs");
    double duration_s = 0.0, sample_rate_hz = 0.0;
    bool eo_loop = false;
    std::string sim_out = "run.csv";
    auto* sim_lock = sim->add_subcommand("lock", "servo-locked run");
    auto* sim_free = sim->add_subcommand("free", "free-running run");
    for (auto* sub : {sim_lock, sim_free}) {
        sub->add_option("--duration-s", duration_s, "run length");
        sub->add_option("--sample-rate-hz", sample_rate_hz, "recorded sample rate");
        sub->add_option("--out", sim_out, "output csv");
    }
    sim_lock->add_flag("--eo", eo_loop, "enable the electro-optic beat servo");

    // spectrum beat / diff
    auto* spectrum = app.add_subcommand("spectrum", "spectral analysis");
    auto* spec_beat = spectrum->add_subcommand("beat", "swept analyzer on a recorded beat");
    std::string beat_in = "run.csv", beat_out = "beat_spectrum.csv";
    double rbw_hz = 30e3, sweep_ms = 14.0, center_hz = 0.0, span_hz = 5e6;
    int maxhold_n = 100000;
    spec_beat->add_option("--in", beat_in, "input run csv (nu_minus_Hz column)");
    spec_beat->add_option("--rbw-hz", rbw_hz, "resolution bandwidth (hwhm of a tone)");
    spec_beat->add_option("--sweep-ms", sweep_ms, "sweep time");
    spec_beat->add_option("--maxhold-n", maxhold_n, "number of sweeps held");
    spec_beat->add_option("--center-hz", center_hz, "center frequency (default: series mean)");
    spec_beat->add_option("--span-hz", span_hz, "frequency span");
    spec_beat->add_option("--out", beat_out, "output csv");

    auto* spec_diff = spectrum->add_subcommand("diff", "twin-beam intensity-difference spectrum");
    std::string alpha_text;
    bool dark = false;
    int segments = 0;
    std::string diff_out = "diff_spectrum.csv";
    spec_diff->add_option("--alpha", alpha_text, "half-wave plate angle (radians or pi/<n>)");
    spec_diff->add_flag("--dark", dark, "no light: electronic floor only");
    spec_diff->add_option("--segments", segments, "Welch averages");
    spec_diff->add_option("--out", diff_out, "output csv");

    // fit / gen efficiency
    auto* fit = app.add_subcommand("fit", "model fits");
    auto* fit_eff = fit->add_subcommand("efficiency", "fit (P_th, K) to measured efficiencies");
    std::string fit_data, fit_out = "efficiency_fit.csv";
    bool weighted = false;
    fit_eff->add_option("--data", fit_data, "input csv: pump_W, rho[, sigma]")->required();
    fit_eff->add_flag("--weighted", weighted, "use per-point sigmas");
    fit_eff->add_option("--out", fit_out, "output csv report");

    auto* gen = app.add_subcommand("gen", "synthetic datasets");
    auto* gen_eff = gen->add_subcommand("efficiency", "generate an efficiency dataset");
    double gen_pth = 0.0, gen_k = 0.0, gen_noise = 0.0;
    int gen_n = 20;
    std::string gen_out = "efficiency_data.csv";
    gen_eff->add_option("--pth", gen_pth, "threshold power, W");
    gen_eff->add_option("--k", gen_k, "K factor");
    gen_eff->add_option("--n-points", gen_n, "number of points");
    gen_eff->add_option("--noise", gen_noise, "multiplicative noise fraction");
    gen_eff->add_option("--out", gen_out, "output csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help/--version
        app.exit(e);
        return 2;
    }

    try {
        if (cluster_map->parsed()) return cmd_cluster_map(common, span_nm, max_beat_ghz, cluster_out);
        if (tune_matrix_cmd->parsed()) return cmd_tune_matrix(common, matrix_out);
        if (tune_cal->parsed()) return cmd_tune_calibrate(common, t_pair, v_pair, cal_out);
        if (sim_lock->parsed())
            return cmd_sim(common, true, duration_s, sample_rate_hz, eo_loop, sim_out);
        if (sim_free->parsed())
            return cmd_sim(common, false, duration_s, sample_rate_hz, false, sim_out);
        if (spec_beat->parsed())
            return cmd_spectrum_beat(common, beat_in, rbw_hz, sweep_ms, maxhold_n, center_hz,
                                     span_hz, beat_out);
        if (spec_diff->parsed()) return cmd_spectrum_diff(common, alpha_text, dark, segments, diff_out);
        if (fit_eff->parsed()) return cmd_fit_efficiency(common, fit_data, weighted, fit_out);
        if (gen_eff->parsed())
            return cmd_gen_efficiency(common, gen_pth, gen_k, gen_n, gen_noise, gen_out);
        std::fprintf(stderr, "error: config: no subcommand given\n");
        return 2;
    } catch (const opo::ConfigError& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: numeric: %s\n", e.what());
        return 3;
    }
}
