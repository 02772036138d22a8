#include "opo/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace opo {

namespace {

// measured tuning pairs the default crystal derivatives are calibrated to
constexpr std::pair<double, double> default_targets_T{-2.12e9, 0.24e9};  // Hz/K
constexpr std::pair<double, double> default_targets_V{1.34e6, 0.59e6};   // Hz/V

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    const char* s = value.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw ConfigError("invalid numeric value for " + key + ": '" + value + "'", key);
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("invalid boolean value for " + key + ": '" + value + "'", key);
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("invalid unsigned value for " + key + ": '" + value + "'", key);
    return std::stoull(value);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// staging values that do not map one-to-one onto struct fields
struct Staging {
    double n_mean = 1.8;
    double birefringence = -0.09;
    bool indices_touched = false;
    bool explicit_indices = false;
    bool derivatives_given = false;
    bool eta_given = false;
};

using Setter = std::function<void(ScenarioConfig&, Staging&, const std::string&,
                                  const std::string&)>;

const std::map<std::string, Setter>& key_table() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        const auto num = [&t](const std::string& key, std::function<void(ScenarioConfig&,
                                                                         Staging&, double)> set) {
            t[key] = [set](ScenarioConfig& c, Staging& st, const std::string& k,
                           const std::string& v) { set(c, st, parse_double(k, v)); };
        };

        t["seed"] = [](ScenarioConfig& c, Staging&, const std::string& k, const std::string& v) {
            c.seed = parse_u64(k, v);
        };

        num("crystal.length_m", [](auto& c, auto&, double v) { c.crystal.length_l = v; });
        num("crystal.n_mean", [](auto&, auto& s, double v) {
            s.n_mean = v;
            s.indices_touched = true;
        });
        num("crystal.birefringence", [](auto&, auto& s, double v) {
            s.birefringence = v;
            s.indices_touched = true;
        });
        num("crystal.n_signal", [](auto& c, auto& s, double v) {
            c.crystal.n_signal = v;
            s.explicit_indices = true;
        });
        num("crystal.n_idler", [](auto& c, auto& s, double v) {
            c.crystal.n_idler = v;
            s.explicit_indices = true;
        });
        num("crystal.dbirefringence_dx_per_m",
            [](auto& c, auto&, double v) { c.crystal.dbirefringence_dx = v; });
        num("crystal.reference_temperature_K",
            [](auto& c, auto&, double v) { c.crystal.reference_temperature = v; });
        num("crystal.dpath_dT_signal_m_per_K", [](auto& c, auto& s, double v) {
            c.crystal.dpath_dT_signal = v;
            s.derivatives_given = true;
        });
        num("crystal.dpath_dT_idler_m_per_K", [](auto& c, auto& s, double v) {
            c.crystal.dpath_dT_idler = v;
            s.derivatives_given = true;
        });
        num("crystal.dpath_dV_signal_m_per_V", [](auto& c, auto& s, double v) {
            c.crystal.dpath_dV_signal = v;
            s.derivatives_given = true;
        });
        num("crystal.dpath_dV_idler_m_per_V", [](auto& c, auto& s, double v) {
            c.crystal.dpath_dV_idler = v;
            s.derivatives_given = true;
        });

        num("cavity.air_path_m", [](auto& c, auto&, double v) { c.cavity.air_path_L = v; });
        num("cavity.pump_wavelength_m",
            [](auto& c, auto&, double v) { c.cavity.pump_wavelength = v; });
        num("cavity.cold_hwhm_hz", [](auto& c, auto&, double v) { c.cavity.cold_hwhm = v; });
        num("cavity.mirror_R_signal_in",
            [](auto& c, auto&, double v) { c.cavity.mirror_R_signal_in = v; });
        num("cavity.mirror_R_signal_out",
            [](auto& c, auto&, double v) { c.cavity.mirror_R_signal_out = v; });
        num("cavity.mirror_R_pump_in",
            [](auto& c, auto&, double v) { c.cavity.mirror_R_pump_in = v; });
        num("cavity.mirror_R_pump_out",
            [](auto& c, auto&, double v) { c.cavity.mirror_R_pump_out = v; });
        num("cavity.mirror_curvature_m",
            [](auto& c, auto&, double v) { c.cavity.mirror_curvature = v; });
        num("cavity.mirror_separation_m",
            [](auto& c, auto&, double v) { c.cavity.mirror_separation = v; });
        num("cavity.detuning_pulling",
            [](auto& c, auto&, double v) { c.cavity.detuning_pulling = v; });

        num("noise.pump_walk_hz_per_ms",
            [](auto& c, auto&, double v) { c.noise.pump_walk_hz_per_ms = v; });
        num("noise.pump_walk_corner_s",
            [](auto& c, auto&, double v) { c.noise.pump_walk_corner_s = v; });
        num("noise.pump_drift_hz_per_min",
            [](auto& c, auto&, double v) { c.noise.pump_drift_hz_per_min = v; });
        num("noise.temp_sigma_K", [](auto& c, auto&, double v) { c.noise.temp_sigma_K = v; });
        num("noise.temp_bandwidth_hz",
            [](auto& c, auto&, double v) { c.noise.temp_bandwidth_hz = v; });
        num("noise.length_sigma_m", [](auto& c, auto&, double v) { c.noise.length_sigma_m = v; });
        num("noise.length_bandwidth_hz",
            [](auto& c, auto&, double v) { c.noise.length_bandwidth_hz = v; });
        num("noise.vib1_freq_hz",
            [](auto& c, auto&, double v) { c.noise.vibration_lines[0].frequency_hz = v; });
        num("noise.vib1_q",
            [](auto& c, auto&, double v) { c.noise.vibration_lines[0].quality = v; });
        num("noise.vib1_rms_m",
            [](auto& c, auto&, double v) { c.noise.vibration_lines[0].displacement_rms_m = v; });
        num("noise.vib2_freq_hz",
            [](auto& c, auto&, double v) { c.noise.vibration_lines[1].frequency_hz = v; });
        num("noise.vib2_q",
            [](auto& c, auto&, double v) { c.noise.vibration_lines[1].quality = v; });
        num("noise.vib2_rms_m",
            [](auto& c, auto&, double v) { c.noise.vibration_lines[1].displacement_rms_m = v; });
        num("noise.jitter_band_lo_hz",
            [](auto& c, auto&, double v) { c.noise.jitter_band_hz.first = v; });
        num("noise.jitter_band_hi_hz",
            [](auto& c, auto&, double v) { c.noise.jitter_band_hz.second = v; });

        num("servo.dither_frequency_hz",
            [](auto& c, auto&, double v) { c.servo.dither_frequency_hz = v; });
        num("servo.dither_amplitude_m",
            [](auto& c, auto&, double v) { c.servo.dither_amplitude_m = v; });
        num("servo.lockin_time_constant_s",
            [](auto& c, auto&, double v) { c.servo.lockin_time_constant_s = v; });
        num("servo.loop_prop_gain_m_per_hz",
            [](auto& c, auto&, double v) { c.servo.loop_prop_gain_m_per_hz = v; });
        num("servo.loop_int_gain_m_per_hz_s",
            [](auto& c, auto&, double v) { c.servo.loop_int_gain_m_per_hz_s = v; });
        num("servo.servo_bandwidth_hz",
            [](auto& c, auto&, double v) { c.servo.servo_bandwidth_hz = v; });
        num("servo.actuator_range_m",
            [](auto& c, auto&, double v) { c.servo.actuator_range_m = v; });
        num("servo.error_signal_snr",
            [](auto& c, auto&, double v) { c.servo.error_signal_snr = v; });
        t["servo.eo_loop_enabled"] = [](ScenarioConfig& c, Staging&, const std::string& k,
                                        const std::string& v) {
            c.servo.eo_loop_enabled = parse_bool(k, v);
        };
        num("servo.eo_prop_gain_v_per_hz",
            [](auto& c, auto&, double v) { c.servo.eo_prop_gain_v_per_hz = v; });
        num("servo.eo_int_gain_v_per_hz_s",
            [](auto& c, auto&, double v) { c.servo.eo_int_gain_v_per_hz_s = v; });
        num("servo.eo_time_constant_s",
            [](auto& c, auto&, double v) { c.servo.eo_time_constant_s = v; });

        num("detection.eta", [](auto& c, auto& s, double v) {
            c.detection_model.eta = v;
            s.eta_given = true;
        });
        num("detection.corner_hz",
            [](auto& c, auto&, double v) { c.detection_model.corner_hz = v; });
        num("detection.alpha_rad", [](auto& c, auto&, double v) { c.detection_alpha_rad = v; });
        num("detection.crosstalk_power",
            [](auto& c, auto&, double v) { c.detection_crosstalk_power = v; });
        num("detection.quantum_efficiency",
            [](auto& c, auto&, double v) { c.detectors.quantum_efficiency = v; });
        num("detection.cmrr_db", [](auto& c, auto&, double v) { c.detectors.cmrr_db = v; });
        num("detection.cmrr_ref_hz", [](auto& c, auto&, double v) { c.detectors.cmrr_ref_hz = v; });
        num("detection.electronic_floor_rel",
            [](auto& c, auto&, double v) { c.detectors.electronic_noise_floor = v; });
        num("detection.beat_hz", [](auto& c, auto&, double v) { c.detection_model.beat_hz = v; });
        num("detection.beat_power_rel",
            [](auto& c, auto&, double v) { c.detection_model.beat_power = v; });
        num("detection.cm_tone_hz",
            [](auto& c, auto&, double v) { c.detection_model.cm_tone_hz = v; });
        num("detection.cm_tone_power_rel",
            [](auto& c, auto&, double v) { c.detection_model.cm_tone_power = v; });

        num("efficiency.p_threshold_W",
            [](auto& c, auto&, double v) { c.efficiency.p_threshold = v; });
        num("efficiency.k_factor", [](auto& c, auto&, double v) { c.efficiency.k_factor = v; });

        num("sim.duration_s", [](auto& c, auto&, double v) { c.sim.duration_s = v; });
        num("sim.sample_rate_hz", [](auto& c, auto&, double v) { c.sim.sample_rate_hz = v; });
        num("sim.pump_power_W", [](auto& c, auto&, double v) { c.sim.pump_power_W = v; });
        num("sim.beat_target_hz", [](auto& c, auto&, double v) { c.sim.beat_target_hz = v; });
        return t;
    }();
    return table;
}

void resolve(ScenarioConfig& config, Staging& staging) {
    if (staging.indices_touched && !staging.explicit_indices) {
        const auto fresh = CrystalParams::from_mean_index(config.crystal.length_l,
                                                          staging.n_mean, staging.birefringence);
        config.crystal.n_signal = fresh.n_signal;
        config.crystal.n_idler = fresh.n_idler;
    }
    if (!staging.derivatives_given)
        config.crystal = calibrate_derivatives(config.crystal, config.cavity, default_targets_T,
                                               default_targets_V);
    if (!staging.eta_given)
        config.detection_model.eta = calibrate_eta(-4.0, 200e3, config.detection_model.corner_hz,
                                                   config.detectors.electronic_noise_floor);
}

}  // namespace

ScenarioConfig ScenarioConfig::defaults() { return from_string(""); }

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

ScenarioConfig ScenarioConfig::from_string(const std::string& text) {
    ScenarioConfig config;
    Staging staging;

    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header at line " + std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(line_no));
        const std::string key_local = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string key = section.empty() ? key_local : section + "." + key_local;

        const auto& table = key_table();
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown config key: " + key, key);
        it->second(config, staging, key, value);
    }

    resolve(config, staging);
    config.validate();
    return config;
}

void ScenarioConfig::validate() const {
    crystal.validate();
    cavity.validate(crystal);
    noise.validate();
    servo.validate();
    detectors.validate();
    efficiency.validate();
    if (!(sim.duration_s > 0.0) || !(sim.sample_rate_hz > 0.0))
        throw ConfigError("sim: duration and sample rate must be > 0", "sim.duration_s");
}

std::vector<std::pair<std::string, std::string>> ScenarioConfig::resolved_entries() const {
    std::vector<std::pair<std::string, std::string>> e;
    const auto put = [&e](const std::string& k, double v) { e.emplace_back(k, format_double(v)); };

    e.emplace_back("seed", std::to_string(seed));
    put("crystal.length_m", crystal.length_l);
    put("crystal.n_signal", crystal.n_signal);
    put("crystal.n_idler", crystal.n_idler);
    put("crystal.dbirefringence_dx_per_m", crystal.dbirefringence_dx);
    put("crystal.reference_temperature_K", crystal.reference_temperature);
    put("crystal.dpath_dT_signal_m_per_K", crystal.dpath_dT_signal);
    put("crystal.dpath_dT_idler_m_per_K", crystal.dpath_dT_idler);
    put("crystal.dpath_dV_signal_m_per_V", crystal.dpath_dV_signal);
    put("crystal.dpath_dV_idler_m_per_V", crystal.dpath_dV_idler);
    put("cavity.air_path_m", cavity.air_path_L);
    put("cavity.pump_wavelength_m", cavity.pump_wavelength);
    put("cavity.cold_hwhm_hz", cavity.cold_hwhm);
    put("cavity.mirror_R_signal_in", cavity.mirror_R_signal_in);
    put("cavity.mirror_R_signal_out", cavity.mirror_R_signal_out);
    put("cavity.mirror_R_pump_in", cavity.mirror_R_pump_in);
    put("cavity.mirror_R_pump_out", cavity.mirror_R_pump_out);
    put("cavity.mirror_curvature_m", cavity.mirror_curvature);
    put("cavity.mirror_separation_m", cavity.mirror_separation);
    put("cavity.detuning_pulling", cavity.detuning_pulling);
    put("noise.pump_walk_hz_per_ms", noise.pump_walk_hz_per_ms);
    put("noise.pump_walk_corner_s", noise.pump_walk_corner_s);
    put("noise.pump_drift_hz_per_min", noise.pump_drift_hz_per_min);
    put("noise.temp_sigma_K", noise.temp_sigma_K);
    put("noise.temp_bandwidth_hz", noise.temp_bandwidth_hz);
    put("noise.length_sigma_m", noise.length_sigma_m);
    put("noise.length_bandwidth_hz", noise.length_bandwidth_hz);
    put("noise.vib1_freq_hz", noise.vibration_lines[0].frequency_hz);
    put("noise.vib1_q", noise.vibration_lines[0].quality);
    put("noise.vib1_rms_m", noise.vibration_lines[0].displacement_rms_m);
    put("noise.vib2_freq_hz", noise.vibration_lines[1].frequency_hz);
    put("noise.vib2_q", noise.vibration_lines[1].quality);
    put("noise.vib2_rms_m", noise.vibration_lines[1].displacement_rms_m);
    put("noise.jitter_band_lo_hz", noise.jitter_band_hz.first);
    put("noise.jitter_band_hi_hz", noise.jitter_band_hz.second);
    put("servo.dither_frequency_hz", servo.dither_frequency_hz);
    put("servo.dither_amplitude_m", servo.dither_amplitude_m);
    put("servo.lockin_time_constant_s", servo.lockin_time_constant_s);
    put("servo.loop_prop_gain_m_per_hz", servo.loop_prop_gain_m_per_hz);
    put("servo.loop_int_gain_m_per_hz_s", servo.loop_int_gain_m_per_hz_s);
    put("servo.servo_bandwidth_hz", servo.servo_bandwidth_hz);
    put("servo.actuator_range_m", servo.actuator_range_m);
    put("servo.error_signal_snr", servo.error_signal_snr);
    e.emplace_back("servo.eo_loop_enabled", servo.eo_loop_enabled ? "true" : "false");
    put("servo.eo_prop_gain_v_per_hz", servo.eo_prop_gain_v_per_hz);
    put("servo.eo_int_gain_v_per_hz_s", servo.eo_int_gain_v_per_hz_s);
    put("servo.eo_time_constant_s", servo.eo_time_constant_s);
    put("detection.eta", detection_model.eta);
    put("detection.corner_hz", detection_model.corner_hz);
    put("detection.alpha_rad", detection_alpha_rad);
    put("detection.crosstalk_power", detection_crosstalk_power);
    put("detection.quantum_efficiency", detectors.quantum_efficiency);
    put("detection.cmrr_db", detectors.cmrr_db);
    put("detection.cmrr_ref_hz", detectors.cmrr_ref_hz);
    put("detection.electronic_floor_rel", detectors.electronic_noise_floor);
    put("detection.beat_hz", detection_model.beat_hz);
    put("detection.beat_power_rel", detection_model.beat_power);
    put("detection.cm_tone_hz", detection_model.cm_tone_hz);
    put("detection.cm_tone_power_rel", detection_model.cm_tone_power);
    put("efficiency.p_threshold_W", efficiency.p_threshold);
    put("efficiency.k_factor", efficiency.k_factor);
    put("sim.duration_s", sim.duration_s);
    put("sim.sample_rate_hz", sim.sample_rate_hz);
    put("sim.pump_power_W", sim.pump_power_W);
    put("sim.beat_target_hz", sim.beat_target_hz);
    return e;
}

uint64_t ScenarioConfig::hash() const {
    uint64_t h = 14695981039346656037ULL;
    const auto mix = [&h](const std::string& s) {
        for (const char ch : s) {
            h ^= static_cast<unsigned char>(ch);
            h *= 1099511628211ULL;
        }
        h ^= static_cast<unsigned char>('\n');
        h *= 1099511628211ULL;
    };
    for (const auto& [k, v] : resolved_entries()) mix(k + "=" + v);
    return h;
}

}  // namespace opo
