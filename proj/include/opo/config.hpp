#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "opo/cavity.hpp"
#include "opo/crystal.hpp"
#include "opo/detection.hpp"
#include "opo/efficiency.hpp"
#include "opo/noise.hpp"
#include "opo/servo.hpp"

namespace opo {

// Raised for unknown keys, bad values or unreadable files. The offending key
// (when there is one) rides along for the CLI's machine-parsable error line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, std::string key = "")
        : std::runtime_error(message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

// Fully resolved scenario: every module's parameters plus the global seed.
// Unknown keys are rejected; missing keys fall back to the documented
// defaults (crystal derivatives default to the values calibrated against the
// measured temperature and voltage tuning pairs).
struct ScenarioConfig {
    uint64_t seed = 1;
    CrystalParams crystal;
    CavityGeometry cavity;
    NoiseBudget noise;
    ServoConfig servo;
    DetectorPair detectors;
    TwinBeamModel detection_model;
    double detection_alpha_rad = 0.0;
    double detection_crosstalk_power = 6.30957344480193e-6;  // 10^-5.2
    EfficiencyModel efficiency;
    SimConfig sim;

    static ScenarioConfig defaults();

    // Parses the sectioned key-value grammar:
    //   # comment
    //   seed = 7
    //   [section]
    //   key = value
    static ScenarioConfig from_file(const std::string& path);
    static ScenarioConfig from_string(const std::string& text);

    // Canonical serialization (fixed key order, full precision); feeds both
    // the artifact header echo and the config hash.
    std::vector<std::pair<std::string, std::string>> resolved_entries() const;
    uint64_t hash() const;  // FNV-1a over the canonical serialization

    void validate() const;
};

}  // namespace opo
