#pragma once

#include <vector>

namespace opo {

// Uniformly sampled record.
struct TimeSeries {
    double t0 = 0.0;
    double dt = 1.0;  // s
    std::vector<double> values;

    double sample_rate() const { return 1.0 / dt; }
    double duration() const { return dt * static_cast<double>(values.size()); }
};

}  // namespace opo
