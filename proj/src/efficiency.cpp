#include "opo/efficiency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "opo/rng.hpp"

namespace opo {

void EfficiencyModel::validate(bool physical_range) const {
    if (!(p_threshold > 0.0))
        throw std::invalid_argument("efficiency: p_threshold must be > 0");
    if (physical_range && (k_factor < 2.0 || k_factor > 4.0))
        throw std::invalid_argument("efficiency: k_factor outside physical range [2,4]");
}

double conversion_efficiency(double pump_power_W, const EfficiencyModel& model) {
    const double n = pump_power_W / model.p_threshold;
    if (n <= 1.0) return 0.0;
    return model.k_factor / n * (std::sqrt(n) - 1.0);
}

std::pair<double, double> efficiency_gradient(double pump_power_W, const EfficiencyModel& model) {
    const double n = pump_power_W / model.p_threshold;
    if (n <= 1.0) return {0.0, 0.0};
    const double d_k = (std::sqrt(n) - 1.0) / n;
    const double d_pth = model.k_factor / model.p_threshold * (0.5 / std::sqrt(n) - 1.0 / n);
    return {d_pth, d_k};
}

std::pair<double, double> optimum_operating_point(const EfficiencyModel& model) {
    return {4.0, model.k_factor / 4.0};
}

namespace {

struct NormalEquations {
    double jtj[2][2] = {};
    double jtr[2] = {};
    double cost = 0.0;
};

NormalEquations assemble(const EfficiencyDataset& data, const EfficiencyModel& m, bool weighted) {
    NormalEquations ne;
    for (const auto& pt : data) {
        const double w = (weighted && pt.sigma > 0.0) ? 1.0 / pt.sigma : 1.0;
        const double r = (pt.efficiency - conversion_efficiency(pt.pump_power, m)) * w;
        const auto [d_pth, d_k] = efficiency_gradient(pt.pump_power, m);
        const double j0 = -d_pth * w;
        const double j1 = -d_k * w;
        ne.jtj[0][0] += j0 * j0;
        ne.jtj[0][1] += j0 * j1;
        ne.jtj[1][1] += j1 * j1;
        ne.jtr[0] += j0 * r;
        ne.jtr[1] += j1 * r;
        ne.cost += r * r;
    }
    ne.jtj[1][0] = ne.jtj[0][1];
    return ne;
}

double cost_only(const EfficiencyDataset& data, const EfficiencyModel& m, bool weighted) {
    double c = 0.0;
    for (const auto& pt : data) {
        const double w = (weighted && pt.sigma > 0.0) ? 1.0 / pt.sigma : 1.0;
        const double r = (pt.efficiency - conversion_efficiency(pt.pump_power, m)) * w;
        c += r * r;
    }
    return c;
}

}  // namespace

EfficiencyFit fit_efficiency(const EfficiencyDataset& data, const EfficiencyModel& initial_guess,
                             bool weighted) {
    EfficiencyFit out;
    out.model = initial_guess;

    if (data.size() < 3) {
        out.message = "need at least 3 points";
        return out;
    }
    double p_min = std::numeric_limits<double>::infinity();
    for (const auto& pt : data) p_min = std::min(p_min, pt.pump_power);
    if (!(initial_guess.p_threshold > 0.0) || initial_guess.p_threshold >= p_min) {
        out.message = "initial p_threshold must leave every point above threshold";
        return out;
    }

    EfficiencyModel m = initial_guess;
    double lambda = 1e-8;
    constexpr int max_iterations = 200;
    constexpr double grad_tol = 1e-10;

    for (int iter = 0; iter < max_iterations; ++iter) {
        out.iterations = iter + 1;
        const auto ne = assemble(data, m, weighted);
        const double grad_norm = 2.0 * std::hypot(ne.jtr[0], ne.jtr[1]);
        if (grad_norm <= grad_tol) {
            out.converged = true;
            break;
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 60; ++attempt) {
            const double a00 = ne.jtj[0][0] * (1.0 + lambda);
            const double a11 = ne.jtj[1][1] * (1.0 + lambda);
            const double a01 = ne.jtj[0][1];
            const double det = a00 * a11 - a01 * a01;
            if (det == 0.0 || !std::isfinite(det)) {
                lambda *= 10.0;
                continue;
            }
            const double d0 = (-ne.jtr[0] * a11 + ne.jtr[1] * a01) / det;
            const double d1 = (ne.jtr[0] * a01 - ne.jtr[1] * a00) / det;

            EfficiencyModel trial{m.p_threshold + d0, m.k_factor + d1};
            // keep every data point above threshold during the iteration
            if (!(trial.p_threshold > 0.0) || trial.p_threshold >= p_min ||
                cost_only(data, trial, weighted) > ne.cost) {
                lambda = std::max(lambda, 1e-12) * 10.0;
                continue;
            }
            const double rel_step = std::abs(d0) / m.p_threshold + std::abs(d1) / std::max(1.0, std::abs(m.k_factor));
            m = trial;
            lambda *= 0.3;
            stepped = true;
            if (rel_step < 1e-15) out.converged = true;
            break;
        }
        if (!stepped) {
            out.message = "damped retries exhausted without cost decrease";
            // gradient may already be tiny in one direction; report state as-is
            break;
        }
        if (out.converged) break;
    }

    out.model = m;
    const auto ne = assemble(data, m, weighted);
    out.chi_squared = ne.cost;
    if (out.converged && out.message.empty()) out.message = "ok";
    if (!out.converged && out.message.empty()) out.message = "iteration limit reached";

    // covariance from the normal equations at the optimum
    const double det = ne.jtj[0][0] * ne.jtj[1][1] - ne.jtj[0][1] * ne.jtj[0][1];
    if (det > 0.0) {
        const double dof = static_cast<double>(data.size()) - 2.0;
        const double scale = weighted ? 1.0 : (dof > 0.0 ? ne.cost / dof : 0.0);
        out.sigma_p_threshold = std::sqrt(std::max(0.0, scale * ne.jtj[1][1] / det));
        out.sigma_k = std::sqrt(std::max(0.0, scale * ne.jtj[0][0] / det));
    }
    return out;
}

EfficiencyDataset generate_efficiency_dataset(const EfficiencyModel& model, int n_points,
                                              double n_min, double n_max, double noise_fraction,
                                              uint64_t seed) {
    if (n_points < 1) throw std::invalid_argument("generate_efficiency_dataset: n_points < 1");
    if (!(n_min > 1.0)) throw std::invalid_argument("generate_efficiency_dataset: n_min must be > 1");
    EfficiencyDataset data;
    data.reserve(static_cast<size_t>(n_points));
    Rng rng(seed);
    for (int i = 0; i < n_points; ++i) {
        const double frac = n_points == 1 ? 0.0 : static_cast<double>(i) / (n_points - 1);
        const double n = n_min + (n_max - n_min) * frac;
        EfficiencyPoint pt;
        pt.pump_power = n * model.p_threshold;
        pt.efficiency = conversion_efficiency(pt.pump_power, model);
        if (noise_fraction > 0.0) {
            pt.efficiency *= 1.0 + noise_fraction * rng.gaussian();
            pt.sigma = noise_fraction * conversion_efficiency(pt.pump_power, model);
        }
        data.push_back(pt);
    }
    return data;
}

}  // namespace opo
