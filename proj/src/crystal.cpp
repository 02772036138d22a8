#include "opo/crystal.hpp"

#include <cmath>
#include <stdexcept>

#include "opo/cavity.hpp"

namespace opo {

CrystalParams CrystalParams::from_mean_index(double length_l, double n_mean,
                                             double birefringence) {
    CrystalParams p;
    p.length_l = length_l;
    p.n_signal = n_mean + 0.5 * birefringence;
    p.n_idler = n_mean - 0.5 * birefringence;
    p.validate();
    return p;
}

void CrystalParams::validate() const {
    if (!(length_l > 0.0)) throw std::invalid_argument("crystal: length_l must be > 0");
    if (!(n_signal > 1.0) || !(n_idler > 1.0))
        throw std::invalid_argument("crystal: refractive indices must exceed 1");
}

namespace {

double base_path(const CrystalParams& p, Polarization pol) {
    switch (pol) {
        case Polarization::signal: return p.n_signal * p.length_l;
        case Polarization::idler: return p.n_idler * p.length_l;
    }
    throw std::invalid_argument("crystal: unknown polarization tag");
}

}  // namespace

double optical_path(const CrystalParams& p, Polarization pol, double T_kelvin, double V_volts,
                    double x_meters) {
    return base_path(p, pol) + optical_path_dT(p, pol) * (T_kelvin - p.reference_temperature) +
           optical_path_dV(p, pol) * V_volts + optical_path_dx(p, pol) * x_meters;
}

double optical_path_dT(const CrystalParams& p, Polarization pol) {
    switch (pol) {
        case Polarization::signal: return p.dpath_dT_signal;
        case Polarization::idler: return p.dpath_dT_idler;
    }
    throw std::invalid_argument("crystal: unknown polarization tag");
}

double optical_path_dV(const CrystalParams& p, Polarization pol) {
    switch (pol) {
        case Polarization::signal: return p.dpath_dV_signal;
        case Polarization::idler: return p.dpath_dV_idler;
    }
    throw std::invalid_argument("crystal: unknown polarization tag");
}

double optical_path_dx(const CrystalParams& p, Polarization pol) {
    const double half = 0.5 * p.dbirefringence_dx * p.length_l;
    switch (pol) {
        case Polarization::signal: return half;
        case Polarization::idler: return -half;
    }
    throw std::invalid_argument("crystal: unknown polarization tag");
}

CrystalParams calibrate_derivatives(const CrystalParams& base, const CavityGeometry& geometry,
                                    std::pair<double, double> targets_T_hz_per_K,
                                    std::pair<double, double> targets_V_hz_per_V) {
    const double nu = geometry.degenerate_frequency();
    const double cs = nu / (geometry.air_path_L + base.n_signal * base.length_l);
    const double ci = nu / (geometry.air_path_L + base.n_idler * base.length_l);
    if (cs == 0.0 || ci == 0.0)
        throw std::invalid_argument("calibrate_derivatives: singular system");

    // -cs*a_s - ci*a_i = t_plus ; -cs*a_s + ci*a_i = t_minus
    const auto solve = [&](std::pair<double, double> t) {
        const double a_s = -(t.first + t.second) / (2.0 * cs);
        const double a_i = (t.second - t.first) / (2.0 * ci);
        return std::pair{a_s, a_i};
    };

    CrystalParams out = base;
    const auto [aTs, aTi] = solve(targets_T_hz_per_K);
    const auto [aVs, aVi] = solve(targets_V_hz_per_V);
    out.dpath_dT_signal = aTs;
    out.dpath_dT_idler = aTi;
    out.dpath_dV_signal = aVs;
    out.dpath_dV_idler = aVi;
    return out;
}

}  // namespace opo
