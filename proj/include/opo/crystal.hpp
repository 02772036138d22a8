#pragma once

#include <utility>

namespace opo {

enum class Polarization { signal, idler };

// Linearized optical model of the doped KTP crystal around a calibration
// point: per-polarization optical path length n*l and its first derivatives
// with respect to temperature, applied voltage and transverse position.
//
// Sign convention: birefringence dn = n_signal - n_idler is negative, which
// pins the beat-note row of the tuning matrix to the measured signs (the
// length coefficient pair comes out (-5.11, -0.02) MHz/nm rather than
// (-5.11, +0.02)).
struct CrystalParams {
    double length_l = 0.01;  // m
    double n_signal = 1.755;
    double n_idler = 1.845;
    double dpath_dT_signal = 0.0;  // d(n*l)/dT, m/K, includes thermal expansion
    double dpath_dT_idler = 0.0;   // m/K
    double dpath_dV_signal = 0.0;  // d(n*l)/dV, m/V, electro-optic
    double dpath_dV_idler = 0.0;   // m/V
    double dbirefringence_dx = 5.0;      // d(dn)/dx, 1/m, transverse inhomogeneity
    double reference_temperature = 293.15;  // K

    double n_mean() const { return 0.5 * (n_signal + n_idler); }
    double birefringence() const { return n_signal - n_idler; }

    // Indices assigned symmetrically n_mean +/- dn/2; only sums and differences
    // of 1/(L + n l) enter the implemented relations, so the split is benign.
    static CrystalParams from_mean_index(double length_l, double n_mean, double birefringence);

    void validate() const;  // throws std::invalid_argument on nonphysical values
};

// n(T0)*l + dpath_dT*(T-T0) + dpath_dV*V +/- x*dbirefringence_dx*l/2,
// the transverse term split evenly between the two polarizations
// (signal carries the +dn/2 share).
double optical_path(const CrystalParams& params, Polarization pol, double T_kelvin,
                    double V_volts, double x_meters);

// Derivative of the optical path with respect to T, V or x for one polarization.
double optical_path_dT(const CrystalParams& params, Polarization pol);
double optical_path_dV(const CrystalParams& params, Polarization pol);
double optical_path_dx(const CrystalParams& params, Polarization pol);

struct CavityGeometry;  // cavity.hpp

// Solves the two 2x2 linear systems  -c_s*a_s -+ c_i*a_i = target, with
// c_j = nu/(L + n_j*l) evaluated at the degenerate frequency, for the
// per-polarization path derivatives a_j = d(n_j*l)/dX. Targets are
// (d nu_plus/dX, d nu_minus/dX) pairs in Hz per SI unit of X. The returned
// parameters round-trip: the tuning matrix built from them reproduces the
// targets to ~1e-16 relative.
CrystalParams calibrate_derivatives(const CrystalParams& base, const CavityGeometry& geometry,
                                    std::pair<double, double> targets_T_hz_per_K,
                                    std::pair<double, double> targets_V_hz_per_V);

}  // namespace opo
