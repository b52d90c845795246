#pragma once

// Oscillatory integrals against empirical or cylinder measures, frequency
// profiles with dyadic-window suprema, and power-decay exponent fits.

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "fracfour/ifs.hpp"
#include "fracfour/measures.hpp"

namespace ff {

using RealFn = std::function<double(double)>;

struct OscillatoryValue {
  double magnitude = 0.0;
  double stderr_ = 0.0;      // Monte Carlo standard error (0 in quadrature)
  double quad_bound = 0.0;   // quadrature discretization bound (0 in MC)
  std::complex<double> value{0.0, 0.0};
};

// Monte Carlo mean of chi(x) e^{i xi psi(x)} over the shared sample array
// (common random numbers across frequencies), with standard error.
OscillatoryValue oscillatory_integral(const EmpiricalMeasure& measure,
                                      const RealFn& chi, const RealFn& psi,
                                      double xi, int workers = 1);

// Exact cylinder quadrature sum_a p_a chi(x_a) e^{i xi psi(x_a)} with the
// error bound |xi| sup|psi'| max|I_a|; throws std::domain_error when that
// bound exceeds 1/2 (the depth is too small for this frequency).
OscillatoryValue oscillatory_integral_cylinder(const CylinderMeasure& measure,
                                               const MarkovIFS& ifs,
                                               const RealFn& chi,
                                               const RealFn& psi, double xi,
                                               double sup_psi_prime = 1.0);

struct DecayReport {
  std::vector<double> xi_grid;
  std::vector<double> magnitudes;
  std::vector<double> stderrs;
  std::vector<double> window_centers;  // geometric centers of dyadic windows
  std::vector<double> window_sups;
  double beta = 0.0;          // decay exponent: -slope of the log-log fit
  double beta_stderr = 0.0;
  double beta_lo95 = 0.0;     // lower edge of the 95% confidence band
  double residual = 0.0;
  bool decay_failure = false;  // fitted beta <= 0
  std::string method;          // "monte_carlo" or "cylinder_quadrature"
};

// Magnitude profile on a geometric frequency grid (points_per_octave per
// doubling), dyadic-window suprema over [2^j, 2^{j+1}), and the least-squares
// exponent fit on log window_sup vs log window center.
DecayReport decay_profile(const EmpiricalMeasure& measure, const RealFn& chi,
                          const RealFn& psi, double xi_min, double xi_max,
                          int points_per_octave = 8, int workers = 1);

// Same profile in cylinder-quadrature mode.
DecayReport decay_profile_cylinder(const CylinderMeasure& measure,
                                   const MarkovIFS& ifs, const RealFn& chi,
                                   const RealFn& psi, double xi_min,
                                   double xi_max, int points_per_octave = 8,
                                   double sup_psi_prime = 1.0);

// Serializers for the CLI: CSV rows (xi, magnitude, stderr, window,
// window_sup) and a log-log SVG plot with the fitted line.
std::string decay_csv(const DecayReport& report);
std::string decay_svg(const DecayReport& report);

}  // namespace ff
