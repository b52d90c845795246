#pragma once

// Potentials, Gibbs weights, transfer operator, pressure, Lyapunov exponent,
// light-tail constants, moment bounds, and measure-regularity probes.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fracfour/ifs.hpp"
#include "fracfour/numerics.hpp"
#include "fracfour/symbolic.hpp"

namespace ff {

// phi evaluated as the contribution of applying branch `letter` at point x.
// The Birkhoff sum of a word is the sum of these contributions along the
// rightmost-innermost composition chain, so for the geometric kind the word
// weight is |g_word'(x)|^delta and for the locally constant kind it is the
// product of the per-letter masses.
struct Potential {
  enum class Kind { locally_constant, geometric };
  Kind kind = Kind::locally_constant;
  std::vector<double> log_masses;  // locally_constant: log p_a per letter
  double delta = 1.0;              // geometric: multiplier of log|g'|

  static Potential locally_constant(const std::vector<double>& masses);
  static Potential geometric(double delta);

  double eval(const Branch& branch, double x) const;
  void validate(int alphabet_size) const;
};

struct GibbsModel {
  MarkovIFS ifs;
  Potential potential;
  double gibbs_constant = 1.0;  // C_phi >= 1, estimated
  double tail_mass_bound = 0.0;

  // log w_word(x) = S_n phi along the composition at x.
  double log_weight(const Word& word, double x) const;
  double weight(const Word& word, double x) const;
  // Reference point x_word := g_word(midpoint of I_{b(word)}).
  double ref_point(const Word& word) const;
  // p_word := w_word evaluated at the midpoint of the last-letter domain.
  double p_mass(const Word& word) const;
  void validate() const;
};

double gibbs_weight(const Word& word, double x, const GibbsModel& model);

// Exact finite sum (L_phi^n f)(x) over admissible depth-n words ending at x.
double transfer_apply(const std::function<double(double)>& f, double x, int n,
                      const GibbsModel& model,
                      std::uint64_t budget = kDefaultWordBudget);

// One application of the twisted operator L_{phi + t log|g'|} to a Chebyshev
// interpolant on the ambient interval (full-shift models only).
ChebFun transfer_cheb(const GibbsModel& model, const ChebFun& f, double t = 0.0);

struct PressureEstimate {
  double value = 0.0;       // n_max-th term of the defining sequence
  double cauchy_gap = 0.0;  // |P_{n_max} - P_{n_max-1}|
  bool divergent = false;
};

// P(phi + t*(tau - mean tau)) where tau = log|g'| and mean tau = -lambda;
// the shift direction is mean-centered so the pressure curve has slope zero
// at t = 0. Per-word sup over x uses a grid inflated by the distortion bound.
PressureEstimate pressure(const GibbsModel& model, double t, int n_max,
                          double lambda = 0.0, int grid = 8,
                          std::uint64_t budget = kDefaultWordBudget);

// Bowen root: delta in (0,1] with P(delta * log|g'|) = 0, by bisection.
double bowen_delta(const MarkovIFS& ifs, int n_max = 6, double p_tol = 1e-10);

struct LyapunovEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// Cylinder-sum estimate at the given depth (stderr reports the gap to the
// depth-1 shallower estimate as a convergence proxy).
LyapunovEstimate lyapunov(const GibbsModel& model, int depth,
                          std::uint64_t budget = kDefaultWordBudget);
// Monte Carlo estimate over random compositions.
LyapunovEstimate lyapunov_mc(const GibbsModel& model, int samples, int depth,
                             std::uint64_t seed, int workers = 1);

struct LightTail {
  double value = 0.0;
  double tail_bound = 0.0;
  bool divergent = false;
};

// C_{phi,gamma0} = sum_a sup_x w_a(x) |g_a'(x)|^{-gamma0}, grid sup with
// distortion padding; flags divergence via a ratio test on the last terms.
LightTail light_tail_constant(const GibbsModel& model, double gamma0,
                              int grid = 32);

struct PressureCurve {
  double gamma0 = 0.0;
  double t_gamma0 = 0.0;    // gamma0 / 2
  double eps_gamma0 = 0.0;  // sup over |t| <= t_gamma0 of |P(..t..)| / t^2
  std::vector<double> ts;
  std::vector<double> values;
  double slope_at_zero = 0.0;
};

PressureCurve pressure_curve(const GibbsModel& model, double gamma0,
                             double lambda, int n_max, int t_points = 9);

struct MomentCheck {
  double lhs = 0.0;    // worst-x value of sum_a w_a(x) (e^{lambda n}|g_a'(x)|)^t
  double bound = 0.0;  // 2 C_phi e^{eps n t^2}
  bool pass = false;
};

// lhs computed via n applications of the twisted Chebyshev transfer operator
// (exact_enumeration forces the direct word sum instead; used for oracles).
MomentCheck moment_check(const GibbsModel& model, int n, double t,
                         double lambda, double eps_gamma0,
                         bool exact_enumeration = false,
                         std::uint64_t budget = kDefaultWordBudget);

// Max over sampled (word, x) of max(w/p, p/w) at the given depth.
double estimate_gibbs_constant(const GibbsModel& model, int depth,
                               int grid = 8,
                               std::uint64_t budget = kDefaultWordBudget);

struct RegularityProbe {
  double s_est = 0.0;
  double C_est = 0.0;
  double residual = 0.0;
  bool degenerate = false;
};

// Fits log sup-interval-mass against log scale over a geometric scale grid.
RegularityProbe regularity_probe(const std::vector<double>& sorted_samples,
                                 const std::vector<double>& scales);

}  // namespace ff
