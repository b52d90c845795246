#pragma once

// Non-concentration machinery: Birkhoff log-derivative differences, Hoelder
// quotients, the quadruple non-linearity statistic and its exponent fit, the
// uniform non-integrability margin search, measure non-linearity flatness,
// and the tree-loss recursion with its explicit constant bundle.

#include <optional>
#include <vector>

#include "fracfour/measures.hpp"
#include "fracfour/thermo.hpp"

namespace ff {

// X_word(x, y) = log g_word'(x) - log g_word'(y).
double birkhoff_difference(const Word& word, double x, double y,
                           const MarkovIFS& ifs);

// lambda^alpha_word(x, y) = X_word(x, y) / |x - y|^alpha.
double holder_quotient(const Word& word, double x, double y, double alpha,
                       const MarkovIFS& ifs);

// (log g_a'(x) - log g_b'(x)) - (log g_a'(y) - log g_b'(y)).
double delta_n(const Word& a, const Word& b, double x, double y,
               const MarkovIFS& ifs);

// Quadruple statistic: sum over (a,b,c,d) in (Sigma^n)^4 of
// mu(I_a) mu(I_b) mu(I_c) mu(I_d) 1_I(delta_n(a, b, x_c, x_d)).
double qnl_statistic(const GibbsModel& model, int n, double I_lo, double I_hi,
                     std::uint64_t budget = kDefaultWordBudget);

struct MonteCarloValue {
  double value = 0.0;
  double stderr_ = 0.0;
};

MonteCarloValue qnl_statistic_mc(const GibbsModel& model, int n, double I_lo,
                                 double I_hi, int samples, std::uint64_t seed,
                                 int workers = 1);

struct QnlFit {
  double Theta = 0.0;
  double rho = 0.0;
  double C = 0.0;
  double residual = 0.0;
  double holdout_rel_err = 0.0;
  bool pass = false;     // Theta, rho in (0,1) with certified residual
  bool violation = false;  // statistic pinned at 1 (affine-type failure)
};

// Least-squares fit of statistic(n, sigma) against C (sigma^Theta + rho^n);
// the largest (n, sigma) pair is held out and the relative prediction error
// reported.
QnlFit qnl_fit(const GibbsModel& model, const std::vector<int>& n_values,
               const std::vector<double>& sigma_values,
               std::uint64_t budget = kDefaultWordBudget);

struct UniCertificate {
  Word a, b;
  double c0 = 0.0;  // certified margin (grid infimum minus modulus correction)
  double c0_grid = 0.0;  // raw grid infimum
  int N = 0;
  double alpha = 1.0;
  bool found = false;
};

enum class PairStrategy { exhaustive, suggested };

// Best common-last-letter pair maximizing inf_{x != y} |X_a - X_b| / |x-y|^a.
// With PairStrategy::suggested the pair (0^{N-1}1, 0^N) is scored directly.
UniCertificate uni_margin(const GibbsModel& model, int N,
                          PairStrategy strategy, int grid = 64,
                          std::uint64_t budget = kDefaultWordBudget);

// log (g1 o g0)'(x10) - log g0'(x0) - log g1'(x1) at attracting fixed points.
double cohomology_defect(const Branch& g0, const Branch& g1);

struct MnlReport {
  double C_mnl = 0.0;
  bool diverged = false;  // interval-mass/|I| above 1e6 at some probed scale
  double ks_to_uniform = 1.0;
  EmpiricalMeasure pushed;
};

// Pushes the sampled measure through x -> X_a(x, x0) - X_b(x, x0); probes
// interval-mass/|I| over a dyadic scale ladder and the Kolmogorov distance of
// the normalized pushforward to the uniform law on its range.
MnlReport mnl_statistic(const GibbsModel& model, const Word& a, const Word& b,
                        double x0, int sample_count, std::uint64_t seed,
                        int workers = 1);

// Same pushforward but through the exact depth-n cylinder measure (used when
// the sampling law of a non-locally-constant model is only approximate).
MnlReport mnl_statistic_cylinder(const GibbsModel& model, const Word& a,
                                 const Word& b, double x0, int depth,
                                 std::uint64_t budget = kDefaultWordBudget);

// Same pushforward through an explicit atomic measure (positions, weights) —
// used when the relevant measure is available in closed form, e.g. the
// staircase fixed point.
MnlReport mnl_statistic_weighted(const GibbsModel& model, const Word& a,
                                 const Word& b, double x0,
                                 const std::vector<double>& xs,
                                 const std::vector<double>& ws);

struct TreeConstants {
  UniCertificate uni;      // pair (a1, b1), c0, N
  double HA = 0.0;         // Hoelder amplitude of the system
  double A = 0.0;          // HA / (1 - kappa_+^alpha)
  double alpha = 1.0;
  double gamma0 = 0.0;
  double t_gamma0 = 0.0;
  double eps_gamma0 = 0.0;
  double lambda = 0.0;
  double C_phi = 1.0;
  double eps_uni = 0.0;    // min letter-infimum weight of the UNI pair
  double alpha_N = 0.0;    // leakage exponent of the complement mass
  double gamma = 0.0;      // explicit exponent of the loss bound
  double C_lambert = 0.0;  // -W(-alpha gamma') / (alpha gamma')
};

// Assembles every constant of the loss bound from the model: searches N with
// A kappa_+^{alpha N} <= c0/4, then evaluates the explicit gamma formula.
TreeConstants tree_constants(const GibbsModel& model, double gamma0,
                             int pressure_depth = 5,
                             int max_N = 8,
                             std::uint64_t budget = kDefaultWordBudget);

struct TreeLoss {
  double L = 0.0;
  double bound = 0.0;
  bool pass = false;
};

// L = sum over words of length n with last letter b(a1) of
// w_word(x) 1_{[t - sigma, t + sigma]}(lambda^alpha_word(y, z)), evaluated by
// depth-first search with certified interval pruning; bound =
// (4 sigma / c0)^gamma + exp(-alpha_N (n - N)).
TreeLoss tree_loss(const GibbsModel& model, double x, double y, double z,
                   double t, double sigma, int n, const TreeConstants& tc,
                   std::uint64_t budget = kDefaultWordBudget);

// Direct enumeration oracle for small n (no pruning).
double tree_loss_exhaustive(const GibbsModel& model, double x, double y,
                            double z, double t, double sigma, double alpha,
                            int n, int last_letter,
                            std::uint64_t budget = kDefaultWordBudget);

}  // namespace ff
