#pragma once

// Concrete systems: the conductance IFS with accelerated Moebius branches,
// the intermittent-interval-map induced system, the induced two-branch
// Lorenz model, and the Cantor-staircase fixed-point construction.

#include <utility>
#include <vector>

#include "fracfour/ifs.hpp"
#include "fracfour/measures.hpp"
#include "fracfour/thermo.hpp"

namespace ff {

// --------------------------------------------------------------------------
// Accelerated conductance system: branches psi_n(x) = (x+t)/((n+1)(x+t)+1)
// on [0,1] with letter masses 2^{-(n+1)}.
// --------------------------------------------------------------------------

MarkovIFS lyons_ifs(double t, int n_letters);
GibbsModel lyons_model(double t, int n_letters);
// Two-branch sub-system {psi_0, psi_1} with equal masses 1/2.
GibbsModel lyons_sub_model(double t);

struct LyonsFixedPoints {
  double x0 = 0.0, x1 = 0.0, x10 = 0.0;
};

// Closed-form fixed points of psi_0, psi_1 and psi_1 o psi_0.
LyonsFixedPoints lyons_fixed_points(double t);

// Cohomological defect Q(t), closed radical form.
double lyons_Q_closed(double t);
// Same value via attracting fixed points and the chain rule.
double lyons_Q_fixed_point(double t);

// S(gamma, t) = sum_{n >= 0} 2^{-(n+1)} ((n+1) t + 1)^{2 gamma}.
double lyons_light_tail_direct(double gamma, double t, int terms);
// Closed form at gamma = 1: 6 t^2 + 4 t + 1 (geometric-series moments).
double lyons_light_tail_closed_gamma1(double t);
// Consecutive-term ratio a_{n+1} / a_n at index n (limit 1/2).
double lyons_light_tail_ratio(double gamma, double t, long long n);

// --------------------------------------------------------------------------
// Intermittent interval map T(x) = x (1 + 2^alpha x^alpha) on [0, 1/2),
// 2x - 1 on [1/2, 1]; induced full-branch system g_a = f_0 o f_1^a on
// I = [1/2, 1] with return time a + 1.
// --------------------------------------------------------------------------

struct MPSystem {
  double alpha = 0.5;
  int max_return = 2;
  std::vector<double> partition;  // x_0 = 1, x_1 = 1/2, x_{n+1} = f_1(x_n)
  MarkovIFS ifs;                  // branches g_0 .. g_{max_return - 1}
  std::vector<int> return_times;  // R = a + 1 on letter a
};

double mp_T(double alpha, double x);
// Left inverse branch: unique solution of T(u) = y with u in [0, 1/2].
double mp_f1(double alpha, double y);
MPSystem mp_build(double alpha, int max_return);
// inf over x in I of |d/dx log g_1'(x)|, closed form evaluated at x = 1.
double mp_uni_c0_closed(double alpha);
// Projection of an induced-system sample to the original map: each sample
// emits its forward orbit until the first return, normalized by count.
EmpiricalMeasure mp_project(const EmpiricalMeasure& induced,
                            const MPSystem& mp);

// --------------------------------------------------------------------------
// Induced two-branch Lorenz model on [b0, b1]:
// g0(x) = -((b1 - x)/a)^{1/alpha},  g1(x) = ((x - b0)/a)^{1/alpha}.
// --------------------------------------------------------------------------

std::pair<Branch, Branch> lorenz_branches(double a, double alpha, double b0,
                                          double b1);

struct LorenzReport {
  double x0 = 0.0, x1 = 0.0, x10 = 0.0;
  double d0 = 0.0, d1 = 0.0;  // g0'(x0), g1'(x1)
  double product = 0.0;       // d0 * d1
  double d10 = 0.0;           // (g1 o g0)'(x10)
  double defect = 0.0;        // |log d10 - log d0 - log d1|
};

LorenzReport lorenz_report(double a, double alpha, double b0, double b1);

// --------------------------------------------------------------------------
// Cantor-staircase construction: Frostman measures on [-1,1] discretized to
// M atoms; branches g_{mu,0} = kappa0 x + b0 and
// g_{mu,1}(x) = kappa int_0^x exp(mu(-inf, s]) ds + b1.
// --------------------------------------------------------------------------

struct FrostmanMeasure {
  std::vector<double> xs;  // bin centers, ascending, on [-1, 1]
  std::vector<double> ws;  // bin weights, sum 1
  // Bins are [x_i - halfwidth, x_i + halfwidth] carrying uniform density,
  // so the measure is nonatomic and its CDF continuous piecewise linear
  // (halfwidth = 0 degenerates to point atoms with a step CDF).
  double halfwidth = 0.0;
  double C = 2.0;
  double eps = 0.05;

  double cdf(double x) const;  // mu(-inf, x]
  // Worst ratio mass(I) / (C |I|^eps) over a dyadic interval probe grid;
  // <= 1 means the Frostman bound holds on the probed scales.
  double frostman_ratio() const;
};

FrostmanMeasure frostman_uniform(int M, double C = 2.0, double eps = 0.05);

// count i.i.d. samples from the piecewise-uniform measure, sorted.
EmpiricalMeasure frostman_sample(const FrostmanMeasure& mu, int count,
                                 std::uint64_t seed);

struct StaircaseIFS {
  FrostmanMeasure mu;
  double kappa = 0.05, kappa0 = 0.05;
  double b0 = 1.0 / 6.0, b1 = 5.0 / 6.0;
  double delta = 0.0;  // dimension root, set by staircase_delta_root
  MarkovIFS ifs;       // branch 0 affine, branch 1 CDF-integrated
};

StaircaseIFS staircase_build(const FrostmanMeasure& mu, double kappa,
                             double kappa0);
// zeta(alpha) = int sum_a |g_{mu,a}'(x)|^alpha dmu(x).
double staircase_zeta(const StaircaseIFS& s, double alpha);
// Bisection root of zeta(delta) = 1 to |zeta - 1| <= 1e-10; stores delta.
double staircase_delta_root(StaircaseIFS& s);
GibbsModel staircase_model(const StaircaseIFS& s);

struct PsiTrace {
  FrostmanMeasure mu_fixed;
  std::vector<double> residuals;  // Kolmogorov distance between iterates
  std::vector<double> frostman_ratios;
  std::vector<double> deltas;   // dimension root at each iterate
  std::vector<double> zeta0s;   // zeta(0) at each iterate (should be 2)
  std::vector<double> zeta1s;   // zeta(1) at each iterate
  std::vector<double> zeta_ds;  // zeta(delta) at each iterate (should be 1)
  int iterations = 0;
  bool converged = false;
};

// Fixed-point iteration of the normalized dual-operator pushforward: each
// step rebuilds the branches from mu, solves the dimension root, pushes the
// atoms with conformal weights, re-bins to the M-grid and renormalizes.
PsiTrace psi_iterate(const FrostmanMeasure& mu0, int iterations, int M,
                     double kappa, double kappa0, double tol = 1e-3);

// Branch factories used by the JSON model loader.
Branch make_lsv_inverse_branch(int label, double alpha, int index,
                               Interval domain);
Branch make_lorenz_inverse_branch(int label, double a, double alpha, int side,
                                  Interval domain);
Branch make_staircase_branch_from_json(int label, const nlohmann::json& params,
                                       Interval domain);
Branch make_staircase_branch(int label, const FrostmanMeasure& mu,
                             double kappa, double b1);

}  // namespace ff
