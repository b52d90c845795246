#pragma once

// Concrete realizations of equilibrium measures: chaos-game sampling, depth-n
// cylinder measures, CDFs, pushforwards, and Kolmogorov distances.

#include <cstdint>
#include <functional>
#include <vector>

#include "fracfour/thermo.hpp"

namespace ff {

struct EmpiricalMeasure {
  std::vector<double> samples;  // sorted ascending
  std::uint64_t seed = 0;
  int gen_depth = 0;
};

struct CylinderMeasure {
  int depth = 0;
  std::vector<Word> words;
  std::vector<double> weights;  // p_word
  std::vector<double> points;   // x_word reference points
  double total_mass = 0.0;
};

// Chaos-game sampler: i.i.d. points from depth random branch applications,
// letters drawn with probability proportional to exp(phi(a, x)) at the
// current point (exact law for locally constant potentials).
EmpiricalMeasure sample(const GibbsModel& model, int count, int depth,
                        std::uint64_t seed, int workers = 1);

CylinderMeasure cylinder_measure(const GibbsModel& model, int depth,
                                 std::uint64_t budget = kDefaultWordBudget);

EmpiricalMeasure pushforward(const EmpiricalMeasure& m,
                             const std::function<double(double)>& f);

double kolmogorov_distance(const EmpiricalMeasure& m1,
                           const EmpiricalMeasure& m2);

// Mass of [lo, hi] by binary search on the sorted samples.
double interval_mass(const EmpiricalMeasure& m, double lo, double hi);

// Empirical CDF at x.
double cdf(const EmpiricalMeasure& m, double x);

// Kolmogorov distance of m to the uniform law on [lo, hi].
double kolmogorov_to_uniform(const EmpiricalMeasure& m, double lo, double hi);

}  // namespace ff
