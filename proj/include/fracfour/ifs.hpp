// fracfour: branch maps, composite maps, cylinder intervals and the
// contraction/distortion bookkeeping of a one-dimensional Markov IFS.
#ifndef FRACFOUR_IFS_HPP
#define FRACFOUR_IFS_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracfour/symbolic.hpp"

namespace ff {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x, double pad = 0.0) const {
    return x >= lo - pad && x <= hi + pad;
  }
};

// A single contracting branch g_a with analytic value and derivative
// functions.  dlog_deriv (d/dx log|g'|) is optional; when present it enables
// certified UNI margins and exact distortion moduli.
struct Branch {
  int label = 0;
  Interval domain;
  std::function<double(double)> map;
  std::function<double(double)> deriv;
  // Optional: x -> d/dx log |g'(x)|.
  std::function<double(double)> dlog_deriv;
  std::string kind = "custom";
  nlohmann::json params;  // serialization payload for the JSON model format

  double log_deriv(double x) const { return std::log(std::abs(deriv(x))); }
  Interval image() const;
};

// Uniformly contracting IFS with a transition rule.  All models in this
// toolkit are letter-indexed: a word a_1...a_n composes n maps,
// g_word = g_{a_1} o ... o g_{a_n} (rightmost letter innermost).
struct MarkovIFS {
  std::vector<Branch> branches;
  TransitionRule rule;
  Alphabet alphabet;
  Interval ambient{0.0, 1.0};
  double kappa_plus = 0.0;      // uniform contraction bound
  double distortion_C = 0.0;    // declared Hoelder distortion constant
  double distortion_alpha = 1.0;
  std::string name = "ifs";

  const Branch& branch(int a) const { return branches.at(a); }
  int size() const { return static_cast<int>(branches.size()); }
  void validate() const;

  // One-step Hoelder amplitude sup_a sup_{x != y} |lambda^alpha_a(x, y)|,
  // evaluated on a grid (exact when dlog_deriv is available and alpha = 1).
  double holder_amplitude(int grid = 256) const;

  nlohmann::json to_json() const;
  static MarkovIFS from_json(const nlohmann::json& j);
};

struct CompositionError : std::runtime_error {
  int stage;
  CompositionError(int s, const std::string& msg)
      : std::runtime_error(msg), stage(s) {}
};

// Composite map g_word with chain-rule log-derivative.
class CompositeMap {
 public:
  CompositeMap(Word word, const MarkovIFS* ifs)
      : word_(std::move(word)), ifs_(ifs) {}

  const Word& word() const { return word_; }

  // g_word(x); throws CompositionError (naming the stage) on domain escape.
  double value(double x) const;
  // log |g_word'(x)| via the chain rule along the partial images.
  double log_deriv(double x) const;
  // Both at once (single pass).
  std::pair<double, double> value_and_log_deriv(double x) const;

 private:
  Word word_;
  const MarkovIFS* ifs_;
};

inline CompositeMap compose(const Word& word, const MarkovIFS& ifs) {
  return CompositeMap(word, &ifs);
}

// Cylinder interval I_word = g_word(domain of the innermost branch).
Interval cylinder(const Word& word, const MarkovIFS& ifs);

struct DistortionReport {
  double C_est = 0.0;
  double alpha = 1.0;
  bool pass = false;
};

// Smallest C on a grid such that |log|g'(x)| - log|g'(y)|| <= C |x-y|^alpha
// holds for every branch with the declared alpha; pass iff C_est is within
// the declared distortion_C.
DistortionReport verify_distortion(const MarkovIFS& ifs, int grid_size = 64);

// -------------------------------------------------------------------------
// Branch factories for the JSON model format (kind: affine | moebius |
// lsv_inverse | lorenz_inverse | staircase).
// -------------------------------------------------------------------------
Branch make_affine_branch(int label, double slope, double intercept,
                          Interval domain);
// Moebius x -> (a x + b) / (c x + d).
Branch make_moebius_branch(int label, double a, double b, double c, double d,
                           Interval domain);

}  // namespace ff

#endif  // FRACFOUR_IFS_HPP
