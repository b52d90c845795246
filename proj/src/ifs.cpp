#include "fracfour/ifs.hpp"

#include <algorithm>
#include <cmath>

#include "fracfour/models.hpp"
#include "fracfour/numerics.hpp"

namespace ff {

Interval Branch::image() const {
  const double a = map(domain.lo), b = map(domain.hi);
  return Interval{std::min(a, b), std::max(a, b)};
}

void MarkovIFS::validate() const {
  alphabet.validate();
  rule.validate();
  if (static_cast<int>(branches.size()) != alphabet.size)
    throw std::invalid_argument("MarkovIFS: branch/alphabet size mismatch");
  if (alphabet.size < 2)
    throw std::invalid_argument(
        "MarkovIFS: need at least two branches (a single branch has a "
        "one-point attractor)");
  if (!(kappa_plus > 0.0 && kappa_plus < 1.0))
    throw std::invalid_argument("MarkovIFS: kappa_plus must lie in (0,1)");
  for (const auto& br : branches) {
    const Interval im = br.image();
    if (!ambient.contains(im.lo, 1e-12) || !ambient.contains(im.hi, 1e-12))
      throw std::invalid_argument("MarkovIFS: branch image escapes ambient");
  }
}

double MarkovIFS::holder_amplitude(int grid) const {
  double ha = 0.0;
  for (const auto& br : branches) {
    if (br.dlog_deriv && distortion_alpha == 1.0) {
      // lambda^1_a(x,y) is a mean value of d/dx log|g'|; its sup equals the
      // grid sup of |d/dx log|g'|| up to grid resolution.
      for (int i = 0; i <= grid; ++i) {
        const double x =
            br.domain.lo + br.domain.length() * i / static_cast<double>(grid);
        ha = std::max(ha, std::abs(br.dlog_deriv(x)));
      }
    } else {
      for (int i = 0; i <= grid; ++i) {
        const double x =
            br.domain.lo + br.domain.length() * i / static_cast<double>(grid);
        for (int j = i + 1; j <= grid; ++j) {
          const double y = br.domain.lo +
                           br.domain.length() * j / static_cast<double>(grid);
          const double num = std::abs(br.log_deriv(x) - br.log_deriv(y));
          ha = std::max(ha,
                        num / std::pow(std::abs(x - y), distortion_alpha));
        }
      }
    }
  }
  return ha;
}

double CompositeMap::value(double x) const {
  return value_and_log_deriv(x).first;
}

double CompositeMap::log_deriv(double x) const {
  return value_and_log_deriv(x).second;
}

std::pair<double, double> CompositeMap::value_and_log_deriv(double x) const {
  const auto& letters = word_.letters;
  double v = x, ld = 0.0;
  for (int i = static_cast<int>(letters.size()) - 1; i >= 0; --i) {
    const Branch& br = ifs_->branch(letters[i]);
    if (!br.domain.contains(v, 1e-9))
      throw CompositionError(
          i, "composition escapes branch domain at stage " + std::to_string(i) +
                 " (letter " + std::to_string(letters[i]) + ")");
    ld += br.log_deriv(v);
    v = br.map(v);
  }
  return {v, ld};
}

Interval cylinder(const Word& word, const MarkovIFS& ifs) {
  if (word.letters.empty())
    throw std::invalid_argument("cylinder: empty word");
  const Interval base = ifs.branch(word.last()).domain;
  const CompositeMap g = compose(word, ifs);
  const double a = g.value(base.lo), b = g.value(base.hi);
  return Interval{std::min(a, b), std::max(a, b)};
}

DistortionReport verify_distortion(const MarkovIFS& ifs, int grid_size) {
  if (grid_size < 16)
    throw std::invalid_argument("verify_distortion: grid_size must be >= 16");
  DistortionReport rep;
  rep.alpha = ifs.distortion_alpha;
  for (const auto& br : ifs.branches) {
    std::vector<double> xs(grid_size), ld(grid_size);
    for (int i = 0; i < grid_size; ++i) {
      xs[i] = br.domain.lo +
              br.domain.length() * i / static_cast<double>(grid_size - 1);
      ld[i] = br.log_deriv(xs[i]);
      if (!std::isfinite(ld[i]))
        throw std::runtime_error("verify_distortion: non-finite derivative");
    }
    for (int i = 0; i < grid_size; ++i)
      for (int j = i + 1; j < grid_size; ++j) {
        const double num = std::abs(ld[i] - ld[j]);
        if (num == 0.0) continue;
        rep.C_est = std::max(
            rep.C_est, num / std::pow(xs[j] - xs[i], ifs.distortion_alpha));
      }
  }
  rep.pass = rep.C_est <= ifs.distortion_C + 1e-12;
  return rep;
}

Branch make_affine_branch(int label, double slope, double intercept,
                          Interval domain) {
  Branch br;
  br.label = label;
  br.domain = domain;
  br.kind = "affine";
  br.params = {{"slope", slope}, {"intercept", intercept}};
  br.map = [slope, intercept](double x) { return slope * x + intercept; };
  br.deriv = [slope](double) { return slope; };
  br.dlog_deriv = [](double) { return 0.0; };
  return br;
}

Branch make_moebius_branch(int label, double a, double b, double c, double d,
                           Interval domain) {
  Branch br;
  br.label = label;
  br.domain = domain;
  br.kind = "moebius";
  br.params = {{"a", a}, {"b", b}, {"c", c}, {"d", d}};
  const double det = a * d - b * c;
  br.map = [a, b, c, d](double x) { return (a * x + b) / (c * x + d); };
  br.deriv = [c, d, det](double x) {
    const double q = c * x + d;
    return det / (q * q);
  };
  br.dlog_deriv = [c, d](double x) { return -2.0 * c / (c * x + d); };
  return br;
}

nlohmann::json MarkovIFS::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["ambient"] = {ambient.lo, ambient.hi};
  j["kappa_plus"] = kappa_plus;
  j["distortion_C"] = distortion_C;
  j["distortion_alpha"] = distortion_alpha;
  j["alphabet"] = {{"size", alphabet.size},
                   {"tail_truncated", alphabet.tail_truncated},
                   {"tail_mass_bound", alphabet.tail_mass_bound}};
  nlohmann::json trans;
  trans["size"] = rule.size();
  nlohmann::json forbidden = nlohmann::json::array();
  for (int a = 0; a < rule.size(); ++a)
    for (int b = 0; b < rule.size(); ++b)
      if (!rule.allows(a, b)) forbidden.push_back({a, b});
  trans["forbidden_pairs"] = forbidden;
  j["transition"] = trans;
  nlohmann::json brs = nlohmann::json::array();
  for (const auto& br : branches) {
    nlohmann::json bj;
    bj["label"] = br.label;
    bj["kind"] = br.kind;
    bj["domain"] = {br.domain.lo, br.domain.hi};
    bj["params"] = br.params;
    brs.push_back(bj);
  }
  j["branches"] = brs;
  return j;
}

MarkovIFS MarkovIFS::from_json(const nlohmann::json& j) {
  MarkovIFS ifs;
  ifs.name = j.value("name", "ifs");
  if (j.contains("ambient"))
    ifs.ambient = {j["ambient"][0].get<double>(),
                   j["ambient"][1].get<double>()};
  ifs.kappa_plus = j.at("kappa_plus").get<double>();
  ifs.distortion_C = j.value("distortion_C", 0.0);
  ifs.distortion_alpha = j.value("distortion_alpha", 1.0);
  ifs.rule = TransitionRule::from_json(j.at("transition"));
  if (j.contains("alphabet")) {
    ifs.alphabet.size = j["alphabet"].value("size", ifs.rule.size());
    ifs.alphabet.tail_truncated = j["alphabet"].value("tail_truncated", false);
    ifs.alphabet.tail_mass_bound =
        j["alphabet"].value("tail_mass_bound", 0.0);
  } else {
    ifs.alphabet.size = ifs.rule.size();
  }
  for (const auto& bj : j.at("branches")) {
    const int label = bj.at("label").get<int>();
    const std::string kind = bj.at("kind").get<std::string>();
    Interval dom{bj.at("domain")[0].get<double>(),
                 bj.at("domain")[1].get<double>()};
    const nlohmann::json& p = bj.at("params");
    if (kind == "affine") {
      ifs.branches.push_back(make_affine_branch(
          label, p.at("slope").get<double>(), p.at("intercept").get<double>(),
          dom));
    } else if (kind == "moebius") {
      ifs.branches.push_back(make_moebius_branch(
          label, p.at("a").get<double>(), p.at("b").get<double>(),
          p.at("c").get<double>(), p.at("d").get<double>(), dom));
    } else if (kind == "lsv_inverse") {
      ifs.branches.push_back(make_lsv_inverse_branch(
          label, p.at("alpha").get<double>(), p.at("index").get<int>(), dom));
    } else if (kind == "lorenz_inverse") {
      ifs.branches.push_back(make_lorenz_inverse_branch(
          label, p.at("a").get<double>(), p.at("alpha").get<double>(),
          p.at("side").get<int>(), dom));
    } else if (kind == "staircase") {
      ifs.branches.push_back(make_staircase_branch_from_json(label, p, dom));
    } else {
      throw std::invalid_argument("MarkovIFS::from_json: unknown branch kind " +
                                  kind);
    }
  }
  std::sort(ifs.branches.begin(), ifs.branches.end(),
            [](const Branch& x, const Branch& y) { return x.label < y.label; });
  ifs.validate();
  return ifs;
}

}  // namespace ff
