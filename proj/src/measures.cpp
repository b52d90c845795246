#include "fracfour/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ff {

namespace {

int draw_letter(const GibbsModel& model, double x, double u, int prev) {
  double total = 0.0;
  std::vector<double> w(model.ifs.size(), 0.0);
  for (int a = 0; a < model.ifs.size(); ++a) {
    if (prev >= 0 && !model.ifs.rule.allows(a, prev)) continue;
    const Branch& br = model.ifs.branch(a);
    if (!br.domain.contains(x, 1e-9)) continue;
    w[a] = std::exp(model.potential.eval(br, x));
    total += w[a];
  }
  if (total <= 0.0) throw std::runtime_error("sample: no applicable branch");
  double c = 0.0;
  for (int a = 0; a < model.ifs.size(); ++a) {
    c += w[a] / total;
    if (u <= c) return a;
  }
  return model.ifs.size() - 1;
}

}  // namespace

EmpiricalMeasure sample(const GibbsModel& model, int count, int depth,
                        std::uint64_t seed, int workers) {
  if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
  const CounterRng rng{seed};
  using Chunk = std::vector<double>;
  Chunk pts = parallel_chunks<Chunk>(
      count, workers,
      [&](std::uint64_t lo, std::uint64_t hi) {
        Chunk out;
        out.reserve(hi - lo);
        for (std::uint64_t i = lo; i < hi; ++i) {
          double x = model.ifs.ambient.mid();
          int prev = -1;
          for (int k = 0; k < depth; ++k) {
            const int a = draw_letter(model, x, rng.uniform(i, k), prev);
            x = model.ifs.branch(a).map(x);
            prev = a;
          }
          out.push_back(x);
        }
        return out;
      },
      [](Chunk into, const Chunk& from) {
        into.insert(into.end(), from.begin(), from.end());
        return into;
      },
      Chunk{});
  EmpiricalMeasure m;
  m.samples = std::move(pts);
  std::sort(m.samples.begin(), m.samples.end());
  m.seed = seed;
  m.gen_depth = depth;
  return m;
}

CylinderMeasure cylinder_measure(const GibbsModel& model, int depth,
                                 std::uint64_t budget) {
  CylinderMeasure cm;
  cm.depth = depth;
  KahanSum total;
  enumerate_words(
      depth, model.ifs.alphabet, model.ifs.rule,
      [&](const Word& w) {
        const double p = model.p_mass(w);
        cm.words.push_back(w);
        cm.weights.push_back(p);
        cm.points.push_back(model.ref_point(w));
        total.add(p);
      },
      budget);
  cm.total_mass = total.value();
  return cm;
}

EmpiricalMeasure pushforward(const EmpiricalMeasure& m,
                             const std::function<double(double)>& f) {
  EmpiricalMeasure out;
  out.seed = m.seed;
  out.gen_depth = m.gen_depth;
  out.samples.reserve(m.samples.size());
  for (double x : m.samples) {
    const double y = f(x);
    if (!std::isfinite(y))
      throw std::invalid_argument("pushforward: non-finite image");
    out.samples.push_back(y);
  }
  std::sort(out.samples.begin(), out.samples.end());
  return out;
}

double kolmogorov_distance(const EmpiricalMeasure& m1,
                           const EmpiricalMeasure& m2) {
  const auto& a = m1.samples;
  const auto& b = m2.samples;
  if (a.empty() || b.empty())
    throw std::invalid_argument("kolmogorov_distance: empty sample set");
  // Sup over jump points of |F1 - F2| with right-continuous CDFs; ties must
  // advance both sides at once so identical arrays give distance zero.
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (i >= a.size())
      v = b[j];
    else if (j >= b.size())
      v = a[i];
    else
      v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  return d;
}

double interval_mass(const EmpiricalMeasure& m, double lo, double hi) {
  const auto l = std::lower_bound(m.samples.begin(), m.samples.end(), lo);
  const auto h = std::upper_bound(m.samples.begin(), m.samples.end(), hi);
  return static_cast<double>(h - l) / m.samples.size();
}

double cdf(const EmpiricalMeasure& m, double x) {
  const auto h = std::upper_bound(m.samples.begin(), m.samples.end(), x);
  return static_cast<double>(h - m.samples.begin()) / m.samples.size();
}

double kolmogorov_to_uniform(const EmpiricalMeasure& m, double lo, double hi) {
  if (!(hi > lo))
    throw std::invalid_argument("kolmogorov_to_uniform: empty interval");
  double d = 0.0;
  const double n = static_cast<double>(m.samples.size());
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const double u =
        std::clamp((m.samples[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max(d, std::abs((i + 1) / n - u));
    d = std::max(d, std::abs(u - i / n));
  }
  return d;
}

}  // namespace ff
