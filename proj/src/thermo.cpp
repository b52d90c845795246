#include "fracfour/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ff {

Potential Potential::locally_constant(const std::vector<double>& masses) {
  Potential p;
  p.kind = Kind::locally_constant;
  p.log_masses.reserve(masses.size());
  for (double m : masses) {
    if (!(m > 0.0))
      throw std::invalid_argument("Potential: letter masses must be positive");
    p.log_masses.push_back(std::log(m));
  }
  return p;
}

Potential Potential::geometric(double delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("Potential: geometric delta must be in (0,1]");
  Potential p;
  p.kind = Kind::geometric;
  p.delta = delta;
  return p;
}

double Potential::eval(const Branch& branch, double x) const {
  if (kind == Kind::locally_constant) return log_masses.at(branch.label);
  return delta * branch.log_deriv(x);
}

void Potential::validate(int alphabet_size) const {
  if (kind == Kind::locally_constant) {
    if (static_cast<int>(log_masses.size()) != alphabet_size)
      throw std::invalid_argument("Potential: mass/alphabet size mismatch");
    double total = 0.0;
    for (double lm : log_masses) total += std::exp(lm);
    if (total > 1.0 + 1e-9)
      throw std::invalid_argument("Potential: letter masses sum above 1");
  }
}

double GibbsModel::log_weight(const Word& word, double x) const {
  double v = x, lw = 0.0;
  const auto& letters = word.letters;
  for (int i = static_cast<int>(letters.size()) - 1; i >= 0; --i) {
    const Branch& br = ifs.branch(letters[i]);
    if (!br.domain.contains(v, 1e-9))
      throw CompositionError(i, "gibbs weight: domain escape at stage " +
                                    std::to_string(i));
    lw += potential.eval(br, v);
    v = br.map(v);
  }
  return lw;
}

double GibbsModel::weight(const Word& word, double x) const {
  return std::exp(log_weight(word, x));
}

double GibbsModel::ref_point(const Word& word) const {
  return compose(word, ifs).value(ifs.branch(word.last()).domain.mid());
}

double GibbsModel::p_mass(const Word& word) const {
  return weight(word, ifs.branch(word.last()).domain.mid());
}

void GibbsModel::validate() const {
  ifs.validate();
  potential.validate(ifs.size());
  if (gibbs_constant < 1.0)
    throw std::invalid_argument("GibbsModel: gibbs_constant must be >= 1");
}

double gibbs_weight(const Word& word, double x, const GibbsModel& model) {
  return model.weight(word, x);
}

double transfer_apply(const std::function<double(double)>& f, double x, int n,
                      const GibbsModel& model, std::uint64_t budget) {
  KahanSum acc;
  enumerate_words(
      n, model.ifs.alphabet, model.ifs.rule,
      [&](const Word& w) {
        if (!model.ifs.rule.is_full_shift()) {
          // In the Markov case only words whose last branch domain holds x
          // act on x; overlapping full shifts act everywhere.
          if (!model.ifs.branch(w.last()).domain.contains(x, 1e-9)) return;
        }
        const CompositeMap g = compose(w, model.ifs);
        acc.add(model.weight(w, x) * f(g.value(x)));
      },
      budget);
  return acc.value();
}

ChebFun transfer_cheb(const GibbsModel& model, const ChebFun& f, double t) {
  ChebFun out = f;
  auto& vals = out.values();
  const auto& nodes = out.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double x = nodes[i];
    KahanSum acc;
    for (const Branch& br : model.ifs.branches) {
      const double ld = br.log_deriv(x);
      acc.add(std::exp(model.potential.eval(br, x) + t * ld) * f(br.map(x)));
    }
    vals[i] = acc.value();
  }
  return out;
}

namespace {

// One term of the pressure sequence: (1/n) log sum_word sup_x e^{S_n psi},
// psi = phi + t (log|g'| + lambda), sup over a grid of the last-letter
// domain inflated by the distortion modulus.
PressureEstimate pressure_term(const GibbsModel& model, double t, int n,
                               double lambda, int grid, std::uint64_t budget) {
  PressureEstimate est;
  KahanSum acc;
  const double alpha = model.ifs.distortion_alpha;
  enumerate_words(
      n, model.ifs.alphabet, model.ifs.rule,
      [&](const Word& w) {
        const Interval dom = model.ifs.branch(w.last()).domain;
        const double h = dom.length() / grid;
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= grid; ++i) {
          const double x = dom.lo + h * i;
          const CompositeMap g = compose(w, model.ifs);
          const double ld = g.log_deriv(x);
          best = std::max(best,
                          model.log_weight(w, x) + t * (ld + n * lambda));
        }
        // Certified sup: grid max inflated by the Hoelder modulus of the
        // log-weight over one grid cell, summed along the n stages.
        const double pad =
            (1.0 + std::abs(t)) * model.ifs.distortion_C *
            std::pow(h / 2.0, alpha) / (1.0 - std::pow(model.ifs.kappa_plus, alpha));
        acc.add(std::exp(best + pad));
      },
      budget);
  const double s = acc.value();
  if (!std::isfinite(s) || s <= 0.0) {
    est.divergent = true;
    est.value = std::numeric_limits<double>::infinity();
    return est;
  }
  est.value = std::log(s) / n;
  return est;
}

}  // namespace

PressureEstimate pressure(const GibbsModel& model, double t, int n_max,
                          double lambda, int grid, std::uint64_t budget) {
  if (n_max < 4) throw std::invalid_argument("pressure: n_max must be >= 4");
  PressureEstimate cur = pressure_term(model, t, n_max, lambda, grid, budget);
  if (cur.divergent) return cur;
  const PressureEstimate prev =
      pressure_term(model, t, n_max - 1, lambda, grid, budget);
  cur.cauchy_gap = std::abs(cur.value - prev.value);
  return cur;
}

double bowen_delta(const MarkovIFS& ifs, int n_max, double p_tol) {
  auto P = [&](double delta) {
    GibbsModel m;
    m.ifs = ifs;
    m.potential = Potential::geometric(std::max(delta, 1e-12));
    return pressure(m, 0.0, n_max).value;
  };
  double lo = 1e-9, hi = 1.0;
  double plo = P(lo), phi_v = P(hi);
  if (plo < 0.0)
    throw std::runtime_error("bowen_delta: pressure negative at delta ~ 0");
  if (phi_v > p_tol && plo > 0.0 && phi_v > 0.0)
    throw std::runtime_error("bowen_delta: no root in (0,1]");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double pm = P(mid);
    if (std::abs(pm) <= p_tol) return mid;
    (pm > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

LyapunovEstimate lyapunov(const GibbsModel& model, int depth,
                          std::uint64_t budget) {
  auto term = [&](int n) {
    KahanSum num, den;
    enumerate_words(
        n, model.ifs.alphabet, model.ifs.rule,
        [&](const Word& w) {
          const double xm = model.ifs.branch(w.last()).domain.mid();
          const auto [v, ld] = compose(w, model.ifs).value_and_log_deriv(xm);
          (void)v;
          const double p = model.weight(w, xm);
          num.add(-p * ld);
          den.add(p);
        },
        budget);
    return num.value() / den.value() / n;
  };
  LyapunovEstimate est;
  est.value = term(depth);
  est.stderr_ = depth > 1 ? std::abs(est.value - term(depth - 1)) : 0.0;
  return est;
}

namespace {

// One chaos-game trajectory letter draw: probability proportional to
// exp(phi(a, x)) over branches applicable at x.
int draw_letter(const GibbsModel& model, double x, double u, int prev) {
  std::vector<double> w(model.ifs.size(), 0.0);
  double total = 0.0;
  for (int a = 0; a < model.ifs.size(); ++a) {
    if (prev >= 0 && !model.ifs.rule.allows(a, prev)) continue;
    const Branch& br = model.ifs.branch(a);
    if (!br.domain.contains(x, 1e-9)) continue;
    w[a] = std::exp(model.potential.eval(br, x));
    total += w[a];
  }
  if (total <= 0.0)
    throw std::runtime_error("lyapunov_mc: no applicable branch");
  double c = 0.0;
  for (int a = 0; a < model.ifs.size(); ++a) {
    c += w[a] / total;
    if (u <= c) return a;
  }
  return model.ifs.size() - 1;
}

}  // namespace

LyapunovEstimate lyapunov_mc(const GibbsModel& model, int samples, int depth,
                             std::uint64_t seed, int workers) {
  const CounterRng rng{seed};
  struct Acc {
    KahanSum s, s2;
  };
  Acc acc = parallel_chunks<Acc>(
      samples, workers,
      [&](std::size_t lo, std::size_t hi) {
        Acc a;
        for (std::size_t i = lo; i < hi; ++i) {
          double x = model.ifs.ambient.mid();
          double lsum = 0.0;
          int prev = -1;
          for (int k = 0; k < depth; ++k) {
            const int letter =
                draw_letter(model, x, rng.uniform(i, k), prev);
            const Branch& br = model.ifs.branch(letter);
            lsum += br.log_deriv(x);
            x = br.map(x);
            prev = letter;
          }
          const double v = -lsum / depth;
          a.s.add(v);
          a.s2.add(v * v);
        }
        return a;
      },
      [](Acc into, const Acc& from) {
        into.s.add(from.s.value());
        into.s2.add(from.s2.value());
        return into;
      },
      Acc{});
  LyapunovEstimate est;
  const double n = samples;
  est.value = acc.s.value() / n;
  const double var = std::max(0.0, acc.s2.value() / n - est.value * est.value);
  est.stderr_ = std::sqrt(var / n);
  return est;
}

LightTail light_tail_constant(const GibbsModel& model, double gamma0,
                              int grid) {
  if (!(gamma0 > 0.0))
    throw std::invalid_argument("light_tail_constant: gamma0 must be > 0");
  LightTail out;
  KahanSum acc;
  std::vector<double> terms;
  for (const Branch& br : model.ifs.branches) {
    double best = 0.0;
    for (int i = 0; i <= grid; ++i) {
      const double x = br.domain.lo + br.domain.length() * i / grid;
      best = std::max(best, std::exp(model.potential.eval(br, x) -
                                     gamma0 * br.log_deriv(x)));
    }
    const double h = br.domain.length() / grid;
    best *= std::exp((1.0 + gamma0) * model.ifs.distortion_C *
                     std::pow(h / 2.0, model.ifs.distortion_alpha));
    terms.push_back(best);
    acc.add(best);
  }
  out.value = acc.value();
  // Ratio test on the tail of the (label-ordered) terms: for truncated
  // countable alphabets the trailing ratio certifies the discarded tail.
  if (terms.size() >= 6) {
    const double r = terms.back() / terms[terms.size() - 2];
    if (r >= 1.0)
      out.divergent = true;
    else
      out.tail_bound = terms.back() * r / (1.0 - r);
  }
  return out;
}

PressureCurve pressure_curve(const GibbsModel& model, double gamma0,
                             double lambda, int n_max, int t_points) {
  PressureCurve pc;
  pc.gamma0 = gamma0;
  pc.t_gamma0 = gamma0 / 2.0;
  if (t_points < 5 || t_points % 2 == 0)
    throw std::invalid_argument("pressure_curve: t_points must be odd >= 5");
  std::vector<double> t2, absp;
  for (int i = 0; i < t_points; ++i) {
    const double t =
        -pc.t_gamma0 + 2.0 * pc.t_gamma0 * i / (t_points - 1);
    const double p = pressure(model, t, n_max, lambda).value;
    pc.ts.push_back(t);
    pc.values.push_back(p);
    if (t != 0.0) pc.eps_gamma0 = std::max(pc.eps_gamma0, std::abs(p) / (t * t));
  }
  const int mid = t_points / 2;
  pc.slope_at_zero =
      (pc.values[mid + 1] - pc.values[mid - 1]) / (pc.ts[mid + 1] - pc.ts[mid - 1]);
  return pc;
}

MomentCheck moment_check(const GibbsModel& model, int n, double t,
                         double lambda, double eps_gamma0,
                         bool exact_enumeration, std::uint64_t budget) {
  MomentCheck mc;
  if (exact_enumeration) {
    double worst = 0.0;
    const Interval amb = model.ifs.ambient;
    for (int gi = 0; gi <= 8; ++gi) {
      const double x = amb.lo + amb.length() * gi / 8.0;
      KahanSum acc;
      enumerate_words(
          n, model.ifs.alphabet, model.ifs.rule,
          [&](const Word& w) {
            if (!model.ifs.rule.is_full_shift() &&
                !model.ifs.branch(w.last()).domain.contains(x, 1e-9))
              return;
            const double ld = compose(w, model.ifs).log_deriv(x);
            acc.add(model.weight(w, x) * std::exp(t * (lambda * n + ld)));
          },
          budget);
      worst = std::max(worst, acc.value());
    }
    mc.lhs = worst;
  } else {
    ChebFun f(model.ifs.ambient.lo, model.ifs.ambient.hi, 64);
    for (double& v : f.values()) v = 1.0;
    for (int k = 0; k < n; ++k) f = transfer_cheb(model, f, t);
    double worst = 0.0;
    for (double v : f.values()) worst = std::max(worst, v);
    mc.lhs = std::exp(t * lambda * n) * worst;
  }
  mc.bound = 2.0 * model.gibbs_constant * std::exp(eps_gamma0 * n * t * t);
  mc.pass = mc.lhs <= mc.bound;
  return mc;
}

double estimate_gibbs_constant(const GibbsModel& model, int depth, int grid,
                               std::uint64_t budget) {
  double worst = 1.0;
  for (int n = 1; n <= depth; ++n) {
    enumerate_words(
        n, model.ifs.alphabet, model.ifs.rule,
        [&](const Word& w) {
          const Interval dom = model.ifs.branch(w.last()).domain;
          const double p = model.weight(w, dom.mid());
          for (int i = 0; i <= grid; ++i) {
            const double x = dom.lo + dom.length() * i / grid;
            const double wx = model.weight(w, x);
            worst = std::max({worst, wx / p, p / wx});
          }
        },
        budget);
  }
  return worst;
}

RegularityProbe regularity_probe(const std::vector<double>& sorted_samples,
                                 const std::vector<double>& scales) {
  if (sorted_samples.size() < 10000)
    throw std::invalid_argument("regularity_probe: need >= 10^4 samples");
  RegularityProbe rp;
  std::vector<double> lx, ly;
  for (double r : scales) {
    if (!(r > 0.0 && r <= 0.01))
      throw std::invalid_argument("regularity_probe: scales must be in (0,1/100]");
    std::size_t best = 0;
    for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
      const auto hi = std::upper_bound(sorted_samples.begin() + i,
                                       sorted_samples.end(),
                                       sorted_samples[i] + r);
      best = std::max(best, static_cast<std::size_t>(
                                hi - (sorted_samples.begin() + i)));
    }
    const double mass = static_cast<double>(best) / sorted_samples.size();
    if (mass >= 0.999) rp.degenerate = true;
    lx.push_back(std::log(r));
    ly.push_back(std::log(std::max(mass, 1e-300)));
  }
  const LineFit fit = fit_line(lx, ly);
  rp.s_est = fit.slope;
  rp.C_est = std::exp(fit.intercept);
  rp.residual = fit.residual_rms;
  return rp;
}

}  // namespace ff
