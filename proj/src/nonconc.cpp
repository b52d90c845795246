#include "fracfour/nonconc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ff {

double birkhoff_difference(const Word& word, double x, double y,
                           const MarkovIFS& ifs) {
  const CompositeMap g = compose(word, ifs);
  return g.log_deriv(x) - g.log_deriv(y);
}

double holder_quotient(const Word& word, double x, double y, double alpha,
                       const MarkovIFS& ifs) {
  if (x == y) throw std::invalid_argument("holder_quotient: x == y");
  return birkhoff_difference(word, x, y, ifs) /
         std::pow(std::abs(x - y), alpha);
}

double delta_n(const Word& a, const Word& b, double x, double y,
               const MarkovIFS& ifs) {
  if (a.length() != b.length())
    throw std::invalid_argument("delta_n: words must have equal length");
  const CompositeMap ga = compose(a, ifs), gb = compose(b, ifs);
  return (ga.log_deriv(x) - gb.log_deriv(x)) -
         (ga.log_deriv(y) - gb.log_deriv(y));
}

namespace {

struct WordTable {
  std::vector<Word> words;
  std::vector<double> p;  // normalized masses
  std::vector<double> x;  // reference points
};

WordTable word_table(const GibbsModel& model, int n, std::uint64_t budget) {
  WordTable t;
  KahanSum total;
  enumerate_words(
      n, model.ifs.alphabet, model.ifs.rule,
      [&](const Word& w) {
        t.words.push_back(w);
        const double m = model.p_mass(w);
        t.p.push_back(m);
        t.x.push_back(model.ref_point(w));
        total.add(m);
      },
      budget);
  for (double& m : t.p) m /= total.value();
  return t;
}

}  // namespace

double qnl_statistic(const GibbsModel& model, int n, double I_lo, double I_hi,
                     std::uint64_t budget) {
  if (!(I_hi >= I_lo)) throw std::invalid_argument("qnl_statistic: bad interval");
  const WordTable t = word_table(model, n, budget);
  const std::size_t W = t.words.size();
  // Guard the quadruple enumeration cost (W^3 log W after the sort trick).
  if (W > 2000) throw BudgetError(W * W * W, 2000ULL * 2000 * 2000);
  // M[i][j] = log g'_{word i}(x_{word j}).
  std::vector<std::vector<double>> M(W, std::vector<double>(W));
  for (std::size_t i = 0; i < W; ++i) {
    const CompositeMap g = compose(t.words[i], model.ifs);
    for (std::size_t j = 0; j < W; ++j) M[i][j] = g.log_deriv(t.x[j]);
  }
  KahanSum acc;
  std::vector<std::pair<double, double>> F(W);  // (value, mass) sorted
  std::vector<double> prefix(W + 1);
  for (std::size_t a = 0; a < W; ++a) {
    for (std::size_t b = 0; b < W; ++b) {
      // Delta_n((a, x_c), (b, x_d)) = F_c - F_d with F_j = M[a][j] - M[b][j].
      for (std::size_t j = 0; j < W; ++j)
        F[j] = {M[a][j] - M[b][j], t.p[j]};
      std::sort(F.begin(), F.end());
      prefix[0] = 0.0;
      for (std::size_t j = 0; j < W; ++j) prefix[j + 1] = prefix[j] + F[j].second;
      KahanSum inner;
      for (std::size_t c = 0; c < W; ++c) {
        // Mass of d with F_c - F_d in [I_lo, I_hi].
        const double lo = F[c].first - I_hi, hi = F[c].first - I_lo;
        const auto cmp_lo = std::lower_bound(
            F.begin(), F.end(), std::make_pair(lo, -1e300));
        const auto cmp_hi = std::upper_bound(
            F.begin(), F.end(), std::make_pair(hi, 1e300));
        inner.add(F[c].second * (prefix[cmp_hi - F.begin()] -
                                 prefix[cmp_lo - F.begin()]));
      }
      acc.add(t.p[a] * t.p[b] * inner.value());
    }
  }
  return acc.value();
}

MonteCarloValue qnl_statistic_mc(const GibbsModel& model, int n, double I_lo,
                                 double I_hi, int samples, std::uint64_t seed,
                                 int workers) {
  const WordTable t = word_table(model, n, kDefaultWordBudget);
  const std::size_t W = t.words.size();
  std::vector<double> cum(W);
  std::partial_sum(t.p.begin(), t.p.end(), cum.begin());
  std::vector<CompositeMap> maps;
  maps.reserve(W);
  for (const Word& w : t.words) maps.push_back(compose(w, model.ifs));
  const CounterRng rng{seed};
  auto draw = [&](double u) {
    return std::min<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u * cum.back()) - cum.begin(),
        W - 1);
  };
  struct Acc {
    KahanSum s, s2;
  };
  Acc acc = parallel_chunks<Acc>(
      samples, workers,
      [&](std::uint64_t lo, std::uint64_t hi) {
        Acc a;
        for (std::uint64_t i = lo; i < hi; ++i) {
          const std::size_t wa = draw(rng.uniform(i, 0));
          const std::size_t wb = draw(rng.uniform(i, 1));
          const std::size_t wc = draw(rng.uniform(i, 2));
          const std::size_t wd = draw(rng.uniform(i, 3));
          const double d =
              (maps[wa].log_deriv(t.x[wc]) - maps[wb].log_deriv(t.x[wc])) -
              (maps[wa].log_deriv(t.x[wd]) - maps[wb].log_deriv(t.x[wd]));
          const double v = (d >= I_lo && d <= I_hi) ? 1.0 : 0.0;
          a.s.add(v);
          a.s2.add(v);
        }
        return a;
      },
      [](Acc into, const Acc& from) {
        into.s.add(from.s.value());
        into.s2.add(from.s2.value());
        return into;
      },
      Acc{});
  MonteCarloValue mv;
  const double ns = samples;
  mv.value = acc.s.value() / ns;
  mv.stderr_ = std::sqrt(std::max(0.0, mv.value * (1.0 - mv.value)) / ns);
  return mv;
}

QnlFit qnl_fit(const GibbsModel& model, const std::vector<int>& n_values,
               const std::vector<double>& sigma_values, std::uint64_t budget) {
  if (n_values.size() < 3 || sigma_values.size() < 3)
    throw std::invalid_argument("qnl_fit: need >= 3 values of n and sigma");
  struct Obs {
    int n;
    double sigma, S;
  };
  std::vector<Obs> obs;
  double min_S = 1.0;
  for (int n : n_values)
    for (double s : sigma_values) {
      const double S = qnl_statistic(model, n, -s, s, budget);
      obs.push_back({n, s, std::max(S, 1e-12)});
      min_S = std::min(min_S, S);
    }
  QnlFit fit;
  if (min_S > 0.999) {
    fit.violation = true;
    return fit;
  }
  // Hold out the hardest cell: largest n, smallest sigma.
  std::size_t hold = 0;
  for (std::size_t i = 1; i < obs.size(); ++i)
    if (obs[i].n > obs[hold].n ||
        (obs[i].n == obs[hold].n && obs[i].sigma < obs[hold].sigma))
      hold = i;
  auto objective = [&](double Theta, double rho, double* C_out) {
    double mean = 0.0;
    int m = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (i == hold) continue;
      mean += std::log(obs[i].S) -
              std::log(std::pow(obs[i].sigma, Theta) + std::pow(rho, obs[i].n));
      ++m;
    }
    mean /= m;
    double ss = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (i == hold) continue;
      const double r =
          std::log(obs[i].S) - mean -
          std::log(std::pow(obs[i].sigma, Theta) + std::pow(rho, obs[i].n));
      ss += r * r;
    }
    if (C_out) *C_out = std::exp(mean);
    return std::sqrt(ss / m);
  };
  double bT = 0.5, bR = 0.5, best = 1e300;
  double loT = 0.02, hiT = 0.98, loR = 0.02, hiR = 0.98;
  for (int round = 0; round < 5; ++round) {
    const int G = 24;
    double nT = bT, nR = bR;
    for (int i = 0; i <= G; ++i)
      for (int j = 0; j <= G; ++j) {
        const double T = loT + (hiT - loT) * i / G;
        const double R = loR + (hiR - loR) * j / G;
        const double v = objective(T, R, nullptr);
        if (v < best) {
          best = v;
          nT = T;
          nR = R;
        }
      }
    bT = nT;
    bR = nR;
    const double wT = (hiT - loT) / G * 2, wR = (hiR - loR) / G * 2;
    loT = std::max(0.005, bT - wT);
    hiT = std::min(0.995, bT + wT);
    loR = std::max(0.005, bR - wR);
    hiR = std::min(0.995, bR + wR);
  }
  fit.Theta = bT;
  fit.rho = bR;
  fit.residual = objective(bT, bR, &fit.C);
  const double pred =
      fit.C * (std::pow(obs[hold].sigma, fit.Theta) + std::pow(fit.rho, obs[hold].n));
  fit.holdout_rel_err = std::abs(pred - obs[hold].S) / obs[hold].S;
  fit.pass = fit.Theta > 0.0 && fit.Theta < 1.0 && fit.rho > 0.0 &&
             fit.rho < 1.0 && fit.holdout_rel_err <= 0.25;
  return fit;
}

namespace {

// d/dx log g_word'(x), analytic when every stage supplies dlog_deriv,
// otherwise a central finite difference of the composite log-derivative.
double composite_dlog_deriv(const Word& word, const MarkovIFS& ifs, double x) {
  bool analytic = true;
  for (int a : word.letters)
    if (!ifs.branch(a).dlog_deriv) analytic = false;
  if (analytic) {
    // log g'_word(x) = sum_i log g'_{a_i}(x_i); the chain rule multiplies
    // each stage's dlog_deriv by the derivative of x -> x_i.
    double v = x, inner_deriv = 1.0, out = 0.0;
    for (int i = static_cast<int>(word.letters.size()) - 1; i >= 0; --i) {
      const Branch& br = ifs.branch(word.letters[i]);
      out += br.dlog_deriv(v) * inner_deriv;
      inner_deriv *= br.deriv(v);
      v = br.map(v);
    }
    return out;
  }
  const CompositeMap g = compose(word, ifs);
  const double h = 1e-6;
  return (g.log_deriv(x + h) - g.log_deriv(x - h)) / (2.0 * h);
}

struct PairMargin {
  double certified = 0.0;
  double grid_inf = 0.0;
};

// inf over x != y of |X_a - X_b| / |x - y|^alpha on the common domain.  For
// alpha = 1 the quotient is the mean value of D(u) = d/du (log g_a' - log
// g_b')(u), so a sign check plus grid infimum of |D| minus a gridwise
// Lipschitz correction certifies the margin.
PairMargin pair_margin(const Word& a, const Word& b, double alpha,
                       const MarkovIFS& ifs, const Interval& dom, int grid) {
  PairMargin pm;
  const double h = dom.length() / grid;
  if (alpha == 1.0) {
    std::vector<double> D(grid + 1);
    for (int i = 0; i <= grid; ++i) {
      const double x = dom.lo + h * i;
      D[i] = composite_dlog_deriv(a, ifs, x) - composite_dlog_deriv(b, ifs, x);
    }
    bool sign_change = false;
    double inf_abs = std::numeric_limits<double>::infinity(), lip = 0.0;
    for (int i = 0; i <= grid; ++i) {
      inf_abs = std::min(inf_abs, std::abs(D[i]));
      if (i > 0) {
        if (D[i] * D[i - 1] <= 0.0) sign_change = true;
        lip = std::max(lip, std::abs(D[i] - D[i - 1]) / h);
      }
    }
    pm.grid_inf = sign_change ? 0.0 : inf_abs;
    pm.certified = sign_change ? 0.0 : std::max(0.0, inf_abs - 2.0 * lip * h);
    return pm;
  }
  const CompositeMap ga = compose(a, ifs), gb = compose(b, ifs);
  std::vector<double> f(grid + 1);
  for (int i = 0; i <= grid; ++i) {
    const double x = dom.lo + h * i;
    f[i] = ga.log_deriv(x) - gb.log_deriv(x);
  }
  double inf_q = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid; ++i)
    for (int j = i + 1; j <= grid; ++j)
      inf_q = std::min(inf_q, std::abs(f[i] - f[j]) /
                                  std::pow(h * (j - i), alpha));
  pm.grid_inf = inf_q;
  // For alpha < 1 no gridwise mean-value certificate is available near the
  // diagonal; report half the grid infimum as a conservative margin.
  pm.certified = std::max(0.0, inf_q * 0.5);
  return pm;
}

}  // namespace

UniCertificate uni_margin(const GibbsModel& model, int N,
                          PairStrategy strategy, int grid,
                          std::uint64_t budget) {
  UniCertificate cert;
  cert.N = N;
  cert.alpha = model.ifs.distortion_alpha;
  const Interval dom = model.ifs.ambient;
  if (strategy == PairStrategy::suggested) {
    // Pair (0^{N-1} 1, 0^N): innermost letters 1 and 0.
    Word a, b;
    a.letters.assign(N - 1, 0);
    a.letters.push_back(1);
    b.letters.assign(N, 0);
    const PairMargin pm = pair_margin(a, b, cert.alpha, model.ifs,
                                      model.ifs.branch(0).domain, grid);
    cert.a = a;
    cert.b = b;
    cert.c0 = pm.certified;
    cert.c0_grid = pm.grid_inf;
    cert.found = pm.certified > 0.0;
    return cert;
  }
  std::vector<Word> words;
  enumerate_words(
      N, model.ifs.alphabet, model.ifs.rule,
      [&](const Word& w) { words.push_back(w); }, budget);
  for (std::size_t i = 0; i < words.size(); ++i)
    for (std::size_t j = i + 1; j < words.size(); ++j) {
      if (words[i].last() != words[j].last()) continue;
      const Interval d = model.ifs.branch(words[i].last()).domain;
      const PairMargin pm =
          pair_margin(words[i], words[j], cert.alpha, model.ifs, d, grid);
      if (pm.certified > cert.c0) {
        cert.c0 = pm.certified;
        cert.c0_grid = pm.grid_inf;
        cert.a = words[i];
        cert.b = words[j];
        cert.found = true;
      }
    }
  return cert;
}

double cohomology_defect(const Branch& g0, const Branch& g1) {
  const double x0 =
      attracting_fixed_point([&](double x) { return g0.map(x); },
                             g0.domain.lo, g0.domain.hi);
  const double x1 =
      attracting_fixed_point([&](double x) { return g1.map(x); },
                             g1.domain.lo, g1.domain.hi);
  const double x10 =
      attracting_fixed_point([&](double x) { return g1.map(g0.map(x)); },
                             g0.domain.lo, g0.domain.hi);
  const double comp_ld = g1.log_deriv(g0.map(x10)) + g0.log_deriv(x10);
  return comp_ld - g0.log_deriv(x0) - g1.log_deriv(x1);
}

namespace {

MnlReport mnl_from_weighted(std::vector<std::pair<double, double>> vals) {
  std::sort(vals.begin(), vals.end());
  MnlReport rep;
  const double lo = vals.front().first, hi = vals.back().first;
  const double range = hi - lo;
  if (range < 1e-12) {
    rep.diverged = true;
    rep.C_mnl = std::numeric_limits<double>::infinity();
    rep.ks_to_uniform = 1.0;
    return rep;
  }
  std::vector<double> prefix(vals.size() + 1, 0.0);
  for (std::size_t i = 0; i < vals.size(); ++i)
    prefix[i + 1] = prefix[i] + vals[i].second;
  const double total = prefix.back();
  auto mass_upto = [&](double x) {
    std::size_t idx =
        std::upper_bound(vals.begin(), vals.end(),
                         std::make_pair(x, 1e300)) -
        vals.begin();
    return prefix[idx] / total;
  };
  // Dyadic ladder of probe scales, 2^-4 .. 2^-16 of the range.
  for (int l = 4; l <= 16; ++l) {
    const double len = range * std::pow(2.0, -l);
    double worst = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double m = mass_upto(vals[i].first + len) -
                       (prefix[i] / total);
      worst = std::max(worst, m / len);
    }
    rep.C_mnl = std::max(rep.C_mnl, worst * range);  // normalized to range 1
    if (worst * range > 1e6) rep.diverged = true;
  }
  double ks = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double u = (vals[i].first - lo) / range;
    ks = std::max(ks, std::abs(prefix[i + 1] / total - u));
    ks = std::max(ks, std::abs(u - prefix[i] / total));
  }
  rep.ks_to_uniform = ks;
  return rep;
}

}  // namespace

MnlReport mnl_statistic(const GibbsModel& model, const Word& a, const Word& b,
                        double x0, int sample_count, std::uint64_t seed,
                        int workers) {
  if (a.length() != b.length())
    throw std::invalid_argument("mnl_statistic: words must have equal length");
  const EmpiricalMeasure base =
      sample(model, sample_count, 48, seed, workers);
  const CompositeMap ga = compose(a, model.ifs), gb = compose(b, model.ifs);
  const double base_a = ga.log_deriv(x0), base_b = gb.log_deriv(x0);
  std::vector<std::pair<double, double>> vals;
  vals.reserve(base.samples.size());
  for (double x : base.samples)
    vals.push_back({(ga.log_deriv(x) - base_a) - (gb.log_deriv(x) - base_b),
                    1.0});
  MnlReport rep = mnl_from_weighted(std::move(vals));
  EmpiricalMeasure pushed;
  pushed.seed = seed;
  rep.pushed = std::move(pushed);
  return rep;
}

MnlReport mnl_statistic_cylinder(const GibbsModel& model, const Word& a,
                                 const Word& b, double x0, int depth,
                                 std::uint64_t budget) {
  const CompositeMap ga = compose(a, model.ifs), gb = compose(b, model.ifs);
  const double base_a = ga.log_deriv(x0), base_b = gb.log_deriv(x0);
  std::vector<std::pair<double, double>> vals;
  KahanSum total;
  enumerate_words(
      depth, model.ifs.alphabet, model.ifs.rule,
      [&](const Word& w) {
        const double x = model.ref_point(w);
        const double p = model.p_mass(w);
        vals.push_back(
            {(ga.log_deriv(x) - base_a) - (gb.log_deriv(x) - base_b), p});
        total.add(p);
      },
      budget);
  return mnl_from_weighted(std::move(vals));
}

MnlReport mnl_statistic_weighted(const GibbsModel& model, const Word& a,
                                 const Word& b, double x0,
                                 const std::vector<double>& xs,
                                 const std::vector<double>& ws) {
  if (xs.size() != ws.size())
    throw std::invalid_argument("mnl_statistic_weighted: size mismatch");
  const CompositeMap ga = compose(a, model.ifs), gb = compose(b, model.ifs);
  const double base_a = ga.log_deriv(x0), base_b = gb.log_deriv(x0);
  std::vector<std::pair<double, double>> vals;
  vals.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ws[i] <= 0.0) continue;
    vals.push_back(
        {(ga.log_deriv(xs[i]) - base_a) - (gb.log_deriv(xs[i]) - base_b),
         ws[i]});
  }
  return mnl_from_weighted(std::move(vals));
}

TreeConstants tree_constants(const GibbsModel& model, double gamma0,
                             int pressure_depth, int max_N,
                             std::uint64_t budget) {
  TreeConstants tc;
  tc.alpha = model.ifs.distortion_alpha;
  tc.gamma0 = gamma0;
  tc.HA = model.ifs.holder_amplitude();
  tc.A = tc.HA / (1.0 - std::pow(model.ifs.kappa_plus, tc.alpha));
  tc.C_phi = model.gibbs_constant;
  tc.lambda = lyapunov(model, pressure_depth, budget).value;
  const PressureCurve pcv =
      pressure_curve(model, gamma0, tc.lambda, std::max(4, pressure_depth));
  tc.t_gamma0 = pcv.t_gamma0;
  tc.eps_gamma0 = pcv.eps_gamma0;

  // Base UNI pair at a small exhaustive depth, then extend with a common
  // outer 0-prefix until A kappa_+^{alpha N} <= c0 / 4; prefixing degrades
  // the margin only through the already-contracted inner images, so the
  // extended pair is re-certified directly.
  const int N0 = 2;
  UniCertificate base = uni_margin(model, N0, PairStrategy::exhaustive);
  if (!base.found)
    throw std::runtime_error("tree_constants: no UNI pair at depth 2");
  for (int N = N0; N <= max_N; ++N) {
    UniCertificate cand = base;
    if (N > N0) {
      Word a = base.a, b = base.b;
      a.letters.insert(a.letters.begin(), N - N0, 0);
      b.letters.insert(b.letters.begin(), N - N0, 0);
      const Interval dom = model.ifs.branch(a.last()).domain;
      const PairMargin pm = pair_margin(a, b, tc.alpha, model.ifs, dom, 64);
      cand.a = a;
      cand.b = b;
      cand.c0 = pm.certified;
      cand.c0_grid = pm.grid_inf;
      cand.N = N;
      cand.found = pm.certified > 0.0;
    }
    if (cand.found &&
        tc.A * std::pow(model.ifs.kappa_plus, tc.alpha * cand.N) <=
            cand.c0 / 4.0) {
      tc.uni = cand;
      break;
    }
    if (N == max_N)
      throw std::runtime_error("tree_constants: no admissible N <= max_N");
  }

  const int N = tc.uni.N;
  // eps_UNI: infimum weight of each pair word over the leaf domain.
  const Interval leaf_dom = model.ifs.branch(tc.uni.a.last()).domain;
  auto inf_weight = [&](const Word& w) {
    double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 32; ++i) {
      const double x = leaf_dom.lo + leaf_dom.length() * i / 32.0;
      inf = std::min(inf, model.weight(w, x));
    }
    return inf;
  };
  tc.eps_uni = std::min(inf_weight(tc.uni.a), inf_weight(tc.uni.b));

  // alpha_N = min over c in {a1, b1} of inf_x -(1/N) ln sum_{a != c} w_a(x).
  auto leak = [&](const Word& c) {
    double sup = 0.0;
    for (int i = 0; i <= 32; ++i) {
      const double x = leaf_dom.lo + leaf_dom.length() * i / 32.0;
      KahanSum s;
      enumerate_words(
          N, model.ifs.alphabet, model.ifs.rule,
          [&](const Word& w) {
            if (w.letters == c.letters) return;
            if (!model.ifs.rule.is_full_shift() &&
                !model.ifs.branch(w.last()).domain.contains(x, 1e-9))
              return;
            s.add(model.weight(w, x));
          },
          budget);
      sup = std::max(sup, s.value());
    }
    return -std::log(sup) / N;
  };
  tc.alpha_N = std::min(leak(tc.uni.a), leak(tc.uni.b));

  const double gp = std::min(gamma0 / (2.0 * tc.alpha), tc.t_gamma0 / tc.alpha);
  const double arg = tc.alpha * gp;
  if (arg >= 1.0 / M_E)
    tc.C_lambert = 1.0;  // branch point; the constant degrades to its minimum
  else
    tc.C_lambert = -lambert_w0(-arg) / arg;
  const double C = model.ifs.distortion_C;
  tc.gamma = std::min(
      {gamma0, gamma0 / (2.0 * tc.alpha), 1.0 / (tc.alpha * tc.lambda * N),
       tc.lambda / (std::max(tc.eps_gamma0, 1e-300) * tc.alpha),
       1.0 / (2.0 * (tc.lambda * N + C)),
       tc.eps_uni / (4.0 * tc.alpha * tc.C_lambert *
                     std::exp(2.0 * tc.alpha * gamma0 * C) * tc.C_phi)});
  return tc;
}

namespace {

struct TreeContext {
  const GibbsModel* model;
  double x, y, z, t, sigma, alpha, denom;
  int n;
  int leaf;
  double A;                      // HA / (1 - kappa_+^alpha)
  double kappa_alpha;            // kappa_+^alpha
  std::vector<double> tail_mass;  // (L^r 1) uniform value per remaining depth
  std::uint64_t nodes = 0, budget = 0;
  KahanSum acc;
};

// Depth-first over words built innermost-to-outermost.  State: images (u, v)
// of (y, z), accumulated X = X_suffix(y, z), image xw of x, log-weight lw.
void tree_dfs(TreeContext& ctx, int depth, double u, double v, double X,
              double xw, double lw) {
  if (++ctx.nodes > ctx.budget) throw BudgetError(ctx.nodes, ctx.budget);
  const int r = ctx.n - depth;  // letters still to prepend
  const double lam = X / ctx.denom;
  if (r == 0) {
    if (lam >= ctx.t - ctx.sigma && lam <= ctx.t + ctx.sigma)
      ctx.acc.add(std::exp(lw));
    return;
  }
  // All outward extensions change X by at most the Hoelder tail of the
  // remaining r stages applied to the current image separation.
  const double fut = ctx.A * std::pow(std::abs(u - v), ctx.alpha) *
                     (1.0 - std::pow(ctx.kappa_alpha, r));
  const double lo = (X - fut) / ctx.denom, hi = (X + fut) / ctx.denom;
  if (hi < ctx.t - ctx.sigma || lo > ctx.t + ctx.sigma) return;  // prune
  if (lo >= ctx.t - ctx.sigma && hi <= ctx.t + ctx.sigma) {
    ctx.acc.add(std::exp(lw) * ctx.tail_mass[r]);  // whole subtree inside
    return;
  }
  const MarkovIFS& ifs = ctx.model->ifs;
  for (int a = 0; a < ifs.size(); ++a) {
    const Branch& br = ifs.branch(a);
    if (!br.domain.contains(u, 1e-9) || !br.domain.contains(xw, 1e-9))
      continue;
    tree_dfs(ctx, depth + 1, br.map(u), br.map(v),
             X + br.log_deriv(u) - br.log_deriv(v), br.map(xw),
             lw + ctx.model->potential.eval(br, xw));
  }
}

}  // namespace

TreeLoss tree_loss(const GibbsModel& model, double x, double y, double z,
                   double t, double sigma, int n, const TreeConstants& tc,
                   std::uint64_t budget) {
  if (y == z) throw std::invalid_argument("tree_loss: y == z");
  TreeContext ctx;
  ctx.model = &model;
  ctx.x = x;
  ctx.y = y;
  ctx.z = z;
  ctx.t = t;
  ctx.sigma = sigma;
  ctx.alpha = tc.alpha;
  ctx.denom = std::pow(std::abs(y - z), tc.alpha);
  ctx.n = n;
  ctx.leaf = tc.uni.a.last();
  ctx.A = tc.A;
  ctx.kappa_alpha = std::pow(model.ifs.kappa_plus, tc.alpha);
  ctx.budget = budget;
  // (L^r 1): exact constant (sum of letter masses)^r for locally constant
  // potentials; otherwise a supremum via Chebyshev operator powers.
  ctx.tail_mass.assign(n + 1, 1.0);
  if (model.potential.kind == Potential::Kind::locally_constant) {
    double m = 0.0;
    for (double lm : model.potential.log_masses) m += std::exp(lm);
    for (int r = 1; r <= n; ++r) ctx.tail_mass[r] = ctx.tail_mass[r - 1] * m;
  } else {
    ChebFun f(model.ifs.ambient.lo, model.ifs.ambient.hi, 48);
    for (double& vv : f.values()) vv = 1.0;
    for (int r = 1; r <= n; ++r) {
      f = transfer_cheb(model, f, 0.0);
      double sup = 0.0;
      for (double vv : f.values()) sup = std::max(sup, vv);
      ctx.tail_mass[r] = sup;
    }
  }
  // Innermost letter fixed to the UNI leaf.
  const Branch& br = model.ifs.branch(ctx.leaf);
  tree_dfs(ctx, 1, br.map(y), br.map(z),
           br.log_deriv(y) - br.log_deriv(z), br.map(x),
           model.potential.eval(br, x));
  TreeLoss out;
  out.L = ctx.acc.value();
  out.bound = std::pow(4.0 * sigma / tc.uni.c0, tc.gamma) +
              std::exp(-tc.alpha_N * (n - tc.uni.N));
  out.pass = out.L <= out.bound;
  return out;
}

double tree_loss_exhaustive(const GibbsModel& model, double x, double y,
                            double z, double t, double sigma, double alpha,
                            int n, int last_letter, std::uint64_t budget) {
  const double denom = std::pow(std::abs(y - z), alpha);
  KahanSum acc;
  enumerate_words(
      n, model.ifs.alphabet, model.ifs.rule,
      [&](const Word& w) {
        if (w.last() != last_letter) return;
        const CompositeMap g = compose(w, model.ifs);
        const double lam = (g.log_deriv(y) - g.log_deriv(z)) / denom;
        if (lam >= t - sigma && lam <= t + sigma)
          acc.add(model.weight(w, x));
      },
      budget);
  return acc.value();
}

}  // namespace ff
