#include "fracfour/models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "fracfour/nonconc.hpp"
#include "fracfour/numerics.hpp"

namespace ff {

// ---------------------------------------------------------------------------
// Accelerated conductance system
// ---------------------------------------------------------------------------

namespace {

Branch lyons_branch(int label, double t) {
  // psi_n(x) = (x + t) / ((n+1)(x+t) + 1), a Moebius map with determinant 1.
  const double c = label + 1.0;
  return make_moebius_branch(label, 1.0, t, c, c * t + 1.0, Interval{0.0, 1.0});
}

}  // namespace

MarkovIFS lyons_ifs(double t, int n_letters) {
  if (!(t > 0.0 && t < 1.0))
    throw std::invalid_argument("lyons_ifs: t must be in (0,1)");
  if (n_letters < 2)
    throw std::invalid_argument("lyons_ifs: need at least two letters");
  MarkovIFS ifs;
  ifs.name = "lyons_t" + std::to_string(t);
  ifs.ambient = {0.0, 1.0};
  for (int n = 0; n < n_letters; ++n) ifs.branches.push_back(lyons_branch(n, t));
  ifs.rule = TransitionRule::full_shift(n_letters);
  ifs.alphabet.size = n_letters;
  ifs.alphabet.tail_truncated = true;
  ifs.alphabet.tail_mass_bound = std::pow(2.0, -n_letters);
  ifs.kappa_plus = 1.0 / ((1.0 + t) * (1.0 + t));
  // sup |d/dx log psi_n'| = 2(n+1) / ((n+1) t + 1), increasing in n.
  ifs.distortion_alpha = 1.0;
  ifs.distortion_C = 2.0 * n_letters / (n_letters * t + 1.0);
  ifs.validate();
  return ifs;
}

GibbsModel lyons_model(double t, int n_letters) {
  GibbsModel m;
  m.ifs = lyons_ifs(t, n_letters);
  std::vector<double> masses(n_letters);
  for (int n = 0; n < n_letters; ++n) masses[n] = std::pow(2.0, -(n + 1));
  m.potential = Potential::locally_constant(masses);
  m.tail_mass_bound = std::pow(2.0, -n_letters);
  m.gibbs_constant = 1.0;
  m.validate();
  return m;
}

GibbsModel lyons_sub_model(double t) {
  GibbsModel m;
  m.ifs = lyons_ifs(t, 2);
  m.ifs.alphabet.tail_truncated = false;
  m.ifs.alphabet.tail_mass_bound = 0.0;
  m.potential = Potential::locally_constant({0.5, 0.5});
  m.tail_mass_bound = 0.0;
  m.gibbs_constant = 1.0;
  m.validate();
  return m;
}

LyonsFixedPoints lyons_fixed_points(double t) {
  LyonsFixedPoints fp;
  fp.x0 = (-t + std::sqrt(t * t + 4.0 * t)) / 2.0;
  fp.x1 = (-t + std::sqrt(t * t + 2.0 * t)) / 2.0;
  fp.x10 = (-t * (1.0 + t) +
            std::sqrt(t * (1.0 + t) * (t + 2.0) * (t + 3.0))) /
           (3.0 + 2.0 * t);
  return fp;
}

double lyons_Q_closed(double t) {
  const double num = (t + 1.0 + std::sqrt(t * t + 2.0 * t)) *
                     (t + 2.0 + std::sqrt(t * t + 4.0 * t));
  const double den =
      2.0 * (t * t + 3.0 * t + 1.0 +
             std::sqrt(t * (1.0 + t) * (t + 2.0) * (t + 3.0)));
  return 2.0 * std::log(num / den);
}

double lyons_Q_fixed_point(double t) {
  const Branch g0 = lyons_branch(0, t), g1 = lyons_branch(1, t);
  // defect = log (g1 o g0)'(x10) - log g0'(x0) - log g1'(x1)
  return cohomology_defect(g0, g1);
}

double lyons_light_tail_direct(double gamma, double t, int terms) {
  KahanSum acc;
  for (int n = 0; n < terms; ++n)
    acc.add(std::pow(2.0, -(n + 1)) *
            std::pow((n + 1) * t + 1.0, 2.0 * gamma));
  return acc.value();
}

double lyons_light_tail_closed_gamma1(double t) {
  // sum_{m>=1} 2^{-m} (t m + 1)^2 = 6 t^2 + 4 t + 1, using the geometric
  // moment identities sum m 2^{-m} = 2 and sum m^2 2^{-m} = 6.
  return 6.0 * t * t + 4.0 * t + 1.0;
}

double lyons_light_tail_ratio(double gamma, double t, long long n) {
  return 0.5 * std::pow(((n + 2) * t + 1.0) / ((n + 1) * t + 1.0), 2.0 * gamma);
}

// ---------------------------------------------------------------------------
// Intermittent interval map, induced system
// ---------------------------------------------------------------------------

double mp_T(double alpha, double x) {
  if (x < 0.5) return x * (1.0 + std::pow(2.0, alpha) * std::pow(x, alpha));
  return 2.0 * x - 1.0;
}

double mp_f1(double alpha, double y) {
  if (!(y >= 0.0 && y <= 1.0))
    throw std::invalid_argument("mp_f1: y outside [0,1]");
  if (y == 0.0) return 0.0;
  if (y == 1.0) return 0.5;
  // Left branch u -> u (1 + 2^alpha u^alpha) increases from 0 to 1 on [0,1/2];
  // safeguarded Newton with a bisection fallback bracket.
  const double two_a = std::pow(2.0, alpha);
  double lo = 0.0, hi = 0.5, u = 0.5 * y;
  for (int it = 0; it < 100; ++it) {
    const double ua = std::pow(u, alpha);
    const double f = u * (1.0 + two_a * ua) - y;
    if (f > 0.0)
      hi = u;
    else
      lo = u;
    const double fp = 1.0 + (alpha + 1.0) * two_a * ua;
    double next = u - f / fp;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) <= 1e-16 + 1e-16 * u) return next;
    u = next;
  }
  return u;
}

namespace {

double mp_Tp(double alpha, double x) {  // T'(x) on the left branch
  return 1.0 + (alpha + 1.0) * std::pow(2.0, alpha) * std::pow(x, alpha);
}

double mp_Tpp(double alpha, double x) {  // T''(x) on the left branch
  return alpha * (alpha + 1.0) * std::pow(2.0, alpha) * std::pow(x, alpha - 1.0);
}

Branch mp_branch(int label, double alpha) {
  // g_a = f_0 o f_1^a on I = [1/2, 1], f_0(x) = (x+1)/2.
  const int a = label;
  Branch br;
  br.label = label;
  br.domain = Interval{0.5, 1.0};
  br.kind = "lsv_inverse";
  br.params = {{"alpha", alpha}, {"index", a}};
  br.map = [alpha, a](double x) {
    for (int k = 0; k < a; ++k) x = mp_f1(alpha, x);
    return 0.5 * (x + 1.0);
  };
  br.deriv = [alpha, a](double x) {
    double d = 0.5;
    for (int k = 0; k < a; ++k) {
      x = mp_f1(alpha, x);
      d /= mp_Tp(alpha, x);
    }
    return d;
  };
  br.dlog_deriv = [alpha, a](double x) {
    // d/dx log (f_1^a)'(x) = sum_k (-T''/T'^2)(f_1(y_k)) (f_1^k)'(x).
    double out = 0.0, inner = 1.0, y = x;
    for (int k = 0; k < a; ++k) {
      const double w = mp_f1(alpha, y);
      const double f1p = 1.0 / mp_Tp(alpha, w);
      out += -mp_Tpp(alpha, w) / (mp_Tp(alpha, w) * mp_Tp(alpha, w)) * inner;
      inner *= f1p;
      y = w;
    }
    return out;
  };
  return br;
}

}  // namespace

MPSystem mp_build(double alpha, int max_return) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("mp_build: alpha must be in (0,1)");
  if (max_return < 2)
    throw std::invalid_argument("mp_build: max_return must be >= 2");
  MPSystem mp;
  mp.alpha = alpha;
  mp.max_return = max_return;
  mp.partition = {1.0, 0.5};
  for (int n = 1; n <= max_return; ++n)
    mp.partition.push_back(mp_f1(alpha, mp.partition.back()));
  const int L = max_return + 1;  // letters 0 .. max_return
  mp.ifs.name = "mp_alpha" + std::to_string(alpha);
  mp.ifs.ambient = {0.5, 1.0};
  for (int a = 0; a < L; ++a) {
    mp.ifs.branches.push_back(mp_branch(a, alpha));
    mp.return_times.push_back(a + 1);
  }
  mp.ifs.rule = TransitionRule::full_shift(L);
  mp.ifs.alphabet.size = L;
  mp.ifs.alphabet.tail_truncated = true;
  mp.ifs.kappa_plus = 0.5;
  mp.ifs.distortion_alpha = 1.0;
  mp.ifs.distortion_C = 1.05 * mp.ifs.holder_amplitude(256);
  mp.ifs.validate();
  return mp;
}

double mp_uni_c0_closed(double alpha) {
  // The integrand decreases in u = f_1(x), so the infimum over I is at x = 1.
  const double u = mp_f1(alpha, 1.0);
  const double q = 1.0 + (alpha + 1.0) * std::pow(2.0, alpha) * std::pow(u, alpha);
  return alpha * (alpha + 1.0) * std::pow(2.0, alpha) *
         std::pow(u, alpha - 1.0) / (q * q);
}

EmpiricalMeasure mp_project(const EmpiricalMeasure& induced,
                            const MPSystem& mp) {
  EmpiricalMeasure out;
  out.seed = induced.seed;
  out.gen_depth = induced.gen_depth;
  for (double x : induced.samples) {
    if (x < 0.5 - 1e-12)
      throw std::invalid_argument("mp_project: sample outside the induced domain");
    out.samples.push_back(x);
    double y = mp_T(mp.alpha, std::max(x, 0.5));
    int guard = 0;
    while (y < 0.5 && guard++ < 100000) {
      out.samples.push_back(y);
      y = mp_T(mp.alpha, y);
    }
  }
  std::sort(out.samples.begin(), out.samples.end());
  return out;
}

// ---------------------------------------------------------------------------
// Induced two-branch Lorenz model
// ---------------------------------------------------------------------------

Branch make_lorenz_inverse_branch(int label, double a, double alpha, int side,
                                  Interval domain) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(a > 0.0))
    throw std::invalid_argument("lorenz branch: invalid parameters");
  const double p = 1.0 / alpha;
  Branch br;
  br.label = label;
  br.domain = domain;
  br.kind = "lorenz_inverse";
  br.params = {{"a", a}, {"alpha", alpha}, {"side", side}};
  const double b0 = domain.lo, b1 = domain.hi;
  if (side == 0) {
    br.map = [=](double x) { return -std::pow((b1 - x) / a, p); };
    br.deriv = [=](double x) {
      return (p / a) * std::pow((b1 - x) / a, p - 1.0);
    };
    br.dlog_deriv = [=](double x) { return (p - 1.0) / (b1 - x); };
  } else {
    br.map = [=](double x) { return std::pow((x - b0) / a, p); };
    br.deriv = [=](double x) {
      return (p / a) * std::pow((x - b0) / a, p - 1.0);
    };
    br.dlog_deriv = [=](double x) { return (p - 1.0) / (x - b0); };
  }
  return br;
}

std::pair<Branch, Branch> lorenz_branches(double a, double alpha, double b0,
                                          double b1) {
  const Interval dom{b0, b1};
  return {make_lorenz_inverse_branch(0, a, alpha, 0, dom),
          make_lorenz_inverse_branch(1, a, alpha, 1, dom)};
}

LorenzReport lorenz_report(double a, double alpha, double b0, double b1) {
  if (!(a > 0.0) || !(b0 < b1))
    throw std::invalid_argument("lorenz_report: invalid parameters");
  const auto [g0, g1] = lorenz_branches(a, alpha, b0, b1);
  LorenzReport r;
  r.x0 = attracting_fixed_point([&](double x) { return g0.map(x); }, b0, b1);
  r.x1 = attracting_fixed_point([&](double x) { return g1.map(x); }, b0, b1);
  r.x10 =
      attracting_fixed_point([&](double x) { return g1.map(g0.map(x)); }, b0, b1);
  r.d0 = g0.deriv(r.x0);
  r.d1 = g1.deriv(r.x1);
  r.product = r.d0 * r.d1;
  r.d10 = g1.deriv(g0.map(r.x10)) * g0.deriv(r.x10);
  r.defect = std::abs(std::log(r.d10) - std::log(r.d0) - std::log(r.d1));
  return r;
}

// ---------------------------------------------------------------------------
// Cantor-staircase construction
// ---------------------------------------------------------------------------

double FrostmanMeasure::cdf(double x) const {
  // mu(-inf, x].  With halfwidth > 0 the mass of each bin is spread
  // uniformly over [x_i - h, x_i + h], so the CDF is continuous and
  // piecewise linear; halfwidth = 0 degenerates to the inclusive step CDF.
  double acc = 0.0;
  const auto hi = std::upper_bound(xs.begin(), xs.end(), x + halfwidth);
  for (auto it = xs.begin(); it != hi; ++it) {
    const std::size_t i = it - xs.begin();
    if (halfwidth > 0.0 && x < xs[i] + halfwidth) {
      const double frac = (x - (xs[i] - halfwidth)) / (2.0 * halfwidth);
      acc += ws[i] * std::clamp(frac, 0.0, 1.0);
    } else {
      acc += ws[i];
    }
  }
  return acc;
}

double FrostmanMeasure::frostman_ratio() const {
  std::vector<double> prefix(ws.size() + 1, 0.0);
  for (std::size_t i = 0; i < ws.size(); ++i) prefix[i + 1] = prefix[i] + ws[i];
  auto mass = [&](double lo, double hi) {
    const std::size_t a =
        std::lower_bound(xs.begin(), xs.end(), lo) - xs.begin();
    const std::size_t b =
        std::upper_bound(xs.begin(), xs.end(), hi) - xs.begin();
    return prefix[b] - prefix[a];
  };
  double worst = 0.0;
  for (int l = 8; l <= 14; ++l) {
    const double len = 2.0 * std::pow(2.0, -l);
    for (double lo = -1.0; lo + len <= 1.0; lo += len / 4.0)
      worst = std::max(worst, mass(lo, lo + len) / (C * std::pow(len, eps)));
  }
  return worst;
}

FrostmanMeasure frostman_uniform(int M, double C, double eps) {
  FrostmanMeasure mu;
  mu.C = C;
  mu.eps = eps;
  mu.halfwidth = 1.0 / M;
  mu.xs.resize(M);
  mu.ws.assign(M, 1.0 / M);
  for (int j = 0; j < M; ++j) mu.xs[j] = -1.0 + (2.0 * j + 1.0) / M;
  return mu;
}

EmpiricalMeasure frostman_sample(const FrostmanMeasure& mu, int count,
                                 std::uint64_t seed) {
  std::vector<double> prefix(mu.ws.size() + 1, 0.0);
  for (std::size_t i = 0; i < mu.ws.size(); ++i)
    prefix[i + 1] = prefix[i] + mu.ws[i];
  CounterRng rng{seed};
  EmpiricalMeasure em;
  em.seed = seed;
  em.samples.resize(count);
  for (int i = 0; i < count; ++i) {
    const double u = rng.uniform(static_cast<std::uint64_t>(i)) * prefix.back();
    std::size_t j =
        std::upper_bound(prefix.begin(), prefix.end(), u) - prefix.begin();
    j = std::min(std::max<std::size_t>(j, 1), mu.ws.size()) - 1;
    double x = mu.xs[j];
    if (mu.halfwidth > 0.0 && mu.ws[j] > 0.0) {
      const double frac = (u - prefix[j]) / mu.ws[j];
      x += mu.halfwidth * (2.0 * std::clamp(frac, 0.0, 1.0) - 1.0);
    }
    em.samples[i] = x;
  }
  std::sort(em.samples.begin(), em.samples.end());
  return em;
}

namespace {

// Segment of a continuous piecewise-linear CDF: F(s) = F0 + rate * (s - s0)
// for s in [s0, next segment start).
struct CdfSegment {
  double s0 = 0.0;
  double F0 = 0.0;
  double rate = 0.0;
};

// int_0^len exp(F0 + rate * u) du, stable as rate -> 0.
double exp_segment_integral(double F0, double rate, double len) {
  if (len <= 0.0) return 0.0;
  const double rl = rate * len;
  if (std::abs(rl) < 1e-12)
    return std::exp(F0) * len * (1.0 + 0.5 * rl);
  return std::exp(F0) * std::expm1(rl) / rate;
}

Branch make_staircase_branch_linear(int label, const FrostmanMeasure& mu,
                                    double kappa, double b1) {
  // Bin mass spread uniformly makes F continuous piecewise linear, so
  // g'(x) = kappa * exp(F(x)) is continuous and every segment of
  // J(x) = int_{-1}^x exp(F) integrates in closed exponential form.
  auto segs = std::make_shared<std::vector<CdfSegment>>();
  double pos = -1.0, F = 0.0;
  const double h = mu.halfwidth;
  for (std::size_t i = 0; i < mu.xs.size(); ++i) {
    const double w = mu.ws[i];
    if (w <= 0.0) continue;
    const double hi = std::min(mu.xs[i] + h, 1.0);
    if (hi <= pos) {
      F += w;
      continue;
    }
    const double lo = std::max(std::max(mu.xs[i] - h, -1.0), pos);
    if (lo > pos + 1e-15) segs->push_back({pos, F, 0.0});
    segs->push_back({std::max(pos, lo), F, w / (hi - std::max(pos, lo))});
    F += w;
    pos = hi;
  }
  segs->push_back({pos, F, 0.0});
  auto integ = std::make_shared<std::vector<double>>(segs->size(), 0.0);
  for (std::size_t k = 0; k + 1 < segs->size(); ++k) {
    const CdfSegment& sg = (*segs)[k];
    (*integ)[k + 1] = (*integ)[k] + exp_segment_integral(
                                        sg.F0, sg.rate, (*segs)[k + 1].s0 - sg.s0);
  }
  auto locate = [segs](double x) {
    const std::size_t k =
        std::upper_bound(segs->begin(), segs->end(), x,
                         [](double v, const CdfSegment& s) { return v < s.s0; }) -
        segs->begin();
    return k == 0 ? std::size_t{0} : k - 1;
  };
  auto J = [segs, integ, locate](double x) {
    x = std::clamp(x, -1.0, 1.0);
    const std::size_t k = locate(x);
    const CdfSegment& sg = (*segs)[k];
    return (*integ)[k] + exp_segment_integral(sg.F0, sg.rate, x - sg.s0);
  };
  auto Fof = [segs, locate](double x) {
    x = std::clamp(x, -1.0, 1.0);
    const CdfSegment& sg = (*segs)[locate(x)];
    return sg.F0 + sg.rate * (x - sg.s0);
  };
  const double J0 = J(0.0);
  Branch br;
  br.label = label;
  br.domain = Interval{-1.0, 1.0};
  br.kind = "staircase";
  br.params = {{"kappa", kappa},         {"b1", b1},  {"xs", mu.xs},
               {"ws", mu.ws},            {"C", mu.C}, {"eps", mu.eps},
               {"halfwidth", mu.halfwidth}};
  br.map = [J, J0, kappa, b1](double x) { return kappa * (J(x) - J0) + b1; };
  br.deriv = [Fof, kappa](double x) { return kappa * std::exp(Fof(x)); };
  return br;
}

}  // namespace

Branch make_staircase_branch(int label, const FrostmanMeasure& mu,
                             double kappa, double b1) {
  if (mu.halfwidth > 0.0)
    return make_staircase_branch_linear(label, mu, kappa, b1);
  // g(x) = kappa * int_0^x exp(F(s)) ds + b1 with F the atom-cumulative CDF;
  // the integral is exact piecewise-linear summation over the atom knots.
  auto knots = std::make_shared<std::vector<double>>();
  auto levels = std::make_shared<std::vector<double>>();  // e^F on segment
  auto integral = std::make_shared<std::vector<double>>();  // int_{-1}^knot
  knots->push_back(-1.0);
  double F = 0.0;
  for (std::size_t i = 0; i < mu.xs.size(); ++i) {
    if (mu.xs[i] <= -1.0) {
      F += mu.ws[i];
      continue;
    }
    levels->push_back(std::exp(F));  // value on (prev knot, xs[i]]
    knots->push_back(std::min(mu.xs[i], 1.0));
    F += mu.ws[i];
  }
  levels->push_back(std::exp(F));
  knots->push_back(1.0 + 1e-12);
  integral->resize(knots->size(), 0.0);
  for (std::size_t i = 1; i < knots->size(); ++i)
    (*integral)[i] =
        (*integral)[i - 1] + (*levels)[i - 1] * ((*knots)[i] - (*knots)[i - 1]);
  auto J = [knots, levels, integral](double x) {
    const std::size_t i =
        std::upper_bound(knots->begin(), knots->end(), x) - knots->begin();
    if (i == 0) return 0.0;
    const std::size_t seg = std::min(i, knots->size() - 1);
    return (*integral)[seg - 1] +
           (*levels)[std::min(seg - 1, levels->size() - 1)] *
               (x - (*knots)[seg - 1]);
  };
  const double J0 = J(0.0);
  auto mu_copy = std::make_shared<FrostmanMeasure>(mu);
  Branch br;
  br.label = label;
  br.domain = Interval{-1.0, 1.0};
  br.kind = "staircase";
  br.params = {{"kappa", kappa}, {"b1", b1}, {"xs", mu.xs}, {"ws", mu.ws},
               {"C", mu.C},      {"eps", mu.eps}};
  br.map = [J, J0, kappa, b1](double x) { return kappa * (J(x) - J0) + b1; };
  br.deriv = [mu_copy, kappa](double x) {
    return kappa * std::exp(mu_copy->cdf(x));
  };
  return br;
}

Branch make_staircase_branch_from_json(int label, const nlohmann::json& params,
                                       Interval domain) {
  FrostmanMeasure mu;
  mu.xs = params.at("xs").get<std::vector<double>>();
  mu.ws = params.at("ws").get<std::vector<double>>();
  mu.C = params.value("C", 2.0);
  mu.eps = params.value("eps", 0.05);
  mu.halfwidth = params.value("halfwidth", 0.0);
  Branch br = make_staircase_branch(label, mu, params.at("kappa").get<double>(),
                                    params.at("b1").get<double>());
  br.domain = domain;
  return br;
}

Branch make_lsv_inverse_branch(int label, double alpha, int index,
                               Interval domain) {
  Branch br = mp_branch(index, alpha);
  br.label = label;
  br.domain = domain;
  return br;
}

StaircaseIFS staircase_build(const FrostmanMeasure& mu, double kappa,
                             double kappa0) {
  if (!(kappa0 > 0.0 && kappa0 <= kappa && kappa < 0.1))
    throw std::invalid_argument(
        "staircase_build: need 0 < kappa0 <= kappa < 1/10");
  StaircaseIFS s;
  s.mu = mu;
  s.kappa = kappa;
  s.kappa0 = kappa0;
  s.ifs.name = "staircase";
  s.ifs.ambient = {-1.0, 1.0};
  s.ifs.branches.push_back(
      make_affine_branch(0, kappa0, s.b0, Interval{-1.0, 1.0}));
  s.ifs.branches.push_back(make_staircase_branch(1, mu, kappa, s.b1));
  // Strong separation: branch images must stay in disjoint thirds of [0,1].
  const Interval im0 = s.ifs.branches[0].image();
  const Interval im1 = s.ifs.branches[1].image();
  if (im0.hi >= 1.0 / 3.0 || im1.lo <= 2.0 / 3.0 || im1.hi > 1.0)
    throw std::invalid_argument("staircase_build: separation impossible");
  s.ifs.rule = TransitionRule::full_shift(2);
  s.ifs.alphabet.size = 2;
  s.ifs.kappa_plus = std::max(kappa0, kappa * std::exp(1.0));
  s.ifs.distortion_alpha = mu.eps;
  s.ifs.distortion_C = mu.C;
  s.ifs.validate();
  return s;
}

double staircase_zeta(const StaircaseIFS& s, double alpha) {
  // zeta(alpha) = int sum_a |g_a'|^alpha dmu.  The affine branch contributes
  // kappa0^alpha; for the staircase branch |g_1'|^alpha = (kappa e^F)^alpha
  // integrates bin-by-bin in closed form when the bins carry uniform density
  // (F rises linearly by w_i across bin i).
  KahanSum acc;
  double F = 0.0;
  const double ka = std::pow(s.kappa, alpha);
  for (std::size_t i = 0; i < s.mu.xs.size(); ++i) {
    const double w = s.mu.ws[i];
    if (w <= 0.0) continue;
    acc.add(w * std::pow(s.kappa0, alpha));
    if (s.mu.halfwidth > 0.0) {
      const double aw = alpha * w;
      const double bin = std::abs(aw) < 1e-12
                             ? w * (1.0 + 0.5 * aw)
                             : std::expm1(aw) / alpha;
      acc.add(ka * std::exp(alpha * F) * bin);
    } else {
      acc.add(w * ka * std::exp(alpha * (F + w)));
    }
    F += w;
  }
  return acc.value();
}

double staircase_delta_root(StaircaseIFS& s) {
  double lo = 0.0, hi = 1.0;
  const double z_lo = staircase_zeta(s, lo), z_hi = staircase_zeta(s, hi);
  if (!(z_lo > 1.0 && z_hi < 1.0))
    throw std::runtime_error("staircase_delta_root: bracket failure");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double z = staircase_zeta(s, mid);
    if (std::abs(z - 1.0) <= 1e-10) {
      s.delta = mid;
      return mid;
    }
    (z > 1.0 ? lo : hi) = mid;
  }
  s.delta = 0.5 * (lo + hi);
  return s.delta;
}

GibbsModel staircase_model(const StaircaseIFS& s) {
  if (!(s.delta > 0.0))
    throw std::invalid_argument("staircase_model: solve the delta root first");
  GibbsModel m;
  m.ifs = s.ifs;
  m.potential = Potential::geometric(s.delta);
  m.gibbs_constant = 2.0;  // conservative sandwich constant for reports
  m.validate();
  return m;
}

PsiTrace psi_iterate(const FrostmanMeasure& mu0, int iterations, int M,
                     double kappa, double kappa0, double tol) {
  PsiTrace trace;
  FrostmanMeasure cur = mu0;
  for (int it = 0; it < iterations; ++it) {
    StaircaseIFS s = staircase_build(cur, kappa, kappa0);
    staircase_delta_root(s);
    trace.deltas.push_back(s.delta);
    trace.zeta0s.push_back(staircase_zeta(s, 0.0));
    trace.zeta1s.push_back(staircase_zeta(s, 1.0));
    trace.zeta_ds.push_back(staircase_zeta(s, s.delta));
    const Branch& g0 = s.ifs.branches[0];
    const Branch& g1 = s.ifs.branches[1];
    FrostmanMeasure next = cur;
    next.halfwidth = 1.0 / M;
    next.xs.resize(M);
    for (int j = 0; j < M; ++j) next.xs[j] = -1.0 + (2.0 * j + 1.0) / M;
    next.ws.assign(M, 0.0);
    auto bin = [&](double x, double w) {
      int j = static_cast<int>(std::floor((x + 1.0) * M / 2.0));
      j = std::clamp(j, 0, M - 1);
      next.ws[j] += w;
    };
    double F = 0.0;
    for (std::size_t i = 0; i < cur.xs.size(); ++i) {
      const double w = cur.ws[i];
      // Pushed staircase-branch weight int_bin (kappa e^F)^delta dmu, in the
      // same closed per-bin form as staircase_zeta.
      double w1;
      if (cur.halfwidth > 0.0 && s.delta > 0.0) {
        const double dw = s.delta * w;
        const double bin_int =
            std::abs(dw) < 1e-12 ? w * (1.0 + 0.5 * dw) : std::expm1(dw) / s.delta;
        w1 = std::pow(kappa, s.delta) * std::exp(s.delta * F) * bin_int;
      } else {
        w1 = w * std::pow(kappa * std::exp(F + w), s.delta);
      }
      F += w;
      bin(g0.map(cur.xs[i]), w * std::pow(kappa0, s.delta));
      bin(g1.map(cur.xs[i]), w1);
    }
    double total = 0.0;
    for (double w : next.ws) total += w;
    for (double& w : next.ws) w /= total;
    // Residual: sup-CDF distance between consecutive iterates on the grid.
    double resid = 0.0;
    if (static_cast<int>(cur.xs.size()) == M) {
      double ca = 0.0, cb = 0.0;
      for (int j = 0; j < M; ++j) {
        ca += cur.ws[j];
        cb += next.ws[j];
        resid = std::max(resid, std::abs(ca - cb));
      }
    } else {
      resid = 1.0;
    }
    cur = std::move(next);
    trace.residuals.push_back(resid);
    trace.frostman_ratios.push_back(cur.frostman_ratio());
    trace.iterations = it + 1;
    if (resid <= tol && it > 0) {
      trace.converged = true;
      break;
    }
  }
  trace.mu_fixed = std::move(cur);
  return trace;
}

}  // namespace ff
