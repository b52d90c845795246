#include "fracfour/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fracfour/numerics.hpp"

namespace ff {

OscillatoryValue oscillatory_integral(const EmpiricalMeasure& measure,
                                      const RealFn& chi, const RealFn& psi,
                                      double xi, int workers) {
  const std::size_t n = measure.samples.size();
  if (n == 0) throw std::invalid_argument("oscillatory_integral: no samples");
  struct Acc {
    KahanComplexSum s;
    KahanSum abs2;
  };
  Acc acc = parallel_chunks<Acc>(
      n, workers,
      [&](std::size_t lo, std::size_t hi) {
        Acc a;
        for (std::size_t i = lo; i < hi; ++i) {
          const double x = measure.samples[i];
          const std::complex<double> z =
              chi(x) * std::polar(1.0, xi * psi(x));
          a.s.add(z);
          a.abs2.add(std::norm(z));
        }
        return a;
      },
      [](Acc into, const Acc& from) {
        into.s.add(from.s.value());
        into.abs2.add(from.abs2.value());
        return into;
      },
      Acc{});
  OscillatoryValue out;
  out.value = acc.s.value() / static_cast<double>(n);
  out.magnitude = std::abs(out.value);
  // Complex-mean standard error: sqrt(E|z|^2 - |Ez|^2) / sqrt(n).
  const double var =
      std::max(0.0, acc.abs2.value() / n - std::norm(out.value));
  out.stderr_ = std::sqrt(var / n);
  return out;
}

OscillatoryValue oscillatory_integral_cylinder(const CylinderMeasure& measure,
                                               const MarkovIFS& ifs,
                                               const RealFn& chi,
                                               const RealFn& psi, double xi,
                                               double sup_psi_prime) {
  double max_len = 0.0;
  for (const Word& w : measure.words)
    max_len = std::max(max_len, cylinder(w, ifs).length());
  const double bound = std::abs(xi) * sup_psi_prime * max_len;
  if (bound > 0.5)
    throw std::domain_error(
        "oscillatory_integral_cylinder: discretization bound " +
        std::to_string(bound) + " exceeds 0.5; increase the depth");
  KahanComplexSum acc;
  for (std::size_t i = 0; i < measure.words.size(); ++i)
    acc.add(measure.weights[i] * chi(measure.points[i]) *
            std::polar(1.0, xi * psi(measure.points[i])));
  OscillatoryValue out;
  out.value = acc.value();
  out.magnitude = std::abs(out.value);
  out.quad_bound = bound;
  return out;
}

namespace {

std::vector<double> geometric_grid(double xi_min, double xi_max,
                                   int points_per_octave) {
  if (!(xi_min > 0.0 && xi_max / xi_min >= 256.0))
    throw std::invalid_argument("decay_profile: need xi_max/xi_min >= 2^8");
  std::vector<double> grid;
  const double step = std::pow(2.0, 1.0 / points_per_octave);
  for (double xi = xi_min; xi <= xi_max * (1.0 + 1e-12); xi *= step)
    grid.push_back(xi);
  return grid;
}

void finish_report(DecayReport& rep) {
  // Dyadic windows [2^j, 2^{j+1}); the fit target is the window supremum.
  const int j_lo = static_cast<int>(std::floor(std::log2(rep.xi_grid.front())));
  const int j_hi = static_cast<int>(std::floor(std::log2(rep.xi_grid.back())));
  for (int j = j_lo; j <= j_hi; ++j) {
    double sup = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < rep.xi_grid.size(); ++i) {
      if (rep.xi_grid[i] >= std::pow(2.0, j) &&
          rep.xi_grid[i] < std::pow(2.0, j + 1)) {
        sup = std::max(sup, rep.magnitudes[i]);
        any = true;
      }
    }
    if (!any || sup <= 0.0) continue;
    rep.window_centers.push_back(std::pow(2.0, j + 0.5));
    rep.window_sups.push_back(sup);
  }
  if (rep.window_sups.size() < 3)
    throw std::invalid_argument("decay_profile: too few dyadic windows");
  std::vector<double> lx(rep.window_sups.size()), ly(rep.window_sups.size());
  for (std::size_t i = 0; i < rep.window_sups.size(); ++i) {
    lx[i] = std::log(rep.window_centers[i]);
    ly[i] = std::log(rep.window_sups[i]);
  }
  const LineFit fit = fit_line(lx, ly);
  rep.beta = -fit.slope;
  rep.beta_stderr = fit.slope_stderr;
  rep.beta_lo95 = rep.beta - 1.96 * fit.slope_stderr;
  rep.residual = fit.residual_rms;
  rep.decay_failure = !(rep.beta > 0.0);
}

}  // namespace

DecayReport decay_profile(const EmpiricalMeasure& measure, const RealFn& chi,
                          const RealFn& psi, double xi_min, double xi_max,
                          int points_per_octave, int workers) {
  DecayReport rep;
  rep.method = "monte_carlo";
  rep.xi_grid = geometric_grid(xi_min, xi_max, points_per_octave);
  for (double xi : rep.xi_grid) {
    const OscillatoryValue v =
        oscillatory_integral(measure, chi, psi, xi, workers);
    rep.magnitudes.push_back(v.magnitude);
    rep.stderrs.push_back(v.stderr_);
  }
  finish_report(rep);
  return rep;
}

DecayReport decay_profile_cylinder(const CylinderMeasure& measure,
                                   const MarkovIFS& ifs, const RealFn& chi,
                                   const RealFn& psi, double xi_min,
                                   double xi_max, int points_per_octave,
                                   double sup_psi_prime) {
  DecayReport rep;
  rep.method = "cylinder_quadrature";
  rep.xi_grid = geometric_grid(xi_min, xi_max, points_per_octave);
  for (double xi : rep.xi_grid) {
    const OscillatoryValue v = oscillatory_integral_cylinder(
        measure, ifs, chi, psi, xi, sup_psi_prime);
    rep.magnitudes.push_back(v.magnitude);
    rep.stderrs.push_back(v.quad_bound);
  }
  finish_report(rep);
  return rep;
}

std::string decay_csv(const DecayReport& report) {
  std::ostringstream os;
  os.precision(12);
  os << "xi,magnitude,stderr,window,window_sup\n";
  for (std::size_t i = 0; i < report.xi_grid.size(); ++i) {
    const int j = static_cast<int>(std::floor(std::log2(report.xi_grid[i])));
    double sup = 0.0;
    for (std::size_t w = 0; w < report.window_centers.size(); ++w)
      if (std::abs(report.window_centers[w] - std::pow(2.0, j + 0.5)) <
          1e-9 * report.window_centers[w])
        sup = report.window_sups[w];
    os << report.xi_grid[i] << ',' << report.magnitudes[i] << ','
       << report.stderrs[i] << ',' << j << ',' << sup << '\n';
  }
  return os.str();
}

std::string decay_svg(const DecayReport& report) {
  const double W = 640, H = 480, m = 56;
  double lx0 = std::log10(report.xi_grid.front());
  double lx1 = std::log10(report.xi_grid.back());
  double ly0 = 1e300, ly1 = -1e300;
  for (double v : report.magnitudes)
    if (v > 0) {
      ly0 = std::min(ly0, std::log10(v));
      ly1 = std::max(ly1, std::log10(v));
    }
  if (ly0 > ly1) {
    ly0 = -1;
    ly1 = 0;
  }
  auto X = [&](double lx) { return m + (lx - lx0) / (lx1 - lx0) * (W - 2 * m); };
  auto Y = [&](double ly) {
    return H - m - (ly - ly0) / std::max(1e-12, ly1 - ly0) * (H - 2 * m);
  };
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='"
     << H << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='20' text-anchor='middle'>log10 |F(xi)| "
        "vs log10 xi (beta = "
     << report.beta << ")</text>\n";
  for (std::size_t i = 0; i < report.xi_grid.size(); ++i)
    if (report.magnitudes[i] > 0)
      os << "<circle cx='" << X(std::log10(report.xi_grid[i])) << "' cy='"
         << Y(std::log10(report.magnitudes[i])) << "' r='2' fill='steelblue'/>\n";
  for (std::size_t i = 0; i < report.window_centers.size(); ++i)
    os << "<circle cx='" << X(std::log10(report.window_centers[i])) << "' cy='"
       << Y(std::log10(report.window_sups[i]))
       << "' r='4' fill='none' stroke='crimson'/>\n";
  if (!report.window_centers.empty()) {
    // Fitted line through the first window supremum with slope -beta.
    const double la = std::log10(report.window_centers.front());
    const double lb = std::log10(report.window_centers.back());
    const double ya = std::log10(report.window_sups.front());
    const double yb = ya - report.beta * (lb - la);
    os << "<line x1='" << X(la) << "' y1='" << Y(ya) << "' x2='" << X(lb)
       << "' y2='" << Y(yb) << "' stroke='black' stroke-dasharray='4'/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace ff
