// fracfour: numerical utilities shared across the toolkit.
//
// Small, dependency-free helpers: bracketed root finding, Lambert W,
// compensated summation, least squares, Chebyshev interpolation and a
// counter-based splittable RNG used by all Monte Carlo estimators.
#ifndef FRACFOUR_NUMERICS_HPP
#define FRACFOUR_NUMERICS_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

namespace ff {

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

// Bisection on a bracketed sign change.  Requires f(lo) * f(hi) <= 0.
// Returns the midpoint of the final bracket; the bracket width is driven
// below xtol (or until the bracket is at floating point resolution).
template <class F>
double bisect(F f, double lo, double hi, double xtol = 1e-14,
              int max_iter = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0)
    throw std::domain_error("bisect: root not bracketed");
  for (int it = 0; it < max_iter && hi - lo > xtol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // floating point resolution
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (fm * flo < 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

// Attracting fixed point of a contraction g on [lo, hi]: damped iteration to
// get near the fixed point, then a bisection polish on g(x) - x.
template <class G>
double attracting_fixed_point(G g, double lo, double hi, double xtol = 1e-15) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double nx = std::clamp(g(x), lo, hi);
    if (std::abs(nx - x) < 1e-9) {
      x = nx;
      break;
    }
    x = nx;
  }
  // Polish: bracket the root of h(x) = g(x) - x around the iterate.
  double r = std::max(1e-6, 1e-3 * (hi - lo));
  double a = std::max(lo, x - r), b = std::min(hi, x + r);
  auto h = [&](double u) { return g(u) - u; };
  // Widen until a sign change is bracketed (guaranteed for a contraction
  // with an interior attracting fixed point).
  for (int it = 0; it < 60 && h(a) * h(b) > 0.0; ++it) {
    r *= 2.0;
    a = std::max(lo, x - r);
    b = std::min(hi, x + r);
    if (a == lo && b == hi) break;
  }
  if (h(a) * h(b) > 0.0) return x;  // fall back to the plain iterate
  return bisect(h, a, b, xtol, 256);
}

// ---------------------------------------------------------------------------
// Lambert W, principal branch, on [-1/e, 0) u (0, inf).
// Halley iteration; accuracy ~1e-14 over the used range.
// ---------------------------------------------------------------------------
inline double lambert_w0(double x) {
  const double inve = -1.0 / std::exp(1.0);
  if (x < inve - 1e-12) throw std::domain_error("lambert_w0: x < -1/e");
  if (x == 0.0) return 0.0;
  double w;
  if (x < 0.0) {
    // Series seed near the branch point, crude seed elsewhere.
    const double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
    w = (x < -0.25) ? (-1.0 + p - p * p / 3.0) : x * std::exp(-x);
  } else {
    w = (x < 1.0) ? x : std::log(x) - std::log(std::log(x) + 1e-300);
    if (x >= 1.0 && w < 0.0) w = std::log(x);
  }
  for (int it = 0; it < 64; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
    const double dw = f / denom;
    w -= dw;
    if (std::abs(dw) < 1e-16 * (1.0 + std::abs(w))) break;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Compensated (Kahan) summation
// ---------------------------------------------------------------------------
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

struct KahanComplexSum {
  KahanSum re, im;
  void add(std::complex<double> z) {
    re.add(z.real());
    im.add(z.imag());
  }
  std::complex<double> value() const { return {re.value(), im.value()}; }
};

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double residual_rms = 0.0;
  int n = 0;
};

// Ordinary least squares line y = intercept + slope * x with the usual
// homoskedastic standard error for the slope.
inline LineFit fit_line(const std::vector<double>& x,
                        const std::vector<double>& y) {
  assert(x.size() == y.size());
  LineFit out;
  out.n = static_cast<int>(x.size());
  if (out.n < 2) throw std::invalid_argument("fit_line: need >= 2 points");
  double mx = 0, my = 0;
  for (int i = 0; i < out.n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= out.n;
  my /= out.n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < out.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate x");
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ss = 0;
  for (int i = 0; i < out.n; ++i) {
    const double r = y[i] - (out.intercept + out.slope * x[i]);
    ss += r * r;
  }
  out.residual_rms = std::sqrt(ss / out.n);
  if (out.n > 2) out.slope_stderr = std::sqrt(ss / (out.n - 2) / sxx);
  return out;
}

// Least-squares quadratic y = c * x^2 through the origin with zero slope
// (used for pressure curvature fits where P(0) = 0, P'(0) = 0).
inline double fit_quadratic_coefficient(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  double num = 0, den = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    num += y[i] * x[i] * x[i];
    den += x[i] * x[i] * x[i] * x[i];
  }
  if (den == 0.0) throw std::invalid_argument("fit_quadratic: degenerate x");
  return num / den;
}

// ---------------------------------------------------------------------------
// Chebyshev interpolation on [a, b] (barycentric form, second kind nodes).
// Used as an exact-to-roundoff representation of analytic transfer-operator
// iterates.
// ---------------------------------------------------------------------------
class ChebFun {
 public:
  ChebFun(double a, double b, int n_nodes)
      : a_(a), b_(b), nodes_(n_nodes), vals_(n_nodes, 0.0) {
    assert(n_nodes >= 2);
    for (int k = 0; k < n_nodes; ++k)
      nodes_[k] = 0.5 * (a + b) +
                  0.5 * (b - a) * std::cos(M_PI * k / (n_nodes - 1));
  }

  const std::vector<double>& nodes() const { return nodes_; }
  std::vector<double>& values() { return vals_; }
  const std::vector<double>& values() const { return vals_; }

  double operator()(double x) const {
    // Barycentric weights for Chebyshev points of the second kind are
    // (-1)^k, halved at the endpoints.
    const int n = static_cast<int>(nodes_.size());
    double num = 0.0, den = 0.0;
    for (int k = 0; k < n; ++k) {
      const double diff = x - nodes_[k];
      if (diff == 0.0) return vals_[k];
      double w = (k % 2 == 0) ? 1.0 : -1.0;
      if (k == 0 || k == n - 1) w *= 0.5;
      const double q = w / diff;
      num += q * vals_[k];
      den += q;
    }
    return num / den;
  }

 private:
  double a_, b_;
  std::vector<double> nodes_;
  std::vector<double> vals_;
};

// ---------------------------------------------------------------------------
// Counter-based splittable RNG (SplitMix64 keyed by seed and counter).
// Deterministic per (seed, index) pair, so parallel sampling over disjoint
// index ranges reproduces the serial stream exactly.
// ---------------------------------------------------------------------------
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct CounterRng {
  std::uint64_t seed;
  explicit CounterRng(std::uint64_t s) : seed(s) {}

  // Uniform double in [0, 1) for stream position (index, sub).
  double uniform(std::uint64_t index, std::uint64_t sub = 0) const {
    const std::uint64_t h =
        splitmix64(seed ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + sub));
    return (h >> 11) * 0x1.0p-53;
  }
};

// ---------------------------------------------------------------------------
// Deterministic parallel map-reduce over an index range.  Results of each
// fixed-size chunk are reduced in chunk order, so the output depends only on
// (work, n, workers) and not on scheduling.
// ---------------------------------------------------------------------------
template <class Result, class ChunkFn, class CombineFn>
Result parallel_chunks(std::uint64_t n, int workers, ChunkFn chunk_fn,
                       CombineFn combine, Result init) {
  if (workers <= 1 || n < 2) {
    Result r = init;
    if (n > 0) r = combine(std::move(r), chunk_fn(0, n));
    return r;
  }
  const std::uint64_t w = static_cast<std::uint64_t>(workers);
  const std::uint64_t chunk = (n + w - 1) / w;
  std::vector<Result> partial(workers, init);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int i = 0; i < workers; ++i) {
    const std::uint64_t lo = std::min<std::uint64_t>(i * chunk, n);
    const std::uint64_t hi = std::min<std::uint64_t>(lo + chunk, n);
    pool.emplace_back([&, i, lo, hi] {
      if (lo < hi) partial[i] = chunk_fn(lo, hi);
    });
  }
  for (auto& t : pool) t.join();
  Result r = init;
  for (int i = 0; i < workers; ++i) r = combine(std::move(r), partial[i]);
  return r;
}

inline int default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace ff

#endif  // FRACFOUR_NUMERICS_HPP
