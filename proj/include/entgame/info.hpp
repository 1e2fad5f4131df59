#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "entgame/jet.hpp"
#include "entgame/prob.hpp"

namespace entgame {

inline constexpr double kLn2 = std::numbers::ln2;
inline constexpr double kShannonWindow = 1e-9;

inline double shannon_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log2(x);
  return std::max(0.0, h);
}

inline double shannon_entropy(const Pmf& p) { return shannon_entropy(p.probs()); }

// H(X | Y) for rows x and columns y.
inline double conditional_shannon(const JointPmf& j) {
  double h = 0.0;
  for (int y = 0; y < j.y_size(); ++y) {
    double py = 0.0;
    for (int x = 0; x < j.x_size(); ++x) py += j(x, y);
    if (py <= 0.0) continue;
    for (int x = 0; x < j.x_size(); ++x) {
      const double v = j(x, y);
      if (v > 0.0) h -= v * std::log2(v / py);
    }
  }
  return std::max(0.0, h);
}

struct TaylorCoeffs {
  double d1 = 0.0;
  double d2 = 0.0;
};

namespace detail {

// Gauss-Legendre nodes and weights on [0, 1].
struct Quadrature {
  static constexpr int kN = 24;
  std::array<double, kN> s{};
  std::array<double, kN> w{};

  Quadrature() {
    for (int i = 0; i < kN; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (kN + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= kN; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = kN * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      s[i] = 0.5 * (1.0 - x);
      w[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  static const Quadrature& get() {
    static const Quadrature q;
    return q;
  }
};

// G(a) = ln sum_y p(y) exp(L_y(a) / a), L_y(a) = ln sum_x p(x|y)^a.
// The conditional Renyi entropy is a G(a) / ((1 - a) ln 2).
class RenyiKernel {
 public:
  explicit RenyiKernel(const JointPmf& j) {
    for (int y = 0; y < j.y_size(); ++y) {
      double py = 0.0;
      for (int x = 0; x < j.x_size(); ++x) py += j(x, y);
      if (py <= 0.0) continue;
      Block b;
      b.log_py = std::log(py);
      for (int x = 0; x < j.x_size(); ++x)
        if (j(x, y) > 0.0) b.log_cond.push_back(std::log(j(x, y) / py));
      blocks_.push_back(std::move(b));
    }
  }

  explicit RenyiKernel(const Pmf& p) {
    Block b;
    for (double x : p)
      if (x > 0.0) b.log_cond.push_back(std::log(x));
    blocks_.push_back(std::move(b));
  }

  template <int N>
  Jet<N> g(double alpha) const {
    const Jet<N> a = Jet<N>::variable(alpha);
    std::vector<Jet<N>> outer;
    outer.reserve(blocks_.size());
    for (const Block& b : blocks_) {
      double m = -std::numeric_limits<double>::infinity();
      for (double l : b.log_cond) m = std::max(m, alpha * l);
      Jet<N> sum;
      for (double l : b.log_cond) {
        Jet<N> t;
        t.c[0] = alpha * l - m;
        if constexpr (N >= 1) t.c[1] = l;
        sum = sum + exp(t);
      }
      Jet<N> ly = log(sum) + m;
      outer.push_back(ly / a + b.log_py);
    }
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& o : outer) m = std::max(m, o.c[0]);
    Jet<N> sum;
    for (const auto& o : outer) sum = sum + exp(o + (-m));
    return log(sum) + m;
  }

  // psi(a) = G(a) / (a - 1) and its first two derivatives.
  std::array<double, 3> psi(double alpha) const {
    const auto& q = Quadrature::get();
    const double t = alpha - 1.0;
    std::array<double, 3> r{0.0, 0.0, 0.0};
    for (int i = 0; i < Quadrature::kN; ++i) {
      const Jet<3> gj = g<3>(1.0 + q.s[i] * t);
      const double s = q.s[i];
      r[0] += q.w[i] * gj.derivative(1);
      r[1] += q.w[i] * s * gj.derivative(2);
      r[2] += q.w[i] * s * s * gj.derivative(3);
    }
    return r;
  }

  double entropy(double alpha) const {
    if (std::abs(alpha - 1.0) < 0.05) return -alpha * psi(alpha)[0] / kLn2;
    return alpha * g<0>(alpha).c[0] / ((1.0 - alpha) * kLn2);
  }

  double second_derivative(double alpha) const {
    const auto p = psi(alpha);
    return -(2.0 * p[1] + alpha * p[2]) / kLn2;
  }

 private:
  struct Block {
    double log_py = 0.0;
    std::vector<double> log_cond;
  };
  std::vector<Block> blocks_;
};

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("Renyi order must be positive and finite");
}

inline double d1_of(const Pmf& p) {
  double h = 0.0, m2 = 0.0;
  for (double x : p)
    if (x > 0.0) {
      const double l = std::log2(x);
      h -= x * l;
      m2 += x * l * l;
    }
  return 0.5 * kLn2 * std::max(0.0, m2 - h * h);
}

template <class Kernel>
double d2_of(const Kernel& k) {
  constexpr int kGrid = 151;
  auto f = [&](double a) { return std::abs(k.second_derivative(a)); };
  double best = -1.0, best_a = 1.0;
  const double step = 1.5 / (kGrid - 1);
  for (int i = 0; i < kGrid; ++i) {
    const double a = 0.5 + i * step;
    const double v = f(a);
    if (v > best) {
      best = v;
      best_a = a;
    }
  }
  double lo = std::max(0.5, best_a - step), hi = std::min(2.0, best_a + step);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 40; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + phi * (hi - lo);
      fd = f(d);
    }
  }
  best = std::max({best, fc, fd});
  return 0.5 * best * 1.05;
}

}  // namespace detail

inline double renyi_entropy(const Pmf& p, double alpha) {
  detail::check_alpha(alpha);
  if (std::abs(alpha - 1.0) <= kShannonWindow) return shannon_entropy(p);
  return std::max(0.0, detail::RenyiKernel(p).entropy(alpha));
}

inline double conditional_renyi(const JointPmf& j, double alpha) {
  detail::check_alpha(alpha);
  if (std::abs(alpha - 1.0) <= kShannonWindow) return conditional_shannon(j);
  return std::max(0.0, detail::RenyiKernel(j).entropy(alpha));
}

// Second derivative in alpha of the (conditional) Renyi entropy.
inline double renyi_second_derivative(const JointPmf& j, double alpha) {
  detail::check_alpha(alpha);
  return detail::RenyiKernel(j).second_derivative(alpha);
}

inline double renyi_second_derivative(const Pmf& p, double alpha) {
  detail::check_alpha(alpha);
  return detail::RenyiKernel(p).second_derivative(alpha);
}

inline TaylorCoeffs taylor_coeffs(const Pmf& p) {
  return {detail::d1_of(p), detail::d2_of(detail::RenyiKernel(p))};
}

inline TaylorCoeffs taylor_coeffs(const JointPmf& j) {
  const JointDecomposition dec = joint_decompose(j);
  double mean_d1 = 0.0, mean_h = 0.0, mean_h2 = 0.0;
  for (int y = 0; y < j.y_size(); ++y) {
    if (!dec.x_given_y[y]) continue;
    const double py = dec.marginal_y[y];
    const double hy = shannon_entropy(*dec.x_given_y[y]);
    mean_d1 += py * detail::d1_of(*dec.x_given_y[y]);
    mean_h += py * hy;
    mean_h2 += py * hy * hy;
  }
  const double d1 = mean_d1 + 0.5 * kLn2 * std::max(0.0, mean_h2 - mean_h * mean_h);
  return {d1, detail::d2_of(detail::RenyiKernel(j))};
}

}  // namespace entgame
