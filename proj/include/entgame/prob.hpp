#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "entgame/error.hpp"

namespace entgame {

inline constexpr double kSumTolerance = 1e-12;
inline constexpr double kRenormTolerance = 1e-9;

namespace detail {

inline std::vector<double> validate_probs(std::vector<double> v,
                                          const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string(what) + ": empty");
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0)
      throw std::invalid_argument(std::string(what) +
                                  ": negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kRenormTolerance)
    throw std::invalid_argument(std::string(what) + ": entries sum to " +
                                std::to_string(sum));
  if (std::abs(sum - 1.0) > kSumTolerance)
    for (double& x : v) x /= sum;
  return v;
}

}  // namespace detail

// Finite probability mass function over {0, ..., size-1}.
class Pmf {
 public:
  Pmf() = default;
  explicit Pmf(std::vector<double> probs)
      : p_(detail::validate_probs(std::move(probs), "Pmf")) {}

  // Normalizes a non-negative weight vector; used for derived conditionals.
  static Pmf from_weights(std::vector<double> w) {
    double s = 0.0;
    for (double x : w) {
      if (!std::isfinite(x) || x < 0.0)
        throw std::invalid_argument("Pmf::from_weights: bad weight");
      s += x;
    }
    if (s <= 0.0) throw std::invalid_argument("Pmf::from_weights: zero mass");
    for (double& x : w) x /= s;
    Pmf out;
    out.p_ = std::move(w);
    return out;
  }

  static Pmf point_mass(int size, int at) {
    std::vector<double> v(size, 0.0);
    v.at(at) = 1.0;
    return Pmf(std::move(v));
  }

  static Pmf uniform(int size) {
    return Pmf(std::vector<double>(size, 1.0 / size));
  }

  int size() const { return static_cast<int>(p_.size()); }
  double operator[](int i) const { return p_[i]; }
  const std::vector<double>& probs() const { return p_; }
  auto begin() const { return p_.begin(); }
  auto end() const { return p_.end(); }

  bool is_deterministic() const {
    return std::count_if(p_.begin(), p_.end(),
                         [](double x) { return x > 0.0; }) == 1;
  }

 private:
  std::vector<double> p_;
};

// Joint pmf of (X, Y); rows index x, columns index y.
class JointPmf {
 public:
  JointPmf() = default;
  JointPmf(int x_size, int y_size, std::vector<double> flat)
      : nx_(x_size), ny_(y_size) {
    if (x_size <= 0 || y_size <= 0 ||
        flat.size() != static_cast<size_t>(x_size) * y_size)
      throw std::invalid_argument("JointPmf: shape mismatch");
    p_ = detail::validate_probs(std::move(flat), "JointPmf");
  }

  static JointPmf from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty())
      throw std::invalid_argument("JointPmf: empty");
    std::vector<double> flat;
    for (const auto& r : rows) {
      if (r.size() != rows.front().size())
        throw std::invalid_argument("JointPmf: ragged rows");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return JointPmf(static_cast<int>(rows.size()),
                    static_cast<int>(rows.front().size()), std::move(flat));
  }

  static JointPmf independent(const Pmf& px, const Pmf& py) {
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(px.size()) * py.size());
    for (double a : px)
      for (double b : py) flat.push_back(a * b);
    return JointPmf(px.size(), py.size(), std::move(flat));
  }

  int x_size() const { return nx_; }
  int y_size() const { return ny_; }
  double operator()(int x, int y) const {
    return p_[static_cast<size_t>(x) * ny_ + y];
  }
  const std::vector<double>& flat() const { return p_; }

  JointPmf transposed() const {
    std::vector<double> t(p_.size());
    for (int x = 0; x < nx_; ++x)
      for (int y = 0; y < ny_; ++y)
        t[static_cast<size_t>(y) * nx_ + x] = (*this)(x, y);
    JointPmf out;
    out.nx_ = ny_;
    out.ny_ = nx_;
    out.p_ = std::move(t);
    return out;
  }

  Pmf marginal_x() const {
    std::vector<double> m(nx_, 0.0);
    for (int x = 0; x < nx_; ++x)
      for (int y = 0; y < ny_; ++y) m[x] += (*this)(x, y);
    return Pmf::from_weights(std::move(m));
  }

  Pmf marginal_y() const {
    std::vector<double> m(ny_, 0.0);
    for (int x = 0; x < nx_; ++x)
      for (int y = 0; y < ny_; ++y) m[y] += (*this)(x, y);
    return Pmf::from_weights(std::move(m));
  }

 private:
  int nx_ = 0;
  int ny_ = 0;
  std::vector<double> p_;
};

struct JointDecomposition {
  Pmf marginal_x;
  Pmf marginal_y;
  // Empty entries mark conditionals on zero-probability events.
  std::vector<std::optional<Pmf>> x_given_y;
  std::vector<std::optional<Pmf>> y_given_x;
};

inline JointDecomposition joint_decompose(const JointPmf& j) {
  JointDecomposition d{j.marginal_x(), j.marginal_y(), {}, {}};
  for (int y = 0; y < j.y_size(); ++y) {
    if (d.marginal_y[y] <= 0.0) {
      d.x_given_y.emplace_back();
      continue;
    }
    std::vector<double> w(j.x_size());
    for (int x = 0; x < j.x_size(); ++x) w[x] = j(x, y);
    d.x_given_y.emplace_back(Pmf::from_weights(std::move(w)));
  }
  for (int x = 0; x < j.x_size(); ++x) {
    if (d.marginal_x[x] <= 0.0) {
      d.y_given_x.emplace_back();
      continue;
    }
    std::vector<double> w(j.y_size());
    for (int y = 0; y < j.y_size(); ++y) w[y] = j(x, y);
    d.y_given_x.emplace_back(Pmf::from_weights(std::move(w)));
  }
  return d;
}

inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw std::invalid_argument("tv_distance: alphabet mismatch");
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

inline double tv_distance(const Pmf& p, const Pmf& q) {
  return tv_distance(p.probs(), q.probs());
}

inline double tv_distance(const JointPmf& p, const JointPmf& q) {
  if (p.x_size() != q.x_size() || p.y_size() != q.y_size())
    throw std::invalid_argument("tv_distance: alphabet mismatch");
  return tv_distance(p.flat(), q.flat());
}

// Tuples are flattened lexicographically with the first coordinate most
// significant.
inline std::vector<int> decode_tuple(std::uint64_t index, int radix, int len) {
  std::vector<int> out(len);
  for (int i = len - 1; i >= 0; --i) {
    out[i] = static_cast<int>(index % radix);
    index /= radix;
  }
  return out;
}

inline std::uint64_t encode_tuple(std::span<const int> digits, int radix) {
  std::uint64_t idx = 0;
  for (int d : digits) idx = idx * radix + d;
  return idx;
}

inline Pmf product_pmf(const std::vector<Pmf>& factors,
                       std::uint64_t limit = Limits{}.pmf_size) {
  if (factors.empty()) throw std::invalid_argument("product_pmf: no factors");
  std::uint64_t total = 1;
  for (const Pmf& f : factors) {
    if (total > limit / static_cast<std::uint64_t>(f.size()))
      throw EnumerationOverflow("product_pmf: too large");
    total *= f.size();
  }
  std::vector<double> cur{1.0};
  for (const Pmf& f : factors) {
    std::vector<double> next;
    next.reserve(cur.size() * f.size());
    for (double a : cur)
      for (double b : f) next.push_back(a * b);
    cur = std::move(next);
  }
  return Pmf::from_weights(std::move(cur));
}

inline Pmf iid_extend(const Pmf& p, int n,
                      std::uint64_t limit = Limits{}.pmf_size) {
  if (n < 1) throw std::invalid_argument("iid_extend: n must be positive");
  if (checked_pow(p.size(), n, limit) > limit)
    throw EnumerationOverflow("iid_extend: alphabet too large");
  return product_pmf(std::vector<Pmf>(n, p), limit);
}

// Pairs (x^n, y^n) with x-tuples as rows and y-tuples as columns.
inline JointPmf iid_extend(const JointPmf& j, int n,
                           std::uint64_t limit = Limits{}.pmf_size) {
  if (n < 1) throw std::invalid_argument("iid_extend: n must be positive");
  const std::uint64_t nx = checked_pow(j.x_size(), n, limit);
  const std::uint64_t ny = checked_pow(j.y_size(), n, limit);
  if (nx > limit || ny > limit || nx * ny > limit)
    throw EnumerationOverflow("iid_extend: joint alphabet too large");
  std::vector<double> cur{1.0};
  std::uint64_t cx = 1, cy = 1;
  for (int t = 0; t < n; ++t) {
    const int jx = j.x_size(), jy = j.y_size();
    std::vector<double> next(cx * jx * cy * jy);
    const std::uint64_t ncols = cy * jy;
    for (std::uint64_t ox = 0; ox < cx; ++ox)
      for (std::uint64_t oy = 0; oy < cy; ++oy) {
        const double base = cur[ox * cy + oy];
        if (base == 0.0) continue;
        for (int x = 0; x < jx; ++x)
          for (int y = 0; y < jy; ++y)
            next[(ox * jx + x) * ncols + oy * jy + y] = base * j(x, y);
      }
    cur = std::move(next);
    cx *= jx;
    cy *= jy;
  }
  double s = std::accumulate(cur.begin(), cur.end(), 0.0);
  for (double& v : cur) v /= s;
  return JointPmf(static_cast<int>(cx), static_cast<int>(cy), std::move(cur));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded generator; equal (seed, stream) pairs produce equal draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : seed_(seed),
        stream_(stream),
        engine_(splitmix64(seed ^ splitmix64(stream + 0x5851f42d4c957f2dULL))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent child stream keyed by k.
  Rng fork(std::uint64_t k) const {
    return Rng(seed_, splitmix64(stream_ * 0x100000001b3ULL + k + 1));
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps results platform independent.
    const std::uint64_t lim = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do x = engine_();
    while (x >= lim);
    return x % n;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

inline int sample_index(std::span<const double> p, Rng& rng) {
  const double u = rng.uniform();
  double c = 0.0;
  int last = -1;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    c += p[i];
    last = static_cast<int>(i);
    if (u < c) return last;
  }
  return last;
}

inline int sample(const Pmf& p, Rng& rng) { return sample_index(p.probs(), rng); }

// Binary-search sampler with the same outcome as sample_index.
class CdfSampler {
 public:
  explicit CdfSampler(std::span<const double> p) : cdf_(p.size()) {
    double c = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
      c += p[i];
      cdf_[i] = c;
      if (p[i] > 0.0) last_ = static_cast<int>(i);
    }
  }

  int operator()(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) return last_;
    return static_cast<int>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
  int last_ = -1;
};

}  // namespace entgame
