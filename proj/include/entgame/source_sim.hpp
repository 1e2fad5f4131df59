#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "entgame/error.hpp"
#include "entgame/info.hpp"
#include "entgame/prob.hpp"

namespace entgame {

// Deterministic map from source symbols to target symbols.
struct SimulatorMap {
  int domain = 0;
  int codomain = 0;
  std::vector<int> table;

  int operator()(int x) const { return table[x]; }
};

enum class SearchMode { kExhaustive, kSampled, kGreedy };

inline std::string to_string(SearchMode m) {
  switch (m) {
    case SearchMode::kExhaustive: return "exhaustive";
    case SearchMode::kSampled: return "sampled";
    case SearchMode::kGreedy: return "greedy";
  }
  return "unknown";
}

struct SimulationReport {
  double tv = 0.0;
  double bound = 1.0;
  double alpha_star = 1.0;
  std::uint64_t attempts = 0;
  SearchMode mode = SearchMode::kExhaustive;
};

struct SimulatorSearch {
  std::uint64_t exhaustive_limit = std::uint64_t{1} << 16;
  int budget = 200;
  bool greedy = true;
  std::uint64_t local_search_limit = std::uint64_t{1} << 24;
  std::uint64_t enumeration_limit = std::uint64_t{1} << 24;
};

struct SimulatorResult {
  SimulatorMap map;
  SimulationReport report;
};

struct BoundResult {
  double alpha_star = 1.0;
  double bound = 1.0;
};

inline double simulation_bound(const JointPmf& j, const Pmf& target, double alpha) {
  if (!(alpha >= 1.0 && alpha <= 2.0))
    throw std::invalid_argument("simulation_bound: alpha must lie in [1, 2]");
  if (alpha == 1.0) return 1.0;
  const double e = (1.0 - 1.0 / alpha) *
                   (conditional_renyi(j, alpha) - renyi_entropy(target, 1.0 / alpha) + 2.0);
  return std::exp2(-e);
}

namespace detail {

template <class F>
std::pair<double, double> grid_then_golden_min(F&& f, double lo, double hi,
                                               int grid = 257) {
  const double step = (hi - lo) / (grid - 1);
  int best_k = 0;
  double best = f(lo);
  for (int k = 1; k < grid; ++k) {
    const double v = f(lo + k * step);
    if (v < best) {
      best = v;
      best_k = k;
    }
  }
  double a = lo + std::max(0, best_k - 1) * step;
  double b = lo + std::min(grid - 1, best_k + 1) * step;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  double arg = lo + best_k * step;
  if (fc < best) {
    best = fc;
    arg = c;
  }
  if (fd < best) {
    best = fd;
    arg = d;
  }
  return {arg, best};
}

// Tracks the law of (f(X), Y) against target x P_Y.
class MapLaw {
 public:
  MapLaw(const JointPmf& j, const Pmf& target)
      : j_(j), na_(target.size()), ny_(j.y_size()), law_(na_ * ny_, 0.0),
        ideal_(na_ * ny_) {
    const Pmf py = j.marginal_y();
    for (int a = 0; a < na_; ++a)
      for (int y = 0; y < ny_; ++y) ideal_[a * ny_ + y] = target[a] * py[y];
  }

  double tv(const std::vector<int>& table) {
    std::fill(law_.begin(), law_.end(), 0.0);
    const int nx = j_.x_size();
    const double* p = j_.flat().data();
    for (int x = 0; x < nx; ++x) {
      double* row = &law_[static_cast<size_t>(table[x]) * ny_];
      const double* src = p + static_cast<size_t>(x) * ny_;
      for (int y = 0; y < ny_; ++y) row[y] += src[y];
    }
    return tv_distance(law_, ideal_);
  }

  const std::vector<double>& ideal() const { return ideal_; }

 private:
  const JointPmf& j_;
  int na_, ny_;
  std::vector<double> law_, ideal_;
};

inline void check_instance(const JointPmf& j, const Pmf& target,
                           std::uint64_t limit) {
  const std::uint64_t xy = static_cast<std::uint64_t>(j.x_size()) * j.y_size();
  const std::uint64_t ay = static_cast<std::uint64_t>(target.size()) * j.y_size();
  if (xy > limit || ay > limit)
    throw EnumerationOverflow("simulator instance exceeds enumeration limit");
}

// Assigns heavy source symbols first, each to the target symbol whose
// deficit it reduces most, then applies single-symbol moves.
inline std::vector<int> greedy_map(const JointPmf& j, const Pmf& target,
                                   std::uint64_t local_limit) {
  const int nx = j.x_size(), ny = j.y_size(), na = target.size();
  const Pmf px = j.marginal_x();
  std::vector<int> order(nx);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return px[a] > px[b]; });
  std::vector<int> table(nx, 0);
  const std::uint64_t work = static_cast<std::uint64_t>(nx) * na * ny;

  if (work > local_limit) {
    // Marginal version: largest remaining deficit first.
    std::priority_queue<std::pair<double, int>> heap;
    for (int a = 0; a < na; ++a) heap.push({target[a], -a});
    for (int x : order) {
      auto [deficit, neg_a] = heap.top();
      heap.pop();
      table[x] = -neg_a;
      heap.push({deficit - px[x], neg_a});
    }
    return table;
  }

  const Pmf py = j.marginal_y();
  // diff = assigned - ideal
  std::vector<double> diff(static_cast<size_t>(na) * ny);
  for (int a = 0; a < na; ++a)
    for (int y = 0; y < ny; ++y) diff[a * ny + y] = -target[a] * py[y];
  auto delta_add = [&](int x, int a, double sign) {
    double d = 0.0;
    for (int y = 0; y < ny; ++y) {
      const double v = j(x, y);
      if (v == 0.0) continue;
      const double cur = diff[a * ny + y];
      d += std::abs(cur + sign * v) - std::abs(cur);
    }
    return d;
  };
  auto apply = [&](int x, int a, double sign) {
    for (int y = 0; y < ny; ++y) diff[a * ny + y] += sign * j(x, y);
  };
  for (int x : order) {
    int best_a = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < na; ++a) {
      const double d = delta_add(x, a, 1.0);
      if (d < best - 1e-15) {
        best = d;
        best_a = a;
      }
    }
    table[x] = best_a;
    apply(x, best_a, 1.0);
  }
  for (int pass = 0; pass < 50; ++pass) {
    bool improved = false;
    for (int x : order) {
      const int cur = table[x];
      const double remove = delta_add(x, cur, -1.0);
      apply(x, cur, -1.0);
      int best_a = cur;
      double best = -remove;
      for (int a = 0; a < na; ++a) {
        if (a == cur) continue;
        const double d = delta_add(x, a, 1.0);
        if (d < best - 1e-14) {
          best = d;
          best_a = a;
        }
      }
      apply(x, best_a, 1.0);
      if (best_a != cur) {
        table[x] = best_a;
        improved = true;
      }
    }
    if (!improved) break;
  }
  return table;
}

}  // namespace detail

inline BoundResult best_simulation_bound(const JointPmf& j, const Pmf& target) {
  auto [a, b] = detail::grid_then_golden_min(
      [&](double alpha) { return simulation_bound(j, target, alpha); }, 1.0, 2.0);
  return {a, b};
}

inline double exact_tv_of_map(const SimulatorMap& f, const JointPmf& j,
                              const Pmf& target) {
  if (f.domain != j.x_size() || f.codomain != target.size() ||
      static_cast<int>(f.table.size()) != f.domain)
    throw std::invalid_argument("exact_tv_of_map: shape mismatch");
  for (int a : f.table)
    if (a < 0 || a >= f.codomain)
      throw std::invalid_argument("exact_tv_of_map: table entry out of range");
  detail::MapLaw law(j, target);
  return law.tv(f.table);
}

inline SimulatorMap sample_random_map(const Pmf& target, int domain, Rng& rng) {
  const CdfSampler s(target.probs());
  SimulatorMap f{domain, target.size(), std::vector<int>(domain)};
  for (int& a : f.table) a = s(rng);
  return f;
}

inline SimulatorResult find_simulator(const JointPmf& j, const Pmf& target,
                                      Rng& rng, const SimulatorSearch& opt = {}) {
  detail::check_instance(j, target, opt.enumeration_limit);
  const int nx = j.x_size(), na = target.size();
  SimulatorResult res;
  res.map = {nx, na, std::vector<int>(nx, 0)};
  const BoundResult br = best_simulation_bound(j, target);
  res.report.bound = br.bound;
  res.report.alpha_star = br.alpha_star;
  detail::MapLaw law(j, target);

  const std::uint64_t count = checked_pow(na, nx, opt.exhaustive_limit);
  if (count <= opt.exhaustive_limit) {
    std::vector<int> table(nx, 0);
    double best = law.tv(table);
    res.map.table = table;
    for (std::uint64_t k = 1; k < count; ++k) {
      for (int i = nx - 1; i >= 0; --i) {
        if (++table[i] < na) break;
        table[i] = 0;
      }
      const double v = law.tv(table);
      if (v < best) {
        best = v;
        res.map.table = table;
      }
    }
    res.report.tv = best;
    res.report.attempts = count;
    res.report.mode = SearchMode::kExhaustive;
    return res;
  }

  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < opt.budget; ++k) {
    Rng child = rng.fork(static_cast<std::uint64_t>(k));
    SimulatorMap f = sample_random_map(target, nx, child);
    const double v = law.tv(f.table);
    if (v < best) {
      best = v;
      res.map = std::move(f);
      res.report.mode = SearchMode::kSampled;
    }
  }
  res.report.attempts = static_cast<std::uint64_t>(std::max(opt.budget, 0));
  if (opt.greedy) {
    std::vector<int> g = detail::greedy_map(j, target, opt.local_search_limit);
    const double v = law.tv(g);
    ++res.report.attempts;
    if (v < best) {
      best = v;
      res.map.table = std::move(g);
      res.report.mode = SearchMode::kGreedy;
    }
  }
  if (!std::isfinite(best))
    throw std::invalid_argument("find_simulator: empty search budget");
  res.report.tv = best;
  return res;
}

// Expected TV of a map drawn i.i.d. from the target, by enumeration.
inline double expected_random_map_tv(const JointPmf& j, const Pmf& target,
                                     std::uint64_t limit = std::uint64_t{1} << 16) {
  const int nx = j.x_size(), na = target.size();
  const std::uint64_t count = checked_pow(na, nx, limit);
  if (count > limit) throw EnumerationOverflow("expected_random_map_tv: too many maps");
  detail::MapLaw law(j, target);
  std::vector<int> table(nx, 0);
  double e = 0.0;
  for (std::uint64_t k = 0; k < count; ++k) {
    if (k > 0)
      for (int i = nx - 1; i >= 0; --i) {
        if (++table[i] < na) break;
        table[i] = 0;
      }
    double w = 1.0;
    for (int a : table) w *= target[a];
    if (w > 0.0) e += w * law.tv(table);
  }
  return e;
}

inline double concentration_bound(double t, const Pmf& px) {
  if (t < 0.0) throw std::invalid_argument("concentration_bound: t < 0");
  return 2.0 * std::exp(-2.0 * t * t * std::exp2(renyi_entropy(px, 2.0)));
}

struct IidExponent {
  double epsilon = 0.0;
  double delta = 0.0;
  double alpha = 1.0;
};

// Exponent of the i.i.d. simulation error; empty when H(X|Y) <= H(A).
inline std::optional<IidExponent> iid_simulation_exponent(const JointPmf& j,
                                                          const Pmf& target) {
  const double gap = conditional_shannon(j) - shannon_entropy(target);
  if (gap <= 1e-12) return std::nullopt;
  auto [a, v] = detail::grid_then_golden_min(
      [&](double alpha) {
        if (alpha <= 1.0) return 0.0;
        return -(1.0 - 1.0 / alpha) *
               (conditional_renyi(j, alpha) - renyi_entropy(target, 1.0 / alpha));
      },
      1.0, 2.0);
  const double h2 = renyi_entropy(j.marginal_x(), 2.0);
  IidExponent e;
  e.alpha = a;
  e.epsilon = std::min(-v, 0.999 * h2 / 2.0);
  if (e.epsilon <= 0.0) return std::nullopt;
  e.delta = h2 - 2.0 * e.epsilon;
  return e;
}

}  // namespace entgame
