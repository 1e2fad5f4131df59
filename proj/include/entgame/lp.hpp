#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace entgame {

enum class Relation { kLessEq, kEqual, kGreaterEq };
enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

// minimize c.x subject to rows, x >= 0.
struct LinearProgram {
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<std::vector<double>> rows;
  std::vector<Relation> relations;
  std::vector<double> rhs;

  void add_row(std::vector<double> coeffs, Relation rel, double b) {
    coeffs.resize(num_vars, 0.0);
    rows.push_back(std::move(coeffs));
    relations.push_back(rel);
    rhs.push_back(b);
  }
};

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double value = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

class Tableau {
 public:
  static constexpr double kEps = 1e-11;

  Tableau(int rows, int cols)
      : m_(rows), n_(cols), t_((rows + 1) * (cols + 1), 0.0), basis_(rows, -1) {}

  double& at(int i, int j) { return t_[i * (n_ + 1) + j]; }
  double& rhs(int i) { return at(i, n_); }
  double& cost(int j) { return at(m_, j); }
  int rows() const { return m_; }
  int cols() const { return n_; }
  std::vector<int>& basis() { return basis_; }

  void pivot(int r, int c) {
    const double pv = at(r, c);
    for (int j = 0; j <= n_; ++j) at(r, j) /= pv;
    for (int i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (int j = 0; j <= n_; ++j) at(i, j) -= f * at(r, j);
      at(i, c) = 0.0;
    }
    basis_[r] = c;
  }

  // Bland's rule; columns >= allowed_cols never enter.
  LpStatus run(int allowed_cols) {
    for (;;) {
      int enter = -1;
      for (int j = 0; j < allowed_cols; ++j)
        if (cost(j) < -kEps) {
          enter = j;
          break;
        }
      if (enter < 0) return LpStatus::kOptimal;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        const double a = at(i, enter);
        if (a <= kEps) continue;
        const double ratio = rhs(i) / a;
        if (ratio < best - 1e-13 ||
            (ratio <= best + 1e-13 && leave >= 0 && basis_[i] < basis_[leave])) {
          if (ratio < best) best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::kUnbounded;
      pivot(leave, enter);
    }
  }

  void remove_row(int r) {
    std::vector<double> nt;
    nt.reserve(m_ * (n_ + 1));
    for (int i = 0; i <= m_; ++i) {
      if (i == r) continue;
      for (int j = 0; j <= n_; ++j) nt.push_back(at(i, j));
    }
    t_ = std::move(nt);
    basis_.erase(basis_.begin() + r);
    --m_;
  }

 private:
  int m_, n_;
  std::vector<double> t_;
  std::vector<int> basis_;
};

}  // namespace detail

// Dense two-phase simplex.
inline LpSolution solve_lp(const LinearProgram& lp) {
  const int m = static_cast<int>(lp.rows.size());
  const int n = lp.num_vars;
  if (static_cast<int>(lp.objective.size()) != n)
    throw std::invalid_argument("solve_lp: objective size mismatch");

  std::vector<std::vector<double>> a = lp.rows;
  std::vector<Relation> rel = lp.relations;
  std::vector<double> b = lp.rhs;
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(a[i].size()) != n)
      throw std::invalid_argument("solve_lp: row size mismatch");
    if (b[i] < 0) {
      for (double& v : a[i]) v = -v;
      b[i] = -b[i];
      if (rel[i] == Relation::kLessEq)
        rel[i] = Relation::kGreaterEq;
      else if (rel[i] == Relation::kGreaterEq)
        rel[i] = Relation::kLessEq;
    }
  }

  int n_slack = 0, n_art = 0;
  for (Relation r : rel) {
    if (r != Relation::kEqual) ++n_slack;
    if (r != Relation::kLessEq) ++n_art;
  }
  const int art0 = n + n_slack;
  const int cols = art0 + n_art;
  detail::Tableau tab(m, cols);

  int s = n, art = art0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) tab.at(i, j) = a[i][j];
    tab.rhs(i) = b[i];
    if (rel[i] == Relation::kLessEq) {
      tab.at(i, s) = 1.0;
      tab.basis()[i] = s++;
    } else {
      if (rel[i] == Relation::kGreaterEq) tab.at(i, s++) = -1.0;
      tab.at(i, art) = 1.0;
      tab.basis()[i] = art++;
    }
  }

  // Phase one: minimize the sum of artificials.
  for (int i = 0; i < m; ++i)
    if (tab.basis()[i] >= art0)
      for (int j = 0; j <= cols; ++j)
        if (j < art0 || j == cols) tab.at(m, j) -= tab.at(i, j);
  tab.run(cols);
  if (-tab.at(tab.rows(), cols) > 1e-9) return {LpStatus::kInfeasible, {}, {}};

  for (int i = 0; i < tab.rows();) {
    if (tab.basis()[i] < art0) {
      ++i;
      continue;
    }
    int c = -1;
    for (int j = 0; j < art0; ++j)
      if (std::abs(tab.at(i, j)) > 1e-9) {
        c = j;
        break;
      }
    if (c >= 0) {
      tab.pivot(i, c);
      ++i;
    } else {
      tab.remove_row(i);
    }
  }

  const int mm = tab.rows();
  for (int j = 0; j <= cols; ++j) tab.at(mm, j) = 0.0;
  for (int j = 0; j < n; ++j) tab.at(mm, j) = lp.objective[j];
  for (int i = 0; i < mm; ++i) {
    const int bj = tab.basis()[i];
    const double cb = bj < n ? lp.objective[bj] : 0.0;
    if (cb == 0.0) continue;
    for (int j = 0; j <= cols; ++j) tab.at(mm, j) -= cb * tab.at(i, j);
  }
  if (tab.run(art0) == LpStatus::kUnbounded) return {LpStatus::kUnbounded, {}, {}};

  LpSolution sol;
  sol.status = LpStatus::kOptimal;
  sol.x.assign(n, 0.0);
  for (int i = 0; i < mm; ++i)
    if (tab.basis()[i] < n) sol.x[tab.basis()[i]] = std::max(0.0, tab.rhs(i));
  sol.value = 0.0;
  for (int j = 0; j < n; ++j) sol.value += lp.objective[j] * sol.x[j];
  return sol;
}

}  // namespace entgame
