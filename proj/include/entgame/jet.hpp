#pragma once

#include <array>
#include <cmath>

namespace entgame {

// Truncated Taylor series c[0] + c[1] e + ... + c[N] e^N.
template <int N>
struct Jet {
  std::array<double, N + 1> c{};

  static Jet constant(double v) {
    Jet j;
    j.c[0] = v;
    return j;
  }
  static Jet variable(double v) {
    Jet j;
    j.c[0] = v;
    if constexpr (N >= 1) j.c[1] = 1.0;
    return j;
  }

  // k-th derivative at the expansion point.
  double derivative(int k) const {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return c[k] * f;
  }
};

template <int N>
Jet<N> operator+(Jet<N> a, const Jet<N>& b) {
  for (int k = 0; k <= N; ++k) a.c[k] += b.c[k];
  return a;
}

template <int N>
Jet<N> operator-(Jet<N> a, const Jet<N>& b) {
  for (int k = 0; k <= N; ++k) a.c[k] -= b.c[k];
  return a;
}

template <int N>
Jet<N> operator+(Jet<N> a, double s) {
  a.c[0] += s;
  return a;
}

template <int N>
Jet<N> operator*(Jet<N> a, double s) {
  for (double& v : a.c) v *= s;
  return a;
}

template <int N>
Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  for (int k = 0; k <= N; ++k)
    for (int i = 0; i <= k; ++i) r.c[k] += a.c[i] * b.c[k - i];
  return r;
}

template <int N>
Jet<N> operator/(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> q;
  for (int k = 0; k <= N; ++k) {
    double s = a.c[k];
    for (int j = 1; j <= k; ++j) s -= b.c[j] * q.c[k - j];
    q.c[k] = s / b.c[0];
  }
  return q;
}

template <int N>
Jet<N> exp(const Jet<N>& a) {
  Jet<N> f;
  f.c[0] = std::exp(a.c[0]);
  for (int k = 1; k <= N; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += j * a.c[j] * f.c[k - j];
    f.c[k] = s / k;
  }
  return f;
}

template <int N>
Jet<N> log(const Jet<N>& a) {
  Jet<N> f;
  f.c[0] = std::log(a.c[0]);
  for (int k = 1; k <= N; ++k) {
    double s = a.c[k];
    for (int j = 1; j < k; ++j) s -= (static_cast<double>(j) / k) * f.c[j] * a.c[k - j];
    f.c[k] = s / a.c[0];
  }
  return f;
}

}  // namespace entgame
