#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

#include "vlab/error.hpp"
#include "vlab/numeric.hpp"

namespace vlab {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  std::int64_t evaluations = 0;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkPanel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const GkPanel& o) const { return error < o.error; }
};

template <typename F>
GkPanel gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[static_cast<std::size_t>(j)];
    const double s = f(c - dx) + f(c + dx);
    kron += kWgk[static_cast<std::size_t>(j)] * s;
    if (j % 2 == 1) gauss += kWg[static_cast<std::size_t>(j / 2)] * s;
  }
  return {a, b, kron * h, std::fabs((kron - gauss) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature: the panel with the
/// largest error estimate is bisected until the summed estimate meets abs_tol
/// or the evaluation budget runs out (QuadratureFailure).
template <typename F>
QuadResult integrate(F f, double a, double b, double abs_tol = 1e-10, std::int64_t budget = eval_budget()) {
  QuadResult out;
  if (!(b > a)) return out;
  std::priority_queue<detail::GkPanel> panels;
  auto first = detail::gk15(f, a, b);
  out.evaluations = 15;
  panels.push(first);
  double total = first.value, err = first.error;
  while (err > abs_tol) {
    if (out.evaluations + 30 > budget)
      throw Error(ErrorCode::QuadratureFailure,
                  "tolerance " + std::to_string(abs_tol) + " not met; estimate " + std::to_string(err));
    const auto worst = panels.top();
    panels.pop();
    const double m = 0.5 * (worst.a + worst.b);
    if (!(m > worst.a && m < worst.b)) {
      // Panel cannot be split further; accept its estimate.
      panels.push({worst.a, worst.b, worst.value, 0.0});
      err -= worst.error;
      continue;
    }
    auto l = detail::gk15(f, worst.a, m);
    auto r = detail::gk15(f, m, worst.b);
    out.evaluations += 30;
    total += l.value + r.value - worst.value;
    err += l.error + r.error - worst.error;
    panels.push(l);
    panels.push(r);
  }
  // Re-sum from panels to avoid drift from the running updates.
  KahanSum s, e;
  while (!panels.empty()) {
    s += panels.top().value;
    e += panels.top().error;
    panels.pop();
  }
  out.value = s.value();
  out.abs_error = e.value();
  return out;
}

}  // namespace vlab
