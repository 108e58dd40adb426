#pragma once

#include <cmath>
#include <vector>

#include "nhjb/history.hpp"
#include "nhjb/quadrature.hpp"

namespace nhjb {

/// C1 bump kernel: 30 u^2 (1-u)^2 on [0, 1], zero elsewhere; unit mass.
inline double mollifier_kernel(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double v = u * (1.0 - u);
  return 30.0 * v * v;
}

struct MollifyOptions {
  int grid_intervals = 0;       // 0: auto, max(64, 8 j)
  double quad_rel_tol = 1e-8;   // convolution quadrature tolerance
};

/// The j-th element of the smoothing sequence for (z, w): convolution of the
/// extended path (w on [-h, 0), constant z on [0, 1]) with the scaled kernel.
/// Output is a single-segment sampled history, certified smooth, carrying the
/// kernel-exact right derivative at -h.
inline History mollify(const Vec& z, const History& w, int j, MollifyOptions opts = {}) {
  if (j < 1) throw std::invalid_argument("mollify: j must be >= 1");
  if (z.size() != w.dim()) throw std::invalid_argument("mollify: dim mismatch");
  const double h = w.h();
  const auto pieces = w.pieces();

  auto extended = [&](double s) -> Vec {
    if (s >= 0.0) return z;
    return w.eval(std::max(s, -h));
  };

  // knots of the extended path, used to split the quadrature
  std::vector<double> knots{0.0};
  for (const auto& p : pieces) knots.push_back(p.a);

  const double jd = static_cast<double>(j);
  auto convolve = [&](double xi) -> Vec {
    std::vector<double> u_knots;
    for (double kn : knots) {
      const double u = jd * (kn - xi);
      if (u > 0.0 && u < 1.0) u_knots.push_back(u);
    }
    auto integrand = [&](double u) -> Vec {
      return Vec(mollifier_kernel(u) * extended(xi + u / jd));
    };
    return adaptive_simpson_split(integrand, 0.0, 1.0, u_knots,
                                  opts.quad_rel_tol * (1.0 + z.norm() + norms(w).sup));
  };

  const int m = opts.grid_intervals > 0 ? opts.grid_intervals : std::max(64, 8 * j);
  std::vector<Vec> samples;
  samples.reserve(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    const double xi = -h + h * static_cast<double>(i) / static_cast<double>(m);
    samples.push_back(convolve(xi));
  }

  // d w^j(-h)/dxi: absolutely continuous part plus the kernel-weighted jumps
  auto slope_at = [&](double s) -> Vec {
    if (s >= 0.0) return Vec::Zero(z.size());
    s = std::max(s, -h);
    for (const auto& p : pieces)
      if (s < p.b || &p == &pieces.back()) return Vec((p.vb - p.va) / (p.b - p.a));
    return Vec::Zero(z.size());
  };
  std::vector<double> u_knots_start;
  for (double kn : knots) {
    const double u = jd * (kn + h);
    if (u > 0.0 && u < 1.0) u_knots_start.push_back(u);
  }
  auto deriv_integrand = [&](double u) -> Vec {
    return Vec(mollifier_kernel(u) * slope_at(-h + u / jd));
  };
  Vec deriv = adaptive_simpson_split(deriv_integrand, 0.0, 1.0, u_knots_start, opts.quad_rel_tol);
  for (double jp : w.jump_points()) {
    const Vec jump = w.eval(jp) - w.eval(jp, Side::left);
    deriv += jd * mollifier_kernel(jd * (jp + h)) * jump;
  }
  const Vec jump0 = z - w.left_limit_at_zero();
  deriv += jd * mollifier_kernel(jd * h) * jump0;

  return History(h, {Segment{-h, std::move(samples)}}, h, std::move(deriv));
}

}  // namespace nhjb
