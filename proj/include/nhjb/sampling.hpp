#pragma once

#include <random>
#include <vector>

#include "nhjb/history.hpp"

namespace nhjb {

using Rng = std::mt19937_64;

inline Vec sample_direction(int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  do {
    for (int i = 0; i < n; ++i) v[i] = g(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

inline Vec sample_ball(int n, double radius, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return Vec(sample_direction(n, rng) * radius * std::pow(u(rng), 1.0 / n));
}

struct HistorySampler {
  double h = 1.0;
  int n = 1;
  double amplitude = 1.0;   // keeps ||w||_inf <= amplitude
  int max_segments = 3;
  int max_samples = 4;      // per segment
  bool smooth_start = false;
  double max_slope = 1.0;   // slope bound for the certified first piece
};

/// Random piecewise-linear history. With smooth_start the first segment is a
/// single linear piece with bounded slope, so the result lies in PLip_*.
inline History sample_history(const HistorySampler& s, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> seg_count(1, std::max(1, s.max_segments));
  const int ns = seg_count(rng);

  std::vector<double> starts{-s.h};
  for (int k = 1; k < ns; ++k) starts.push_back(-s.h + s.h * (0.1 + 0.8 * u(rng)));
  std::sort(starts.begin(), starts.end());
  // enforce a minimal gap so segments stay nondegenerate
  std::vector<double> clean{starts[0]};
  for (std::size_t k = 1; k < starts.size(); ++k)
    if (starts[k] - clean.back() > 0.05 * s.h && starts[k] < -0.05 * s.h) clean.push_back(starts[k]);

  std::vector<Segment> segs;
  std::uniform_int_distribution<int> samp_count(1, std::max(1, s.max_samples));
  for (std::size_t k = 0; k < clean.size(); ++k) {
    const bool first = k == 0;
    int m = samp_count(rng);
    if (first && s.smooth_start) m = 2;
    std::vector<Vec> samples;
    if (first && s.smooth_start) {
      const double len = (clean.size() > 1 ? clean[1] : 0.0) - clean[0];
      const Vec v0 = sample_ball(s.n, 0.8 * s.amplitude, rng);
      Vec slope = sample_ball(s.n, s.max_slope, rng);
      const double room = (s.amplitude - v0.norm()) / std::max(len, 1e-12);
      if (slope.norm() > room) slope *= room / slope.norm();
      samples = {v0, Vec(v0 + len * slope)};
    } else {
      for (int i = 0; i < std::max(m, 1); ++i) samples.push_back(sample_ball(s.n, s.amplitude, rng));
    }
    segs.push_back(Segment{clean[k], std::move(samples)});
  }
  History w(s.h, std::move(segs));
  if (s.smooth_start) {
    const auto first = w.pieces().front();
    return History(s.h, w.segments(), first.b - first.a, Vec((first.vb - first.va) / (first.b - first.a)));
  }
  return w;
}

/// Random point of the interior set: tau strictly inside a delay interval,
/// certified-smooth history.
inline PathPoint sample_interior_point(double h, int intervals, int n, double alpha, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> iu(0, intervals - 1);
  const int i = iu(rng);
  const double tau = (static_cast<double>(i) + 0.05 + 0.9 * u(rng)) * h;
  HistorySampler s;
  s.h = h;
  s.n = n;
  s.amplitude = alpha;
  s.smooth_start = true;
  Vec z = sample_ball(n, alpha, rng);
  return PathPoint(tau, std::move(z), sample_history(s, rng));
}

}  // namespace nhjb
