#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "nhjb/quadrature.hpp"

namespace nhjb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Side { right, left };

/// One segment of a piecewise-Lipschitz history: samples on a uniform grid
/// spanning [start, end], linearly interpolated. The value at `end` belongs to
/// the next segment; the last sample stores the left limit there. A segment
/// with a single sample is constant.
struct Segment {
  double start = 0.0;
  std::vector<Vec> samples;
};

namespace detail {
inline bool nearly_equal(const Vec& a, const Vec& b) {
  return (a - b).norm() <= 1e-12 * (1.0 + a.norm() + b.norm());
}
}  // namespace detail

/// A history w(.) on [-h, 0): right continuous, piecewise linear, with left
/// limits at every point of (-h, 0]. `delta_w > 0` certifies that w is
/// continuously differentiable on [-h, -h + delta_w].
class History {
 public:
  History(double h, std::vector<Segment> segments, double delta_w = 0.0,
          std::optional<Vec> start_derivative = std::nullopt)
      : h_(h), segments_(std::move(segments)), delta_w_(delta_w),
        start_derivative_(std::move(start_derivative)) {
    if (!(h_ > 0.0)) throw std::invalid_argument("history: h must be positive");
    if (segments_.empty()) throw std::invalid_argument("history: no segments");
    if (std::abs(segments_.front().start + h_) > 1e-12 * h_)
      throw std::invalid_argument("history: first segment must start at -h");
    segments_.front().start = -h_;
    double prev = -h_;
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      const Segment& s = segments_[k];
      if (s.samples.empty()) throw std::invalid_argument("history: empty segment");
      if (k > 0 && !(s.start > prev)) throw std::invalid_argument("history: segment starts must increase");
      if (!(s.start < 0.0) || s.start < -h_ - 1e-12)
        throw std::invalid_argument("history: segment start outside [-h, 0)");
      prev = s.start;
      for (const Vec& v : s.samples) {
        if (v.size() != dim()) throw std::invalid_argument("history: inconsistent sample dimension");
        if (!v.allFinite()) throw std::invalid_argument("history: non-finite sample");
      }
    }
    if (delta_w_ < 0.0) throw std::invalid_argument("history: delta_w must be nonnegative");
  }

  static History constant(double h, const Vec& c) {
    return History(h, {Segment{-h, {c}}}, h, Vec::Zero(c.size()));
  }

  /// Linear history with w(-h) = at_start and w(-0) = at_end.
  static History linear(double h, const Vec& at_start, const Vec& at_end) {
    return History(h, {Segment{-h, {at_start, at_end}}}, h, Vec((at_end - at_start) / h));
  }

  /// Piecewise-constant history; pieces are (start, value) with the first
  /// start at -h. delta_w spans the first piece.
  static History step(double h, const std::vector<std::pair<double, Vec>>& pieces) {
    if (pieces.empty()) throw std::invalid_argument("history: step needs pieces");
    std::vector<Segment> segs;
    for (const auto& [start, value] : pieces) segs.push_back(Segment{start, {value}});
    const double first_len = (pieces.size() > 1 ? pieces[1].first : 0.0) + h;
    return History(h, std::move(segs), pieces.size() > 1 ? first_len : h,
                   Vec::Zero(pieces.front().second.size()));
  }

  double h() const { return h_; }
  Eigen::Index dim() const { return segments_.front().samples.front().size(); }
  double delta_w() const { return delta_w_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const std::optional<Vec>& start_derivative() const { return start_derivative_; }

  double segment_end(std::size_t k) const {
    return k + 1 < segments_.size() ? segments_[k + 1].start : 0.0;
  }

  Vec eval(double xi, Side side = Side::right) const {
    if (side == Side::right) {
      if (xi < -h_ - 1e-12 || xi >= 0.0) throw std::domain_error("history eval: xi outside [-h, 0)");
      xi = std::max(xi, -h_);
      const std::size_t k = segment_index(xi);
      return eval_in_segment(k, xi);
    }
    // left limit, defined on (-h, 0]
    if (xi <= -h_ || xi > 1e-12) throw std::domain_error("history left limit: xi outside (-h, 0]");
    if (xi >= 0.0) return segment_left_limit(segments_.size() - 1);
    const std::size_t k = segment_index(xi);
    if (k > 0 && xi == segments_[k].start) return segment_left_limit(k - 1);
    return eval_in_segment(k, xi);
  }

  Vec at_minus_h() const { return segments_.front().samples.front(); }
  Vec left_limit_at_zero() const { return segment_left_limit(segments_.size() - 1); }

  /// Interior points where the stored value and the left limit disagree.
  std::vector<double> jump_points() const {
    std::vector<double> out;
    for (std::size_t k = 1; k < segments_.size(); ++k) {
      if (!detail::nearly_equal(segment_left_limit(k - 1), segments_[k].samples.front()))
        out.push_back(segments_[k].start);
    }
    return out;
  }

  bool is_lipschitz() const { return jump_points().empty(); }

  struct Piece {
    double a, b;
    Vec va, vb;  // value at a and left limit at b
  };

  /// The linear pieces of the interpolant, covering [-h, 0).
  std::vector<Piece> pieces() const {
    std::vector<Piece> out;
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      const Segment& s = segments_[k];
      const double end = segment_end(k);
      const std::size_t m = s.samples.size();
      if (m == 1) {
        out.push_back(Piece{s.start, end, s.samples[0], s.samples[0]});
        continue;
      }
      const double dt = (end - s.start) / static_cast<double>(m - 1);
      for (std::size_t i = 0; i + 1 < m; ++i) {
        out.push_back(Piece{s.start + static_cast<double>(i) * dt,
                            i + 2 == m ? end : s.start + static_cast<double>(i + 1) * dt,
                            s.samples[i], s.samples[i + 1]});
      }
    }
    return out;
  }

  /// Recompute delta_w by scanning the first segment's difference quotients;
  /// consecutive quotients must agree to rel_tol relative to the largest one.
  double certify_smooth_start(double rel_tol = 1e-6) {
    const Segment& s = segments_.front();
    const double end = segment_end(0);
    if (s.samples.size() <= 1) {
      delta_w_ = end - s.start;
      return delta_w_;
    }
    const double dt = (end - s.start) / static_cast<double>(s.samples.size() - 1);
    double max_q = 0.0;
    for (std::size_t i = 0; i + 1 < s.samples.size(); ++i)
      max_q = std::max(max_q, (s.samples[i + 1] - s.samples[i]).norm() / dt);
    double width = dt;  // the first quotient always certifies its own cell
    for (std::size_t i = 0; i + 2 < s.samples.size(); ++i) {
      const Vec q0 = (s.samples[i + 1] - s.samples[i]) / dt;
      const Vec q1 = (s.samples[i + 2] - s.samples[i + 1]) / dt;
      if ((q1 - q0).norm() >= rel_tol * (1.0 + max_q)) break;
      width += dt;
    }
    delta_w_ = width;
    return delta_w_;
  }

  void set_delta_w(double dw) {
    if (dw < 0.0) throw std::invalid_argument("delta_w must be nonnegative");
    delta_w_ = dw;
  }

 private:
  std::size_t segment_index(double xi) const {
    std::size_t lo = 0, hi = segments_.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (segments_[mid].start <= xi) lo = mid;
      else hi = mid;
    }
    return lo;
  }

  Vec eval_in_segment(std::size_t k, double xi) const {
    const Segment& s = segments_[k];
    const std::size_t m = s.samples.size();
    if (m == 1) return s.samples[0];
    const double end = segment_end(k);
    const double dt = (end - s.start) / static_cast<double>(m - 1);
    double pos = (xi - s.start) / dt;
    std::size_t i = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(pos))), m - 2);
    const double frac = pos - static_cast<double>(i);
    return s.samples[i] + frac * (s.samples[i + 1] - s.samples[i]);
  }

  Vec segment_left_limit(std::size_t k) const { return segments_[k].samples.back(); }

  double h_;
  std::vector<Segment> segments_;
  double delta_w_;
  std::optional<Vec> start_derivative_;
};

/// Exact integral of the Euclidean norm of the affine function
/// t -> a + (b - a) t / len over [0, len].
inline double integral_norm_affine(const Vec& a, const Vec& b, double len) {
  if (len <= 0.0) return 0.0;
  const Vec d = b - a;
  const double A = d.squaredNorm();
  const double C = a.squaredNorm();
  if (A <= 1e-300) return std::sqrt(C) * len;
  const double B = a.dot(d);
  const double D = A * C - B * B;  // >= 0 by Cauchy-Schwarz
  if (D <= 1e-14 * A * std::max(C, 1.0)) {
    // a and d collinear: |s - s*| profile, split at the zero crossing
    const double s_star = -B / A;
    double integral_abs;
    if (s_star <= 0.0) integral_abs = 0.5 - s_star;
    else if (s_star >= 1.0) integral_abs = s_star - 0.5;
    else integral_abs = 0.5 * (s_star * s_star + (1.0 - s_star) * (1.0 - s_star));
    return std::sqrt(A) * integral_abs * len;
  }
  const double sqrtA = std::sqrt(A);
  const double k = D / A;
  auto antiderivative = [&](double s) {
    const double x = (A * s + B) / sqrtA;
    const double r = std::sqrt(A * s * s + 2.0 * B * s + C);
    return (x * r / 2.0 + 0.5 * k * std::asinh(x / std::sqrt(k))) / sqrtA;
  };
  return (antiderivative(1.0) - antiderivative(0.0)) * len;
}

struct HistoryNorms {
  double l1;
  double sup;
};

/// ||w||_1 and ||w||_inf, both exact for the piecewise-linear interpolant.
inline HistoryNorms norms(const History& w) {
  double l1 = 0.0, sup = 0.0;
  for (const History::Piece& p : w.pieces()) {
    l1 += integral_norm_affine(p.va, p.vb, p.b - p.a);
    sup = std::max({sup, p.va.norm(), p.vb.norm()});
  }
  return {l1, sup};
}

/// Pointwise combination of two histories over the merged knot set.
template <typename Op>
History combine(const History& a, const History& b, Op op) {
  if (std::abs(a.h() - b.h()) > 1e-12) throw std::invalid_argument("combine: mismatched h");
  std::vector<double> knots{-a.h(), 0.0};
  for (const auto& p : a.pieces()) knots.push_back(p.a);
  for (const auto& p : b.pieces()) knots.push_back(p.a);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [&](double x, double y) { return std::abs(x - y) <= 1e-14 * a.h(); }),
              knots.end());
  std::vector<Segment> segs;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double lo = knots[i], hi = knots[i + 1];
    if (hi - lo <= 1e-15 * a.h()) continue;
    Vec va = op(a.eval(lo), b.eval(lo));
    Vec vb = op(a.eval(hi, Side::left), b.eval(hi, Side::left));
    segs.push_back(Segment{lo, {std::move(va), std::move(vb)}});
  }
  const double dw = std::min(a.delta_w(), b.delta_w());
  return History(a.h(), std::move(segs), dw);
}

inline History operator-(const History& a, const History& b) {
  return combine(a, b, [](const Vec& x, const Vec& y) { return Vec(x - y); });
}

inline History scale(const History& w, double c) {
  std::vector<Segment> segs = w.segments();
  for (Segment& s : segs)
    for (Vec& v : s.samples) v *= c;
  std::optional<Vec> d;
  if (w.start_derivative()) d = Vec(c * *w.start_derivative());
  return History(w.h(), std::move(segs), w.delta_w(), std::move(d));
}

/// d^+ w(-h) / dxi. Requires PLip_* membership (delta_w > 0); uses the stored
/// closed-form derivative when the history carries one.
inline Vec right_derivative_at_start(const History& w) {
  if (!(w.delta_w() > 0.0))
    throw std::domain_error("right_derivative_at_start: history is not in PLip_* (delta_w = 0)");
  if (w.start_derivative()) return *w.start_derivative();
  const History::Piece first = w.pieces().front();
  return (first.vb - first.va) / (first.b - first.a);
}

/// upsilon(tau, z, w) = ||z|| + ||w||_1 + ||w(-h)|| + ||w(ih - tau)|| where
/// i in {-1, ..., I-1} satisfies tau in (ih, (i+1)h]; tau = 0 takes i = -1.
inline double upsilon(double tau, const Vec& z, const History& w) {
  const double h = w.h();
  double q = tau / h;
  const double q_round = std::round(q);
  if (std::abs(q - q_round) <= 1e-12 * std::max(1.0, std::abs(q))) q = q_round;
  long i = static_cast<long>(std::ceil(q)) - 1;
  if (tau <= 0.0) i = -1;
  double xi = static_cast<double>(i) * h - tau;
  xi = std::min(std::max(xi, -h), -0.0);
  const double fourth = (xi >= 0.0) ? w.eval(0.0, Side::left).norm() : w.eval(xi).norm();
  return z.norm() + norms(w).l1 + w.at_minus_h().norm() + fourth;
}

/// Integral over [-h, 0) of f(xi, w(xi)), split at the interpolant's knots.
template <typename F>
double integrate_over_history(const History& w, F f, double tol = 1e-10) {
  double total = 0.0;
  for (const History::Piece& p : w.pieces()) {
    if (p.b - p.a <= 0.0) continue;
    auto g = [&](double xi) {
      const double frac = (xi - p.a) / (p.b - p.a);
      return f(xi, Vec(p.va + frac * (p.vb - p.va)));
    };
    total += adaptive_simpson(g, p.a, p.b, tol * (p.b - p.a) / w.h());
  }
  return total;
}

/// A point (tau, z, w) of the state space. interior_flag marks membership in
/// the set where the ci-derivative of g exists: tau strictly inside a delay
/// interval and w certified smooth at -h.
struct PathPoint {
  double tau;
  Vec z;
  History w;
  bool interior_flag;

  PathPoint(double tau_, Vec z_, History w_)
      : tau(tau_), z(std::move(z_)), w(std::move(w_)), interior_flag(false) {
    if (z.size() != w.dim()) throw std::invalid_argument("path point: dim mismatch");
    if (tau < 0.0) throw std::invalid_argument("path point: tau must be nonnegative");
    const double q = tau / w.h();
    const bool on_grid = std::abs(q - std::round(q)) <= 1e-12 * std::max(1.0, q);
    interior_flag = !on_grid && w.delta_w() > 0.0;
  }
};

/// A path on [tau - h, end]: the origin history for t < tau, a piecewise
/// linear interpolant over the grid for t >= tau.
struct Trajectory {
  PathPoint origin;
  std::vector<double> times;
  std::vector<Vec> values;

  double start() const { return times.front(); }
  double end() const { return times.back(); }

  Vec at(double t) const {
    const double tau = origin.tau;
    if (t < tau - origin.w.h() - 1e-12) throw std::domain_error("trajectory eval: t before tau - h");
    // snap roundoff-level proximity to tau onto the trajectory side; the
    // junction value is x(tau) = z by right continuity
    if (t < tau - 1e-12 * (1.0 + std::abs(tau)))
      return origin.w.eval(std::max(t - tau, -origin.w.h()));
    t = std::max(t, tau);
    if (t > end() + 1e-9 * (1.0 + std::abs(end()))) throw std::domain_error("trajectory eval: t after end");
    t = std::min(t, end());
    std::size_t lo = 0, hi = times.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (times[mid] <= t) lo = mid;
      else hi = mid;
    }
    if (times[hi] == times[lo]) return values[lo];
    const double frac = (t - times[lo]) / (times[hi] - times[lo]);
    return values[lo] + frac * (values[hi] - values[lo]);
  }
};

/// The unique constant extension in Lambda_0: history prefix from p, value z
/// for all t in [tau, horizon].
inline Trajectory extend_constant(const PathPoint& p, double horizon) {
  if (horizon < p.tau) throw std::domain_error("extend_constant: horizon before tau");
  if (horizon == p.tau) return Trajectory{p, {p.tau}, {p.z}};
  return Trajectory{p, {p.tau, horizon}, {p.z, p.z}};
}

/// x_t(.): the history xi -> x(t + xi). Knots of the origin history and of the
/// trajectory grid are preserved; the junction at tau is a jump iff w(-0) != z.
inline History shift(const Trajectory& x, double t) {
  const double tau = x.origin.tau;
  const double h = x.origin.w.h();
  if (t < tau - 1e-12 || t > x.end() + 1e-12) throw std::domain_error("shift: t outside [tau, end]");
  if (t <= tau) return x.origin.w;

  const double cut = t - h;
  std::vector<Segment> segs;
  auto push_piece = [&](double a, double b, Vec va, Vec vb) {
    segs.push_back(Segment{a - t, {std::move(va), std::move(vb)}});
  };

  if (cut < tau) {
    // part carried by the origin history, absolute times [cut, tau)
    for (const auto& p : x.origin.w.pieces()) {
      const double a_abs = tau + p.a, b_abs = tau + p.b;
      const double lo = std::max(a_abs, cut), hi = std::min(b_abs, t);
      if (hi - lo <= 1e-15 * h) continue;
      const double fa = (lo - a_abs) / (p.b - p.a), fb = (hi - a_abs) / (p.b - p.a);
      push_piece(lo, hi, Vec(p.va + fa * (p.vb - p.va)), Vec(p.va + fb * (p.vb - p.va)));
    }
  }
  // part carried by the trajectory, absolute times [max(cut, tau), t)
  const double lo_traj = std::max(cut, tau);
  std::vector<double> nodes{lo_traj};
  for (double tk : x.times)
    if (tk > lo_traj + 1e-15 * h && tk < t - 1e-15 * h) nodes.push_back(tk);
  nodes.push_back(t);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    if (nodes[i + 1] - nodes[i] <= 1e-15 * h) continue;
    push_piece(nodes[i], nodes[i + 1], x.at(nodes[i]), x.at(nodes[i + 1]));
  }

  const Segment& first = segs.front();
  const double first_len = (segs.size() > 1 ? segs[1].start : 0.0) - first.start;
  const Vec slope = (first.samples[1] - first.samples[0]) / first_len;
  return History(h, std::move(segs), first_len, slope);
}

}  // namespace nhjb
