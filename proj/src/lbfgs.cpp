#include "himpc/lbfgs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

namespace himpc {

std::string to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::GradientTolerance: return "gradient_tolerance";
    case LbfgsStatus::MaxIterations: return "max_iterations";
    case LbfgsStatus::LineSearchFailed: return "line_search_failed";
    case LbfgsStatus::NoProgress: return "no_progress";
  }
  return "unknown";
}

namespace {

struct Point {
  double alpha = 0.0;
  double f = 0.0;
  double df = 0.0;  // directional derivative
  Vec x;
  Vec g;
};

// Minimizer of the cubic through (a, fa, da), (b, fb, db), kept inside the
// middle 80% of [a, b]; bisection when the fit is unusable.
double interpolate(const Point& a, const Point& b) {
  const double lo = std::min(a.alpha, b.alpha);
  const double hi = std::max(a.alpha, b.alpha);
  const double margin = 0.1 * (hi - lo);
  const double d1 = a.df + b.df - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.df * b.df;
  double t = std::numeric_limits<double>::quiet_NaN();
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    t = b.alpha - (b.alpha - a.alpha) * (b.df + d2 - d1) / (b.df - a.df + 2.0 * d2);
  }
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) t = 0.5 * (lo + hi);
  return t;
}

class LineSearch {
 public:
  LineSearch(const Objective& fn, const LbfgsOptions& opt, const Vec& x, const Vec& d, double f0,
             double df0, int& evals)
      : fn_(fn), opt_(opt), x_(x), d_(d), f0_(f0), df0_(df0), evals_(evals) {}

  // Returns a point satisfying the strong Wolfe conditions, or the best
  // sufficient-decrease point seen when the budget runs out.
  std::optional<Point> run(double alpha0) {
    Point prev{0.0, f0_, df0_, x_, {}};
    double alpha = alpha0;
    for (int i = 0; budget_left(); ++i) {
      Point cur = eval(alpha);
      if (!std::isfinite(cur.f) || cur.f > f0_ + opt_.c1 * alpha * df0_ ||
          (i > 0 && cur.f >= prev.f)) {
        return zoom(prev, cur);
      }
      if (std::abs(cur.df) <= -opt_.c2 * df0_) return cur;
      if (cur.df >= 0.0) return zoom(cur, prev);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return best_;
  }

 private:
  bool budget_left() const { return used_ < opt_.max_line_search_evals; }

  Point eval(double alpha) {
    Point p;
    p.alpha = alpha;
    p.x = x_ + alpha * d_;
    p.g = Vec::Zero(x_.size());
    p.f = fn_(p.x, p.g);
    ++used_;
    ++evals_;
    if (!p.g.allFinite()) p.f = std::numeric_limits<double>::infinity();
    p.df = p.g.dot(d_);
    if (std::isfinite(p.f) && p.f <= f0_ + opt_.c1 * alpha * df0_ &&
        (!best_ || p.f < best_->f)) {
      best_ = p;
    }
    return p;
  }

  std::optional<Point> zoom(Point lo, Point hi) {
    while (budget_left()) {
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
      Point cur = eval(interpolate(lo, hi));
      if (!std::isfinite(cur.f) || cur.f > f0_ + opt_.c1 * cur.alpha * df0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.df) <= -opt_.c2 * df0_) return cur;
        if (cur.df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    return best_;
  }

  const Objective& fn_;
  const LbfgsOptions& opt_;
  const Vec& x_;
  const Vec& d_;
  double f0_;
  double df0_;
  int& evals_;
  int used_ = 0;
  std::optional<Point> best_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, const Vec& x0, const LbfgsOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  LbfgsResult res;
  res.x = x0;
  res.grad = Vec::Zero(x0.size());
  res.f = objective(res.x, res.grad);
  res.evaluations = 1;
  if (!std::isfinite(res.f) || !res.grad.allFinite()) {
    throw InvalidArgument("lbfgs: objective or gradient not finite at the starting point");
  }
  res.trace.push_back({0, res.f, res.grad.norm(), elapsed()});

  std::deque<Vec> S, Y;
  std::deque<double> rho;
  Vec x = res.x;
  Vec g = res.grad;
  double f = res.f;

  for (int iter = 1;; ++iter) {
    if (g.norm() <= opt.gradient_tolerance) {
      res.status = LbfgsStatus::GradientTolerance;
      break;
    }
    if (iter > opt.max_iterations) {
      res.status = LbfgsStatus::MaxIterations;
      break;
    }

    // Two-loop recursion.
    Vec q = g;
    std::vector<double> a(S.size());
    for (std::size_t i = S.size(); i-- > 0;) {
      a[i] = rho[i] * S[i].dot(q);
      q -= a[i] * Y[i];
    }
    const double gamma = S.empty() ? 1.0 : S.back().dot(Y.back()) / Y.back().squaredNorm();
    Vec d = gamma * q;
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double b = rho[i] * Y[i].dot(d);
      d += (a[i] - b) * S[i];
    }
    d = -d;
    double df0 = g.dot(d);
    if (!(df0 < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      d = -g;
      df0 = -g.squaredNorm();
    }

    const double alpha0 = S.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    LineSearch ls(objective, opt, x, d, f, df0, res.evaluations);
    auto accepted = ls.run(alpha0);
    if (!accepted || !(accepted->f < f)) {
      res.status = accepted ? LbfgsStatus::NoProgress : LbfgsStatus::LineSearchFailed;
      break;
    }

    Vec s = accepted->x - x;
    Vec y = accepted->g - g;
    const double sy = s.dot(y);
    x = std::move(accepted->x);
    g = std::move(accepted->g);
    f = accepted->f;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    res.iterations = iter;
    if (f < res.f) {
      res.f = f;
      res.x = x;
      res.grad = g;
    }
    res.trace.push_back({iter, f, g.norm(), elapsed()});
  }
  return res;
}

}  // namespace himpc
