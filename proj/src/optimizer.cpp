#include "ddeopt/optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>

namespace ddeopt {

namespace {

// components pinned at the bound with the gradient pushing outward
Eigen::Array<bool, Eigen::Dynamic, 1> free_set(const Vector& x, const Vector& g) {
  Eigen::Array<bool, Eigen::Dynamic, 1> free(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) free[i] = !(x[i] <= 0.0 && g[i] <= 0.0);
  return free;
}

Vector masked(const Vector& v, const Eigen::Array<bool, Eigen::Dynamic, 1>& free) {
  Vector out = v;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!free[i]) out[i] = 0.0;
  return out;
}

}  // namespace

double projected_gradient_norm(const Vector& x, const Vector& g) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!(x[i] <= 0.0 && g[i] <= 0.0)) m = std::max(m, std::abs(g[i]));
  return m;
}

AscentResult projected_ascent(const AscentObjective& f, Vector x0, const AscentOptions& opt) {
  AscentResult res;
  Vector x = x0.cwiseMax(0.0);
  Vector g(x.size());
  double fx = f(x, &g);
  res.evaluations = 1;
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    res.stop_reason = "infeasible start";
    return res;
  }
  std::deque<Vector> S, Y;
  std::deque<double> gains;
  for (int it = 1; it <= opt.max_iter; ++it) {
    res.iterations = it;
    const auto free = free_set(x, g);
    const double pg = projected_gradient_norm(x, g);
    if (pg <= opt.grad_tol) {
      res.converged = true;
      res.stop_reason = "gradient";
      break;
    }
    // two-loop recursion on -f restricted to the free set
    Vector q = masked(-g, free);
    std::vector<double> alpha(S.size());
    for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
      const Vector s = masked(S[k], free), y = masked(Y[k], free);
      const double sy = s.dot(y);
      if (!(sy > 0.0)) {
        alpha[k] = 0.0;
        continue;
      }
      alpha[k] = s.dot(q) / sy;
      q -= alpha[k] * y;
    }
    double gamma = 1.0;
    if (!S.empty()) {
      const Vector s = masked(S.back(), free), y = masked(Y.back(), free);
      const double yy = y.dot(y);
      if (yy > 0.0 && s.dot(y) > 0.0) gamma = s.dot(y) / yy;
    }
    Vector r = gamma * q;
    for (std::size_t k = 0; k < S.size(); ++k) {
      const Vector s = masked(S[k], free), y = masked(Y[k], free);
      const double sy = s.dot(y);
      if (!(sy > 0.0)) continue;
      const double beta = y.dot(r) / sy;
      r += (alpha[k] - beta) * s;
    }
    Vector d = masked(-r, free);
    bool steepest = false;
    if (!(d.dot(g) > 0.0) || !d.allFinite()) {
      d = masked(g, free);
      steepest = true;
    }
    double step = 1.0;
    if (S.empty()) {
      steepest = true;
      const double dn = d.cwiseAbs().maxCoeff();
      step = std::min(1.0, opt.initial_step * (1.0 + x.cwiseAbs().maxCoeff()) / dn);
    }

    bool accepted = false;
    Vector xt, gt(x.size());
    double ft = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      for (int ls = 0; ls < 60; ++ls) {
        xt = (x + step * d).cwiseMax(0.0);
        if ((xt - x).cwiseAbs().maxCoeff() == 0.0) break;
        ft = f(xt, &gt);
        ++res.evaluations;
        if (std::isfinite(ft) && ft >= fx + 1e-4 * g.dot(xt - x)) {
          accepted = true;
          break;
        }
        step *= std::isfinite(ft) ? 0.5 : 0.2;
      }
      if (!accepted) {
        if (steepest) break;
        // fall back to a short steepest step and drop the curvature memory
        S.clear();
        Y.clear();
        d = masked(g, free);
        steepest = true;
        step = std::min(1.0, opt.initial_step * (1.0 + x.cwiseAbs().maxCoeff()) / d.cwiseAbs().maxCoeff());
      }
    }
    if (!accepted) {
      res.stop_reason = "line search";
      res.converged = pg <= 1e3 * opt.grad_tol;
      break;
    }
    const Vector s = xt - x, y = g - gt;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      if (static_cast<int>(S.size()) > opt.memory) {
        S.pop_front();
        Y.pop_front();
      }
    }
    const double gain = ft - fx;
    x = xt;
    g = gt;
    fx = ft;
    // kinks in f0 or U2 leave a nonzero gradient at the optimum; stop once the
    // last few steps together gained almost nothing
    gains.push_back(gain);
    if (static_cast<int>(gains.size()) > opt.stall_window) gains.pop_front();
    res.recent_gain = 0.0;
    for (double v : gains) res.recent_gain += v;
    if (static_cast<int>(gains.size()) == opt.stall_window) {
      if (res.recent_gain <= opt.f_tol * (1.0 + std::abs(fx))) {
        res.converged = true;
        res.stop_reason = "stalled";
        break;
      }
    }
    if (it == opt.max_iter) res.stop_reason = "max_iter";
  }
  res.x = x;
  res.grad = g;
  res.value = fx;
  res.projected_gradient = projected_gradient_norm(x, g);
  return res;
}

AscentResult projected_newton(const AscentObjective& f, Vector x0, const AscentOptions& opt) {
  AscentResult res;
  Vector x = x0.cwiseMax(0.0);
  const Eigen::Index n = x.size();
  Vector g(n), gt(n);
  double fx = f(x, &g);
  res.evaluations = 1;
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    res.stop_reason = "infeasible start";
    return res;
  }
  std::deque<double> gains;
  for (int it = 1; it <= opt.max_iter; ++it) {
    res.iterations = it;
    const double pg = projected_gradient_norm(x, g);
    if (pg <= opt.grad_tol) {
      res.converged = true;
      res.stop_reason = "gradient";
      break;
    }
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(x[i] <= 0.0 && g[i] <= 0.0)) idx.push_back(i);
    const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd H(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::Index i = idx[a];
      // step inward so that the probe stays feasible at the bound
      const double eps = 1e-6 * std::max(std::abs(x[i]), 1e-4);
      Vector xp = x;
      xp[i] += eps;
      double fp = f(xp, &gt);
      ++res.evaluations;
      double e = eps;
      if (!std::isfinite(fp) && x[i] > eps) {
        xp[i] = x[i] - eps;
        fp = f(xp, &gt);
        ++res.evaluations;
        e = -eps;
      }
      if (!std::isfinite(fp)) {
        H.col(a).setZero();
        H(a, a) = -1.0;
        continue;
      }
      for (Eigen::Index b = 0; b < m; ++b) H(b, a) = (gt[idx[b]] - g[idx[b]]) / e;
    }
    Eigen::MatrixXd Hs = -0.5 * (H + H.transpose());  // positive semidefinite at a concave point
    Vector gf(m);
    for (Eigen::Index a = 0; a < m; ++a) gf[a] = g[idx[a]];
    Vector step;
    double shift = 0.0;
    const double scale = Hs.diagonal().cwiseAbs().maxCoeff() + 1e-300;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::LLT<Eigen::MatrixXd> llt(Hs + shift * Eigen::MatrixXd::Identity(m, m));
      if (llt.info() == Eigen::Success) {
        step = llt.solve(gf);
        if (step.allFinite()) break;
      }
      shift = shift == 0.0 ? 1e-10 * scale : 10.0 * shift;
    }
    Vector d = Vector::Zero(n);
    if (step.size() == m && step.allFinite())
      for (Eigen::Index a = 0; a < m; ++a) d[idx[a]] = step[a];
    if (!(d.dot(g) > 0.0)) {
      for (Eigen::Index a = 0; a < m; ++a) d[idx[a]] = g[idx[a]] / std::max(Hs(a, a), 1e-12 * scale);
    }
    double t = 1.0;
    bool accepted = false;
    Vector xt;
    double ft = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      xt = (x + t * d).cwiseMax(0.0);
      if ((xt - x).cwiseAbs().maxCoeff() == 0.0) break;
      ft = f(xt, &gt);
      ++res.evaluations;
      if (std::isfinite(ft) && ft >= fx + 1e-4 * g.dot(xt - x)) {
        accepted = true;
        break;
      }
      t *= std::isfinite(ft) ? 0.5 : 0.2;
    }
    if (!accepted) {
      res.stop_reason = "line search";
      res.converged = pg <= 1e3 * opt.grad_tol;
      break;
    }
    const double gain = ft - fx;
    x = xt;
    g = gt;
    fx = ft;
    gains.push_back(gain);
    if (static_cast<int>(gains.size()) > 3) gains.pop_front();
    res.recent_gain = 0.0;
    for (double v : gains) res.recent_gain += v;
    if (static_cast<int>(gains.size()) == 3 && res.recent_gain <= opt.f_tol * (1.0 + std::abs(fx))) {
      res.converged = true;
      res.stop_reason = "stalled";
      break;
    }
    if (it == opt.max_iter) res.stop_reason = "max_iter";
  }
  res.x = x;
  res.grad = g;
  res.value = fx;
  res.projected_gradient = projected_gradient_norm(x, g);
  return res;
}

}  // namespace ddeopt
