#include "liqvol/optim.hpp"

#include <cmath>
#include <limits>

namespace liqvol {

namespace {

double safe_eval(const std::function<double(const Vector&)>& f, const Vector& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double step) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = safe_eval(f, xp);
    xp(i) = x(i) - h;
    const double fm = safe_eval(f, xp);
    xp(i) = x(i);
    g(i) = (std::isfinite(fp) && std::isfinite(fm)) ? (fp - fm) / (2.0 * h) : 0.0;
  }
  return g;
}

BfgsResult minimize_bfgs(const std::function<double(const Vector&)>& f, const Vector& x0, const BfgsOptions& opt) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = x0;
  res.value = safe_eval(f, x0);
  if (!std::isfinite(res.value)) return res;

  Matrix hinv = Matrix::Identity(n, n);
  Vector g = numeric_gradient(f, res.x, opt.fd_step);
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
      res.converged = true;
      break;
    }
    Vector dir = -hinv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {  // lost descent; restart from steepest descent
      hinv.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    Vector x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = res.x + step * dir;
      f_new = safe_eval(f, x_new);
      if (f_new <= res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // no decrease along the direction: stationary up to finite-difference noise
      res.converged = g.lpNorm<Eigen::Infinity>() < 1e3 * opt.gradient_tolerance;
      break;
    }
    const Vector g_new = numeric_gradient(f, x_new, opt.fd_step);
    const Vector s = x_new - res.x;
    const Vector y = g_new - g;
    const double change = std::abs(res.value - f_new);
    res.x = x_new;
    const double f_old = res.value;
    res.value = f_new;
    g = g_new;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Matrix I = Matrix::Identity(n, n);
      hinv = (I - rho * s * y.transpose()) * hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (change <= opt.function_tolerance * std::max(1.0, std::abs(f_old))) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace liqvol
