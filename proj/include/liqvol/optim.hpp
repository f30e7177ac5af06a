#pragma once

#include "liqvol/types.hpp"

#include <functional>

namespace liqvol {

struct BfgsOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double function_tolerance = 1e-11;  ///< relative change that counts as converged
  double fd_step = 1e-5;              ///< central-difference step
};

struct BfgsResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Unconstrained minimization with BFGS, central-difference gradients and an
/// Armijo backtracking line search. Non-finite objective values are treated
/// as +infinity.
BfgsResult minimize_bfgs(const std::function<double(const Vector&)>& f, const Vector& x0,
                         const BfgsOptions& options = {});

Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double step);

}  // namespace liqvol
