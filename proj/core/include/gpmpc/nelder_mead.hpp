#pragma once

#include <functional>
#include <vector>

namespace gpmpc::optim {

struct NelderMeadOptions {
  int max_evaluations = 200;
  double f_tolerance = 1e-9;  // relative spread of simplex values
  double x_tolerance = 1e-6;  // max vertex distance from the best vertex
  double initial_step = 1.0;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Downhill simplex minimization with the standard reflection/expansion/
/// contraction/shrink coefficients (1, 2, 1/2, 1/2).
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opts = {});

}  // namespace gpmpc::optim
