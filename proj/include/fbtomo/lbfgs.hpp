// Copyright 2026 The fbtomo developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <vector>

#include "fbtomo/pauli.hpp"

namespace fbt {

struct LbfgsOptions {
  int max_iterations = 2000;
  int memory = 10;
  double grad_tolerance = 1e-12;   // on ||grad||_inf
  double f_tolerance = 1e-16;      // relative decrease
  int max_line_search_steps = 40;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
};

struct LbfgsResult {
  Vec x;
  double f = 0.0;
  Vec grad;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective at accepted iterates
};

// Limited-memory BFGS with a Wolfe backtracking/zoom line search. The
// objective may return +inf to reject infeasible points. Unconstrained; hard
// constraints belong in the parameterization.
LbfgsResult lbfgs_minimize(
    const std::function<double(const Vec&, Vec& grad)>& objective, Vec x0,
    const LbfgsOptions& options = {});

}  // namespace fbt
