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

#include "fbtomo/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace fbt {

namespace {

struct Pair {
  Vec s, y;
  double rho;
};

// Two-loop recursion for the search direction -H grad.
Vec lbfgs_direction(const Vec& grad, const std::deque<Pair>& history) {
  Vec q = -grad;
  std::vector<double> alpha(history.size());
  for (int i = static_cast<int>(history.size()) - 1; i >= 0; --i) {
    alpha[i] = history[i].rho * history[i].s.dot(q);
    q -= alpha[i] * history[i].y;
  }
  if (!history.empty()) {
    const auto& last = history.back();
    const double gamma = last.s.dot(last.y) / last.y.squaredNorm();
    q *= gamma;
  }
  for (size_t i = 0; i < history.size(); ++i) {
    const double beta = history[i].rho * history[i].y.dot(q);
    q += (alpha[i] - beta) * history[i].s;
  }
  return q;
}

}  // namespace

LbfgsResult lbfgs_minimize(
    const std::function<double(const Vec&, Vec& grad)>& objective, Vec x0,
    const LbfgsOptions& opt) {
  constexpr double kInf = std::numeric_limits<double>::infinity();

  LbfgsResult res;
  res.x = std::move(x0);
  res.grad.resize(res.x.size());
  res.f = objective(res.x, res.grad);
  res.trace.push_back(res.f);

  std::deque<Pair> history;

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    if (res.grad.cwiseAbs().maxCoeff() <= opt.grad_tolerance) {
      res.converged = true;
      return res;
    }

    Vec dir = lbfgs_direction(res.grad, history);
    double dg = dir.dot(res.grad);
    if (!(dg < 0.0)) {  // not a descent direction: reset to steepest descent
      history.clear();
      dir = -res.grad;
      dg = dir.dot(res.grad);
    }

    // Wolfe line search with bracketing + bisection zoom.
    const double f0 = res.f;
    double lo = 0.0, hi = kInf;
    double step = 1.0;
    double f_trial = kInf;
    Vec x_trial, g_trial(res.x.size());
    bool accepted = false;
    for (int ls = 0; ls < opt.max_line_search_steps; ++ls) {
      x_trial = res.x + step * dir;
      f_trial = objective(x_trial, g_trial);
      if (!std::isfinite(f_trial) || f_trial > f0 + opt.wolfe_c1 * step * dg) {
        hi = step;  // too long (or infeasible)
      } else if (g_trial.dot(dir) < opt.wolfe_c2 * dg) {
        lo = step;  // curvature not met: too short
      } else {
        accepted = true;
        break;
      }
      step = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * step;
      if (step <= 0.0 || (std::isfinite(hi) && hi - lo < 1e-16)) break;
    }
    if (!accepted) {
      // Fall back to the best sufficient-decrease point if any.
      if (std::isfinite(f_trial) && f_trial < f0) {
        accepted = true;
      } else {
        return res;  // line search failed; res holds the best iterate
      }
    }

    Pair pair;
    pair.s = x_trial - res.x;
    pair.y = g_trial - res.grad;
    const double sy = pair.s.dot(pair.y);
    res.x = std::move(x_trial);
    res.f = f_trial;
    res.grad = g_trial;
    res.trace.push_back(res.f);
    if (sy > 1e-14 * pair.y.squaredNorm()) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (static_cast<int>(history.size()) > opt.memory) history.pop_front();
    }
    if (std::abs(res.trace[res.trace.size() - 2] - res.f) <=
        opt.f_tolerance * std::max(1.0, std::abs(res.f))) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace fbt
