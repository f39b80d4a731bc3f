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

#include <map>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "fbtomo/gateset.hpp"

namespace fbt {

// ---------------------------------------------------------------------------
// CPTP projection

struct CptpInfo {
  bool converged = true;
  int iterations = 0;
  double moved = 0.0;            // Frobenius distance between last two iterates
  double correction_norm = 0.0;  // ||output - input||_F
};

// Nearest CPTP channel in Choi-space Frobenius distance, by Dykstra-corrected
// alternating projections between the PSD cone (eigenvalue clipping) and the
// TP affine subspace (first PTM row reset). Idempotent on CPTP inputs. On
// non-convergence the best iterate is returned with info->converged = false.
Mat cptp_project(const Mat& ptm, CptpInfo* info = nullptr, double tol = 1e-10,
                 int max_iterations = 1000);

// ---------------------------------------------------------------------------
// Gauge optimization

struct GaugeTransform {
  Mat s;
  double condition_estimate = 1.0;
};

// Gate set conjugated per the gauge rules: gates S^-1 G~ S, prep S^-1 rho~,
// effect E~ S. Sequence outcomes are invariant. The ideal/noise split is
// preserved by folding the transform into the noise channels.
NoisyGateSet apply_gauge(const NoisyGateSet& gs, const Mat& s);

struct GaugeResult {
  NoisyGateSet gateset;
  GaugeTransform transform;
  double objective = 0.0;
  bool converged = false;
  std::vector<double> objective_trace;
};

// Minimizes  w_g sum_i ||S^-1 G~_i S - G_i||_F^2
//          + w_s (||S^-1 rho~ - rho||^2 + ||E~ S - E||^2)
// over trace-preserving invertible S, parameterized as S = I + Delta with the
// first row of Delta held at zero. Quasi-Newton descent with analytic
// gradients; near-singular trial points are rejected during line search. On
// optimizer failure the identity gauge is returned with converged = false.
GaugeResult gauge_optimize(const NoisyGateSet& estimate, const NoisyGateSet& ideal,
                           double w_g = 1.0, double w_s = 1e-3,
                           int max_iterations = 2000);

// ---------------------------------------------------------------------------
// Error-generator taxonomy

struct BranchCutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Real principal matrix logarithm of a noise-channel PTM (real Schur form with
// inverse scaling and squaring). Throws BranchCutError when an eigenvalue lies
// on or near the negative real axis; callers may CPTP-project and retry.
Mat error_generator(const Mat& noise_ptm);

// Elementary generator frame (Hamiltonian H_P, Pauli-stochastic S_P,
// Pauli-correlation C_PQ, active A_PQ) in the PTM representation, with the
// dual frame from the inverted Gram matrix.
struct GeneratorFrame {
  struct Element {
    char cls;           // 'H', 'S', 'C', 'A'
    std::string label;  // "IX" or "IX,ZZ" for pair classes
  };
  std::vector<Element> elements;
  Mat frame;  // columns are vec(elementary generator)
  Mat duals;  // frame * gram^-1, so duals^T * frame = I

  static const GeneratorFrame& for_basis(const PauliBasis& basis);
};

struct ErrorGeneratorDecomposition {
  std::map<std::string, double> h;  // Hamiltonian coefficients by Pauli label
  std::map<std::string, double> s;  // Pauli-stochastic rates
  std::map<std::string, double> c;  // correlation coefficients by "P,Q"
  std::map<std::string, double> a;  // active coefficients by "P,Q"
  double residual_norm = 0.0;       // ||L - sum coeff * elementary||_F

  double coefficient(char cls, const std::string& label) const;
};

ErrorGeneratorDecomposition decompose_generator(
    const Mat& generator, const PauliBasis& basis = PauliBasis::two_qubit());

// ---------------------------------------------------------------------------
// Infidelity metrics

struct GeneratorContribution {
  char cls;
  std::string label;
  double coefficient;   // raw generator coefficient
  double contribution;  // share of entanglement infidelity (s_P or h_P^2)
};

struct InfidelityReport {
  double eps_ent = 0.0;     // 1 - Tr(Lambda)/d^2
  double eps_j = 0.0;       // sum of stochastic rates
  double theta_j_sq = 0.0;  // sum of squared Hamiltonian coefficients
  std::vector<GeneratorContribution> stacked;  // sorted by |contribution| desc
};

InfidelityReport infidelity_report(const Mat& noise_ptm);

// Tabular export: label, class, coefficient, contribution.
std::string decomposition_to_csv(const ErrorGeneratorDecomposition& dec,
                                 const InfidelityReport& report);
nlohmann::json decomposition_to_json(const ErrorGeneratorDecomposition& dec,
                                     const InfidelityReport& report);

}  // namespace fbt
