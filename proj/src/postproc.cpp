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

#include "fbtomo/postproc.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "fbtomo/lbfgs.hpp"
#include "fbtomo/linearize.hpp"

namespace fbt {

// ---------------------------------------------------------------------------
// CPTP projection

namespace {

Mat project_psd_choi(const Mat& ptm) {
  CMat choi = ptm_to_choi(ptm);
  choi = 0.5 * (choi + choi.adjoint());  // Hermitian guard
  Eigen::SelfAdjointEigenSolver<CMat> es(choi);
  const Vec clipped = es.eigenvalues().cwiseMax(0.0);
  const CMat psd = es.eigenvectors() * clipped.asDiagonal() *
                   es.eigenvectors().adjoint();
  return choi_to_ptm(psd);
}

void project_tp(Mat& ptm) {
  ptm.row(0).setZero();
  ptm(0, 0) = 1.0;
}

}  // namespace

Mat cptp_project(const Mat& ptm, CptpInfo* info, double tol, int max_iterations) {
  if (ptm.rows() != ptm.cols()) throw std::invalid_argument("PTM must be square");

  // Dykstra's alternating projections: the PSD cone needs a correction term,
  // the TP subspace is affine and does not. The PTM <-> Choi map is a
  // Frobenius isometry, so projecting in either space is equivalent.
  Mat x = ptm;
  Mat correction = Mat::Zero(ptm.rows(), ptm.cols());
  CptpInfo local;
  Mat prev = x;
  for (local.iterations = 1; local.iterations <= max_iterations; ++local.iterations) {
    const Mat y = project_psd_choi(x + correction);
    correction = (x + correction) - y;
    x = y;
    project_tp(x);
    local.moved = (x - prev).norm();
    prev = x;
    if (local.moved < tol) break;
  }
  local.converged = local.moved < tol;
  local.correction_norm = (x - ptm).norm();
  if (info) *info = local;
  return x;
}

// ---------------------------------------------------------------------------
// Gauge optimization

NoisyGateSet apply_gauge(const NoisyGateSet& gs, const Mat& s) {
  const Eigen::PartialPivLU<Mat> lu(s);
  const Mat s_inv = lu.inverse();
  NoisyGateSet out = gs;
  for (size_t i = 0; i < gs.labels.size(); ++i) {
    // Noisy gate G Lambda -> S^-1 G Lambda S; keep the ideal part, fold the
    // rest into the noise channel: Lambda' = G^-1 S^-1 G Lambda S.
    const Mat noisy = gs.ideal[i] * gs.noise[i];
    const Mat transformed = s_inv * noisy * s;
    out.noise[i] = gs.ideal[i].transpose() * transformed;  // ideal PTMs orthogonal
  }
  out.noise_prep = s_inv * gs.noise_prep;
  out.noise_effect = gs.noise_effect * s;
  return out;
}

namespace {

// Gauge parameterization: S = I + Delta with the first row of Delta zero,
// enforcing trace preservation exactly. Free parameters are the remaining
// (d^2 - 1) x d^2 entries, column major.
Mat gauge_from_params(const Vec& params, int d2) {
  Mat s = Mat::Identity(d2, d2);
  int k = 0;
  for (int j = 0; j < d2; ++j)
    for (int i = 1; i < d2; ++i) s(i, j) += params(k++);
  return s;
}

Vec gauge_grad_to_params(const Mat& grad, int d2) {
  Vec g((d2 - 1) * d2);
  int k = 0;
  for (int j = 0; j < d2; ++j)
    for (int i = 1; i < d2; ++i) g(k++) = grad(i, j);
  return g;
}

}  // namespace

GaugeResult gauge_optimize(const NoisyGateSet& estimate, const NoisyGateSet& ideal,
                           double w_g, double w_s, int max_iterations) {
  const int d2 = estimate.dim2();
  if (ideal.dim2() != d2 || ideal.labels != estimate.labels)
    throw std::invalid_argument("estimate and ideal gate sets do not match");

  std::vector<Mat> noisy, targets;
  for (size_t i = 0; i < estimate.labels.size(); ++i) {
    noisy.push_back(estimate.ideal[i] * estimate.noise[i]);
    targets.push_back(ideal.ideal[i] * ideal.noise[i]);
  }
  const Vec rho_est = estimate.noise_prep * estimate.rho0;
  const Vec rho_tgt = ideal.noise_prep * ideal.rho0;
  const RowVec eff_est = estimate.effect0 * estimate.noise_effect;
  const RowVec eff_tgt = ideal.effect0 * ideal.noise_effect;

  constexpr double kMaxCondition = 1e6;

  const auto objective = [&](const Vec& params, Vec& grad) -> double {
    const Mat s = gauge_from_params(params, d2);
    const Eigen::PartialPivLU<Mat> lu(s);
    const Mat s_inv = lu.inverse();
    const double cond = s.norm() * s_inv.norm();  // Frobenius bound on kappa
    if (!std::isfinite(cond) || cond > kMaxCondition)
      return std::numeric_limits<double>::infinity();

    double f = 0.0;
    Mat grad_s = Mat::Zero(d2, d2);
    const Mat t = s_inv;
    for (size_t i = 0; i < noisy.size(); ++i) {
      const Mat mid = t * noisy[i] * s;
      const Mat resid = mid - targets[i];
      f += w_g * resid.squaredNorm();
      // d||S^-1 A S - B||^2 wrt S, via Tr(M dS) pairing.
      grad_s += 2.0 * w_g *
                (noisy[i].transpose() * t.transpose() * resid -
                 t.transpose() * resid * s.transpose() * noisy[i].transpose() *
                     t.transpose());
    }
    const Vec rho_resid = t * rho_est - rho_tgt;
    f += w_s * rho_resid.squaredNorm();
    grad_s += -2.0 * w_s * t.transpose() * rho_resid * (t * rho_est).transpose();

    const RowVec eff_resid = eff_est * s - eff_tgt;
    f += w_s * eff_resid.squaredNorm();
    grad_s += 2.0 * w_s * eff_est.transpose() * eff_resid;

    grad_s.row(0).setZero();  // feasible subspace
    grad = gauge_grad_to_params(grad_s, d2);
    return f;
  };

  LbfgsOptions opt;
  opt.max_iterations = max_iterations;
  opt.grad_tolerance = 1e-12;
  const Vec x0 = Vec::Zero((d2 - 1) * d2);
  Vec g0(x0.size());
  const double f0 = objective(x0, g0);
  const LbfgsResult res = lbfgs_minimize(objective, x0, opt);

  GaugeResult out;
  if (!std::isfinite(res.f) || res.f > f0) {
    // Optimizer failure: fall back to the identity gauge.
    out.gateset = estimate;
    out.transform.s = Mat::Identity(d2, d2);
    out.objective = f0;
    out.converged = false;
    out.objective_trace = {f0};
    return out;
  }
  const Mat s = gauge_from_params(res.x, d2);
  out.gateset = apply_gauge(estimate, s);
  out.transform.s = s;
  const Eigen::PartialPivLU<Mat> lu(s);
  out.transform.condition_estimate = s.norm() * lu.inverse().norm();
  out.objective = res.f;
  out.converged = res.converged || res.f < f0;
  out.objective_trace = res.trace;
  return out;
}

// ---------------------------------------------------------------------------
// Error-generator taxonomy

Mat error_generator(const Mat& noise_ptm) {
  if (noise_ptm.rows() != noise_ptm.cols())
    throw std::invalid_argument("PTM must be square");
  const Eigen::ComplexEigenSolver<Mat> es(noise_ptm);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const Complex lambda = es.eigenvalues()(i);
    const bool near_cut = lambda.real() <= 0.0 && std::abs(lambda.imag()) < 1e-8;
    if (near_cut || std::abs(lambda) < 1e-12)
      throw BranchCutError(
          "channel eigenvalue on or near the negative real axis; principal "
          "logarithm undefined (consider CPTP projection or regularization)");
  }
  const Mat gen = noise_ptm.log();
  const double recon = (gen.exp() - noise_ptm).norm();
  if (!(recon <= 1e-10 * std::max(1.0, noise_ptm.norm())))
    throw std::runtime_error("matrix logarithm failed round-trip check");
  return gen;
}

namespace {

// PTM representation of rho -> A rho B.
Mat sandwich_rep(const CMat& a, const CMat& b, const PauliBasis& basis) {
  const int n = basis.size();
  const double d = basis.dim();
  Mat rep(n, n);
  for (int j = 0; j < n; ++j) {
    const CMat mapped = a * basis.ops[j] * b;
    for (int i = 0; i < n; ++i)
      rep(i, j) = ((basis.ops[i] * mapped).trace() / d).real();
  }
  return rep;
}

std::string pair_label(const std::string& p, const std::string& q) {
  return p + "," + q;
}

GeneratorFrame build_frame(const PauliBasis& basis) {
  const int n = basis.size();
  const CMat id = CMat::Identity(basis.dim(), basis.dim());
  const Mat id_rep = sandwich_rep(id, id, basis);
  const Complex im(0.0, 1.0);

  GeneratorFrame fr;
  std::vector<Mat> reps;

  // Hamiltonian: H_P[rho] = -i [P, rho].
  for (int p = 1; p < n; ++p) {
    const Mat rep = sandwich_rep(-im * basis.ops[p], id, basis) +
                    sandwich_rep(id, im * basis.ops[p], basis);
    reps.push_back(rep);
    fr.elements.push_back({'H', basis.labels[p]});
  }
  // Pauli-stochastic: S_P[rho] = P rho P - rho.
  for (int p = 1; p < n; ++p) {
    const Mat rep = sandwich_rep(basis.ops[p], basis.ops[p], basis) - id_rep;
    reps.push_back(rep);
    fr.elements.push_back({'S', basis.labels[p]});
  }
  // Pauli-correlation: C_PQ[rho] = P rho Q + Q rho P - 1/2 {{P,Q}, rho}.
  for (int p = 1; p < n; ++p)
    for (int q = p + 1; q < n; ++q) {
      const CMat anti = basis.ops[p] * basis.ops[q] + basis.ops[q] * basis.ops[p];
      const Mat rep = sandwich_rep(basis.ops[p], basis.ops[q], basis) +
                      sandwich_rep(basis.ops[q], basis.ops[p], basis) -
                      0.5 * (sandwich_rep(anti, id, basis) +
                             sandwich_rep(id, anti, basis));
      reps.push_back(rep);
      fr.elements.push_back({'C', pair_label(basis.labels[p], basis.labels[q])});
    }
  // Active: A_PQ[rho] = i (P rho Q - Q rho P + 1/2 {[P,Q], rho}).
  for (int p = 1; p < n; ++p)
    for (int q = p + 1; q < n; ++q) {
      const CMat comm = basis.ops[p] * basis.ops[q] - basis.ops[q] * basis.ops[p];
      const Mat rep =
          sandwich_rep(im * basis.ops[p], basis.ops[q], basis) +
          sandwich_rep(-im * basis.ops[q], basis.ops[p], basis) +
          0.5 * (sandwich_rep(im * comm, id, basis) +
                 sandwich_rep(id, im * comm, basis));
      reps.push_back(rep);
      fr.elements.push_back({'A', pair_label(basis.labels[p], basis.labels[q])});
    }

  const int m = static_cast<int>(reps.size());
  fr.frame.resize(n * n, m);
  for (int k = 0; k < m; ++k) fr.frame.col(k) = vec_mat(reps[k]);

  const Mat gram = fr.frame.transpose() * fr.frame;
  const Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("elementary generator Gram matrix is singular");
  fr.duals = fr.frame * ldlt.solve(Mat::Identity(m, m));
  return fr;
}

}  // namespace

const GeneratorFrame& GeneratorFrame::for_basis(const PauliBasis& basis) {
  static const GeneratorFrame one = build_frame(PauliBasis::one_qubit());
  static const GeneratorFrame two = build_frame(PauliBasis::two_qubit());
  if (basis.n_qubits == 1) return one;
  if (basis.n_qubits == 2) return two;
  throw std::invalid_argument("generator frame cached for 1 and 2 qubits only");
}

double ErrorGeneratorDecomposition::coefficient(char cls,
                                                const std::string& label) const {
  const std::map<std::string, double>* m = nullptr;
  switch (cls) {
    case 'H': m = &h; break;
    case 'S': m = &s; break;
    case 'C': m = &c; break;
    case 'A': m = &a; break;
    default: throw std::invalid_argument("unknown generator class");
  }
  const auto it = m->find(label);
  return it == m->end() ? 0.0 : it->second;
}

ErrorGeneratorDecomposition decompose_generator(const Mat& generator,
                                                const PauliBasis& basis) {
  const GeneratorFrame& fr = GeneratorFrame::for_basis(basis);
  if (generator.rows() != basis.size() || generator.cols() != basis.size())
    throw std::invalid_argument("generator dimension mismatch");

  const Vec v = vec_mat(generator);
  const Vec coeffs = fr.duals.transpose() * v;
  const Vec resid = v - fr.frame * coeffs;

  ErrorGeneratorDecomposition dec;
  dec.residual_norm = resid.norm();
  for (size_t k = 0; k < fr.elements.size(); ++k) {
    const auto& el = fr.elements[k];
    switch (el.cls) {
      case 'H': dec.h[el.label] = coeffs(k); break;
      case 'S': dec.s[el.label] = coeffs(k); break;
      case 'C': dec.c[el.label] = coeffs(k); break;
      case 'A': dec.a[el.label] = coeffs(k); break;
    }
  }
  return dec;
}

InfidelityReport infidelity_report(const Mat& noise_ptm) {
  InfidelityReport rep;
  const double d2 = static_cast<double>(noise_ptm.rows());
  rep.eps_ent = 1.0 - noise_ptm.trace() / d2;

  const PauliBasis& basis =
      noise_ptm.rows() == 16 ? PauliBasis::two_qubit() : PauliBasis::one_qubit();
  const ErrorGeneratorDecomposition dec =
      decompose_generator(error_generator(noise_ptm), basis);

  for (const auto& [label, value] : dec.s) {
    rep.eps_j += value;
    rep.stacked.push_back({'S', label, value, value});
  }
  for (const auto& [label, value] : dec.h) {
    rep.theta_j_sq += value * value;
    rep.stacked.push_back({'H', label, value, value * value});
  }
  std::sort(rep.stacked.begin(), rep.stacked.end(),
            [](const GeneratorContribution& a, const GeneratorContribution& b) {
              return std::abs(a.contribution) > std::abs(b.contribution);
            });
  return rep;
}

std::string decomposition_to_csv(const ErrorGeneratorDecomposition& dec,
                                 const InfidelityReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "label,class,coefficient,contribution\n";
  const auto emit = [&](char cls, const std::map<std::string, double>& coeffs) {
    for (const auto& [label, value] : coeffs) {
      double contribution = 0.0;
      if (cls == 'S') contribution = value;
      if (cls == 'H') contribution = value * value;
      out << label << ',' << cls << ',' << value << ',' << contribution << "\n";
    }
  };
  emit('H', dec.h);
  emit('S', dec.s);
  emit('C', dec.c);
  emit('A', dec.a);
  out << "eps_ent,,," << report.eps_ent << "\n";
  return out.str();
}

nlohmann::json decomposition_to_json(const ErrorGeneratorDecomposition& dec,
                                     const InfidelityReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  const auto emit = [&](char cls, const std::map<std::string, double>& coeffs) {
    for (const auto& [label, value] : coeffs) {
      double contribution = 0.0;
      if (cls == 'S') contribution = value;
      if (cls == 'H') contribution = value * value;
      rows.push_back({{"label", label},
                      {"class", std::string(1, cls)},
                      {"coefficient", value},
                      {"contribution", contribution}});
    }
  };
  emit('H', dec.h);
  emit('S', dec.s);
  emit('C', dec.c);
  emit('A', dec.a);
  return {{"format", "fbtomo/decomposition@1"},
          {"rows", std::move(rows)},
          {"eps_ent", report.eps_ent},
          {"eps_j", report.eps_j},
          {"theta_j_sq", report.theta_j_sq},
          {"residual_norm", dec.residual_norm}};
}

}  // namespace fbt
