// Copyright 2026 The gwsdr Authors
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

#include "gwsdr/directional_regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gwsdr/error.hpp"

namespace gwsdr {

namespace {

void check_pair(const ClassifierModel& theta, const ClassifierModel& phi, std::size_t k) {
  theta.validate();
  phi.validate();
  require(theta.layer_sizes == phi.layer_sizes, ErrorCode::kShapeMismatch,
          "directional regularization needs models with identical layer sizes");
  const auto n = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(theta.parameter_count())) - 1e-12));
  require(k >= 1 && k <= n, ErrorCode::kInvalidArgument,
          "rank k=" + std::to_string(k) + " must be in [1, " + std::to_string(n) + "]");
}

// Flips rows of A = E_theta^T E_phi (columns of E_theta) whose diagonal entry
// is negative. Returns the applied signs.
std::vector<int> align_signs(Eigen::MatrixXd& a) {
  std::vector<int> signs(static_cast<std::size_t>(a.rows()), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a(i, i) < 0.0) {
      a.row(i) *= -1.0;
      signs[static_cast<std::size_t>(i)] = -1;
    }
  }
  return signs;
}

}  // namespace

ReshapedParams reshape_flat(std::span<const double> params) {
  require(!params.empty(), ErrorCode::kInvalidArgument, "cannot reshape zero parameters");
  std::size_t n = static_cast<std::size_t>(std::sqrt(static_cast<double>(params.size())));
  while (n * n < params.size()) ++n;
  while (n > 1 && (n - 1) * (n - 1) >= params.size()) --n;
  ReshapedParams r;
  r.parameter_count = params.size();
  r.pad_count = n * n - params.size();
  r.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < params.size(); ++p)
    r.matrix(static_cast<Eigen::Index>(p / n), static_cast<Eigen::Index>(p % n)) = params[p];
  return r;
}

ReshapedParams reshape_params(const ClassifierModel& model) {
  model.validate();
  return reshape_flat(model.flatten());
}

SortedEigen sorted_symmetric_eigen(const Eigen::MatrixXd& m) {
  require(m.rows() == m.cols() && m.rows() > 0, ErrorCode::kShapeMismatch,
          "eigendecomposition needs a non-empty square matrix");
  require(m.allFinite(), ErrorCode::kInvalidArgument, "matrix has non-finite entries");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  require(solver.info() == Eigen::Success, ErrorCode::kInternal,
          "symmetric eigendecomposition did not converge");
  const auto n = static_cast<std::size_t>(m.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& vals = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(vals(static_cast<Eigen::Index>(a))) >
           std::abs(vals(static_cast<Eigen::Index>(b)));
  });
  SortedEigen out;
  out.values.resize(m.rows());
  out.vectors.resize(m.rows(), m.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = static_cast<Eigen::Index>(order[i]);
    const auto dst = static_cast<Eigen::Index>(i);
    out.values(dst) = vals(src);
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0.0) v = -v;
    out.vectors.col(dst) = v;
  }
  return out;
}

Eigen::MatrixXd significant_eigvecs(const Eigen::MatrixXd& m, std::size_t k) {
  require(k >= 1 && k <= static_cast<std::size_t>(m.rows()), ErrorCode::kInvalidArgument,
          "rank k=" + std::to_string(k) + " must be in [1, " + std::to_string(m.rows()) + "]");
  return sorted_symmetric_eigen(m).vectors.leftCols(static_cast<Eigen::Index>(k));
}

double eigengap(const Eigen::VectorXd& v, std::size_t k) {
  const auto n = static_cast<std::size_t>(v.size());
  double gap = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < k && i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j)
        gap = std::min(gap, std::abs(v(static_cast<Eigen::Index>(i)) -
                                     v(static_cast<Eigen::Index>(j))));
  if (k < n)
    gap = std::min(gap, std::abs(std::abs(v(static_cast<Eigen::Index>(k - 1))) -
                                 std::abs(v(static_cast<Eigen::Index>(k)))));
  return gap;
}

double aligned_frobenius_loss(const Eigen::MatrixXd& e_theta_hat,
                              const Eigen::MatrixXd& e_phi_hat) {
  require(e_theta_hat.rows() == e_phi_hat.rows() && e_theta_hat.cols() == e_phi_hat.cols(),
          ErrorCode::kShapeMismatch, "eigenbases have different shapes");
  Eigen::MatrixXd a = e_theta_hat.transpose() * e_phi_hat;
  align_signs(a);
  return (a - Eigen::MatrixXd::Identity(a.rows(), a.cols())).norm();
}

DRContext make_dr_context(const ClassifierModel& theta, const ClassifierModel& phi,
                          std::size_t k) {
  check_pair(theta, phi, k);
  DRContext ctx;
  const auto rt = reshape_params(theta);
  ctx.m_theta = rt.matrix;
  ctx.m_phi = reshape_params(phi).matrix;
  ctx.pad_count = rt.pad_count;
  ctx.k = k;
  const auto eig = sorted_symmetric_eigen(ctx.m_theta);
  ctx.theta_spectrum = eig.values;
  ctx.eigengap = eigengap(eig.values, k);
  ctx.e_theta_hat = eig.vectors.leftCols(static_cast<Eigen::Index>(k));
  ctx.e_phi_hat = significant_eigvecs(ctx.m_phi, k);
  Eigen::MatrixXd a = ctx.e_theta_hat.transpose() * ctx.e_phi_hat;
  ctx.sign_alignment = align_signs(a);
  for (std::size_t i = 0; i < k; ++i)
    ctx.e_theta_hat.col(static_cast<Eigen::Index>(i)) *= ctx.sign_alignment[i];
  return ctx;
}

double dr_loss(const ClassifierModel& theta, const ClassifierModel& phi, std::size_t k) {
  const auto ctx = make_dr_context(theta, phi, k);
  return aligned_frobenius_loss(ctx.e_theta_hat, ctx.e_phi_hat);
}

DRGradient dr_grad_flat(std::span<const double> theta_params, const Eigen::MatrixXd& e_phi_hat) {
  const auto reshaped = reshape_flat(theta_params);
  const Eigen::Index n = reshaped.matrix.rows();
  const Eigen::Index k = e_phi_hat.cols();
  require(e_phi_hat.rows() == n && k >= 1 && k <= n, ErrorCode::kShapeMismatch,
          "reference basis does not match the reshaped parameter matrix");

  const auto eig = sorted_symmetric_eigen(reshaped.matrix);
  DRGradient out;
  out.eigengap = eigengap(eig.values, static_cast<std::size_t>(k));
  if (out.eigengap < kEigengapTolerance)
    fail(ErrorCode::kDegenerateSpectrum,
         "eigengap " + std::to_string(out.eigengap) +
             " below tolerance; skip the directional term for this step");

  Eigen::MatrixXd e = eig.vectors.leftCols(k);
  Eigen::MatrixXd a = e.transpose() * e_phi_hat;
  const auto signs = align_signs(a);
  for (Eigen::Index i = 0; i < k; ++i) e.col(i) *= signs[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd dev = a - Eigen::MatrixXd::Identity(k, k);
  out.loss = dev.norm();
  out.gradient.assign(theta_params.size(), 0.0);
  // |.|_F is not differentiable at 0; the minimum has zero subgradient there.
  if (out.loss == 0.0) return out;

  // dL/dE_theta, column i = sum_j R_ij f_j with R = dev / L.
  const Eigen::MatrixXd g = e_phi_hat * (dev / out.loss).transpose();
  // First-order perturbation of a symmetric eigenproblem:
  //   de_i = sum_{j != i} v_j (v_j^T dS e_i) / (l_i - l_j)
  Eigen::MatrixXd w = eig.vectors.transpose() * g;  // n x k, (j, i) = v_j^T g_i
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      w(j, i) = (i == j) ? 0.0 : w(j, i) / (eig.values(i) - eig.values(j));
  const Eigen::MatrixXd g_sym = eig.vectors * w * e.transpose();
  const Eigen::MatrixXd g_m = 0.5 * (g_sym + g_sym.transpose());
  for (std::size_t p = 0; p < theta_params.size(); ++p)
    out.gradient[p] = g_m(static_cast<Eigen::Index>(p) / n, static_cast<Eigen::Index>(p) % n);
  return out;
}

DRGradient dr_grad(const ClassifierModel& theta, const ClassifierModel& phi, std::size_t k) {
  check_pair(theta, phi, k);
  return dr_grad_flat(theta.flatten(), significant_eigvecs(reshape_params(phi).matrix, k));
}

double total_loss(const ClassifierModel& theta, const LabeledDataset& batch,
                  const ClassifierModel& phi, double dr_weight, std::size_t k) {
  require(dr_weight >= 0.0, ErrorCode::kInvalidArgument, "dr_weight must be non-negative");
  const double ce = cross_entropy(theta, batch);
  if (dr_weight == 0.0) return ce;
  return ce + dr_weight * dr_loss(theta, phi, k);
}

}  // namespace gwsdr
