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

#pragma once

// Directional regularization: the top-k eigenvectors of the (symmetrized)
// square-reshaped parameter matrix of the model being trained are pulled
// toward those of a fixed reference model via |E_theta^T E_phi - I_k|_F.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "gwsdr/classifier.hpp"

namespace gwsdr {

/// Spectra closer than this make the eigenvector derivative ill-posed.
inline constexpr double kEigengapTolerance = 1e-8;

struct ReshapedParams {
  Eigen::MatrixXd matrix;  // n x n, row-major fill, zero padded
  std::size_t parameter_count = 0;
  std::size_t pad_count = 0;
};

ReshapedParams reshape_params(const ClassifierModel& model);
ReshapedParams reshape_flat(std::span<const double> params);

/// Full decomposition of (m + m^T)/2 ordered by descending |eigenvalue|, each
/// column signed so its largest-magnitude component is positive.
struct SortedEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

SortedEigen sorted_symmetric_eigen(const Eigen::MatrixXd& m);

/// First k columns of sorted_symmetric_eigen(m).vectors.
Eigen::MatrixXd significant_eigvecs(const Eigen::MatrixXd& m, std::size_t k);

/// Smallest separation that the first-order perturbation formula divides by:
/// min |l_i - l_j| over i < k, j != i, and ||l_k| - |l_{k+1}|| at the cut.
double eigengap(const Eigen::VectorXd& sorted_values, std::size_t k);

struct DRContext {
  Eigen::MatrixXd m_theta;
  Eigen::MatrixXd m_phi;
  Eigen::MatrixXd e_theta_hat;  // after sign alignment
  Eigen::MatrixXd e_phi_hat;
  Eigen::VectorXd theta_spectrum;
  std::size_t k = 0;
  std::size_t pad_count = 0;
  std::vector<int> sign_alignment;  // +-1 applied to columns of e_theta_hat
  double eigengap = 0.0;
};

DRContext make_dr_context(const ClassifierModel& theta, const ClassifierModel& phi,
                          std::size_t k);

/// |A^T B - I|_F with columns of A flipped where diag(A^T B) < 0.
double aligned_frobenius_loss(const Eigen::MatrixXd& e_theta_hat,
                              const Eigen::MatrixXd& e_phi_hat);

double dr_loss(const ClassifierModel& theta, const ClassifierModel& phi, std::size_t k);

struct DRGradient {
  std::vector<double> gradient;  // one entry per theta parameter
  double loss = 0.0;
  double eigengap = 0.0;
};

/// Analytic gradient with respect to theta's flattened parameters. phi is
/// treated as constant. Throws Error(kDegenerateSpectrum) when the eigengap is
/// below kEigengapTolerance; callers skip the term for that step.
DRGradient dr_grad(const ClassifierModel& theta, const ClassifierModel& phi, std::size_t k);

/// Same as dr_grad with the reference basis precomputed, for training loops.
DRGradient dr_grad_flat(std::span<const double> theta_params,
                        const Eigen::MatrixXd& e_phi_hat);

/// Cross-entropy summed over `batch` plus dr_weight * dr_loss(theta, phi, k).
double total_loss(const ClassifierModel& theta, const LabeledDataset& batch,
                  const ClassifierModel& phi, double dr_weight, std::size_t k);

}  // namespace gwsdr
