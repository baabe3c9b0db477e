/* Copyright 2026 The GDWS Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GDWS_SVD_HPP_
#define GDWS_SVD_HPP_

#include <vector>

#include "gdws/tensor.hpp"

namespace gdws {

// Thin SVD of one M x K^2 sub-matrix, truncated to its numerical rank r:
// u is M x r, sigma holds r descending positive values, v is K^2 x r.
// Signs are canonical: the largest-magnitude entry of every v column is
// non-negative (lowest index wins ties).
struct SubMatrixSVD {
  Matrix u;
  Vector sigma;
  Matrix v;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  int rank() const { return static_cast<int>(sigma.size()); }
};

// Relative cutoff applied to sigma_1 when counting the numerical rank:
// sigma_i counts when sigma_i > max(M, K^2) * sigma_1 * 2^-40.
double rank_threshold(Eigen::Index rows, Eigen::Index cols, double sigma_max);

// Throws ValidationError on non-finite input.
SubMatrixSVD svd_submatrix(const Eigen::Ref<const Matrix>& w);

// sum_{i <= min(p, r)} sigma_i u_i v_i^T; p = 0 gives the zero matrix.
Matrix truncate(const SubMatrixSVD& svd, int p);

// sum_{i > p} sigma_i^2, zero once p >= r.
double tail_error_sq(const SubMatrixSVD& svd, int p);

// Per-channel SVDs of a full weight matrix. Channels are independent, so
// `threads` > 1 splits them across workers without changing the result.
std::vector<SubMatrixSVD> svd_channels(const WeightMatrix& w, int threads = 1);

}  // namespace gdws

#endif  // GDWS_SVD_HPP_
