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

#ifndef GDWS_APPROX_HPP_
#define GDWS_APPROX_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gdws/svd.hpp"
#include "gdws/tensor.hpp"

namespace gdws {

// Per-channel filter counts g_c; G = sum(g).
using ChannelDistribution = std::vector<int>;
// Non-negative per-channel error weights.
using AlphaVector = std::vector<double>;

// Factor pair of a GDWS convolution: W = pw * gdw.
struct GdwsFactors {
  Matrix pw;   // M x G
  Matrix gdw;  // G x CK^2, block structured
};

struct GdwsDecomposition {
  ConvLayerSpec spec;
  ChannelDistribution g;
  std::vector<int> ranks;  // numerical rank r_c of every W_c
  GdwsFactors factors;
  // sum_c alpha_c * sum_{i > g_c} sigma_{i,c}^2
  double achieved_error_sq = 0.0;
  // W_hat, filled only when ApproxOptions::materialize is set.
  std::optional<Matrix> approx_matrix;

  std::int64_t total_filters() const;
};

struct ApproxOptions {
  bool materialize = false;
  int threads = 1;
};

AlphaVector alpha_uniform(int channels);

// Throws ValidationError unless alpha has C finite, non-negative entries.
void validate_alpha(std::span<const double> alpha, const ConvLayerSpec& spec);

// sum_c alpha_c ||W_c - Q_c||_F^2, the square of the weighted error e.
double weighted_error_sq(const WeightMatrix& w, const WeightMatrix& q,
                         std::span<const double> alpha);

// sum_c alpha_c * tail_error_sq(svds[c], g[c]).
double predicted_error_sq(std::span<const SubMatrixSVD> svds, std::span<const int> g,
                          std::span<const double> alpha);

// Greedy rank allocation under a filter budget: repeatedly gives one more
// filter to the channel with the largest alpha_c * sigma_{g_c+1,c}^2 until
// sum(g) = gamma or every channel reaches its rank. Ties go to the lowest
// channel index; channels with alpha_c = 0 stay at zero.
ChannelDistribution mego_distribution(std::span<const SubMatrixSVD> svds,
                                      std::span<const double> alpha, std::int64_t gamma);

// Greedy rank removal under a squared-error budget: starting from g = r,
// repeatedly drops the globally smallest alpha_c * sigma_{g_c,c}^2 while the
// accumulated dropped energy stays <= beta. Channels may reach zero.
ChannelDistribution lego_distribution(std::span<const SubMatrixSVD> svds,
                                      std::span<const double> alpha, double beta);

// Minimum weighted error subject to sum(g) <= gamma. Throws ValidationError
// for gamma < 1 or a malformed alpha.
GdwsDecomposition mego(const WeightMatrix& w, std::span<const double> alpha,
                       std::int64_t gamma, const ApproxOptions& options = {});

// Minimum G subject to weighted_error_sq <= beta (beta bounds the SQUARED
// weighted error). Throws ValidationError for beta < 0 or a malformed alpha.
GdwsDecomposition lego(const WeightMatrix& w, std::span<const double> alpha, double beta,
                       const ApproxOptions& options = {});

// Lossless rewrite with g_c = r_c. A channel block is factored over a subset
// of its own rows or columns when that gives exact factors with no more
// nonzeros than the block; otherwise its SVD factors are used.
GdwsDecomposition exact_gdws(const WeightMatrix& w, const ApproxOptions& options = {});

// Builds a decomposition from precomputed channel SVDs and a distribution.
GdwsDecomposition assemble(const ConvLayerSpec& spec, std::span<const SubMatrixSVD> svds,
                           ChannelDistribution g, std::span<const double> alpha,
                           bool materialize);

// Splits W_hat into factors given its channel SVDs. Column h_c + i of pw is
// sigma_{i,c} u_{i,c}; row h_c + i of gdw is v_{i,c}^T inside channel c's
// column block. Throws ValidationError when some rank(W_hat_c) > g_c.
GdwsFactors decompose(const WeightMatrix& w_hat, std::span<const int> g,
                      std::span<const SubMatrixSVD> svds);

// Throws ValidationError when gdw has a nonzero outside the block layout. With
// g given, rows [h_c, h_c + g_c) may only touch channel c. Without g, each row
// may touch at most one channel block and those blocks must be non-decreasing
// from row to row.
void check_block_structure(const Matrix& gdw, const ConvLayerSpec& spec,
                           std::span<const int> g = {});

// pw * gdw as a weight matrix for `spec`, after checking the block layout.
WeightMatrix compose(const Matrix& pw, const Matrix& gdw, const ConvLayerSpec& spec,
                     std::span<const int> g = {});

// Prefix offsets h_c = sum_{k < c} g_k, with a trailing total.
std::vector<std::int64_t> channel_offsets(std::span<const int> g);

}  // namespace gdws

#endif  // GDWS_APPROX_HPP_
