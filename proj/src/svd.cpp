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

#include "gdws/svd.hpp"

#include <algorithm>
#include <cmath>

#include "gdws/parallel.hpp"

namespace gdws {

double rank_threshold(Eigen::Index rows, Eigen::Index cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) * sigma_max * std::ldexp(1.0, -40);
}

SubMatrixSVD svd_submatrix(const Eigen::Ref<const Matrix>& w) {
  if (!w.allFinite()) throw ValidationError("svd_submatrix: non-finite entries");
  SubMatrixSVD out;
  out.rows = w.rows();
  out.cols = w.cols();
  if (w.size() == 0) return out;

  Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  int r = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double cutoff = rank_threshold(w.rows(), w.cols(), s(0));
    while (r < s.size() && s(r) > cutoff) ++r;
  }
  out.sigma = s.head(r);
  out.u = svd.matrixU().leftCols(r);
  out.v = svd.matrixV().leftCols(r);

  for (int i = 0; i < r; ++i) {
    Eigen::Index pivot = 0;
    for (Eigen::Index k = 1; k < out.v.rows(); ++k) {
      if (std::abs(out.v(k, i)) > std::abs(out.v(pivot, i))) pivot = k;
    }
    if (out.v(pivot, i) < 0.0) {
      out.v.col(i) = -out.v.col(i);
      out.u.col(i) = -out.u.col(i);
    }
  }
  return out;
}

Matrix truncate(const SubMatrixSVD& svd, int p) {
  Matrix out = Matrix::Zero(svd.rows, svd.cols);
  const int keep = std::clamp(p, 0, svd.rank());
  for (int i = 0; i < keep; ++i) {
    out.noalias() += svd.sigma(i) * svd.u.col(i) * svd.v.col(i).transpose();
  }
  return out;
}

double tail_error_sq(const SubMatrixSVD& svd, int p) {
  double acc = 0.0;
  // Smallest terms first.
  for (int i = svd.rank() - 1; i >= std::max(p, 0); --i) acc += svd.sigma(i) * svd.sigma(i);
  return acc;
}

std::vector<SubMatrixSVD> svd_channels(const WeightMatrix& w, int threads) {
  std::vector<SubMatrixSVD> out(static_cast<std::size_t>(w.spec().in_channels));
  parallel_for(out.size(), threads,
               [&](std::size_t c) { out[c] = svd_submatrix(w.channel(static_cast<int>(c))); });
  return out;
}

}  // namespace gdws
