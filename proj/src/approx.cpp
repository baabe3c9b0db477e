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

#include "gdws/approx.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

namespace gdws {
namespace {

struct Candidate {
  double score;
  int channel;
};

// Max-heap order: larger score first, lower channel on ties.
struct HighestFirst {
  bool operator()(const Candidate& a, const Candidate& b) const {
    if (a.score != b.score) return a.score < b.score;
    return a.channel > b.channel;
  }
};

// Min-heap order: smaller score first, lower channel on ties.
struct LowestFirst {
  bool operator()(const Candidate& a, const Candidate& b) const {
    if (a.score != b.score) return a.score > b.score;
    return a.channel > b.channel;
  }
};

double sq(double x) { return x * x; }

void check_svds(std::span<const SubMatrixSVD> svds, std::span<const double> alpha) {
  if (alpha.size() != svds.size()) {
    throw ValidationError("alpha has " + std::to_string(alpha.size()) + " entries for " +
                          std::to_string(svds.size()) + " channels");
  }
}

std::vector<int> ranks_of(std::span<const SubMatrixSVD> svds) {
  std::vector<int> r;
  r.reserve(svds.size());
  for (const auto& s : svds) r.push_back(s.rank());
  return r;
}

GdwsFactors factorize(const ConvLayerSpec& spec, std::span<const SubMatrixSVD> svds,
                      std::span<const int> g) {
  const auto offsets = channel_offsets(g);
  const auto total = static_cast<Eigen::Index>(offsets.back());
  const int k2 = spec.kernel_area();
  GdwsFactors f{Matrix::Zero(spec.out_channels, total), Matrix::Zero(total, spec.weight_cols())};
  for (std::size_t c = 0; c < svds.size(); ++c) {
    const int keep = std::min(g[c], svds[c].rank());
    for (int i = 0; i < keep; ++i) {
      const auto row = static_cast<Eigen::Index>(offsets[c] + i);
      f.pw.col(row) = svds[c].sigma(i) * svds[c].u.col(i);
      f.gdw.row(row).segment(static_cast<Eigen::Index>(c) * k2, k2) =
          svds[c].v.col(i).transpose();
    }
  }
  return f;
}


// Largest-magnitude entry non-negative, lowest index on ties.
double canonical_sign(const Eigen::Ref<const Vector>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  }
  return v.size() > 0 && v(best) < 0.0 ? -1.0 : 1.0;
}

Eigen::Index nonzeros(const Matrix& m) { return (m.array() != 0.0).count(); }

struct SparsePair {
  Matrix left;   // rows x r
  Matrix right;  // r x cols
};

// s = left * right where right holds r rows of s itself. Rows are picked in
// order of increasing support size; every other row is expressed through the
// basis rows whose support lies inside its own, falling back to the full
// basis when that subset does not reproduce it.
std::optional<SparsePair> row_basis_factor(const Matrix& s, int r) {
  std::vector<Eigen::Index> order;
  for (Eigen::Index m = 0; m < s.rows(); ++m) {
    if (!s.row(m).isZero(0.0)) order.push_back(m);
  }
  const auto support = [&](Eigen::Index m) { return (s.row(m).array() != 0.0).count(); };
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return support(a) < support(b); });

  std::vector<Eigen::Index> basis;
  Matrix q(0, s.cols());
  for (auto m : order) {
    if (static_cast<int>(basis.size()) == r) break;
    const Vector row = s.row(m).transpose();
    const Vector resid = row - q.transpose() * (q * row);
    if (resid.norm() <= 1e-8 * row.norm()) continue;
    q.conservativeResize(q.rows() + 1, Eigen::NoChange);
    q.row(q.rows() - 1) = resid.normalized().transpose();
    basis.push_back(m);
  }
  if (static_cast<int>(basis.size()) != r) return std::nullopt;

  SparsePair out{Matrix::Zero(s.rows(), r), Matrix(r, s.cols())};
  for (int i = 0; i < r; ++i) out.right.row(i) = s.row(basis[i]);
  for (auto m : order) {
    const Vector row = s.row(m).transpose();
    std::vector<int> picked;
    for (int i = 0; i < r; ++i) {
      const bool inside =
          ((out.right.row(i).array() != 0.0) && (s.row(m).array() == 0.0)).count() == 0;
      if (inside) picked.push_back(i);
    }
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (attempt == 1) {
        picked.resize(static_cast<std::size_t>(r));
        std::iota(picked.begin(), picked.end(), 0);
      }
      if (picked.empty()) continue;
      Matrix sub(s.cols(), static_cast<Eigen::Index>(picked.size()));
      for (std::size_t j = 0; j < picked.size(); ++j) {
        sub.col(static_cast<Eigen::Index>(j)) = out.right.row(picked[j]).transpose();
      }
      const Vector coef = sub.colPivHouseholderQr().solve(row);
      if ((sub * coef - row).norm() > 1e-10 * row.norm()) continue;
      for (std::size_t j = 0; j < picked.size(); ++j) {
        out.left(m, picked[j]) = coef(static_cast<Eigen::Index>(j));
      }
      break;
    }
  }
  return out;
}

// Exact factorization of one channel block whose factors are no denser than
// the block itself, tried over a row basis and then a column basis.
std::optional<SparsePair> sparse_exact_factor(const Matrix& s, int r) {
  const Eigen::Index limit = nonzeros(s);
  const auto accept = [&](const SparsePair& f) {
    return nonzeros(f.left) <= limit && nonzeros(f.right) <= limit &&
           (f.left * f.right - s).norm() <= 1e-9 * s.norm();
  };
  if (auto f = row_basis_factor(s, r); f && accept(*f)) return f;
  if (auto f = row_basis_factor(s.transpose(), r)) {
    SparsePair t{f->right.transpose(), f->left.transpose()};
    if (accept(t)) return t;
  }
  return std::nullopt;
}

}  // namespace

std::int64_t GdwsDecomposition::total_filters() const {
  return std::accumulate(g.begin(), g.end(), std::int64_t{0});
}

AlphaVector alpha_uniform(int channels) {
  if (channels < 1) throw ValidationError("alpha_uniform: channel count must be positive");
  return AlphaVector(static_cast<std::size_t>(channels), 1.0);
}

void validate_alpha(std::span<const double> alpha, const ConvLayerSpec& spec) {
  if (alpha.size() != static_cast<std::size_t>(spec.in_channels)) {
    throw ValidationError("layer '" + spec.id + "': alpha has " + std::to_string(alpha.size()) +
                          " entries, expected " + std::to_string(spec.in_channels));
  }
  for (double a : alpha) {
    if (!std::isfinite(a) || a < 0.0) {
      throw ValidationError("layer '" + spec.id + "': alpha entries must be finite and >= 0");
    }
  }
}

std::vector<std::int64_t> channel_offsets(std::span<const int> g) {
  std::vector<std::int64_t> h(g.size() + 1, 0);
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (g[c] < 0) throw ValidationError("channel distribution has a negative entry");
    h[c + 1] = h[c] + g[c];
  }
  return h;
}

double weighted_error_sq(const WeightMatrix& w, const WeightMatrix& q,
                         std::span<const double> alpha) {
  const ConvLayerSpec& s = w.spec();
  if (q.spec().in_channels != s.in_channels || q.spec().kernel != s.kernel ||
      q.spec().out_channels != s.out_channels) {
    throw ShapeError("weighted_error_sq: layer shapes differ");
  }
  if (alpha.size() != static_cast<std::size_t>(s.in_channels)) {
    throw ShapeError("weighted_error_sq: alpha length mismatch");
  }
  double acc = 0.0;
  for (int c = 0; c < s.in_channels; ++c) {
    acc += alpha[c] * (w.channel(c) - q.channel(c)).squaredNorm();
  }
  return acc;
}

double predicted_error_sq(std::span<const SubMatrixSVD> svds, std::span<const int> g,
                          std::span<const double> alpha) {
  check_svds(svds, alpha);
  if (g.size() != svds.size()) throw ShapeError("predicted_error_sq: g length mismatch");
  double acc = 0.0;
  for (std::size_t c = 0; c < svds.size(); ++c) {
    if (alpha[c] != 0.0) acc += alpha[c] * tail_error_sq(svds[c], g[c]);
  }
  return acc;
}

ChannelDistribution mego_distribution(std::span<const SubMatrixSVD> svds,
                                      std::span<const double> alpha, std::int64_t gamma) {
  check_svds(svds, alpha);
  if (gamma < 1) throw ValidationError("mego: gamma must be >= 1");
  ChannelDistribution g(svds.size(), 0);
  std::priority_queue<Candidate, std::vector<Candidate>, HighestFirst> heap;
  for (std::size_t c = 0; c < svds.size(); ++c) {
    if (alpha[c] > 0.0 && svds[c].rank() > 0) {
      heap.push({alpha[c] * sq(svds[c].sigma(0)), static_cast<int>(c)});
    }
  }
  for (std::int64_t used = 0; used < gamma && !heap.empty(); ++used) {
    const Candidate top = heap.top();
    heap.pop();
    const int next = ++g[top.channel];
    if (next < svds[top.channel].rank()) {
      heap.push({alpha[top.channel] * sq(svds[top.channel].sigma(next)), top.channel});
    }
  }
  return g;
}

ChannelDistribution lego_distribution(std::span<const SubMatrixSVD> svds,
                                      std::span<const double> alpha, double beta) {
  check_svds(svds, alpha);
  if (!(beta >= 0.0)) throw ValidationError("lego: beta must be >= 0");
  ChannelDistribution g = ranks_of(svds);
  std::priority_queue<Candidate, std::vector<Candidate>, LowestFirst> heap;
  for (std::size_t c = 0; c < svds.size(); ++c) {
    if (alpha[c] == 0.0) {
      g[c] = 0;
    } else if (g[c] > 0) {
      heap.push({alpha[c] * sq(svds[c].sigma(g[c] - 1)), static_cast<int>(c)});
    }
  }
  double dropped = 0.0;
  while (!heap.empty()) {
    const Candidate low = heap.top();
    if (dropped + low.score > beta) break;
    heap.pop();
    dropped += low.score;
    const int left = --g[low.channel];
    if (left > 0) {
      heap.push({alpha[low.channel] * sq(svds[low.channel].sigma(left - 1)), low.channel});
    }
  }
  return g;
}

GdwsDecomposition assemble(const ConvLayerSpec& spec, std::span<const SubMatrixSVD> svds,
                           ChannelDistribution g, std::span<const double> alpha,
                           bool materialize) {
  GdwsDecomposition d;
  d.spec = spec;
  d.ranks = ranks_of(svds);
  d.factors = factorize(spec, svds, g);
  d.achieved_error_sq = predicted_error_sq(svds, g, alpha);
  d.g = std::move(g);
  if (materialize) d.approx_matrix = d.factors.pw * d.factors.gdw;
  return d;
}

GdwsDecomposition mego(const WeightMatrix& w, std::span<const double> alpha,
                       std::int64_t gamma, const ApproxOptions& options) {
  validate_alpha(alpha, w.spec());
  if (gamma < 1) throw ValidationError("mego: gamma must be >= 1");
  const auto svds = svd_channels(w, options.threads);
  return assemble(w.spec(), svds, mego_distribution(svds, alpha, gamma), alpha,
                  options.materialize);
}

GdwsDecomposition lego(const WeightMatrix& w, std::span<const double> alpha, double beta,
                       const ApproxOptions& options) {
  validate_alpha(alpha, w.spec());
  if (!(beta >= 0.0)) throw ValidationError("lego: beta must be >= 0");
  const auto svds = svd_channels(w, options.threads);
  return assemble(w.spec(), svds, lego_distribution(svds, alpha, beta), alpha,
                  options.materialize);
}

GdwsDecomposition exact_gdws(const WeightMatrix& w, const ApproxOptions& options) {
  const auto svds = svd_channels(w, options.threads);
  const AlphaVector ones = alpha_uniform(w.spec().in_channels);
  GdwsDecomposition d = assemble(w.spec(), svds, ranks_of(svds), ones, false);
  // Sparse blocks get factors drawn from their own rows or columns; the SVD
  // factors stay wherever that route is not exact.
  const auto offsets = channel_offsets(d.g);
  const int k2 = w.spec().kernel_area();
  for (int c = 0; c < w.spec().in_channels; ++c) {
    const int r = d.g[c];
    if (r == 0) continue;
    const Matrix block = w.channel(c);
    const auto f = sparse_exact_factor(block, r);
    if (!f) continue;
    for (int i = 0; i < r; ++i) {
      const auto row = static_cast<Eigen::Index>(offsets[c] + i);
      const Vector v = f->right.row(i).transpose();
      const double scale = v.norm() * canonical_sign(v);
      d.factors.pw.col(row) = f->left.col(i) * scale;
      d.factors.gdw.row(row).setZero();
      d.factors.gdw.row(row).segment(static_cast<Eigen::Index>(c) * k2, k2) =
          v.transpose() / scale;
    }
  }
  if (options.materialize) d.approx_matrix = d.factors.pw * d.factors.gdw;
  return d;
}

GdwsFactors decompose(const WeightMatrix& w_hat, std::span<const int> g,
                      std::span<const SubMatrixSVD> svds) {
  const ConvLayerSpec& spec = w_hat.spec();
  if (g.size() != static_cast<std::size_t>(spec.in_channels) || svds.size() != g.size()) {
    throw ShapeError("decompose: g / svds length must equal C");
  }
  for (std::size_t c = 0; c < svds.size(); ++c) {
    if (svds[c].rows != spec.out_channels || svds[c].cols != spec.kernel_area()) {
      throw ShapeError("decompose: channel SVD has the wrong shape");
    }
    if (svds[c].rank() > g[c]) {
      throw ValidationError("decompose: rank of channel " + std::to_string(c) + " is " +
                            std::to_string(svds[c].rank()) + ", exceeds g_c = " +
                            std::to_string(g[c]));
    }
  }
  return factorize(spec, svds, g);
}

void check_block_structure(const Matrix& gdw, const ConvLayerSpec& spec,
                           std::span<const int> g) {
  const int k2 = spec.kernel_area();
  if (gdw.cols() != spec.weight_cols()) {
    throw ShapeError("gdw matrix has " + std::to_string(gdw.cols()) + " columns, expected " +
                     std::to_string(spec.weight_cols()));
  }
  if (!g.empty()) {
    if (g.size() != static_cast<std::size_t>(spec.in_channels)) {
      throw ShapeError("channel distribution length mismatch");
    }
    const auto offsets = channel_offsets(g);
    if (offsets.back() != gdw.rows()) throw ShapeError("gdw row count does not equal sum(g)");
    for (int c = 0; c < spec.in_channels; ++c) {
      for (auto row = offsets[c]; row < offsets[c + 1]; ++row) {
        for (int b = 0; b < spec.in_channels; ++b) {
          if (b == c) continue;
          if (!gdw.row(row).segment(static_cast<Eigen::Index>(b) * k2, k2).isZero(0.0)) {
            throw ValidationError("gdw row " + std::to_string(row) + " of channel " +
                                  std::to_string(c) + " has weights in channel block " +
                                  std::to_string(b));
          }
        }
      }
    }
    return;
  }
  int last = -1;
  for (Eigen::Index row = 0; row < gdw.rows(); ++row) {
    int owner = -1;
    for (int b = 0; b < spec.in_channels; ++b) {
      if (gdw.row(row).segment(static_cast<Eigen::Index>(b) * k2, k2).isZero(0.0)) continue;
      if (owner >= 0) {
        throw ValidationError("gdw row " + std::to_string(row) + " spans channel blocks " +
                              std::to_string(owner) + " and " + std::to_string(b));
      }
      owner = b;
    }
    if (owner < 0) continue;
    if (owner < last) {
      throw ValidationError("gdw row " + std::to_string(row) + " breaks channel ordering");
    }
    last = owner;
  }
}

WeightMatrix compose(const Matrix& pw, const Matrix& gdw, const ConvLayerSpec& spec,
                     std::span<const int> g) {
  if (pw.rows() != spec.out_channels || pw.cols() != gdw.rows()) {
    throw ShapeError("compose: factor shapes do not chain (" + std::to_string(pw.rows()) + "x" +
                     std::to_string(pw.cols()) + " * " + std::to_string(gdw.rows()) + "x" +
                     std::to_string(gdw.cols()) + ")");
  }
  check_block_structure(gdw, spec, g);
  if (gdw.rows() == 0) return WeightMatrix(spec);
  return WeightMatrix(spec, pw * gdw);
}

}  // namespace gdws
