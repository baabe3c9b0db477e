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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "gdws/alpha.hpp"
#include "gdws/approx.hpp"
#include "gdws/builder.hpp"
#include "gdws/conv.hpp"
#include "gdws/macs.hpp"
#include "gdws/model_io.hpp"
#include "gdws/verify.hpp"
#include "test_support.hpp"

namespace gdws {
namespace {

namespace fs = std::filesystem;
using namespace gdws::testing;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

AlphaVector positive_alpha(Rng& rng, int c) {
  AlphaVector a;
  for (int i = 0; i < c; ++i) a.push_back(0.1 + 3.0 * rng.uniform());
  return a;
}

WeightMatrix small_instance(Rng& rng) {
  const int c = static_cast<int>(rng.uniform_int(1, 4));
  const int k = static_cast<int>(rng.uniform_int(1, 2));
  const int m = static_cast<int>(rng.uniform_int(1, 6));
  return WeightMatrix(make_spec(c, k, m), random_matrix(rng, m, c * k * k));
}

Outcome golden_sparse_toy() {
  const WeightMatrix w = sparse_toy();
  const auto d = exact_gdws(w, {.materialize = true});
  ConvLayerSpec spec = w.spec();
  spec.input_h = 2;
  spec.input_w = 2;
  const std::int64_t std_macs = macs_standard(spec);
  const std::int64_t gdws_macs = macs_gdws(spec, d.g);
  const MacReport r = make_mac_report(std_macs, gdws_macs);
  const auto nnz = count_nonzeros(d.factors.pw) + count_nonzeros(d.factors.gdw);
  const bool ok = d.g == ChannelDistribution{2, 1, 1} && d.achieved_error_sq == 0.0 &&
                  *d.approx_matrix == w.data() && std_macs == 48 && gdws_macs == 32 &&
                  r.reduction_factor == 1.5 && nnz == 8;
  return {ok, fmt("g=[%d,%d,%d] macs %lld/%lld=%.3f factor nnz %lld", d.g[0], d.g[1], d.g[2],
                  static_cast<long long>(std_macs), static_cast<long long>(gdws_macs),
                  r.reduction_factor, static_cast<long long>(nnz))};
}

Outcome mego_optimality() {
  Rng rng(1001);
  int instances = 0, checks = 0, bad = 0;
  double worst = 0.0;
  for (; instances < 120; ++instances) {
    const WeightMatrix w = small_instance(rng);
    const int c = w.spec().in_channels;
    const AlphaVector alpha = positive_alpha(rng, c);
    const auto energies = channel_energies(w.data(), c, w.spec().kernel_area());
    std::int64_t max_total = 0;
    for (const auto& e : energies) max_total += static_cast<std::int64_t>(e.size());
    for (std::int64_t gamma = 1; gamma <= std::max<std::int64_t>(max_total, 1); ++gamma) {
      const auto d = mego(w, alpha, gamma);
      const double best = brute_min_error(energies, alpha, gamma);
      double energy = 0.0;
      for (int ch = 0; ch < c; ++ch) energy += alpha[ch] * w.channel(ch).squaredNorm();
      const double diff = energy_rel_diff(d.achieved_error_sq, best, energy);
      worst = std::max(worst, diff);
      if (diff > 1e-9 || d.total_filters() > gamma) ++bad;
      ++checks;
    }
  }
  return {bad == 0, fmt("%d instances, %d budgets, worst rel diff %.2e", instances, checks, worst)};
}

Outcome lego_minimality() {
  Rng rng(1002);
  const double fractions[] = {0.0, 0.003, 0.017, 0.05, 0.11, 0.23, 0.41, 0.62, 0.87, 1.05};
  int instances = 0, checks = 0, bad = 0;
  for (; instances < 120; ++instances) {
    const WeightMatrix w = small_instance(rng);
    const int c = w.spec().in_channels;
    const AlphaVector alpha = positive_alpha(rng, c);
    const auto energies = channel_energies(w.data(), c, w.spec().kernel_area());
    const double total = brute_error(energies, alpha, std::vector<int>(energies.size(), 0));
    for (double f : fractions) {
      const double beta = f * total;
      const auto d = lego(w, alpha, beta);
      if (d.total_filters() != brute_min_total(energies, alpha, beta)) ++bad;
      if (d.achieved_error_sq > beta * (1.0 + 1e-12)) ++bad;
      ++checks;
    }
  }
  return {bad == 0, fmt("%d instances, %d budgets, %d mismatches", instances, checks, bad)};
}

Outcome eckart_young() {
  Rng rng(1003);
  int cases = 0, bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = static_cast<int>(rng.uniform_int(1, 16));
    const int k = static_cast<int>(rng.uniform_int(1, 3));
    const Matrix w = random_matrix(rng, m, k * k);
    const SubMatrixSVD s = svd_submatrix(w);
    const auto sv = gram_singular_values(w);
    const int n = std::min(m, k * k);
    for (int p = 0; p <= n; ++p) {
      const double measured = (w - truncate(s, p)).squaredNorm();
      double oracle = 0.0;
      for (int i = n - 1; i >= p; --i) oracle += sv[i] * sv[i];
      const double e = std::max(energy_rel_diff(measured, tail_error_sq(s, p), w.squaredNorm()),
                                energy_rel_diff(measured, oracle, w.squaredNorm()));
      worst = std::max(worst, e);
      if (e > 1e-9) ++bad;
      ++cases;
    }
  }
  return {bad == 0, fmt("200 matrices, %d truncations, worst rel diff %.2e", cases, worst)};
}

AlphaMap uniform_alphas(const Network& net) {
  AlphaMap out;
  for (std::size_t i : conv_layer_indices(net)) {
    const auto& spec = std::get<ConvLayer>(net.layers[i]).spec();
    out[spec.id] = alpha_uniform(spec.in_channels);
  }
  return out;
}

Outcome end_to_end_exact() {
  const Network net = toy_cnn3(2024);
  const Network gd = build_lego_network(net, uniform_alphas(net), 0.0);
  const auto probes = random_probes(*net.input, 100, 7);
  const auto r = verify_network(net, gd, probes);
  const bool ok = conv_layer_indices(net).size() == 3 && *r.max_logit_abs_diff <= 1e-6 &&
                  *r.decision_flips == 0;
  return {ok, fmt("100 probes, max logit diff %.2e, flips %lld", *r.max_logit_abs_diff,
                  static_cast<long long>(*r.decision_flips))};
}

Outcome lowering_equivalence() {
  Rng rng(1005);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int c = static_cast<int>(rng.uniform_int(1, 4));
    const int k = static_cast<int>(rng.uniform_int(1, 3));
    const int m = static_cast<int>(rng.uniform_int(1, 8));
    const auto spec = make_spec(c, k, m, static_cast<int>(rng.uniform_int(1, 2)),
                                static_cast<int>(rng.uniform_int(0, k - 1)));
    const WeightMatrix w(spec, random_matrix(rng, m, c * k * k));
    const std::int64_t gamma = rng.uniform_int(1, c * std::min(k * k, m));
    const auto d = mego(w, alpha_uniform(c), gamma);
    std::vector<double> bias;
    for (int i = 0; i < m; ++i) bias.push_back(rng.normal());
    const GdwsPairLayer pair = make_gdws_pair(d, bias);
    const FeatureMap x = random_map(rng, c, static_cast<int>(rng.uniform_int(4, 9)),
                                    static_cast<int>(rng.uniform_int(4, 9)));
    const FeatureMap ref = conv2d_ref(composed_weights(pair), x, bias);
    const FeatureMap got = apply_layer(pair, x);
    if (got.size() != ref.size()) return {false, fmt("trial %d: shape mismatch", trial)};
    worst = std::max(worst, max_abs_diff(got, ref));
  }
  return {worst <= 1e-9, fmt("50 pairs, max abs diff %.2e", worst)};
}

Outcome alpha_fd_consistency() {
  // Convergence: error against the chain-rule value must shrink at least
  // 50x per decade of step size, unless it already sits at roundoff.
  double worst_ratio = 0.0, worst_final = 0.0, worst_scale = 0.0;
  bool ok = true;
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    const Network net = toy_smooth(seed);
    Rng rng(seed + 100);
    std::vector<FeatureMap> samples;
    for (int i = 0; i < 4; ++i) samples.push_back(random_map(rng, 2, 6, 6));
    for (std::size_t layer : conv_layer_indices(net)) {
      const auto exact = exact_alpha(net, samples, layer);
      for (std::size_t c = 0; c < exact.size(); ++c) {
        double last = -1.0;
        for (double h : {1e-2, 1e-3, 1e-4}) {
          const double err = rel_diff(
              alpha_fd(net, samples, layer, static_cast<int>(c), {.value = h, .relative = false}),
              exact[c]);
          if (last > 1e-9) {
            worst_ratio = std::max(worst_ratio, err / last);
            if (err > last / 50.0) ok = false;
          } else if (last >= 0.0 && err > 1e-9) {
            ok = false;
          }
          last = err;
        }
        worst_final = std::max(worst_final, last);
      }
      Network scaled = net;
      auto& fc = std::get<DenseLayer>(scaled.layers.back());
      fc.weights *= 4.25;
      for (double& b : fc.bias) b *= 4.25;
      const auto a = alpha_fd_layer(net, samples, layer);
      const auto b = alpha_fd_layer(scaled, samples, layer);
      for (std::size_t c = 0; c < a.size(); ++c) worst_scale = std::max(worst_scale, rel_diff(a[c], b[c]));
    }
  }
  ok = ok && worst_scale <= 1e-9;
  return {ok, fmt("worst error ratio per decade %.2e, final error %.2e, scaling rel diff %.2e",
                  worst_ratio, worst_final, worst_scale)};
}

Outcome sparse_synergy() {
  Rng rng(1008);
  int below = 0, exact = 0, sparse = 0;
  const int trials = 100;
  const int full = 8 * std::min(9, 16);
  for (int t = 0; t < trials; ++t) {
    const WeightMatrix w(make_spec(8, 3, 16), random_sparse(rng, 16, 72, 0.05));
    const auto d = exact_gdws(w, {.materialize = true});
    const double err = (*d.approx_matrix - w.data()).squaredNorm();
    const bool is_exact = d.achieved_error_sq == 0.0 && err <= 1e-12 * w.data().squaredNorm();
    if (is_exact) ++exact;
    if (is_exact && d.total_filters() < full) ++below;
    const auto nnz = count_nonzeros(w.data());
    if (count_nonzeros(d.factors.pw) <= nnz && count_nonzeros(d.factors.gdw) <= nnz) ++sparse;
  }
  const bool ok = exact == trials && below >= 95 && sparse == trials;
  return {ok, fmt("exact %d/%d, fewer filters %d/%d, factors no denser %d/%d", exact, trials,
                  below, trials, sparse, trials)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome approx_determinism() {
  const fs::path dir = fs::temp_directory_path() / "gdws_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_network(toy_cnn3(55), (dir / "toy.json").string());
  const auto run_once = [&](const char* threads) {
    const std::string model = (dir / "toy.json").string();
    const std::string out = (dir / "gd.json").string();
    const char* argv[] = {"gdws", "approx", "--model", model.c_str(), "--unweighted", "--beta",
                          "0.25", "--threads", threads, "--out", out.c_str()};
    std::ostringstream o, e;
    const int code = cli::run(static_cast<int>(std::size(argv)), argv, o, e);
    return std::tuple(code, o.str() + slurp(dir / "gd.json") + slurp(dir / "gd.bin"));
  };
  const auto [c1, a] = run_once("2");
  const auto [c2, b] = run_once("2");
  const auto [c3, c] = run_once("1");
  fs::remove_all(dir);
  const bool ok = c1 == 0 && c2 == 0 && c3 == 0 && a == b && a == c;
  return {ok, fmt("exit codes %d/%d/%d, %zu bytes, identical %s", c1, c2, c3, a.size(),
                  a == b && a == c ? "yes" : "no")};
}

struct Criterion {
  const char* name;
  double time_limit_s;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace gdws

int main() {
  using namespace gdws;
  const std::vector<Criterion> criteria = {
      {"sparse toy golden layer", 1.0, golden_sparse_toy},
      {"mego optimality vs exhaustive search", 60.0, mego_optimality},
      {"lego minimality vs exhaustive search", 60.0, lego_minimality},
      {"truncation error equals singular value tail", 0.0, eckart_young},
      {"zero-budget network build is exact", 0.0, end_to_end_exact},
      {"lowered pair equals composed convolution", 0.0, lowering_equivalence},
      {"finite-difference alpha consistency", 0.0, alpha_fd_consistency},
      {"sparse layers stay sparse under exact rewrite", 0.0, sparse_synergy},
      {"approx output is byte-identical across runs", 0.0, approx_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail += fmt(" (over %.0f s limit)", c.time_limit_s);
    }
    std::printf("%s  %-48s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                secs);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
