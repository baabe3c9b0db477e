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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gdws/alpha.hpp"
#include "gdws/builder.hpp"
#include "gdws/model_io.hpp"
#include "gdws/parallel.hpp"
#include "gdws/verify.hpp"

namespace gdws::cli {
namespace {

namespace fs = std::filesystem;

struct ApproxArgs {
  std::string model;
  std::string alpha;
  bool unweighted = false;
  std::optional<double> beta;
  std::vector<std::string> beta_layer;
  std::optional<std::string> gamma;
  std::optional<double> uniform;
  std::string out;
  int threads = default_threads();
  bool strict = false;
};

struct VerifyArgs {
  std::string orig;
  std::string gdws;
  std::size_t probes = 100;
  std::uint64_t seed = 0;
  std::string alpha;
};

struct AlphaFdArgs {
  std::string model;
  std::string inputs;
  std::string out;
  double step = 1e-3;
  bool absolute_step = false;
  std::string input_kind = "clean";
  int threads = default_threads();
};

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
    throw ValidationError("expected id=value, got '" + s + "'");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw ValidationError("not a number: '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw ValidationError("not an integer: '" + s + "'");
  return v;
}

// Alpha vectors for every K > 1 conv layer, from --alpha or all ones.
AlphaMap resolve_alphas(const Network& net, const ApproxArgs& a) {
  AlphaMap alphas;
  if (!a.alpha.empty()) {
    const AlphaFile file = load_alpha(a.alpha);
    check_alpha_coverage(file, net);
    return file.layers;
  }
  for (std::size_t i : conv_layer_indices(net)) {
    const auto& conv = std::get<ConvLayer>(net.layers[i]);
    if (conv.spec().kernel == 1) continue;
    if (!a.unweighted) {
      throw ValidationError("no alpha vector for layer '" + conv.spec().id +
                            "' (pass --alpha FILE or --unweighted)");
    }
    alphas[conv.spec().id] = alpha_uniform(conv.spec().in_channels);
  }
  return alphas;
}

void write_result(const Network& result, const std::string& out_path, std::ostream& out) {
  const fs::path parent = fs::path(out_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  save_network(result, out_path);
  out << format_report(report(result));
}

int cmd_approx(const ApproxArgs& a, std::ostream& out) {
  const int modes = static_cast<int>(a.beta.has_value()) + static_cast<int>(a.uniform.has_value()) +
                    static_cast<int>(a.gamma.has_value());
  if (modes != 1) throw ValidationError("give exactly one of --beta, --gamma-per-layer, --uniform");
  if (!a.beta && !a.beta_layer.empty()) throw ValidationError("--beta-layer needs --beta");
  const Network net = load_network(a.model);
  Network result;
  if (a.uniform) {
    result = build_mego_uniform(net, *a.uniform, UniformOptions{a.threads, a.strict});
  } else if (a.beta) {
    BuildOptions opts;
    opts.threads = a.threads;
    for (const auto& s : a.beta_layer) {
      const auto [id, value] = split_assignment(s);
      opts.beta_overrides[id] = parse_double(value);
    }
    result = build_lego_network(net, resolve_alphas(net, a), *a.beta, opts);
  } else {
    std::map<std::string, std::int64_t> gammas;
    std::int64_t fallback = 0;
    if (a.gamma->find('=') == std::string::npos) {
      fallback = parse_int(*a.gamma);
      if (fallback < 1) throw ValidationError("gamma must be >= 1");
    } else {
      std::stringstream ss(*a.gamma);
      for (std::string item; std::getline(ss, item, ',');) {
        const auto [id, value] = split_assignment(item);
        gammas[id] = parse_int(value);
      }
    }
    result = build_mego_network(net, resolve_alphas(net, a), gammas, fallback, a.threads);
  }
  write_result(result, a.out, out);
  return kOk;
}

int cmd_report(const std::string& model, bool as_json, std::ostream& out) {
  const NetworkReport r = report(load_network(model));
  if (as_json) {
    out << to_json(r).dump(2) << '\n';
  } else {
    out << format_report(r);
  }
  return kOk;
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const Network orig = load_network(a.orig);
  const Network gdws = load_network(a.gdws);
  std::optional<AlphaFile> alphas;
  if (!a.alpha.empty()) alphas = load_alpha(a.alpha);
  std::vector<FeatureMap> probes;
  if (a.probes > 0) {
    if (!orig.input) throw ValidationError("probes need an input shape in the manifest");
    probes = random_probes(*orig.input, a.probes, a.seed);
  }
  const auto r = verify_network(orig, gdws, probes, alphas ? &alphas->layers : nullptr);
  out << to_json(r).dump(2) << '\n';
  return kOk;
}

int cmd_alpha_fd(const AlphaFdArgs& a, std::ostream& out) {
  const Network net = load_network(a.model);
  if (!fs::is_directory(a.inputs)) throw IoError("'" + a.inputs + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.inputs)) {
    if (entry.is_regular_file() && entry.path().extension() == ".gdwt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no .gdwt inputs in '" + a.inputs + "'");
  std::vector<FeatureMap> samples;
  for (const auto& f : files) samples.push_back(read_feature_map(f.string()));
  if (!(a.step > 0.0)) throw ValidationError("--step must be positive");
  FdStep step;
  step.value = a.step;
  step.relative = !a.absolute_step;
  const AlphaFile file = alpha_fd_network(net, samples, step, a.threads, a.input_kind);
  save_alpha(file, a.out);
  out << "wrote " << file.layers.size() << " layer(s) from " << samples.size() << " sample(s) to "
      << a.out << '\n';
  return kOk;
}

void add_approx_common(CLI::App* cmd, ApproxArgs& a) {
  cmd->add_option("--model", a.model, "standard model manifest")->required();
  cmd->add_option("--alpha", a.alpha, "alpha file (gdws-alpha JSON)");
  cmd->add_flag("--unweighted", a.unweighted, "use alpha = 1 for every layer without --alpha");
  cmd->add_option("--out", a.out, "output gdws manifest (blob is written alongside)")->required();
  cmd->add_option("--threads", a.threads, "worker threads for per-layer work")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--uniform", a.uniform,
                  "cut every layer's MACs by this percentage, in (0, 100); unweighted error");
  cmd->add_flag("--strict", a.strict,
                "with --uniform, fail (exit 3) when a layer cannot meet the MAC target");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"gdws: rewrite standard convolutions as generalized depthwise-separable ones"};
  app.require_subcommand(1);

  ApproxArgs approx;
  auto* c_approx = app.add_subcommand("approx", "error-budgeted rewrite of every conv layer");
  add_approx_common(c_approx, approx);
  c_approx->add_option("--beta", approx.beta,
                       "budget on the SQUARED alpha-weighted error of each layer, >= 0");
  c_approx->add_option("--beta-layer", approx.beta_layer,
                       "expert: per-layer budget override, id=value (repeatable)");

  ApproxArgs mego_args;
  auto* c_mego = app.add_subcommand("mego", "filter-budgeted rewrite (minimum error per layer)");
  add_approx_common(c_mego, mego_args);
  c_mego->add_option("--gamma-per-layer", mego_args.gamma,
                     "filter budget G for every layer, or id=G,id=G,... (unlisted layers stay "
                     "standard)");

  std::string report_model;
  bool report_json = false;
  auto* c_report = app.add_subcommand("report", "print the MAC / parameter / rank table");
  c_report->add_option("--model", report_model, "model manifest")->required();
  c_report->add_flag("--json", report_json, "emit JSON instead of a table");

  VerifyArgs verify;
  auto* c_verify = app.add_subcommand("verify", "compare a gdws model with its source");
  c_verify->add_option("--orig", verify.orig, "standard model manifest")->required();
  c_verify->add_option("--gdws", verify.gdws, "gdws model manifest")->required();
  c_verify->add_option("--probes", verify.probes, "number of random probe inputs");
  c_verify->add_option("--seed", verify.seed, "probe generator seed");
  c_verify->add_option("--alpha", verify.alpha, "alpha file; enables the noise-gain bound");

  AlphaFdArgs fd;
  auto* c_fd = app.add_subcommand("alpha-fd", "finite-difference alpha estimate on small nets");
  c_fd->add_option("--model", fd.model, "standard model manifest")->required();
  c_fd->add_option("--inputs", fd.inputs, "directory of .gdwt sample inputs")->required();
  c_fd->add_option("--out", fd.out, "output alpha file")->required();
  c_fd->add_option("--step", fd.step, "central-difference step (relative to |w| by default)");
  c_fd->add_flag("--absolute-step", fd.absolute_step, "use --step as an absolute step");
  c_fd->add_option("--input-kind", fd.input_kind, "provenance of the samples")
      ->check(CLI::IsMember({"clean", "external"}));
  c_fd->add_option("--threads", fd.threads, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationError;
  }

  try {
    if (c_approx->parsed()) return cmd_approx(approx, out);
    if (c_mego->parsed()) return cmd_approx(mego_args, out);
    if (c_report->parsed()) return cmd_report(report_model, report_json, out);
    if (c_verify->parsed()) return cmd_verify(verify, out);
    if (c_fd->parsed()) return cmd_alpha_fd(fd, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kValidationError;
}

}  // namespace gdws::cli
