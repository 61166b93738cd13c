// Copyright 2026 The codeq Authors
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

#include "codeq/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "codeq/checkpoint.hpp"
#include "codeq/error.hpp"
#include "codeq/pruning.hpp"
#include "codeq/quantizers.hpp"
#include "codeq/verify.hpp"

namespace codeq::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

ordered_json opt_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// Writes manifest.json listing the hash of every artifact (by file name).
void write_manifest(const fs::path& dir, const std::string& command, ordered_json extra,
                    const std::vector<std::string>& artifacts) {
  ordered_json m;
  m["tool"] = "codeq";
  m["version"] = kVersion;
  m["command"] = command;
  for (auto& [k, v] : extra.items()) m[k] = v;
  ordered_json hashes = ordered_json::object();
  for (const auto& a : artifacts) hashes[a] = sha256_hex((dir / a).string());
  m["artifacts"] = hashes;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::string layer_table(const CompressionReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "layer" << std::right << std::setw(10) << "params" << std::setw(10)
     << "density" << std::setw(6) << "bits" << std::setw(16) << "BOPs" << std::setw(16) << "dense BOPs"
     << "\n";
  for (const auto& l : r.layers) {
    os << std::left << std::setw(10) << l.name << std::right << std::setw(10) << l.params << std::setw(10)
       << std::fixed << std::setprecision(4) << l.density << std::setw(6) << l.bits << std::setw(16)
       << std::setprecision(0) << l.bops << std::setw(16) << l.baseline_bops << "\n";
  }
  os << std::setprecision(0) << "total BOPs " << r.model_bops << " of " << r.baseline_bops << " ("
     << std::setprecision(4) << 100.0 * r.relative_bops << "% relative), sparsity " << r.overall_sparsity
     << ", mean bits " << r.mean_bits << "\n";
  return os.str();
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

fs::path default_dir(const std::string& checkpoint, const char* suffix) {
  return fs::path(checkpoint + suffix);
}

}  // namespace

std::string sha256_hex(const std::string& path) {
  const std::string data = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed for " + path);
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

ConfigFile load_experiment_file(const std::string& path) {
  const std::string text = read_text(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const auto m = nlohmann::json::parse(text);
    if (!m.contains("config") || !m["config"].is_string()) {
      throw ConfigError("manifest " + path + " has no embedded config", 0);
    }
    return ConfigFile::parse(m["config"].get<std::string>());
  }
  return ConfigFile::parse(text);
}

std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& cfg) {
  const DataSource& src = cfg.data;
  std::pair<Dataset, Dataset> out;
  if (src.kind == "mnist") {
    const fs::path dir(src.path);
    out.first = load_idx((dir / "train-images-idx3-ubyte").string(), (dir / "train-labels-idx1-ubyte").string(),
                         src.train_limit);
    out.second = load_idx((dir / "t10k-images-idx3-ubyte").string(), (dir / "t10k-labels-idx1-ubyte").string(),
                          src.val_count);
    return out;
  }
  Dataset all = src.kind == "csv" ? load_csv(src.path)
                                  : synthetic_blobs(src.blobs_n, src.blobs_dims, src.blobs_classes,
                                                    src.blobs_spread, cfg.train.seed);
  const std::size_t n_val = src.val_count > 0 ? src.val_count : all.size() / 5;
  if (n_val == 0 || n_val >= all.size()) {
    throw ConfigError("data.val_count must leave samples for both training and validation", 0);
  }
  out = split_tail(all, n_val);
  if (src.train_limit > 0 && src.train_limit < out.first.size()) {
    std::vector<std::size_t> idx(src.train_limit);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    out.first = subset(out.first, idx);
  }
  return out;
}

Model build_model(const ExperimentConfig& cfg, const Dataset& train_set) {
  Model m = cfg.model.kind == "mlp"
                ? build_mlp(train_set.sample_size(), cfg.model.hidden, train_set.num_classes, cfg.train.seed)
                : build_mini_cnn(train_set.sample_shape, train_set.num_classes, cfg.train.seed);
  apply_quant_config(m, cfg.train.quant);
  return m;
}

std::string history_csv(const History& h) {
  std::string s = "epoch,train_acc,val_acc,loss,overall_sparsity,mean_bits\n";
  for (const auto& e : h.epochs) {
    s += std::to_string(e.epoch) + "," + num(e.train_acc) + "," + num(e.val_acc) + "," + num(e.loss) + "," +
         num(e.overall_sparsity) + "," + num(e.mean_bits) + "\n";
  }
  return s;
}

std::string layers_csv(const History& h) {
  std::string s = "epoch,layer,sparsity,bits,deadzone,scale,theta_dz,theta_bit\n";
  for (const auto& e : h.epochs) {
    for (const auto& l : e.layers) {
      s += std::to_string(e.epoch) + "," + l.name + "," + num(l.sparsity) + "," + std::to_string(l.bits) + "," +
           opt_num(l.deadzone) + "," + opt_num(l.scale) + "," + opt_num(l.theta_dz) + "," + opt_num(l.theta_bit) +
           "\n";
    }
  }
  return s;
}

std::string report_json(const CompressionReport& r) {
  ordered_json j;
  ordered_json layers = ordered_json::array();
  for (const auto& l : r.layers) {
    ordered_json o;
    o["name"] = l.name;
    o["kind"] = l.kind;
    o["params"] = l.params;
    o["zeros"] = l.zeros;
    o["density"] = l.density;
    o["bits"] = l.bits;
    o["deadzone"] = opt_json(l.deadzone);
    o["scale"] = opt_json(l.scale);
    o["theta_dz"] = opt_json(l.theta_dz);
    o["theta_bit"] = opt_json(l.theta_bit);
    o["macs_dense"] = l.macs_dense;
    o["macs_unstructured"] = l.macs_unstructured;
    o["bops"] = l.bops;
    o["baseline_bops"] = l.baseline_bops;
    layers.push_back(o);
  }
  j["layers"] = layers;
  j["model_bops"] = r.model_bops;
  j["baseline_bops"] = r.baseline_bops;
  j["relative_bops"] = r.relative_bops;
  j["overall_sparsity"] = r.overall_sparsity;
  j["mean_bits"] = r.mean_bits;
  j["accuracy"] = opt_json(r.accuracy);
  return j.dump(2) + "\n";
}

std::string report_csv(const CompressionReport& r) {
  std::string s = "layer,kind,params,zeros,density,bits,deadzone,scale,macs_dense,bops,baseline_bops\n";
  for (const auto& l : r.layers) {
    s += l.name + "," + l.kind + "," + std::to_string(l.params) + "," + std::to_string(l.zeros) + "," +
         num(l.density) + "," + std::to_string(l.bits) + "," + opt_num(l.deadzone) + "," + opt_num(l.scale) + "," +
         std::to_string(l.macs_dense) + "," + num(l.bops) + "," + num(l.baseline_bops) + "\n";
  }
  return s;
}

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ConfigFile file = load_experiment_file(opts.config_path);
    for (const auto& o : opts.overrides) file.apply_override(o);
    if (opts.seed) file.entries["experiment.seed"] = {static_cast<std::int64_t>(*opts.seed), 0};
    if (opts.out_dir) file.entries["experiment.output_dir"] = {*opts.out_dir, 0};
    const ExperimentConfig cfg = ExperimentConfig::from(file);
    const auto [train_set, val_set] = load_datasets(cfg);
    Model model = build_model(cfg, train_set);
    if (!opts.quiet) {
      out << "experiment " << cfg.name << ": " << train_set.size() << " train / " << val_set.size()
          << " val samples\n"
          << model.summary();
    }
    const History history = train(model, train_set, val_set, cfg.train, [&](const EpochRecord& e) {
      if (opts.quiet) return;
      out << "epoch " << e.epoch << "  loss " << num(e.loss) << "  train " << num(e.train_acc) << "  val "
          << num(e.val_acc) << "  sparsity " << num(e.overall_sparsity) << "  bits " << num(e.mean_bits)
          << "\n";
    });
    const double acc = history.epochs.empty() ? evaluate(model, val_set, mode_for(model)) : history.epochs.back().val_acc;
    const CompressionReport report = build_report(model, acc);

    const fs::path dir(cfg.output_dir);
    make_dir(dir);
    save_checkpoint((dir / "model.ckpt").string(), model);
    write_text(dir / "history.csv", history_csv(history));
    write_text(dir / "layers.csv", layers_csv(history));
    write_text(dir / "report.json", report_json(report));
    write_text(dir / "report.csv", report_csv(report));
    ordered_json extra;
    extra["seed"] = cfg.train.seed;
    extra["config"] = cfg.resolved().text();
    write_manifest(dir, "train", extra, {"model.ckpt", "history.csv", "layers.csv", "report.json", "report.csv"});
    if (!opts.quiet) out << layer_table(report) << "artifacts written to " << dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const VerifyReport rep = run_verify({opts.seed, opts.trials});
    if (rep.vacuous()) err << "warning: trials = 0, every property passes vacuously\n";
    out << std::left << std::setw(24) << "property" << std::right << std::setw(10) << "trials" << std::setw(10)
        << "failures" << "  result\n";
    for (const auto& p : rep.properties) {
      out << std::left << std::setw(24) << p.name << std::right << std::setw(10) << p.trials << std::setw(10)
          << p.failures << "  " << (p.passed() ? "pass" : "FAIL") << "\n";
    }
    ordered_json props = ordered_json::array();
    for (const auto& p : rep.properties) {
      if (!p.passed()) out << "counterexample (" << p.name << "): " << p.counterexample << "\n";
      props.push_back({{"name", p.name},
                       {"trials", p.trials},
                       {"failures", p.failures},
                       {"passed", p.passed()},
                       {"counterexample", p.counterexample}});
    }
    const fs::path dir(opts.out_dir);
    make_dir(dir);
    write_text(dir / "verify.json", ordered_json{{"passed", rep.passed()}, {"properties", props}}.dump(2) + "\n");
    write_manifest(dir, "verify", {{"seed", opts.seed}, {"trials", opts.trials}}, {"verify.json"});
    return rep.passed() ? kExitOk : kExitPropertyFailure;
  });
}

int cmd_bops(const BopsOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Model model = load_checkpoint(opts.checkpoint);
    if (model.layers.empty()) throw FormatError("checkpoint " + opts.checkpoint + " has no layers");
    const CompressionReport report = build_report(model);
    out << layer_table(report);
    const fs::path dir = opts.out_dir ? fs::path(*opts.out_dir) : default_dir(opts.checkpoint, ".bops");
    make_dir(dir);
    write_text(dir / "bops.json", report_json(report));
    write_text(dir / "bops.csv", report_csv(report));
    write_manifest(dir, "bops", {{"checkpoint", opts.checkpoint}, {"checkpoint_sha256", sha256_hex(opts.checkpoint)}},
                   {"bops.json", "bops.csv"});
    return kExitOk;
  });
}

int cmd_quantize(const QuantizeOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const int picked = int(opts.theta_dz.has_value()) + int(opts.deadzone.has_value()) + int(opts.fixed_point);
    if (picked > 1) throw DomainError("choose at most one of --theta-dz, --deadzone, --fixed-point");
    if (opts.bits) max_index(*opts.bits);
    if (opts.deadzone && !(*opts.deadzone >= 0.0 && std::isfinite(*opts.deadzone))) {
      throw DomainError("--deadzone must be finite and >= 0");
    }
    if (opts.theta_dz && !std::isfinite(*opts.theta_dz)) throw DomainError("--theta-dz must be finite");
    if (opts.quantile && !(*opts.quantile > 0.0 && *opts.quantile <= 1.0)) {
      throw DomainError("--quantile must lie in (0, 1]");
    }

    Model model = load_checkpoint(opts.checkpoint);
    if (model.layers.empty()) throw FormatError("checkpoint " + opts.checkpoint + " has no layers");
    for (auto& layer : model.layers) {
      const auto& st = layer.quant;
      int bits = 0;
      if (opts.bits) {
        bits = *opts.bits;
      } else if (st) {
        ad::Tape tape;
        bits = quantize_layer(tape.constant(layer.weight), *st).bits;
      } else if (layer.stored_bits) {
        bits = *layer.stored_bits;
      } else {
        throw DomainError("layer '" + layer.spec.name + "' has no bit-width; pass --bits");
      }
      const double quantile = opts.quantile ? *opts.quantile : st ? st->quantile : 1.0;
      double eps = st ? st->epsilon : 1e-8;
      const double r = magnitude_quantile(layer.weight.values(), quantile);
      if (!(r > 0.0)) throw DomainError("layer '" + layer.spec.name + "' has an all-zero weight tensor");
      double d = 0.0, s = 0.0;
      if (opts.fixed_point) {
        d = s = absmax_recovery_fixed_point(r, bits);
        eps = 0.0;
      } else {
        if (opts.deadzone) {
          d = *opts.deadzone;
          if (d > 2.0 * r) throw DomainError("--deadzone exceeds 2R for layer '" + layer.spec.name + "'");
        } else {
          const double theta = opts.theta_dz ? *opts.theta_dz : st ? st->theta_dz : 3.0;
          d = 2.0 * r * (1.0 - std::tanh(std::fabs(theta)));
        }
        s = pruning_aware_scale(r, d, bits, eps);
      }
      ad::Tape tape;
      const auto q = deadzone_quantize(tape.constant(layer.weight), tape.scalar(s), tape.scalar(d), bits);
      layer.weight = Tensor(layer.weight.shape(), q.w_hat.value());
      layer.quant.reset();
      layer.stored_bits = bits;
      out << layer.spec.name << ": b = " << bits << ", R = " << num(r) << ", d = " << num(d) << ", s = " << num(s)
          << ", sparsity " << num(sparsity(layer.weight.values())) << "\n";
    }
    const CompressionReport report = build_report(model);
    out << layer_table(report);
    const fs::path dir = opts.out_dir ? fs::path(*opts.out_dir) : default_dir(opts.checkpoint, ".quantized");
    make_dir(dir);
    save_checkpoint((dir / "model.ckpt").string(), model);
    write_text(dir / "report.json", report_json(report));
    write_text(dir / "report.csv", report_csv(report));
    ordered_json extra{{"checkpoint", opts.checkpoint}, {"checkpoint_sha256", sha256_hex(opts.checkpoint)}};
    extra["theta_dz"] = opt_json(opts.theta_dz);
    extra["deadzone"] = opt_json(opts.deadzone);
    extra["fixed_point"] = opts.fixed_point;
    extra["bits"] = opts.bits ? ordered_json(*opts.bits) : ordered_json(nullptr);
    extra["quantile"] = opt_json(opts.quantile);
    write_manifest(dir, "quantize", extra, {"model.ckpt", "report.json", "report.csv"});
    return kExitOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"codeq: joint pruning and quantization with a learnable dead-zone quantizer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  TrainOptions train_opts;
  std::string train_out;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "train a model from a config file or manifest.json");
  train->add_option("--config", train_opts.config_path, "config .ini or manifest.json")->required();
  auto* train_out_opt = train->add_option("--out", train_out, "output directory (overrides experiment.output_dir)");
  auto* train_seed_opt = train->add_option("--seed", train_seed, "seed (overrides experiment.seed)");
  train->add_option("--override", train_opts.overrides, "section.key=value, repeatable");
  train->add_flag("--quiet", train_opts.quiet, "only report errors");

  VerifyOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "run the randomized property suites");
  verify->add_option("--seed", verify_opts.seed, "base seed");
  verify->add_option("--trials", verify_opts.trials, "trials for the equivalence suite");
  verify->add_option("--out", verify_opts.out_dir, "output directory");

  BopsOptions bops_opts;
  std::string bops_out;
  auto* bops = app.add_subcommand("bops", "print the BOPs report of a checkpoint");
  bops->add_option("checkpoint", bops_opts.checkpoint)->required();
  auto* bops_out_opt = bops->add_option("--out", bops_out, "output directory");

  QuantizeOptions q_opts;
  std::string q_out;
  double q_theta = 0.0, q_d = 0.0, q_quantile = 1.0;
  int q_bits = 0;
  auto* quantize = app.add_subcommand("quantize", "apply the dead-zone quantizer to a checkpoint");
  quantize->add_option("checkpoint", q_opts.checkpoint)->required();
  auto* q_out_opt = quantize->add_option("--out", q_out, "output directory");
  auto* q_theta_opt = quantize->add_option("--theta-dz", q_theta, "dead-zone parameter for every layer");
  auto* q_d_opt = quantize->add_option("--deadzone", q_d, "absolute dead-zone width d");
  quantize->add_flag("--fixed-point", q_opts.fixed_point, "use d = s at the absmax fixed point");
  auto* q_bits_opt = quantize->add_option("--bits", q_bits, "bit-width for every layer");
  auto* q_quantile_opt = quantize->add_option("--quantile", q_quantile, "range quantile");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  if (*train) {
    if (*train_out_opt) train_opts.out_dir = train_out;
    if (*train_seed_opt) train_opts.seed = train_seed;
    return cmd_train(train_opts, out, err);
  }
  if (*verify) return cmd_verify(verify_opts, out, err);
  if (*bops) {
    if (*bops_out_opt) bops_opts.out_dir = bops_out;
    return cmd_bops(bops_opts, out, err);
  }
  if (*q_out_opt) q_opts.out_dir = q_out;
  if (*q_theta_opt) q_opts.theta_dz = q_theta;
  if (*q_d_opt) q_opts.deadzone = q_d;
  if (*q_bits_opt) q_opts.bits = q_bits;
  if (*q_quantile_opt) q_opts.quantile = q_quantile;
  return cmd_quantize(q_opts, out, err);
}

}  // namespace codeq::cli
