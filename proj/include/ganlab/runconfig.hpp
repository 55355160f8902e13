#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ganlab/checkpoint.hpp"
#include "ganlab/dataset.hpp"
#include "ganlab/models.hpp"
#include "ganlab/optim.hpp"
#include "ganlab/training.hpp"
#include "ganlab/transfer.hpp"

// JSON forms for every run configuration, plus the manifest each command
// writes next to its outputs. A manifest holds the fully resolved config and
// seed, and hashes of the produced artifacts; feeding it back through
// --config reproduces the run bit for bit.

namespace ganlab {

inline nlohmann::json to_json(const AdamConfig& c) {
  return {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

inline AdamConfig adam_from_json(const nlohmann::json& j) {
  AdamConfig c;
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  return c;
}

inline nlohmann::json to_json(const SgdConfig& c) {
  return {{"lr", c.lr}, {"momentum", c.momentum}};
}

inline SgdConfig sgd_from_json(const nlohmann::json& j) {
  SgdConfig c;
  c.lr = j.at("lr").get<double>();
  c.momentum = j.at("momentum").get<double>();
  return c;
}

inline nlohmann::json to_json(const MganConfig& c) {
  return {{"k_generators", c.k_generators},
          {"z_dim", c.z_dim},
          {"data_dim", c.data_dim},
          {"gen_hidden", c.gen_hidden},
          {"trunk_hidden", c.trunk_hidden},
          {"feature_dim", c.feature_dim},
          {"shares_removed", c.shares_removed},
          {"leak", c.leak},
          {"init_std", c.init_std}};
}

inline MganConfig mgan_from_json(const nlohmann::json& j) {
  MganConfig c;
  c.k_generators = j.at("k_generators").get<std::size_t>();
  c.z_dim = j.at("z_dim").get<std::size_t>();
  c.data_dim = j.at("data_dim").get<std::size_t>();
  c.gen_hidden = j.at("gen_hidden").get<std::vector<std::size_t>>();
  c.trunk_hidden = j.at("trunk_hidden").get<std::vector<std::size_t>>();
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.shares_removed = j.at("shares_removed").get<std::size_t>();
  c.leak = j.at("leak").get<double>();
  c.init_std = j.at("init_std").get<double>();
  return c;
}

inline std::string gen_loss_name(TrainConfig::GenLoss g) {
  return g == TrainConfig::GenLoss::minimax ? "minimax" : "non-saturating";
}

inline TrainConfig::GenLoss parse_gen_loss(const std::string& s) {
  if (s == "minimax") return TrainConfig::GenLoss::minimax;
  if (s == "non-saturating") return TrainConfig::GenLoss::non_saturating;
  throw std::invalid_argument("unknown generator loss: " + s);
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"steps", c.steps},
          {"real_batch", c.real_batch},
          {"per_gen_batch", c.per_gen_batch},
          {"beta", c.beta},
          {"d_steps_per_g", c.d_steps_per_g},
          {"adam", to_json(c.adam)},
          {"gen_loss", gen_loss_name(c.gen_loss)},
          {"seed", c.seed}};
}

inline TrainConfig train_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.steps = j.at("steps").get<std::size_t>();
  c.real_batch = j.at("real_batch").get<std::size_t>();
  c.per_gen_batch = j.at("per_gen_batch").get<std::size_t>();
  c.beta = j.at("beta").get<double>();
  c.d_steps_per_g = j.at("d_steps_per_g").get<std::size_t>();
  c.adam = adam_from_json(j.at("adam"));
  c.gen_loss = parse_gen_loss(j.at("gen_loss").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

inline nlohmann::json to_json(const ProbeConfig& c) {
  return {{"epochs", c.epochs},
          {"batch", c.batch},
          {"sgd", to_json(c.sgd)},
          {"seed", c.seed}};
}

inline ProbeConfig probe_from_json(const nlohmann::json& j) {
  ProbeConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch = j.at("batch").get<std::size_t>();
  c.sgd = sgd_from_json(j.at("sgd"));
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

// ---- per-command run configurations ----

struct SimulateConfig {
  std::vector<std::string> labels;  // empty: points named by index
  std::vector<double> p_real;
  std::vector<double> p_gen;
  std::size_t rounds = 12;

  nlohmann::json to_json() const {
    return {{"labels", labels},
            {"p_real", p_real},
            {"p_gen", p_gen},
            {"rounds", rounds}};
  }

  static SimulateConfig from_json(const nlohmann::json& j) {
    SimulateConfig c;
    c.labels = j.at("labels").get<std::vector<std::string>>();
    c.p_real = j.at("p_real").get<std::vector<double>>();
    c.p_gen = j.at("p_gen").get<std::vector<double>>();
    c.rounds = j.at("rounds").get<std::size_t>();
    return c;
  }
};

struct TrainRunConfig {
  MganConfig model;
  TrainConfig train;
  DatasetSpec dataset;

  nlohmann::json to_json() const {
    return {{"model", ganlab::to_json(model)},
            {"train", ganlab::to_json(train)},
            {"dataset", dataset.to_json()}};
  }

  static TrainRunConfig from_json(const nlohmann::json& j) {
    TrainRunConfig c;
    c.model = mgan_from_json(j.at("model"));
    c.train = train_from_json(j.at("train"));
    c.dataset = DatasetSpec::from_json(j.at("dataset"));
    return c;
  }
};

struct AnalyzeConfig {
  std::string checkpoint;
  DatasetSpec dataset;
  std::size_t eval_samples = 2048;
  std::uint64_t eval_seed = 7;
  double min_class_accuracy = 0.9;

  nlohmann::json to_json() const {
    return {{"checkpoint", checkpoint},
            {"dataset", dataset.to_json()},
            {"eval_samples", eval_samples},
            {"eval_seed", eval_seed},
            {"min_class_accuracy", min_class_accuracy}};
  }

  static AnalyzeConfig from_json(const nlohmann::json& j) {
    AnalyzeConfig c;
    c.checkpoint = j.at("checkpoint").get<std::string>();
    c.dataset = DatasetSpec::from_json(j.at("dataset"));
    c.eval_samples = j.at("eval_samples").get<std::size_t>();
    c.eval_seed = j.at("eval_seed").get<std::uint64_t>();
    c.min_class_accuracy = j.at("min_class_accuracy").get<double>();
    return c;
  }
};

struct ProbeRunConfig {
  std::string checkpoint;
  std::string extractor = "discriminator";  // or "classifier"
  DatasetSpec dataset;
  std::size_t train_size = 4096;
  std::size_t test_size = 1024;
  std::uint64_t data_seed = 7;
  ProbeConfig probe;

  nlohmann::json to_json() const {
    return {{"checkpoint", checkpoint},
            {"extractor", extractor},
            {"dataset", dataset.to_json()},
            {"train_size", train_size},
            {"test_size", test_size},
            {"data_seed", data_seed},
            {"probe", ganlab::to_json(probe)}};
  }

  static ProbeRunConfig from_json(const nlohmann::json& j) {
    ProbeRunConfig c;
    c.checkpoint = j.at("checkpoint").get<std::string>();
    c.extractor = j.at("extractor").get<std::string>();
    c.dataset = DatasetSpec::from_json(j.at("dataset"));
    c.train_size = j.at("train_size").get<std::size_t>();
    c.test_size = j.at("test_size").get<std::size_t>();
    c.data_seed = j.at("data_seed").get<std::uint64_t>();
    c.probe = probe_from_json(j.at("probe"));
    return c;
  }
};

inline nlohmann::json to_json(const SweepConfig& c) {
  return {{"model", to_json(c.model)},
          {"train", to_json(c.train)},
          {"dataset", c.dataset.to_json()},
          {"train_size", c.train_size},
          {"test_size", c.test_size},
          {"shares_removed", c.shares_removed},
          {"num_seeds", c.num_seeds},
          {"base_seed", c.base_seed},
          {"probe", to_json(c.probe)}};
}

inline SweepConfig sweep_from_json(const nlohmann::json& j) {
  SweepConfig c;
  c.model = mgan_from_json(j.at("model"));
  c.train = train_from_json(j.at("train"));
  c.dataset = DatasetSpec::from_json(j.at("dataset"));
  c.train_size = j.at("train_size").get<std::size_t>();
  c.test_size = j.at("test_size").get<std::size_t>();
  c.shares_removed = j.at("shares_removed").get<std::vector<std::size_t>>();
  c.num_seeds = j.at("num_seeds").get<std::size_t>();
  c.base_seed = j.at("base_seed").get<std::uint64_t>();
  c.probe = probe_from_json(j.at("probe"));
  return c;
}

// ---- output locations and manifests ----

inline std::filesystem::path resolve_out_dir(const std::string& out_dir) {
  std::filesystem::path p(out_dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("GANLAB_OUT")) {
      p = std::filesystem::path(root) / p;
    }
  }
  std::filesystem::create_directories(p);
  return p;
}

inline std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot hash missing file: " + path.string());
  }
  std::uint64_t h = 14695981039346656037ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return std::string("fnv1a-64:") + buf;
}

inline void write_manifest(const std::filesystem::path& dir,
                           const std::string& command,
                           const nlohmann::json& config, std::uint64_t seed,
                           const std::vector<std::string>& artifacts) {
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& name : artifacts) {
    hashes[name] = hash_hex(hash_file(dir / name));
  }
  nlohmann::json m = {{"command", command},
                      {"config", config},
                      {"seed", seed},
                      {"artifacts", hashes}};
  std::ofstream out(dir / "manifest.json");
  out << m.dump(2) << "\n";
}

// Accepts either a bare config object or a manifest written by a previous
// run of the same command; in the latter case the embedded config is used.
inline nlohmann::json load_config_file(const std::string& path,
                                       const std::string& command) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.contains("command") && j.contains("config")) {
    const auto cmd = j.at("command").get<std::string>();
    if (cmd != command) {
      throw std::runtime_error("config file is a manifest for `" + cmd +
                               "`, not `" + command + "`");
    }
    return j.at("config");
  }
  return j;
}

}  // namespace ganlab
