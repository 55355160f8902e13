#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ganlab/models.hpp"
#include "ganlab/tensor.hpp"

namespace ganlab {

inline std::uint64_t fnv1a(const void* bytes, std::size_t len,
                           std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

// Named double blocks plus a JSON metadata object, in a little-endian binary
// container. Every block carries its own checksum so a corrupted parameter
// is reported by name instead of surfacing as a silently wrong model.
struct Checkpoint {
  static constexpr std::uint32_t kMagic = 0x4b434c47;  // "GLCK"
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json meta;
  std::map<std::string, std::pair<Shape, std::vector<double>>> blocks;

  void add(const std::string& name, const Tensor& t) {
    blocks[name] = {t.shape(), t.data()};
  }

  void add_raw(const std::string& name, Shape shape,
               std::vector<double> data) {
    blocks[name] = {std::move(shape), std::move(data)};
  }

  const std::pair<Shape, std::vector<double>>& get(
      const std::string& name) const {
    const auto it = blocks.find(name);
    if (it == blocks.end()) {
      throw std::runtime_error("checkpoint is missing block: " + name);
    }
    return it->second;
  }

  void load_into(const std::string& name, Tensor& t) const {
    const auto& [shape, data] = get(name);
    if (shape != t.shape()) {
      throw std::runtime_error("checkpoint block " + name +
                               " has shape " + shape_str(shape) +
                               ", model expects " + shape_str(t.shape()));
    }
    t.data() = data;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    auto put_u32 = [&](std::uint32_t v) {
      out.write(reinterpret_cast<const char*>(&v), 4);
    };
    auto put_u64 = [&](std::uint64_t v) {
      out.write(reinterpret_cast<const char*>(&v), 8);
    };
    put_u32(kMagic);
    put_u32(kVersion);
    const std::string meta_s = meta.dump();
    put_u64(meta_s.size());
    out.write(meta_s.data(), static_cast<std::streamsize>(meta_s.size()));
    put_u32(static_cast<std::uint32_t>(blocks.size()));
    for (const auto& [name, block] : blocks) {
      const auto& [shape, data] = block;
      put_u32(static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put_u32(static_cast<std::uint32_t>(shape.size()));
      for (const auto d : shape) put_u64(d);
      put_u64(data.size());
      out.write(reinterpret_cast<const char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
      put_u64(fnv1a(data.data(), data.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    auto get_u32 = [&]() {
      std::uint32_t v = 0;
      in.read(reinterpret_cast<char*>(&v), 4);
      if (!in) throw std::runtime_error("truncated checkpoint: " + path);
      return v;
    };
    auto get_u64 = [&]() {
      std::uint64_t v = 0;
      in.read(reinterpret_cast<char*>(&v), 8);
      if (!in) throw std::runtime_error("truncated checkpoint: " + path);
      return v;
    };
    if (get_u32() != kMagic) {
      throw std::runtime_error(path + " is not a checkpoint file");
    }
    const std::uint32_t version = get_u32();
    if (version != kVersion) {
      throw std::runtime_error("checkpoint version " + std::to_string(version) +
                               " unsupported (expected " +
                               std::to_string(kVersion) + ")");
    }
    Checkpoint ck;
    const std::uint64_t meta_len = get_u64();
    std::string meta_s(meta_len, '\0');
    in.read(meta_s.data(), static_cast<std::streamsize>(meta_len));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    ck.meta = nlohmann::json::parse(meta_s);
    const std::uint32_t count = get_u32();
    for (std::uint32_t b = 0; b < count; ++b) {
      const std::uint32_t name_len = get_u32();
      std::string name(name_len, '\0');
      in.read(name.data(), name_len);
      if (!in) throw std::runtime_error("truncated checkpoint: " + path);
      const std::uint32_t ndim = get_u32();
      Shape shape(ndim);
      for (auto& d : shape) d = get_u64();
      const std::uint64_t len = get_u64();
      std::vector<double> data(len);
      in.read(reinterpret_cast<char*>(data.data()),
              static_cast<std::streamsize>(len * sizeof(double)));
      if (!in) throw std::runtime_error("truncated checkpoint: " + path);
      const std::uint64_t want = get_u64();
      const std::uint64_t have = fnv1a(data.data(), len * sizeof(double));
      if (want != have) {
        throw std::runtime_error("checkpoint block " + name +
                                 " failed its checksum in " + path);
      }
      ck.blocks[name] = {std::move(shape), std::move(data)};
    }
    return ck;
  }
};

namespace detail {

inline void add_mlp(Checkpoint& ck, const std::string& prefix,
                    const Mlp& mlp) {
  for (std::size_t i = 0; i < mlp.depth(); ++i) {
    const auto& l = mlp.layer(i);
    ck.add(prefix + "." + std::to_string(i) + ".w", l.w);
    if (l.has_bias) ck.add(prefix + "." + std::to_string(i) + ".b", l.b);
  }
}

inline void load_mlp(const Checkpoint& ck, const std::string& prefix,
                     Mlp& mlp) {
  for (std::size_t i = 0; i < mlp.depth(); ++i) {
    auto& l = mlp.layer(i);
    ck.load_into(prefix + "." + std::to_string(i) + ".w", l.w);
    if (l.has_bias) ck.load_into(prefix + "." + std::to_string(i) + ".b", l.b);
  }
}

inline nlohmann::json topology_json(const MganConfig& cfg) {
  return nlohmann::json{{"k_generators", cfg.k_generators},
                        {"z_dim", cfg.z_dim},
                        {"data_dim", cfg.data_dim},
                        {"gen_hidden", cfg.gen_hidden},
                        {"trunk_hidden", cfg.trunk_hidden},
                        {"feature_dim", cfg.feature_dim},
                        {"shares_removed", cfg.shares_removed},
                        {"leak", cfg.leak}};
}

}  // namespace detail

// Rebuild a configuration from a stored topology, so a checkpoint is
// loadable without the run config that produced it. init_std is left at its
// default: it only shapes fresh parameters, which the load overwrites.
inline MganConfig config_from_topology(const nlohmann::json& t) {
  MganConfig cfg;
  cfg.k_generators = t.at("k_generators").get<std::size_t>();
  cfg.z_dim = t.at("z_dim").get<std::size_t>();
  cfg.data_dim = t.at("data_dim").get<std::size_t>();
  cfg.gen_hidden = t.at("gen_hidden").get<std::vector<std::size_t>>();
  cfg.trunk_hidden = t.at("trunk_hidden").get<std::vector<std::size_t>>();
  cfg.feature_dim = t.at("feature_dim").get<std::size_t>();
  cfg.shares_removed = t.at("shares_removed").get<std::size_t>();
  cfg.leak = t.at("leak").get<double>();
  return cfg;
}

inline Checkpoint model_to_checkpoint(const MganModel& model) {
  Checkpoint ck;
  ck.meta["topology"] = detail::topology_json(model.cfg);
  for (std::size_t k = 0; k < model.generators.size(); ++k) {
    detail::add_mlp(ck, "gen." + std::to_string(k),
                    model.generators.generator(k));
  }
  detail::add_mlp(ck, "disc.trunk", model.discriminator.extractor);
  ck.add("disc.head.w", model.discriminator.head_w);
  detail::add_mlp(ck, "cls.trunk", model.classifier.extractor);
  ck.add("cls.head.w", model.classifier.head_w);
  if (model.classifier.head_b) ck.add("cls.head.b", *model.classifier.head_b);
  return ck;
}

// Fill an already-built model. The stored topology must match the model's
// configuration exactly; trunk sharing is a construction property, so a
// matching shares_removed guarantees the aliasing pattern agrees too.
inline void checkpoint_to_model(const Checkpoint& ck, MganModel& model) {
  const nlohmann::json want = detail::topology_json(model.cfg);
  if (!ck.meta.contains("topology") || ck.meta["topology"] != want) {
    throw std::runtime_error(
        "checkpoint topology does not match the model: stored " +
        (ck.meta.contains("topology") ? ck.meta["topology"].dump()
                                      : std::string("<none>")) +
        ", model " + want.dump());
  }
  for (std::size_t k = 0; k < model.generators.size(); ++k) {
    detail::load_mlp(ck, "gen." + std::to_string(k),
                     model.generators.generator(k));
  }
  detail::load_mlp(ck, "disc.trunk", model.discriminator.extractor);
  ck.load_into("disc.head.w", model.discriminator.head_w);
  detail::load_mlp(ck, "cls.trunk", model.classifier.extractor);
  ck.load_into("cls.head.w", model.classifier.head_w);
  if (model.classifier.head_b) {
    ck.load_into("cls.head.b", *model.classifier.head_b);
  }
}

}  // namespace ganlab
