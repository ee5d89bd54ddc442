#include "occreid/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "occreid/errors.hpp"

namespace occreid {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes little endian");

namespace {

constexpr char kMagic[] = "OCCREID-CKPT\n";

ParamGroup parse_group(const std::string& s) {
  if (s == "backbone") return ParamGroup::backbone;
  if (s == "classification") return ParamGroup::classification;
  if (s == "cosaliency") return ParamGroup::cosaliency;
  throw ValidationError("checkpoint: unknown parameter group '" + s + "'");
}

json network_to_json(const NetworkConfig& c) {
  return {{"stage_channels", c.stage_channels},
          {"n_identities", c.n_identities},
          {"cs_channels", c.cs_channels},
          {"input_size", c.input_size},
          {"preset", c.preset}};
}

NetworkConfig network_from_json(const json& j) {
  NetworkConfig c;
  c.stage_channels = j.at("stage_channels").get<std::array<int, 5>>();
  c.n_identities = j.at("n_identities").get<int>();
  c.cs_channels = j.at("cs_channels").get<int>();
  c.input_size = j.at("input_size").get<int>();
  c.preset = j.at("preset").get<std::string>();
  return c;
}

void write_tensor(std::ofstream& out, const Tensor& t) {
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

void read_tensor(std::ifstream& in, Tensor& t, const fs::path& path) {
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  if (!in) throw IoError("checkpoint truncated: " + path.string());
}

}  // namespace

Checkpoint make_checkpoint(const CoSaliencyNet& net, const AdamState& optimizer,
                           std::vector<int> identities, std::string stage, int epoch,
                           std::uint64_t seed, std::string rng_state, std::string config_echo) {
  Checkpoint c;
  c.stage = std::move(stage);
  c.epoch = epoch;
  c.network = net.config();
  c.identities = std::move(identities);
  c.params = net.params();
  c.optimizer = optimizer;
  c.seed = seed;
  c.rng_state = std::move(rng_state);
  c.config_echo = std::move(config_echo);
  return c;
}

CoSaliencyNet restore_network(const Checkpoint& ckpt) {
  CoSaliencyNet net(ckpt.network, 0);
  auto& dst = net.params();
  if (dst.size() != ckpt.params.size())
    throw ValidationError("checkpoint: parameter count " + std::to_string(ckpt.params.size()) +
                          " does not match architecture (" + std::to_string(dst.size()) + ")");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const Parameter& src = ckpt.params[i];
    if (src.name != dst[i].name || !src.value.same_shape(dst[i].value))
      throw ValidationError("checkpoint: parameter '" + src.name + "' does not match '" +
                            dst[i].name + "'");
    dst[i].value = src.value;
  }
  return net;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  json tensors = json::array();
  for (const auto& p : ckpt.params)
    tensors.push_back({{"name", p.name}, {"group", to_string(p.group)}, {"shape", p.value.shape}});
  const bool has_moments = ckpt.optimizer.m.size() == ckpt.params.size();
  json header = {{"format", kCheckpointFormat},
                 {"stage", ckpt.stage},
                 {"epoch", ckpt.epoch},
                 {"network", network_to_json(ckpt.network)},
                 {"identities", ckpt.identities},
                 {"seed", ckpt.seed},
                 {"rng_state", ckpt.rng_state},
                 {"config", ckpt.config_echo},
                 {"optimizer",
                  {{"name", "adam"},
                   {"beta1", ckpt.optimizer.beta1},
                   {"beta2", ckpt.optimizer.beta2},
                   {"epsilon", ckpt.optimizer.epsilon},
                   {"step", ckpt.optimizer.step},
                   {"has_moments", has_moments}}},
                 {"tensors", tensors}};
  const std::string text = header.dump();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic) - 1);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : ckpt.params) write_tensor(out, p.value);
  if (has_moments) {
    for (const auto& t : ckpt.optimizer.m) write_tensor(out, t);
    for (const auto& t : ckpt.optimizer.v) write_tensor(out, t);
  }
  if (!out) throw IoError("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw ValidationError(path.string() + ": not an occreid checkpoint");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 28)) throw ValidationError(path.string() + ": corrupt header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("checkpoint truncated: " + path.string());

  Checkpoint c;
  try {
    const json header = json::parse(text);
    if (header.at("format").get<std::string>() != kCheckpointFormat)
      throw ValidationError(path.string() + ": unsupported checkpoint format");
    c.stage = header.at("stage").get<std::string>();
    c.epoch = header.at("epoch").get<int>();
    c.network = network_from_json(header.at("network"));
    c.identities = header.at("identities").get<std::vector<int>>();
    c.seed = header.at("seed").get<std::uint64_t>();
    c.rng_state = header.at("rng_state").get<std::string>();
    c.config_echo = header.at("config").get<std::string>();
    const auto& opt = header.at("optimizer");
    c.optimizer.beta1 = opt.at("beta1").get<double>();
    c.optimizer.beta2 = opt.at("beta2").get<double>();
    c.optimizer.epsilon = opt.at("epsilon").get<double>();
    c.optimizer.step = opt.at("step").get<std::int64_t>();
    for (const auto& t : header.at("tensors")) {
      const auto shape = t.at("shape").get<std::array<int, 4>>();
      c.params.add(t.at("name").get<std::string>(), parse_group(t.at("group").get<std::string>()),
                   Tensor(shape[0], shape[1], shape[2], shape[3]));
    }
    for (auto& p : c.params) read_tensor(in, p.value, path);
    if (opt.at("has_moments").get<bool>()) {
      c.optimizer.m = zero_gradients(c.params);
      c.optimizer.v = zero_gradients(c.params);
      for (auto& t : c.optimizer.m) read_tensor(in, t, path);
      for (auto& t : c.optimizer.v) read_tensor(in, t, path);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  return c;
}

}  // namespace occreid
