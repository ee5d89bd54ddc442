#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "occreid/network.hpp"

namespace occreid {

inline constexpr std::string_view kCheckpointFormat = "occreid-checkpoint/1";

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  bool operator==(const AdamState&) const = default;
};

// Everything needed to rebuild a model and resume or audit a run.
struct Checkpoint {
  std::string stage = "teacher";  // teacher | student
  int epoch = 0;
  NetworkConfig network;
  std::vector<int> identities;  // class index -> dataset identity
  ParameterStore params;
  AdamState optimizer;
  std::uint64_t seed = 0;
  std::string rng_state;
  std::string config_echo;  // resolved run config (JSON text)
};

Checkpoint make_checkpoint(const CoSaliencyNet& net, const AdamState& optimizer,
                           std::vector<int> identities, std::string stage, int epoch,
                           std::uint64_t seed, std::string rng_state, std::string config_echo);

// Rebuilds the network. Parameter names and shapes must match the
// architecture implied by the stored config.
CoSaliencyNet restore_network(const Checkpoint& ckpt);

// Binary archive: magic line, format tag, length-prefixed JSON header, then
// raw little-endian float64 payload (parameters, then Adam moments).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace occreid
