#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "occreid/checkpoint.hpp"
#include "occreid/errors.hpp"
#include "occreid/random.hpp"

using namespace occreid;
namespace fs = std::filesystem;

namespace {

Tensor random_batch(int b, std::uint64_t seed) {
  RandomSource rng(seed);
  Tensor t(b, 3, 64, 64);
  for (double& v : t.data) v = rng.uniform();
  return t;
}

AdamState some_moments(const CoSaliencyNet& net) {
  AdamState opt;
  opt.step = 12;
  opt.m = zero_gradients(net.params());
  opt.v = zero_gradients(net.params());
  RandomSource rng(3);
  for (auto& t : opt.m)
    for (double& v : t.data) v = rng.normal();
  for (auto& t : opt.v)
    for (double& v : t.data) v = rng.uniform();
  return opt;
}

}  // namespace

TEST_CASE("checkpoint save/load round trip") {
  const fs::path dir = fs::temp_directory_path() / "occreid_test_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const CoSaliencyNet net(NetworkConfig::tiny(5), 1);
  RandomSource rng(4);
  rng.next_u64();
  const Checkpoint ckpt = make_checkpoint(net, some_moments(net), {10, 11, 12, 13, 14}, "teacher", 3, 77,
                                          rng.save_state(), "{\"seed\": 77}");
  save_checkpoint(ckpt, dir / "a.ckpt");
  const Checkpoint back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.stage == "teacher");
  CHECK(back.epoch == 3);
  CHECK(back.seed == 77);
  CHECK(back.identities == ckpt.identities);
  CHECK(back.network == ckpt.network);
  CHECK(back.optimizer == ckpt.optimizer);
  CHECK(back.rng_state == ckpt.rng_state);
  CHECK(back.config_echo == ckpt.config_echo);
  REQUIRE(back.params.size() == ckpt.params.size());
  for (std::size_t i = 0; i < back.params.size(); ++i) {
    CHECK(back.params[i].name == ckpt.params[i].name);
    CHECK(back.params[i].group == ckpt.params[i].group);
    CHECK(back.params[i].value == ckpt.params[i].value);
  }

  // Eval outputs of the restored network are bitwise equal.
  const Tensor x = random_batch(2, 5);
  const CoSaliencyNet restored = restore_network(back);
  const NetworkOutput a = net.forward(x), b = restored.forward(x);
  CHECK(a.identity_logits == b.identity_logits);
  CHECK(a.saliency_logits == b.saliency_logits);
  CHECK(a.feature == b.feature);

  // Saving the loaded checkpoint reproduces the file byte for byte.
  save_checkpoint(back, dir / "b.ckpt");
  std::ifstream fa(dir / "a.ckpt", std::ios::binary), fb(dir / "b.ckpt", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(sa == sb);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint without optimizer moments") {
  const fs::path path = fs::temp_directory_path() / "occreid_test_ckpt_nomoments.ckpt";
  const CoSaliencyNet net(NetworkConfig::tiny(2), 2);
  save_checkpoint(make_checkpoint(net, AdamState{}, {0, 1}, "student", 0, 1, "", "{}"), path);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.optimizer.m.empty());
  CHECK(back.stage == "student");
  fs::remove(path);
}

TEST_CASE("corrupt or foreign files are rejected") {
  const fs::path path = fs::temp_directory_path() / "occreid_test_ckpt_bad.ckpt";
  {
    std::ofstream out(path);
    out << "not a checkpoint\n";
  }
  CHECK_THROWS_AS(load_checkpoint(path), ValidationError);
  CHECK_THROWS_AS(load_checkpoint(path.string() + ".missing"), IoError);

  const CoSaliencyNet net(NetworkConfig::tiny(2), 2);
  save_checkpoint(make_checkpoint(net, AdamState{}, {0, 1}, "teacher", 0, 1, "", "{}"), path);
  fs::resize_file(path, fs::file_size(path) - 100);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
  fs::remove(path);
}

TEST_CASE("restoring checks the parameter layout") {
  const CoSaliencyNet net(NetworkConfig::tiny(3), 1);
  Checkpoint c = make_checkpoint(net, AdamState{}, {0, 1, 2}, "teacher", 0, 0, "", "{}");
  c.params[0].value = Tensor(1, 1, 1, 1);
  CHECK_THROWS_AS(restore_network(c), ValidationError);
  Checkpoint d = make_checkpoint(net, AdamState{}, {0, 1, 2}, "teacher", 0, 0, "", "{}");
  d.params[3].name = "backbone.renamed";
  CHECK_THROWS_AS(restore_network(d), ValidationError);
}
