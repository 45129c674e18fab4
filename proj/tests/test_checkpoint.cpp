#include <fstream>

#include <doctest.h>

#include "him/checkpoint.hpp"
#include "test_util.hpp"

using namespace him;
using him::test::TempDir;
using him::test::random_array;
using him::test::slurp;

namespace {

void to_f32(Array& a) {
  for (double& v : a.data) v = static_cast<double>(static_cast<float>(v));
}

CheckpointData sample_data(Rng& rng) {
  CheckpointData d;
  d.config = {{"encoder", {{"dim", 4}}}, {"note", "test"}};
  d.vocab = {"<pad>", "<unk>", "alpha", "beta"};
  d.rng_state = rng.save_state();
  d.opt_step = 42;
  d.epoch = 3;
  Array a = random_array({3, 2}, rng);
  to_f32(a);
  d.tensors.emplace_back("w", a);
  Array b = random_array({5}, rng);
  to_f32(b);
  d.tensors.emplace_back("opt.m.w", b);
  return d;
}

}  // namespace

TEST_CASE("checkpoint round trip") {
  TempDir dir("ckpt");
  Rng rng(1);
  CheckpointData d = sample_data(rng);
  std::string p1 = dir.file("a.him"), p2 = dir.file("b.him");
  save_checkpoint(p1, d);

  SUBCASE("save -> load -> save produces identical bytes") {
    CheckpointData loaded = load_checkpoint(p1);
    save_checkpoint(p2, loaded);
    CHECK(slurp(p1) == slurp(p2));
  }
  SUBCASE("all fields survive") {
    CheckpointData loaded = load_checkpoint(p1);
    CHECK(loaded.vocab == d.vocab);
    CHECK(loaded.rng_state == d.rng_state);
    CHECK(loaded.opt_step == 42);
    CHECK(loaded.epoch == 3);
    REQUIRE(loaded.tensors.size() == 2);
    CHECK(loaded.tensors[0].first == "w");
    CHECK(loaded.tensors[0].second.shape == Shape{3, 2});
    CHECK(loaded.tensors[0].second.data == d.tensors[0].second.data);
    CHECK(loaded.config.at("note") == "test");
  }
  SUBCASE("magic mismatch is an explicit error") {
    std::string blob = slurp(p1);
    blob[0] = 'X';
    std::ofstream os(p2, std::ios::binary);
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    os.close();
    CHECK_THROWS_WITH_AS(load_checkpoint(p2), doctest::Contains("magic"), Error);
  }
  SUBCASE("truncated payload is an error, no partial model") {
    std::string blob = slurp(p1);
    blob.resize(blob.size() - 5);
    std::ofstream os(p2, std::ios::binary);
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    os.close();
    CHECK_THROWS_WITH_AS(load_checkpoint(p2), doctest::Contains("truncated"), Error);
  }
  SUBCASE("missing file is an error") { CHECK_THROWS_AS(load_checkpoint(dir.file("nope")), Error); }
}
