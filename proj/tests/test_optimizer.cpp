#include <cmath>

#include <doctest.h>

#include "him/optimizer.hpp"
#include "test_util.hpp"

using namespace him;
using him::test::random_array;

namespace {

ParamStore single_param(const Array& value, bool decay = true) {
  ParamStore store;
  store.add("w", value, true, decay);
  return store;
}

}  // namespace

TEST_CASE("lr schedule") {
  CHECK(lr_at(0, 1e-4, 100) == 0.0);
  CHECK(lr_at(50, 1e-4, 100) == doctest::Approx(5e-5).epsilon(1e-12));
  CHECK(lr_at(100, 1e-4, 100) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at(1000000, 1e-4, 100) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at(3, 1e-4, 0) == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("gradient clipping") {
  SUBCASE("below the cap stays untouched") {
    GradMap g;
    g.emplace("a", Array({2}, {0.3, 0.4}));
    double norm = clip_gradients(g, 1.0);
    CHECK(norm == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g.at("a").data == std::vector<double>{0.3, 0.4});
  }
  SUBCASE("above the cap rescales by the ratio") {
    GradMap g;
    g.emplace("a", Array({2}, {0.0, 4.0}));
    double norm = clip_gradients(g, 1.0);
    CHECK(norm == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(g.at("a").data[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("post-clip norm never exceeds the cap") {
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
      GradMap g;
      g.emplace("a", random_array({7}, rng, -3, 3));
      g.emplace("b", random_array({3}, rng, -3, 3));
      clip_gradients(g, 1.0);
      double sq = 0;
      for (auto& [n, a] : g)
        for (double v : a.data) sq += v * v;
      CHECK(std::sqrt(sq) <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("adamw step") {
  SUBCASE("zero grads with zero decay leave parameters unchanged") {
    ParamStore store = single_param(Array({3}, {1.0, -2.0, 0.5}));
    AdamW opt;
    GradMap g;
    g.emplace("w", Array::zeros({3}));
    CHECK(opt.step(store, g, 1e-3, 0.0));
    CHECK(store.at("w").data == std::vector<double>{1.0, -2.0, 0.5});
  }
  SUBCASE("first step from zero state is a sign-scaled update") {
    ParamStore store = single_param(Array::zeros({3}), false);
    AdamW opt;
    GradMap g;
    g.emplace("w", Array({3}, {0.2, -0.7, 1.5}));
    CHECK(opt.step(store, g, 1e-2, 0.0));
    // bias correction makes mhat = g and vhat = g^2 on step one, so the
    // update is -lr * g / (|g| + eps) = -lr * sign(g) up to eps
    for (int i = 0; i < 3; ++i) {
      double expect = -1e-2 * (g.at("w").data[i] > 0 ? 1.0 : -1.0);
      CHECK(store.at("w").data[i] == doctest::Approx(expect).epsilon(1e-6));
    }
  }
  SUBCASE("decoupled decay with zero grads is a pure multiplicative shrink") {
    ParamStore store = single_param(Array({2}, {2.0, -4.0}));
    AdamW opt;
    GradMap g;
    g.emplace("w", Array::zeros({2}));
    CHECK(opt.step(store, g, 0.1, 0.01));
    CHECK(store.at("w").data[0] == doctest::Approx(2.0 * (1.0 - 0.1 * 0.01)).epsilon(1e-6));
    CHECK(store.at("w").data[1] == doctest::Approx(-4.0 * (1.0 - 0.1 * 0.01)).epsilon(1e-6));
  }
  SUBCASE("entries flagged no-decay are not shrunk") {
    ParamStore store;
    store.add("w", Array({1}, {2.0}), true, false);
    AdamW opt;
    GradMap g;
    g.emplace("w", Array::zeros({1}));
    CHECK(opt.step(store, g, 0.1, 0.01));
    CHECK(store.at("w").data[0] == 2.0);
  }
  SUBCASE("non-finite gradients skip the step") {
    ParamStore store = single_param(Array({2}, {1.0, 1.0}));
    AdamW opt;
    GradMap g;
    g.emplace("w", Array({2}, {0.1, std::nan("")}));
    CHECK(!opt.step(store, g, 1e-3, 0.0));
    CHECK(store.at("w").data == std::vector<double>{1.0, 1.0});
    CHECK(opt.step_count() == 0);
  }
  SUBCASE("state stays f32-representable") {
    Rng rng(2);
    ParamStore store = single_param(random_array({16}, rng));
    store.quantize_f32();
    AdamW opt;
    for (int s = 0; s < 5; ++s) {
      GradMap g;
      g.emplace("w", random_array({16}, rng, -0.5, 0.5));
      CHECK(opt.step(store, g, 1e-3, 1e-3));
    }
    for (double v : store.at("w").data)
      CHECK(v == static_cast<double>(static_cast<float>(v)));
    for (const auto& e : opt.state()) {
      for (double v : e.m.data) CHECK(v == static_cast<double>(static_cast<float>(v)));
      for (double v : e.v.data) CHECK(v == static_cast<double>(static_cast<float>(v)));
    }
  }
}
