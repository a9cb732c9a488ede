#include <doctest.h>

#include <cmath>
#include <limits>

#include "alcon/config.hpp"
#include "alcon/text.hpp"

using namespace alcon;

TEST_CASE("doubles print in shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(3.0) == "3");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = (uniform01(rng) - 0.5) * std::pow(10.0, static_cast<double>(uniform_index(rng, 20)) - 10.0);
    CHECK(parse_double(format_double(v), "x") == v);
  }
}

TEST_CASE("scalar parsers reject junk with the key named") {
  CHECK(parse_int(" 42 ", "k") == 42);
  CHECK(parse_bool("true", "k"));
  CHECK_FALSE(parse_bool("0", "k"));
  CHECK(parse_u64("18446744073709551615", "k") == std::numeric_limits<std::uint64_t>::max());
  const auto key_of = [](auto fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("no error");
  };
  CHECK(key_of([] { parse_double("1.5x", "sim.S"); }) == "sim.S");
  CHECK(key_of([] { parse_int("2.5", "bench.episodes"); }) == "bench.episodes");
  CHECK(key_of([] { parse_bool("maybe", "rlp.monitor"); }) == "rlp.monitor");
  CHECK(key_of([] { parse_u64("-1", "seed"); }) == "seed");
  CHECK(key_of([] { parse_double("nan", "w_M"); }) == "w_M");
}

TEST_CASE("key=value text: comments, blanks, malformed lines") {
  const auto kv = parse_key_values("# header\n a = 1 \n\nb=x # trailing\n", "t");
  CHECK(kv.size() == 2);
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("b") == "x");
  CHECK_THROWS_WITH_AS(parse_key_values("a=1\nnonsense\n", "cfg.txt"), doctest::Contains("cfg.txt:2"), Error);
}

TEST_CASE("defaults carry the published constants") {
  RunConfig c;
  c.resolve();
  CHECK(c.get("grid.width") == "480");
  CHECK(c.get("grid.resolution_m") == "0.1");
  CHECK(c.get("fov.radius_m") == "3.2");
  CHECK(c.get("fov.angle_deg") == "40");
  CHECK(c.get("sim.success_radius_m") == "1.6");
  CHECK(c.get("sim.S") == "5");
  CHECK(c.get("w_M") == "0.7");
  CHECK(c.get("G_m") == "5");
  CHECK(c.get("k") == "0.1");
  CHECK(c.get("gamma") == "0.9");
  CHECK(c.get("train.learning_rate") == "0.001");
  CHECK(c.get("rlp.expand_margin_m") == "3");
  CHECK(c.get("bench.K_values") == "2,5,10");
  CHECK(c.get("dataset.count") == "3000");
}

TEST_CASE("dump is complete, ordered and reproduces itself") {
  RunConfig c;
  c.set("seed", "17");
  c.set("w_M", "0.6");
  c.set("bench.planners", "rf,ours");
  c.set("grid.width", "200");
  c.set("dataset.K_values", "1.5,3");
  const std::string text = c.dump();
  const auto keys = RunConfig::keys();
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == keys.size());
  const RunConfig back = RunConfig::parse(text);
  CHECK(back.dump() == text);
  RunConfig r = back;
  r.resolve();
  CHECK(r.bench.seed == 17);
  CHECK(r.train.seed == 17);
  CHECK(r.rlp.w_M == 0.6);
  CHECK(r.world.canvas_width == 200);
  CHECK(r.dataset.world.canvas_width == 200);
  CHECK(r.bench.world.canvas_width == 200);
  CHECK(r.bench.planners == std::vector<std::string>{"rf", "ours"});
  CHECK(r.dataset.K_values == std::vector<double>{1.5, 3.0});
  for (const auto& k : keys) CHECK_NOTHROW(r.get(k));
}

TEST_CASE("unknown keys and invalid values name the key") {
  RunConfig c;
  const auto key_of = [&](std::string_view k, std::string_view v) {
    try {
      RunConfig t;
      t.set(k, v);
      t.validate();
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("no error");
  };
  CHECK(key_of("fov.radius", "3") == "fov.radius");
  CHECK(key_of("gamma", "1.0") == "gamma");
  CHECK(key_of("w_M", "1.2") == "w_M");
  CHECK(key_of("sim.S", "-1") == "sim.S");
  CHECK(key_of("sim.step_budget", "5") == "sim.step_budget");
  CHECK(key_of("train.downsample", "7") == "train.downsample");
  CHECK(key_of("bench.planners", "rf,magic") == "bench.planners");
  CHECK(key_of("bench.episodes", "0") == "bench.episodes");
  CHECK(key_of("rlp.monitor", "sometimes") == "rlp.monitor");
  CHECK(key_of("k", "-0.5") == "k");
  CHECK(key_of("seed", "abc") == "seed");
  CHECK(key_of("w_M", "0.5") == "no error");
  CHECK_THROWS_AS(RunConfig::parse("bogus=1\n"), ConfigError);
}
