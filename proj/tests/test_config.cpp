#include <doctest.h>

#include <sstream>

#include "balent/config.hpp"
#include "balent/errors.hpp"

using namespace balent;

namespace {

ALConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parses keys, comments and blank lines") {
  const auto cfg = parse(
      "# comment\n"
      "\n"
      "acquisition = power_bald   # trailing comment\n"
      "n=7\n"
      "  gamma = 2.5\n"
      "m = 10\n"
      "dropout = 0.3\n"
      "cycles = 3\n"
      "pool_factor = 4\n"
      "seed = 18446744073709551615\n"
      "noise_sigma = 0.1\n"
      "warm_start = true\n");
  CHECK(cfg.acquisition.kind == AcquisitionKind::power_bald);
  CHECK(cfg.acquisition.n == 7);
  CHECK(cfg.acquisition.gamma == 2.5);
  CHECK(cfg.mc_samples == 10);
  CHECK(cfg.dropout == 0.3);
  CHECK(cfg.cycles == 3);
  CHECK(cfg.acquisition.margin_pool_factor == 4);
  CHECK(cfg.acquisition.seed == 18446744073709551615ull);
  CHECK(cfg.data.noise_sigma == 0.1);
  CHECK(cfg.warm_start);
}

TEST_CASE("errors name the key and the line") {
  CHECK(config_error("n = 5\nbogus = 1\n").find("line 2") != std::string::npos);
  CHECK(config_error("n = 5\nbogus = 1\n").find("bogus") != std::string::npos);
  CHECK(config_error("n = 5\nn = 6\n").find("duplicate") != std::string::npos);
  CHECK(config_error("m = ten\n").find("'m'") != std::string::npos);
  CHECK(config_error("gamma = nan\n").find("gamma") != std::string::npos);
  CHECK(config_error("acquisition = coreset\n").find("acquisition") != std::string::npos);
  CHECK(config_error("just words\n").find("line 1") != std::string::npos);
  CHECK(config_error("warm_start = maybe\n").find("warm_start") != std::string::npos);
  CHECK(config_error("seed = -1\n").find("seed") != std::string::npos);
}

TEST_CASE("values are checked against module bounds") {
  CHECK_THROWS_AS(parse("cycles = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse("n = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse("gamma = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse("dropout = 1.5\n"), ValidationError);
  CHECK_THROWS_AS(parse("m = 1\n"), ValidationError);
  CHECK_THROWS_AS(parse("classes = 1\n"), ValidationError);
}

TEST_CASE("rendered configs parse back to the same rendering") {
  auto cfg = parse("acquisition = margin\nlearning_rate = 0.1234567890123\nblob_scale = 5\n");
  const auto text = render_config(cfg);
  CHECK(text.find("acquisition = margin\n") != std::string::npos);
  CHECK(render_config(parse(text)) == text);
  CHECK(parse(text).train.learning_rate == 0.1234567890123);
}

TEST_CASE("bundled default config") {
  const auto cfg = load_config(std::string(BALENT_SOURCE_DIR) + "/configs/default.cfg");
  CHECK(cfg.data.num_classes == 4);
  CHECK(cfg.data.num_images == 100);
  CHECK(cfg.data.height == 32);
  CHECK(cfg.data.width == 32);
  CHECK(cfg.data.feature_dim == 4);
  CHECK(cfg.acquisition.n == 5);
  CHECK(cfg.mc_samples == 20);
  CHECK(cfg.dropout == 0.2);
  CHECK(cfg.cycles == 10);
  CHECK(cfg.acquisition.kind == AcquisitionKind::balent_acq);
}

TEST_CASE("missing config file") {
  try {
    load_config("/nonexistent/balent.cfg");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.path() == "/nonexistent/balent.cfg");
  }
}
