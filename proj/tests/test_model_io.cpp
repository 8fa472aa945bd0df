#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "rnngen/data.hpp"
#include "rnngen/errors.hpp"
#include "rnngen/model_io.hpp"
#include "rnngen/report.hpp"
#include "rnngen/verify.hpp"

using namespace rnngen;

namespace {

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

Model small_vanilla() {
  return Model{VanillaWeights{Matrix{{0.1, -0.2}, {1.0 / 3.0, 0.4}}, Matrix{{1e-300, 2.5}},
                              Matrix{{0.7}, {-0.123456789012345678}}},
               Activation::relu(), Activation::identity()};
}

}  // namespace

TEST_CASE("model round trip is bit exact for every cell") {
  WeightSampler ws;
  std::mt19937_64 rng(13);
  for (CellType c : {CellType::vanilla, CellType::mgu, CellType::lstm, CellType::conv}) {
    for (int i = 0; i < 5; ++i) {
      const Model m = ws.sample(c, rng);
      CHECK(model_from_json(model_to_json(m)) == m);
    }
  }
  const Model relu = small_vanilla();
  const Model back = model_from_json(model_to_json(relu));
  CHECK(back == relu);
  CHECK(std::isinf(back.sigma_h.b));
}

TEST_CASE("model file on disk") {
  const std::string path = "rnngen_test_model.json";
  save_model(small_vanilla(), path);
  CHECK(load_model(path) == small_vanilla());
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_model("/nonexistent/dir/model.json"), InvalidInput);
}

TEST_CASE("model parse errors are distinct and name the field") {
  const std::string good = model_to_json(small_vanilla());

  try {
    model_from_json(replace(good, "\"vanilla\"", "\"gru\""));
    FAIL("expected UnsupportedCell");
  } catch (const UnsupportedCell& e) {
    CHECK(e.field() == "cell_type");
  }

  try {
    model_from_json(replace(good, "\"format_version\": 1", "\"format_version\": 2"));
    FAIL("expected VersionMismatch");
  } catch (const VersionMismatch& e) {
    CHECK(e.field() == "format_version");
  }

  try {
    model_from_json(replace(good, "\"W\": {", "\"W_missing\": {"));
    FAIL("expected MissingField");
  } catch (const MissingField& e) {
    CHECK(e.field() == "W");
  }

  try {
    model_from_json(replace(good, "\"d_y\": 1", "\"d_y\": 2"));
    FAIL("expected DimensionMismatch");
  } catch (const DimensionMismatch& e) {
    CHECK(e.field() == "V");
  }

  try {
    model_from_json(good.substr(0, good.size() / 2));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() > 0);
    CHECK(e.byte_offset() <= good.size() / 2 + 1);
  }
}

TEST_CASE("dataset round trip") {
  const auto d = gen_synthetic(5, 4, 3, 3, LabelRule::teacher, 2).data;
  CHECK(dataset_from_json(dataset_to_json(d)) == d);
  const std::string bad = replace(dataset_to_json(d), "\"m\": 5", "\"m\": 6");
  CHECK_THROWS_AS(dataset_from_json(bad), DimensionMismatch);
}

TEST_CASE("CSV rows") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(INFINITY) == "inf");
  BoundReport r;
  r.id = "ours";
  r.value = 2.0;
  r.log_value = std::log(2.0);
  r.width = 3.0;
  r.t = 5;
  r.m = 10;
  r.gamma = 0.5;
  r.regime = Regime::III;
  r.order_only = true;
  CHECK(bound_row(r) == "ours,2,0.69314718055994529,false,III,3,5,10,0.5,true");
  std::ostringstream os;
  write_verify_csv(os, std::vector<TrialReport>{{"hidden_norm.vanilla", 10, 0, 0.5, 7}});
  CHECK(os.str() == "trial_kind,trials,violations,worst_ratio,seed\nhidden_norm.vanilla,10,0,0.5,7\n");
}
