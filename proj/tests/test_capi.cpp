// Exercises the public C surface the way an FFI client would: everything
// through handles, JSON strings and status codes.

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <json.hpp>
#include <string>

#include "martlab/martlab.h"

using Json = nlohmann::ordered_json;

namespace {

struct Lab {
  ml_lab* h = nullptr;
  ~Lab() {
    if (h) ml_lab_close(h);
  }
};

struct Str {
  char* s = nullptr;
  ~Str() {
    if (s) ml_string_free(s);
  }
  Json json() const { return Json::parse(s); }
};

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::strlen(ml_version()) > 0);
  ml_lab* out = nullptr;
  CHECK(ml_lab_open_example("definitely_not_an_example", nullptr, &out) ==
        ML_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(ml_last_error()) > 0);
  CHECK(out == nullptr);
  CHECK(ml_lab_open_example(nullptr, nullptr, &out) == ML_ERR_INVALID_ARGUMENT);
}

TEST_CASE("enumeration through the C API") {
  Lab lab;
  REQUIRE(ml_lab_open_example("cherny", nullptr, &lab.h) == ML_OK);
  Str out;
  REQUIRE(ml_lab_enumerate(lab.h, 2, &out.s) == ML_OK);
  Json j = out.json();
  CHECK(j.at("schema") == "mart-lab/1");
  REQUIRE(j.at("atoms").size() == 4);
  CHECK(j.at("atoms")[0].at("weight") == "1/4");
  CHECK(j.at("atoms")[2].at("weight") == "1/16");
  CHECK(j.at("residual") == "3/8");
}

TEST_CASE("expectation queries and policy errors") {
  Lab lab;
  REQUIRE(ml_lab_open_example("cherny", nullptr, &lab.h) == ML_OK);

  SUBCASE("martingale marginal is exactly zero") {
    Str out;
    REQUIRE(ml_lab_expectation(lab.h, R"({"kind":"value_at","t":"5"})", nullptr, &out.s) ==
            ML_OK);
    Json j = out.json();
    CHECK(j.at("kind") == "exact");
    CHECK(j.at("value").at("exact") == "0");
  }

  SUBCASE("divergence certificate for the absolute limit") {
    Str out;
    REQUIRE(ml_lab_expectation(lab.h, R"({"kind":"abs_limit"})",
                               R"({"max_depth":10000,"threshold":"1000",
                                   "stop_at_threshold":true})",
                               &out.s) == ML_OK);
    Json j = out.json();
    CHECK(j.at("kind") == "divergence_certificate");
    CHECK(j.at("depth") == 2001);
    CHECK(j.at("partial_sum").at("exact") == "2001/2");
  }

  SUBCASE("indeterminate queries surface as a status code") {
    Str out;
    // E[X_inf] is sign-indefinite with an unbounded tail: refused
    ml_status st = ml_lab_expectation(
        lab.h,
        R"({"kind":"stopped","spec":{"op":"hit_abs_above","level":"1"},"absolute":false})",
        R"({"max_depth":100})", &out.s);
    CHECK(st == ML_ERR_INDETERMINATE_TAIL);
  }
}

TEST_CASE("witness gap status codes") {
  SUBCASE("cherny is not applicable") {
    Lab lab;
    REQUIRE(ml_lab_open_example("cherny", nullptr, &lab.h) == ML_OK);
    Str out;
    CHECK(ml_lab_witness_gap(lab.h, "2/5", 100, &out.s) == ML_ERR_NOT_APPLICABLE);
  }
  SUBCASE("the walk succeeds") {
    Lab lab;
    REQUIRE(ml_lab_open_example("random_walk", R"({"horizon":1000})", &lab.h) == ML_OK);
    Str out;
    REQUIRE(ml_lab_witness_gap(lab.h, "2/5", 1000, &out.s) == ML_OK);
    Json j = out.json();
    CHECK(j.at("success") == true);
    CHECK(j.at("E_M_tau").at("value").at("exact") == "1/2");
  }
}

TEST_CASE("blow-up curve through the C API") {
  Lab lab;
  REQUIRE(ml_lab_open_example("cherny_randomized", R"({"levels":16})", &lab.h) == ML_OK);
  long ms[3] = {1, 10, 100};
  Str out;
  REQUIRE(ml_lab_blowup_curve(lab.h, ms, 3, &out.s) == ML_OK);
  Json j = out.json();
  REQUIRE(j.at("points").size() == 3);
  CHECK(j.at("points")[0].at("value").at("exact") == "1");
}

TEST_CASE("adaptedness and finiteness endpoints round-trip specs") {
  Lab lab;
  REQUIRE(ml_lab_open_example("two_atom_nonadapted", nullptr, &lab.h) == ML_OK);
  Str out;
  REQUIRE(ml_lab_adaptedness(lab.h, R"({"op":"liminf_band","tol":"1"})", nullptr, 1, &out.s) ==
          ML_OK);
  Json j = out.json();
  CHECK(j.at("verdict") == "not_adapted");
  CHECK(j.at("witness").at("time").at("exact") == "0");
  CHECK(j.at("witness").at("replays") == true);

  Str fin;
  REQUIRE(ml_lab_finiteness(lab.h, R"({"op":"const","t":"3"})", 1, &fin.s) == ML_OK);
  CHECK(fin.json().at("level") == "bounded");
}

TEST_CASE("process spec files open through the C API") {
  const char* path = "capi_roundtrip_spec.json";
  {
    std::ofstream f(path);
    f << R"({"schema":"mart-lab/1","space":{"atoms":[
          {"id":0,"label":"a","weight":"1/2","initial":"0","jumps":[["1","5"]]},
          {"id":1,"label":"b","weight":"1/2","initial":"0","jumps":[]}]}})";
  }
  Lab lab;
  REQUIRE(ml_lab_open_file(path, &lab.h) == ML_OK);
  Str out;
  REQUIRE(ml_lab_enumerate(lab.h, 1, &out.s) == ML_OK);
  CHECK(out.json().at("atoms").size() == 2);
  Str exp;
  REQUIRE(ml_lab_expectation(lab.h, R"({"kind":"value_at","t":"2"})", nullptr, &exp.s) ==
          ML_OK);
  CHECK(exp.json().at("value").at("exact") == "5/2");

  ml_lab* bad = nullptr;
  CHECK(ml_lab_open_file("no_such_file.json", &bad) == ML_ERR_INVALID_ARGUMENT);
}

TEST_CASE("statement suite through the C API") {
  Lab lab;
  REQUIRE(ml_lab_open_example("nonnegative_control", nullptr, &lab.h) == ML_OK);
  Str out;
  REQUIRE(ml_lab_run_suite(lab.h, R"({"grid_max":"10","max_specs":150})", &out.s) == ML_OK);
  Json j = out.json();
  CHECK(j.at("matches_expected") == true);
  CHECK(j.at("hierarchy_consistent") == true);
}

TEST_CASE("Monte Carlo estimates through the C API") {
  Lab lab;
  REQUIRE(ml_lab_open_example("cherny", nullptr, &lab.h) == ML_OK);
  Str out;
  REQUIRE(ml_lab_mc(lab.h,
                    R"({"kind":"expectation","rv":{"kind":"value_at","t":"10"},
                        "depth":100,"n":20000,"seed":7})",
                    &out.s) == ML_OK);
  Json j = out.json();
  double mean = j.at("mean").get<double>();
  double hw = j.at("half_width").get<double>();
  CHECK(std::abs(mean) <= hw);

  Lab walk;
  REQUIRE(ml_lab_open_example("random_walk", R"({"horizon":500})", &walk.h) == ML_OK);
  Str sout;
  REQUIRE(ml_lab_mc(walk.h,
                    R"({"kind":"stopped","spec":{"op":"hit_above","level":"1"},
                        "horizon":500,"n":20000,"seed":9})",
                    &sout.s) == ML_OK);
  CHECK(sout.json().at("stop_rate").get<double>() > 0.9);
}
