#include "martlab/martlab.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>

#include "examples.hpp"
#include "report.hpp"

using namespace martlab;

struct ml_lab {
  Lab lab;
};

namespace {

thread_local std::string g_last_error;

ml_status status_of(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return ML_ERR_INVALID_ARGUMENT;
    case Errc::parse: return ML_ERR_PARSE;
    case Errc::indeterminate_tail: return ML_ERR_INDETERMINATE_TAIL;
    case Errc::zero_mass_block: return ML_ERR_ZERO_MASS_BLOCK;
    case Errc::not_terminating: return ML_ERR_NOT_TERMINATING;
    case Errc::missing_uniform: return ML_ERR_MISSING_UNIFORM;
    case Errc::precondition_failed: return ML_ERR_PRECONDITION_FAILED;
    case Errc::not_applicable: return ML_ERR_NOT_APPLICABLE;
    case Errc::internal: return ML_ERR_INTERNAL;
  }
  return ML_ERR_INTERNAL;
}

template <typename Fn>
ml_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return ML_OK;
  } catch (const LabError& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const Json::exception& e) {
    g_last_error = e.what();
    return ML_ERR_PARSE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ML_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** json_out, const Json& j) {
  if (!json_out) fail(Errc::invalid_argument, "json_out must not be null");
  *json_out = dup_string(j.dump(2));
}

Json parse_or_empty(const char* s) {
  if (!s || !*s) return Json::object();
  return Json::parse(s);
}

ExampleParams params_from_json(const Json& j) {
  ExampleParams p;
  p.depth = j.value("depth", p.depth);
  p.levels = j.value("levels", p.levels);
  p.horizon = j.value("horizon", p.horizon);
  if (j.contains("eta")) p.eta = rat_parse(j.at("eta").get<std::string>());
  return p;
}

RandomVariable rv_from_json(const Lab& lab, const Json& j) {
  if (!lab.exact()) fail(Errc::invalid_argument, "expectation queries need an exact process");
  std::string kind = j.at("kind").get<std::string>();
  const PathProcess& p = *lab.process;
  if (kind == "value_at") return rv_value_at(p, rat_parse(j.at("t").get<std::string>()), false);
  if (kind == "abs_value_at")
    return rv_value_at(p, rat_parse(j.at("t").get<std::string>()), true);
  if (kind == "trunc_abs_at")
    return rv_trunc_abs_at(p, rat_parse(j.at("t").get<std::string>()),
                           rat_parse(j.at("K").get<std::string>()));
  if (kind == "abs_limit") return rv_abs_limit(p);
  if (kind == "stopped")
    return rv_stopped(p, spec_from_json(j.at("spec")), j.value("absolute", false));
  fail(Errc::parse, "unknown rv kind '" + kind + "'");
}

ExpectationPolicy policy_from_json(const Json& j) {
  ExpectationPolicy policy;
  policy.max_depth = j.value("max_depth", policy.max_depth);
  if (j.contains("threshold"))
    policy.divergence_threshold = rat_parse(j.at("threshold").get<std::string>());
  policy.stop_at_threshold = j.value("stop_at_threshold", policy.stop_at_threshold);
  return policy;
}

SuiteParams suite_params_from_json(const Json& j) {
  SuiteParams params;
  // grid_max widens the statement-V grid; the stopping family keeps its own
  // working grid unless family_grid_max is given
  if (j.contains("grid_max")) params.v_grid_max = rat_parse(j.at("grid_max").get<std::string>());
  if (j.contains("family_grid_max"))
    params.family.grid_max = rat_parse(j.at("family_grid_max").get<std::string>());
  if (j.contains("max_specs")) params.family.max_specs = j.at("max_specs").get<std::size_t>();
  if (j.contains("tree_depth")) params.family.tree_depth = j.at("tree_depth").get<int>();
  if (j.contains("working_depth"))
    params.family.working_depth = j.at("working_depth").get<int>();
  if (j.contains("levels")) {
    params.family.levels.clear();
    for (const auto& l : j.at("levels"))
      params.family.levels.push_back(rat_parse(l.get<std::string>()));
  }
  if (j.contains("walk_horizon"))
    params.family.walk_horizon = j.at("walk_horizon").get<long>();
  if (j.contains("include_randomized"))
    params.family.include_randomized = j.at("include_randomized").get<bool>();
  return params;
}

}  // namespace

extern "C" {

const char* ml_version(void) { return "1.0.0"; }

const char* ml_last_error(void) { return g_last_error.c_str(); }

void ml_string_free(char* s) { std::free(s); }

ml_status ml_lab_open_example(const char* name, const char* params_json, ml_lab** out) {
  return guarded([&] {
    if (!name || !out) fail(Errc::invalid_argument, "name and out must not be null");
    ExampleParams params = params_from_json(parse_or_empty(params_json));
    auto handle = std::make_unique<ml_lab>();
    handle->lab = build_example(name, params);
    *out = handle.release();
  });
}

ml_status ml_lab_open_file(const char* path, ml_lab** out) {
  return guarded([&] {
    if (!path || !out) fail(Errc::invalid_argument, "path and out must not be null");
    auto handle = std::make_unique<ml_lab>();
    handle->lab = lab_from_file(path);
    *out = handle.release();
  });
}

void ml_lab_close(ml_lab* lab) { delete lab; }

ml_status ml_lab_enumerate(ml_lab* lab, int depth, char** json_out) {
  return guarded([&] {
    if (!lab) fail(Errc::invalid_argument, "lab must not be null");
    emit(json_out, enumeration_json(lab->lab, depth));
  });
}

ml_status ml_lab_expectation(ml_lab* lab, const char* rv_json, const char* policy_json,
                             char** json_out) {
  return guarded([&] {
    if (!lab || !rv_json) fail(Errc::invalid_argument, "lab and rv_json must not be null");
    RandomVariable rv = rv_from_json(lab->lab, Json::parse(rv_json));
    ExpectationPolicy policy = policy_from_json(parse_or_empty(policy_json));
    ExpectationResult r = expectation(*lab->lab.space, rv, policy);
    Json j = json_of(r);
    j["rv"] = rv.name;
    j["schema"] = kSchema;
    emit(json_out, j);
  });
}

ml_status ml_lab_run_suite(ml_lab* lab, const char* params_json, char** json_out) {
  return guarded([&] {
    if (!lab) fail(Errc::invalid_argument, "lab must not be null");
    SuiteParams params = suite_params_from_json(parse_or_empty(params_json));
    SuiteReport report = run_suite(lab->lab, params);
    emit(json_out, json_of(report, lab->lab));
  });
}

ml_status ml_lab_adaptedness(ml_lab* lab, const char* spec_json, const char* grid_json,
                             int depth, char** json_out) {
  return guarded([&] {
    if (!lab || !spec_json) fail(Errc::invalid_argument, "lab and spec_json must not be null");
    if (!lab->lab.exact())
      fail(Errc::invalid_argument, "adaptedness checks need an exact process");
    StoppingSpec spec = spec_from_json(Json::parse(spec_json));
    std::vector<Rational> grid;
    Json gj = parse_or_empty(grid_json);
    if (gj.is_array() && !gj.empty()) {
      for (const auto& t : gj) grid.push_back(rat_parse(t.get<std::string>()));
    } else {
      grid = default_time_grid(rat(50));
    }
    AdaptednessReport rep = adaptedness_check(spec, *lab->lab.process, grid, depth);
    Json j = json_of(rep, &*lab->lab.process, &spec);
    j["schema"] = kSchema;
    j["spec"] = json_of(spec);
    emit(json_out, j);
  });
}

ml_status ml_lab_finiteness(ml_lab* lab, const char* spec_json, int depth, char** json_out) {
  return guarded([&] {
    if (!lab || !spec_json) fail(Errc::invalid_argument, "lab and spec_json must not be null");
    if (!lab->lab.exact())
      fail(Errc::invalid_argument, "exact finiteness checks need an exact process");
    StoppingSpec spec = spec_from_json(Json::parse(spec_json));
    FinitenessCertificate cert = finiteness_check(spec, *lab->lab.process, depth);
    Json j = json_of(cert);
    j["schema"] = kSchema;
    j["spec"] = json_of(spec);
    emit(json_out, j);
  });
}

ml_status ml_lab_witness_gap(ml_lab* lab, const char* epsilon, long horizon, char** json_out) {
  return guarded([&] {
    if (!lab || !epsilon) fail(Errc::invalid_argument, "lab and epsilon must not be null");
    GapReport rep = witness_gap(lab->lab, rat_parse(epsilon), horizon);
    Json j = json_of(rep);
    j["schema"] = kSchema;
    emit(json_out, j);
  });
}

ml_status ml_lab_blowup_curve(ml_lab* lab, const long* m_list, size_t m_count, char** json_out) {
  return guarded([&] {
    if (!lab || !m_list || m_count == 0)
      fail(Errc::invalid_argument, "lab and a nonempty m_list are required");
    std::vector<long> ms(m_list, m_list + m_count);
    BlowupCurve curve = randomized_blowup_curve(lab->lab, ms);
    Json j = json_of(curve);
    j["schema"] = kSchema;
    emit(json_out, j);
  });
}

ml_status ml_lab_mc(ml_lab* lab, const char* query_json, char** json_out) {
  return guarded([&] {
    if (!lab || !query_json) fail(Errc::invalid_argument, "lab and query_json are required");
    Json q = Json::parse(query_json);
    std::string kind = q.at("kind").get<std::string>();
    std::size_t n = q.value("n", std::size_t{100000});
    std::uint64_t seed = q.value("seed", std::uint64_t{1});
    Json j;
    if (kind == "expectation") {
      RandomVariable rv = rv_from_json(lab->lab, q.at("rv"));
      int depth = q.value("depth", 100);
      Estimate est = estimate_expectation(*lab->lab.space, rv, depth, n, seed);
      j = json_of(est);
      j["rv"] = rv.name;
    } else if (kind == "stopped") {
      StoppingSpec spec = spec_from_json(q.at("spec"));
      StoppedEstimate est;
      if (lab->lab.walk) {
        long horizon = q.value("horizon", lab->lab.walk->horizon);
        est = estimate_stopped_walk(*lab->lab.walk, spec, n, horizon, seed);
      } else {
        long horizon = q.value("horizon", 1000L);
        int depth = q.value("depth", 200);
        est = estimate_stopped_exact(*lab->lab.process, spec, depth, n, horizon, seed);
      }
      j = json_of(est.value);
      j["stopped_value_mean"] = est.stopped_value_mean;
      j["stop_rate"] = est.stop_rate;
      j["spec"] = json_of(spec);
    } else if (kind == "reciprocal_u_abs") {
      double u_floor = q.value("u_floor", 1e-4);
      Estimate est = estimate_cherny_reciprocal_u_abs(n, u_floor, seed);
      j = json_of(est);
      j["rv"] = "|X_{1/U}| (continuous U, clamped)";
    } else {
      fail(Errc::parse, "unknown mc query kind '" + kind + "'");
    }
    j["schema"] = kSchema;
    emit(json_out, j);
  });
}

}  // extern "C"
