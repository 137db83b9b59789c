// mart-lab: batch front end for the martingale verification laboratory.
// Builds the canonical examples, runs statement checks, and emits exact
// certificates and growth curves. Everything goes through the public C API.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "martlab/martlab.h"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerdictMismatch = 2;
constexpr int kExitIndeterminate = 3;
constexpr int kExitInapplicable = 4;

struct LabHandle {
  ml_lab* lab = nullptr;
  ~LabHandle() {
    if (lab) ml_lab_close(lab);
  }
};

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() {
    if (s) ml_string_free(s);
  }
};

int exit_code_for(ml_status status) {
  switch (status) {
    case ML_OK:
      return kExitOk;
    case ML_ERR_INDETERMINATE_TAIL:
      return kExitIndeterminate;
    case ML_ERR_PRECONDITION_FAILED:
    case ML_ERR_NOT_APPLICABLE:
      return kExitInapplicable;
    default:
      return kExitUsage;
  }
}

int report_error(ml_status status) {
  std::cerr << "mart-lab: error: " << ml_last_error() << "\n";
  return exit_code_for(status);
}

// Atomic output: write the sibling temp file, then rename over the target.
bool write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content << "\n";
    return true;
  }
  std::string tmp = out_path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      std::cerr << "mart-lab: cannot write '" << tmp << "'\n";
      return false;
    }
    f << content << "\n";
  }
  if (std::rename(tmp.c_str(), out_path.c_str()) != 0) {
    std::cerr << "mart-lab: cannot rename '" << tmp << "' to '" << out_path << "'\n";
    return false;
  }
  return true;
}

struct CommonOpts {
  std::string example;
  std::string spec_file;
  int depth = 50;
  int levels = 1000;
  long horizon = 1000;
  std::string eta = "0";
  std::string out;
  std::string format = "json";
  std::string config_file;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_source = true) {
  if (with_source) {
    cmd->add_option("--example", o.example, "named example to load");
    cmd->add_option("--spec-file", o.spec_file, "process spec file (JSON)");
  }
  cmd->add_option("--depth", o.depth, "enumeration depth for exact checks");
  cmd->add_option("--levels", o.levels, "uniform levels m for randomized spaces");
  cmd->add_option("--horizon", o.horizon, "generative horizon H");
  cmd->add_option("--eta", o.eta, "U reveal time (rational)");
  cmd->add_option("--out", o.out, "output file (default stdout)");
  cmd->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--config", o.config_file, "JSON config file (flags take precedence)");
}

// flags > config file > defaults; environment is never consulted
void apply_config(const CLI::App* cmd, CommonOpts& o) {
  if (o.config_file.empty()) return;
  std::ifstream f(o.config_file);
  if (!f) throw CLI::ValidationError("--config", "cannot open '" + o.config_file + "'");
  Json cfg = Json::parse(f, nullptr, true, true);
  auto maybe = [&](const char* flag, auto& slot) {
    using T = std::decay_t<decltype(slot)>;
    if (cmd->count(flag) == 0 && cfg.contains(flag + 2))  // strip "--"
      slot = cfg.at(flag + 2).get<T>();
  };
  maybe("--example", o.example);
  maybe("--spec-file", o.spec_file);
  maybe("--depth", o.depth);
  maybe("--levels", o.levels);
  maybe("--horizon", o.horizon);
  maybe("--eta", o.eta);
  maybe("--out", o.out);
  maybe("--format", o.format);
}

ml_status open_lab(const CommonOpts& o, LabHandle& h, const std::string& default_example = "") {
  Json params{{"depth", o.depth}, {"levels", o.levels}, {"horizon", o.horizon}, {"eta", o.eta}};
  if (!o.spec_file.empty()) return ml_lab_open_file(o.spec_file.c_str(), &h.lab);
  std::string name = o.example.empty() ? default_example : o.example;
  if (name.empty()) {
    std::cerr << "mart-lab: --example or --spec-file is required\n";
    return ML_ERR_INVALID_ARGUMENT;
  }
  return ml_lab_open_example(name.c_str(), params.dump().c_str(), &h.lab);
}

std::string load_stopping_json(const std::string& inline_json, const std::string& file) {
  if (!inline_json.empty()) return inline_json;
  if (file.empty()) return {};
  std::ifstream f(file);
  if (!f) throw CLI::ValidationError("--stopping-file", "cannot open '" + file + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mart-lab: exact verification of the martingale statement hierarchy"};
  app.require_subcommand(1);

  // ---- example: run the expected-properties suite -------------------------
  CommonOpts ex_opts;
  std::string ex_name;
  std::string ex_grid;
  std::size_t ex_max_specs = 1500;
  auto* ex = app.add_subcommand("example", "run the statement suite for a named example");
  ex->add_option("name", ex_name, "example name")->required();
  add_common(ex, ex_opts, /*with_source=*/false);
  ex->add_option("--grid", ex_grid,
                 "statement-V grid maximum (rational); defaults to --depth");
  ex->add_option("--max-specs", ex_max_specs, "stopping-family size cap");

  // ---- expect: expectation queries and curves ------------------------------
  CommonOpts expect_opts;
  std::string expect_rv = "value-at";
  std::string expect_t = "0";
  std::string expect_K = "1";
  std::string expect_threshold = "1000000";
  int expect_max_depth = 10000;
  bool expect_stop_at_threshold = false;
  std::string expect_spec_json, expect_spec_file;
  std::string expect_levels_list;
  auto* expect = app.add_subcommand("expect", "exact expectation of a path functional");
  add_common(expect, expect_opts);
  expect->add_option("--rv", expect_rv,
                     "value-at | abs-value-at | trunc-abs-at | abs-limit | stopped | "
                     "abs-stopped | blowup");
  expect->add_option("--t", expect_t, "time for value-at / abs-value-at / trunc-abs-at");
  expect->add_option("--K", expect_K, "truncation level for trunc-abs-at");
  expect->add_option("--threshold", expect_threshold, "divergence threshold (rational)");
  expect->add_option("--max-depth", expect_max_depth, "enumeration budget");
  expect->add_flag("--stop-at-threshold", expect_stop_at_threshold,
                   "stop as soon as the threshold is crossed");
  expect->add_option("--stopping-json", expect_spec_json, "stopping spec (inline JSON)");
  expect->add_option("--stopping-file", expect_spec_file, "stopping spec file");
  expect->add_option("--levels-list", expect_levels_list,
                     "comma-separated m values for the blow-up curve");

  // ---- witness: excursion-gap construction ---------------------------------
  CommonOpts wit_opts;
  std::string wit_eps = "2/5";
  auto* wit = app.add_subcommand("witness", "sigma_1/sigma_2 witness-gap construction");
  add_common(wit, wit_opts);
  wit->add_option("--epsilon", wit_eps, "excursion level (rational in (0,1))");

  // ---- adapted: adaptedness report ----------------------------------------
  CommonOpts ad_opts;
  std::string ad_spec_json, ad_spec_file, ad_grid = "50";
  auto* ad = app.add_subcommand("adapted", "observational adaptedness check");
  add_common(ad, ad_opts);
  ad->add_option("--stopping-json", ad_spec_json, "stopping spec (inline JSON)");
  ad->add_option("--stopping-file", ad_spec_file, "stopping spec file");
  ad->add_option("--grid", ad_grid, "grid maximum (rational)");

  // ---- enumerate ------------------------------------------------------------
  CommonOpts en_opts;
  auto* en = app.add_subcommand("enumerate", "atoms, weights and residual at a depth");
  add_common(en, en_opts);

  // ---- mc: Monte Carlo cross-checks ----------------------------------------
  CommonOpts mc_opts;
  std::string mc_kind = "expectation";
  std::string mc_rv = "value-at";
  std::string mc_t = "10";
  std::string mc_spec_json, mc_spec_file;
  std::size_t mc_reps = 100000;
  std::uint64_t mc_seed = 1;
  double mc_u_floor = 1e-4;
  auto* mc = app.add_subcommand("mc", "sampling cross-check of the exact engine");
  add_common(mc, mc_opts);
  mc->add_option("--kind", mc_kind, "expectation | stopped | reciprocal-u-abs");
  mc->add_option("--rv", mc_rv, "value-at | abs-value-at (for kind=expectation)");
  mc->add_option("--t", mc_t, "time for the rv");
  mc->add_option("--stopping-json", mc_spec_json, "stopping spec (kind=stopped)");
  mc->add_option("--stopping-file", mc_spec_file, "stopping spec file");
  mc->add_option("--reps", mc_reps, "replication count");
  mc->add_option("--seed", mc_seed, "RNG seed");
  mc->add_option("--u-floor", mc_u_floor, "U clamp for reciprocal-u-abs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ex->parsed()) {
      ex_opts.example = ex_name;
      apply_config(ex, ex_opts);
      LabHandle h;
      if (ml_status st = open_lab(ex_opts, h); st != ML_OK) return report_error(st);
      if (ex_grid.empty()) ex_grid = std::to_string(ex_opts.depth);
      Json params{{"grid_max", ex_grid}, {"max_specs", ex_max_specs}};
      OwnedString out;
      if (ml_status st = ml_lab_run_suite(h.lab, params.dump().c_str(), &out.s); st != ML_OK)
        return report_error(st);
      if (!write_output(ex_opts.out, out.s)) return kExitUsage;
      Json rep = Json::parse(out.s);
      bool ok = rep.value("matches_expected", true) && rep.value("hierarchy_consistent", false);
      return ok ? kExitOk : kExitVerdictMismatch;
    }

    if (expect->parsed()) {
      apply_config(expect, expect_opts);
      LabHandle h;
      if (ml_status st = open_lab(expect_opts, h); st != ML_OK) return report_error(st);

      if (expect_rv == "blowup") {
        std::vector<long> ms;
        std::stringstream ss(expect_levels_list);
        for (std::string tok; std::getline(ss, tok, ',');)
          if (!tok.empty()) ms.push_back(std::stol(tok));
        if (ms.empty()) {
          std::cerr << "mart-lab: --levels-list is required for --rv blowup\n";
          return kExitUsage;
        }
        OwnedString out;
        if (ml_status st = ml_lab_blowup_curve(h.lab, ms.data(), ms.size(), &out.s);
            st != ML_OK)
          return report_error(st);
        if (expect_opts.format == "csv") {
          Json j = Json::parse(out.s);
          std::ostringstream csv;
          csv << "m,value,value_approx,ln_m,slope_vs_ln_m\n";
          for (const auto& p : j.at("points"))
            csv << p.at("m").get<long>() << "," << p.at("value").at("exact").get<std::string>()
                << "," << p.at("value").at("approx").get<double>() << ","
                << p.at("ln_m").get<double>() << "," << j.at("slope_vs_ln_m").get<double>()
                << "\n";
          if (!write_output(expect_opts.out, csv.str())) return kExitUsage;
        } else {
          if (!write_output(expect_opts.out, out.s)) return kExitUsage;
        }
        return kExitOk;
      }

      Json rv;
      if (expect_rv == "value-at")
        rv = Json{{"kind", "value_at"}, {"t", expect_t}};
      else if (expect_rv == "abs-value-at")
        rv = Json{{"kind", "abs_value_at"}, {"t", expect_t}};
      else if (expect_rv == "trunc-abs-at")
        rv = Json{{"kind", "trunc_abs_at"}, {"t", expect_t}, {"K", expect_K}};
      else if (expect_rv == "abs-limit")
        rv = Json{{"kind", "abs_limit"}};
      else if (expect_rv == "stopped" || expect_rv == "abs-stopped") {
        std::string spec = load_stopping_json(expect_spec_json, expect_spec_file);
        if (spec.empty()) {
          std::cerr << "mart-lab: --stopping-json or --stopping-file is required\n";
          return kExitUsage;
        }
        rv = Json{{"kind", "stopped"},
                  {"spec", Json::parse(spec)},
                  {"absolute", expect_rv == "abs-stopped"}};
      } else {
        std::cerr << "mart-lab: unknown --rv '" << expect_rv << "'\n";
        return kExitUsage;
      }
      Json policy{{"max_depth", expect_max_depth},
                  {"threshold", expect_threshold},
                  {"stop_at_threshold", expect_stop_at_threshold}};
      OwnedString out;
      if (ml_status st =
              ml_lab_expectation(h.lab, rv.dump().c_str(), policy.dump().c_str(), &out.s);
          st != ML_OK)
        return report_error(st);
      if (expect_opts.format == "csv") {
        Json j = Json::parse(out.s);
        std::ostringstream csv;
        if (j.at("kind") == "divergence_certificate") {
          csv << "N,S,S_approx\n";
          for (const auto& s : j.at("growth_samples"))
            csv << s.at("N").get<long>() << "," << s.at("S").at("exact").get<std::string>()
                << "," << s.at("S").at("approx").get<double>() << "\n";
        } else {
          csv << "kind,value,value_approx,tail_bound\n";
          csv << j.at("kind").get<std::string>() << ","
              << j.at("value").at("exact").get<std::string>() << ","
              << j.at("value").at("approx").get<double>() << ","
              << (j.contains("tail_bound") ? j.at("tail_bound").at("exact").get<std::string>()
                                           : std::string("0"))
              << "\n";
        }
        if (!write_output(expect_opts.out, csv.str())) return kExitUsage;
      } else {
        if (!write_output(expect_opts.out, out.s)) return kExitUsage;
      }
      return kExitOk;
    }

    if (wit->parsed()) {
      apply_config(wit, wit_opts);
      LabHandle h;
      if (ml_status st = open_lab(wit_opts, h, "random_walk"); st != ML_OK)
        return report_error(st);
      OwnedString out;
      if (ml_status st = ml_lab_witness_gap(h.lab, wit_eps.c_str(), wit_opts.horizon, &out.s);
          st != ML_OK)
        return report_error(st);
      if (!write_output(wit_opts.out, out.s)) return kExitUsage;
      return kExitOk;
    }

    if (ad->parsed()) {
      apply_config(ad, ad_opts);
      LabHandle h;
      if (ml_status st = open_lab(ad_opts, h); st != ML_OK) return report_error(st);
      std::string spec = load_stopping_json(ad_spec_json, ad_spec_file);
      if (spec.empty()) {
        std::cerr << "mart-lab: --stopping-json or --stopping-file is required\n";
        return kExitUsage;
      }
      Json grid = Json::array();
      // integers and midpoints up to --grid
      double gmax = std::stod(ad_grid);
      for (long k = 0; k <= static_cast<long>(gmax); ++k) {
        grid.push_back(std::to_string(k));
        grid.push_back(std::to_string(2 * k + 1) + "/2");
      }
      OwnedString out;
      if (ml_status st = ml_lab_adaptedness(h.lab, spec.c_str(), grid.dump().c_str(),
                                            ad_opts.depth, &out.s);
          st != ML_OK)
        return report_error(st);
      if (!write_output(ad_opts.out, out.s)) return kExitUsage;
      return kExitOk;
    }

    if (en->parsed()) {
      apply_config(en, en_opts);
      LabHandle h;
      if (ml_status st = open_lab(en_opts, h); st != ML_OK) return report_error(st);
      OwnedString out;
      if (ml_status st = ml_lab_enumerate(h.lab, en_opts.depth, &out.s); st != ML_OK)
        return report_error(st);
      if (!write_output(en_opts.out, out.s)) return kExitUsage;
      return kExitOk;
    }

    if (mc->parsed()) {
      apply_config(mc, mc_opts);
      LabHandle h;
      if (ml_status st = open_lab(mc_opts, h); st != ML_OK) return report_error(st);
      Json q;
      if (mc_kind == "expectation") {
        Json rv;
        if (mc_rv == "value-at")
          rv = Json{{"kind", "value_at"}, {"t", mc_t}};
        else if (mc_rv == "abs-value-at")
          rv = Json{{"kind", "abs_value_at"}, {"t", mc_t}};
        else {
          std::cerr << "mart-lab: unsupported --rv for mc\n";
          return kExitUsage;
        }
        q = Json{{"kind", "expectation"},
                 {"rv", rv},
                 {"depth", mc_opts.depth},
                 {"n", mc_reps},
                 {"seed", mc_seed}};
      } else if (mc_kind == "stopped") {
        std::string spec = load_stopping_json(mc_spec_json, mc_spec_file);
        if (spec.empty()) {
          std::cerr << "mart-lab: --stopping-json or --stopping-file is required\n";
          return kExitUsage;
        }
        q = Json{{"kind", "stopped"},
                 {"spec", Json::parse(spec)},
                 {"horizon", mc_opts.horizon},
                 {"n", mc_reps},
                 {"seed", mc_seed}};
      } else if (mc_kind == "reciprocal-u-abs") {
        q = Json{{"kind", "reciprocal_u_abs"},
                 {"u_floor", mc_u_floor},
                 {"n", mc_reps},
                 {"seed", mc_seed}};
      } else {
        std::cerr << "mart-lab: unknown --kind '" << mc_kind << "'\n";
        return kExitUsage;
      }
      OwnedString out;
      if (ml_status st = ml_lab_mc(h.lab, q.dump().c_str(), &out.s); st != ML_OK)
        return report_error(st);
      if (!write_output(mc_opts.out, out.s)) return kExitUsage;
      return kExitOk;
    }
  } catch (const Json::exception& e) {
    std::cerr << "mart-lab: bad JSON: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "mart-lab: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
