#include "report.hpp"

#include <fstream>
#include <sstream>

#include "examples.hpp"

namespace martlab {

Json json_of(const Rational& q) {
  return Json{{"exact", rat_str(q)}, {"approx", rat_double(q)}};
}

Json json_of(const ExtTime& t) {
  if (t.infinite) return Json{{"exact", "inf"}, {"approx", nullptr}};
  return json_of(t.t);
}

Json json_of(const ExpectationResult& r) {
  Json j;
  if (const auto* e = std::get_if<ExactResult>(&r)) {
    j["kind"] = "exact";
    j["value"] = json_of(e->value);
  } else if (const auto* t = std::get_if<TruncatedResult>(&r)) {
    j["kind"] = "truncated";
    j["value"] = json_of(t->value);
    j["tail_bound"] = json_of(t->tail_bound);
  } else {
    const auto& c = std::get<DivergenceCertificate>(r);
    j["kind"] = "divergence_certificate";
    j["threshold"] = json_of(c.threshold);
    j["depth"] = c.depth;
    j["partial_sum"] = json_of(c.partial_sum);
    Json samples = Json::array();
    for (const auto& s : c.growth_samples)
      samples.push_back(Json{{"N", s.depth}, {"S", json_of(s.partial_sum)}});
    j["growth_samples"] = samples;
  }
  return j;
}

Json json_of(const StoppingSpec& spec) {
  using Op = StoppingSpec::Op;
  Json j;
  switch (spec.op) {
    case Op::constant:
      j["op"] = "const";
      j["t"] = spec.when.str();
      break;
    case Op::hit_above:
      j["op"] = "hit_above";
      j["level"] = rat_str(spec.level);
      if (spec.strict) j["strict"] = true;
      break;
    case Op::hit_abs_above:
      j["op"] = "hit_abs_above";
      j["level"] = rat_str(spec.level);
      break;
    case Op::hit_abs_below:
      j["op"] = "hit_abs_below";
      j["level"] = rat_str(spec.level);
      j["after"] = rat_str(spec.after);
      break;
    case Op::liminf_band:
      j["op"] = "liminf_band";
      j["tol"] = rat_str(spec.level);
      break;
    case Op::two_point:
      j["op"] = "two_point";
      j["s"] = rat_str(spec.s);
      j["t"] = rat_str(spec.t);
      j["event"] = Json{{"time", rat_str(spec.event->time)},
                        {"label", spec.event->label},
                        {"members", spec.event->member_ids}};
      break;
    case Op::min_of:
    case Op::max_of: {
      j["op"] = spec.op == Op::min_of ? "min" : "max";
      Json args = Json::array();
      for (const auto& a : spec.args) args.push_back(json_of(a));
      j["args"] = args;
      break;
    }
    case Op::reciprocal_u:
      j["op"] = "reciprocal_u";
      break;
  }
  return j;
}

StoppingSpec spec_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("op"))
    fail(Errc::parse, "stopping spec must be an object with an 'op'");
  std::string op = j.at("op").get<std::string>();
  try {
    if (op == "const") return StoppingSpec::constant(ext_parse(j.at("t").get<std::string>()));
    if (op == "hit_above")
      return StoppingSpec::hit_above(rat_parse(j.at("level").get<std::string>()),
                                     j.value("strict", false));
    if (op == "hit_abs_above")
      return StoppingSpec::hit_abs_above(rat_parse(j.at("level").get<std::string>()));
    if (op == "hit_abs_below")
      return StoppingSpec::hit_abs_below(rat_parse(j.at("level").get<std::string>()),
                                         rat_parse(j.at("after").get<std::string>()));
    if (op == "liminf_band")
      return StoppingSpec::liminf_band(rat_parse(j.at("tol").get<std::string>()));
    if (op == "two_point") {
      const Json& ev = j.at("event");
      auto event = std::make_shared<ObsEvent>();
      event->time = rat_parse(ev.at("time").get<std::string>());
      event->label = ev.value("label", std::string("event"));
      for (const auto& id : ev.at("members")) event->member_ids.insert(id.get<std::uint64_t>());
      return StoppingSpec::two_point(std::move(event),
                                     rat_parse(j.at("s").get<std::string>()),
                                     rat_parse(j.at("t").get<std::string>()));
    }
    if (op == "min" || op == "max") {
      std::vector<StoppingSpec> args;
      for (const auto& a : j.at("args")) args.push_back(spec_from_json(a));
      return op == "min" ? StoppingSpec::min_of(std::move(args))
                         : StoppingSpec::max_of(std::move(args));
    }
    if (op == "reciprocal_u") return StoppingSpec::reciprocal_u();
  } catch (const Json::exception& e) {
    fail(Errc::parse, std::string("bad stopping spec: ") + e.what());
  }
  fail(Errc::parse, "unknown stopping op '" + op + "'");
}

Json json_of(const StatementVerdict& v) {
  Json j;
  j["statement"] = statement_name(v.statement);
  j["verdict"] = verdict_name(v.verdict);
  j["suite"] = v.suite;
  if (v.witness) {
    Json w;
    if (v.witness->spec) w["spec"] = json_of(*v.witness->spec);
    if (v.witness->time) w["time"] = json_of(*v.witness->time);
    if (v.witness->lhs) w["value"] = json_of(*v.witness->lhs);
    if (v.witness->rhs) w["reference"] = json_of(*v.witness->rhs);
    if (!v.witness->note.empty()) w["note"] = v.witness->note;
    j["witness"] = w;
  }
  return j;
}

Json json_of(const FinitenessCertificate& cert) {
  Json j;
  switch (cert.level) {
    case FinitenessCertificate::Level::bounded:
      j["level"] = "bounded";
      j["bound"] = json_of(cert.bound);
      break;
    case FinitenessCertificate::Level::exact_finite:
      j["level"] = "exact_finite";
      break;
    case FinitenessCertificate::Level::exact_not_finite:
      j["level"] = "exact_not_finite";
      j["mass_at_infinity"] = Json{{"lo", json_of(cert.mass_at_infinity.lo)},
                                   {"hi", json_of(cert.mass_at_infinity.hi)}};
      break;
    case FinitenessCertificate::Level::horizon_limited:
      j["level"] = "horizon_limited";
      j["p_within_horizon"] = json_of(cert.p_within_horizon);
      j["horizon"] = cert.horizon;
      break;
  }
  j["working_depth"] = cert.working_depth;
  return j;
}

Json json_of(const AdaptednessReport& rep, const PathProcess* process, const StoppingSpec* spec) {
  Json j;
  j["verdict"] = rep.adapted ? "adapted" : "not_adapted";
  j["working_depth"] = rep.working_depth;
  j["pairs_checked"] = rep.pairs_checked;
  if (rep.witness) {
    Json w;
    w["atom_a"] = rep.witness->a.label;
    w["atom_b"] = rep.witness->b.label;
    w["atom_a_id"] = rep.witness->a.id;
    w["atom_b_id"] = rep.witness->b.id;
    w["time"] = json_of(rep.witness->time);
    if (process && spec) w["replays"] = replay_witness(*spec, *process, *rep.witness);
    j["witness"] = w;
  }
  return j;
}

Json json_of(const GapReport& rep) {
  Json j;
  j["epsilon"] = json_of(rep.epsilon);
  j["horizon"] = rep.horizon;
  j["sigma1"] = json_of(rep.sigma1);
  j["sigma2"] = json_of(rep.sigma2);
  j["tau"] = json_of(rep.tau);
  j["E_M_tau"] = json_of(rep.e_tau);
  j["E_M_sigma2"] = json_of(rep.e_sigma2);
  j["excursion_prob"] = json_of(rep.excursion_prob);
  j["band_visit_prob"] = json_of(rep.band_visit_prob);
  j["gap_lower"] = json_of(rep.gap_lower);
  j["success"] = rep.success;
  return j;
}

Json json_of(const BlowupCurve& curve) {
  Json j;
  Json pts = Json::array();
  for (const auto& p : curve.points) {
    double lm = std::log(static_cast<double>(p.m));
    pts.push_back(Json{{"m", p.m}, {"value", json_of(p.value)}, {"ln_m", lm}});
  }
  j["points"] = pts;
  j["slope_vs_ln_m"] = curve.slope_vs_log;
  return j;
}

std::string blowup_csv(const BlowupCurve& curve) {
  std::ostringstream os;
  os << "m,value,value_approx,ln_m,slope_vs_ln_m\n";
  for (const auto& p : curve.points) {
    os << p.m << "," << rat_str(p.value) << "," << rat_double(p.value) << ","
       << std::log(static_cast<double>(p.m)) << "," << curve.slope_vs_log << "\n";
  }
  return os.str();
}

Json json_of(const UIDiagnostic& diag) {
  Json j;
  Json entries = Json::array();
  for (const auto& e : diag.entries) {
    Json row;
    row["K"] = json_of(e.K);
    row["sup_on_grid"] = json_of(e.sup_on_grid);
    row["diverges_in_t"] = e.diverges_in_t;
    if (e.certificate) row["certificate"] = json_of(ExpectationResult{*e.certificate});
    entries.push_back(row);
  }
  j["entries"] = entries;
  j["verdict"] = diag.outcome == UIDiagnostic::Outcome::not_ui_certified
                     ? "not_ui_certified"
                     : "uniformly_integrable_on_grid";
  return j;
}

Json json_of(const Estimate& est) {
  return Json{{"mean", est.mean},
              {"half_width", est.half_width},
              {"n", est.n},
              {"seed", est.seed}};
}

Json json_of(const SuiteReport& report, const Lab& lab) {
  Json j;
  j["schema"] = kSchema;
  j["example"] = lab.example;
  Json verdicts = Json::array();
  for (const auto& [stmt, v] : report.verdicts) verdicts.push_back(json_of(v));
  j["verdicts"] = verdicts;
  if (!report.expected.empty()) {
    Json exp = Json::array();
    for (const auto& [stmt, v] : report.expected)
      exp.push_back(Json{{"statement", statement_name(stmt)}, {"verdict", verdict_name(v)}});
    j["expected"] = exp;
    j["matches_expected"] = report.matches_expected;
  }
  j["hierarchy_consistent"] = report.hierarchy_consistent;
  return j;
}

// ---------------------------------------------------------------------------
// Process spec files

Json lab_to_json(const Lab& lab, int depth) {
  Json j;
  j["schema"] = kSchema;
  if (is_example_name(lab.example)) {
    // named examples reconstruct from their descriptor; the enumeration
    // prefix is included for inspection only
    Json params{{"levels", lab.levels > 0 ? lab.levels : 1}};
    if (lab.walk) params["horizon"] = lab.walk->horizon;
    if (lab.randomized()) params["eta"] = rat_str(lab.eta);
    j["example"] = Json{{"name", lab.example}, {"params", params}};
  }
  if (!lab.exact()) {
    j["generative"] = Json{{"kernel", "simple_random_walk"},
                           {"horizon", lab.walk->horizon},
                           {"start", lab.walk->start}};
    return j;
  }
  const PathProcess& p = *lab.process;
  Json atoms = Json::array();
  lab.base_space->scan(depth, [&](const Atom& a, const Rational& w, int) {
    PiecewiseConstantPath path = p.path_of(a);
    Json jumps = Json::array();
    for (const auto& [t, v] : path.jumps) jumps.push_back(Json::array({rat_str(t), rat_str(v)}));
    atoms.push_back(Json{{"id", a.id},
                         {"label", a.label},
                         {"weight", rat_str(w)},
                         {"initial", rat_str(path.initial)},
                         {"jumps", jumps}});
    return true;
  });
  j["space"] = Json{{"atoms", atoms}};
  Rational res = lab.base_space->residual(depth);
  j["space"]["residual"] = rat_str(res);
  if (lab.randomized()) {
    j["uniform"] = Json{{"levels", lab.levels}, {"eta", rat_str(lab.eta)}};
  }
  return j;
}

Lab lab_from_json(const Json& j) {
  try {
    if (j.contains("example")) {
      const Json& e = j.at("example");
      ExampleParams params;
      const Json& p = e.value("params", Json::object());
      params.levels = p.value("levels", params.levels);
      params.horizon = p.value("horizon", params.horizon);
      if (p.contains("eta")) params.eta = rat_parse(p.at("eta").get<std::string>());
      return build_example(e.at("name").get<std::string>(), params);
    }
    if (j.contains("generative")) {
      const Json& g = j.at("generative");
      std::string kernel = g.at("kernel").get<std::string>();
      if (kernel != "simple_random_walk")
        fail(Errc::parse, "unknown kernel '" + kernel + "'");
      if (g.value("start", 0) != 0)
        fail(Errc::parse, "the walk kernel starts at 0 (re-center levels instead)");
      Lab lab;
      lab.example = "custom";
      lab.walk = GenerativeWalk{g.at("horizon").get<long>(), 0};
      return lab;
    }
    const Json& sp = j.at("space");
    if (sp.contains("residual") && rat_parse(sp.at("residual").get<std::string>()) != 0)
      fail(Errc::parse, "explicit spaces must have residual 0 (use named examples otherwise)");

    std::vector<WeightedAtom> atoms;
    auto paths = std::make_shared<std::map<std::uint64_t, PiecewiseConstantPath>>();
    for (const auto& aj : sp.at("atoms")) {
      WeightedAtom wa;
      wa.atom.id = aj.at("id").get<std::uint64_t>();
      wa.atom.label = aj.value("label", "atom#" + std::to_string(wa.atom.id));
      wa.weight = rat_parse(aj.at("weight").get<std::string>());
      PiecewiseConstantPath path;
      path.initial = rat_parse(aj.value("initial", std::string("0")));
      for (const auto& jump : aj.at("jumps")) {
        if (!jump.is_array() || jump.size() != 2) fail(Errc::parse, "jump must be [time, value]");
        path.jumps.emplace_back(rat_parse(jump[0].get<std::string>()),
                                rat_parse(jump[1].get<std::string>()));
      }
      path.validate();
      (*paths)[wa.atom.id] = std::move(path);
      atoms.push_back(std::move(wa));
    }
    auto space = std::make_shared<FiniteSpace>("custom", std::move(atoms));

    PathProcess proc;
    proc.space = space;
    proc.name = "custom";
    proc.terminating = true;
    proc.path_of = [paths](const Atom& a) {
      auto it = paths->find(a.base_id);
      if (it == paths->end()) fail(Errc::invalid_argument, "no path for atom");
      return it->second;
    };

    Lab lab;
    lab.example = "custom";
    lab.base_space = space;
    if (j.contains("uniform")) {
      int levels = j.at("uniform").at("levels").get<int>();
      Rational eta = rat_parse(j.at("uniform").value("eta", std::string("0")));
      auto [ext, rebound] = extend_with_uniform(proc, eta, levels);
      lab.space = ext;
      lab.process = std::move(rebound);
      lab.levels = levels;
      lab.eta = eta;
    } else {
      lab.space = space;
      lab.process = std::move(proc);
    }
    return lab;
  } catch (const Json::exception& e) {
    fail(Errc::parse, std::string("bad process spec: ") + e.what());
  }
}

Lab lab_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::invalid_argument, "cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    fail(Errc::parse, std::string("bad JSON in '") + path + "': " + e.what());
  }
  return lab_from_json(j);
}

Json enumeration_json(const Lab& lab, int depth) {
  if (!lab.exact()) fail(Errc::invalid_argument, "generative processes have no enumeration");
  Json j;
  j["schema"] = kSchema;
  j["depth"] = depth;
  Json atoms = Json::array();
  lab.space->scan(depth, [&](const Atom& a, const Rational& w, int d) {
    atoms.push_back(Json{{"id", a.id}, {"label", a.label}, {"weight", rat_str(w)}, {"depth", d}});
    return true;
  });
  j["atoms"] = atoms;
  j["residual"] = rat_str(lab.space->residual(depth));
  return j;
}

}  // namespace martlab
