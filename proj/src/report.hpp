#pragma once

#include <json.hpp>

#include "analysis.hpp"
#include "montecarlo.hpp"

namespace martlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "mart-lab/1";

// Every numeric field is dual-rendered: exact "p/q" plus a decimal
// approximation for plotting.
Json json_of(const Rational& q);
Json json_of(const ExtTime& t);
Json json_of(const ExpectationResult& r);
Json json_of(const StoppingSpec& spec);
Json json_of(const StatementVerdict& v);
Json json_of(const FinitenessCertificate& cert);
Json json_of(const AdaptednessReport& rep, const PathProcess* process, const StoppingSpec* spec);
Json json_of(const GapReport& rep);
Json json_of(const BlowupCurve& curve);
Json json_of(const UIDiagnostic& diag);
Json json_of(const Estimate& est);
Json json_of(const SuiteReport& report, const Lab& lab);

std::string blowup_csv(const BlowupCurve& curve);

// Stopping specs round-trip through JSON; events carry explicit member ids.
StoppingSpec spec_from_json(const Json& j);

// Process spec files: an explicit finite space with per-atom paths, or a
// generative kernel declaration.
Json lab_to_json(const Lab& lab, int depth);
Lab lab_from_json(const Json& j);
Lab lab_from_file(const std::string& path);

// Enumeration report (atoms + weights + residual at a depth).
Json enumeration_json(const Lab& lab, int depth);

}  // namespace martlab
