#pragma once

#include "napkin/config.hpp"
#include "napkin/estimators.hpp"
#include "napkin/verma.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace napkin {

// Treatment selector of cmd_estimate: "0", "1" or "ate".
enum class TreatmentTarget { zero, one, ate };
TreatmentTarget parse_x0(const std::string& text);

// Runs every configured estimator for the requested target.
std::vector<EstimateResult> run_configured(const Dataset& data, const RunConfig& config, TreatmentTarget target);

std::string result_json(const EstimateResult& result);
std::string verma_json(const VermaReport& report);

// Probe list "0,1" (fixed levels) or "0.1:0.2,0.2:0.25" (uniform windows).
std::vector<WeightSpec> parse_probes(const std::string& text);

// Entry point of the napkin executable; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace napkin
