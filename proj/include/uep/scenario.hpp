#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "uep/analysis.hpp"
#include "uep/mapping.hpp"
#include "uep/optimize.hpp"
#include "uep/sim.hpp"
#include "uep/types.hpp"

namespace uep {

// On-disk problem description: layered source, user classes, failure model,
// and optional solver inputs.  See README for the schema.
struct Scenario {
    LayeredSource source;
    std::vector<UserClass> classes;
    FailureModel model = RaptorModel{};
    std::optional<double> epsilon_max;
    std::optional<uint64_t> seed;
    std::vector<std::string> warnings;  // filled while parsing
};

// Throws DataError with "<origin>:<line>: ..." for syntax problems and
// "<origin>: <json pointer>: ..." for semantic ones.  A top-level
// "mapped_scenario" wrapper (as written by the map command) is unwrapped
// transparently.
Scenario parse_scenario(const std::string& text, const std::string& origin = "scenario");

// Reads the file (IoError when unreadable) and parses it.
Scenario load_scenario(const std::string& path);

nlohmann::json scenario_to_json(const Scenario& scenario);

// Result serializers.  Class and layer indices in all output are 1-based.
nlohmann::json guaranteed_solution_to_json(const GuaranteedSolution& solution);
nlohmann::json best_effort_to_json(const BestEffortSolution& solution);
nlohmann::json mapped_problem_to_json(const MappedProblem& problem, const Scenario& original);
nlohmann::json dropped_checks_to_json(const std::vector<DroppedCheck>& checks);
nlohmann::json epsilon_points_to_json(const std::vector<EpsilonPoint>& points);

}  // namespace uep
