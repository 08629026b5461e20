#include "uep/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "uep/errors.hpp"

namespace uep {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& ptr, const std::string& msg) {
    throw DataError(origin + ": " + (ptr.empty() ? "/" : ptr) + ": " + msg);
}

const json& need(const json& j, const char* key, const std::string& origin,
                 const std::string& ptr) {
    if (!j.is_object()) fail(origin, ptr, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(origin, ptr + "/" + key, "missing");
    return *it;
}

double as_number(const json& j, const std::string& origin, const std::string& ptr) {
    if (!j.is_number()) fail(origin, ptr, "expected a number");
    return j.get<double>();
}

long long as_positive_int(const json& j, const std::string& origin, const std::string& ptr) {
    if (!j.is_number_integer()) fail(origin, ptr, "expected an integer");
    long long v = j.get<long long>();
    if (v <= 0) fail(origin, ptr, "expected a positive integer");
    return v;
}

DegreeDistribution parse_distribution(const json& j, const std::string& origin,
                                      const std::string& ptr) {
    const json& type = need(j, "type", origin, ptr);
    if (!type.is_string()) fail(origin, ptr + "/type", "expected a string");
    std::string kind = type.get<std::string>();
    if (kind == "omega_r") return omega_r();
    if (kind == "rsd") {
        auto k = as_positive_int(need(j, "k", origin, ptr), origin, ptr + "/k");
        double delta = as_number(need(j, "delta", origin, ptr), origin, ptr + "/delta");
        double c = as_number(need(j, "c", origin, ptr), origin, ptr + "/c");
        if (delta <= 0.0 || delta >= 1.0) fail(origin, ptr + "/delta", "expected a value in (0, 1)");
        if (c <= 0.0) fail(origin, ptr + "/c", "expected a positive value");
        return robust_soliton(static_cast<uint32_t>(k), delta, c);
    }
    if (kind == "custom") {
        const json& entries = need(j, "entries", origin, ptr);
        if (!entries.is_array() || entries.empty())
            fail(origin, ptr + "/entries", "expected a nonempty array of [degree, probability]");
        std::vector<DegreeDistribution::Entry> parsed;
        for (size_t i = 0; i < entries.size(); ++i) {
            std::string eptr = ptr + "/entries/" + std::to_string(i);
            const json& e = entries[i];
            if (!e.is_array() || e.size() != 2) fail(origin, eptr, "expected [degree, probability]");
            auto d = as_positive_int(e[0], origin, eptr + "/0");
            double p = as_number(e[1], origin, eptr + "/1");
            parsed.push_back({static_cast<uint32_t>(d), p});
        }
        return DegreeDistribution(parsed);
    }
    fail(origin, ptr + "/type", "unknown distribution type '" + kind + "'");
}

FailureModel parse_model(const json& j, const std::string& origin, const std::string& ptr) {
    const json& type = need(j, "type", origin, ptr);
    if (!type.is_string()) fail(origin, ptr + "/type", "expected a string");
    std::string kind = type.get<std::string>();
    if (kind == "raptor") {
        RaptorModel model;
        if (j.contains("a")) model.a = as_number(j["a"], origin, ptr + "/a");
        if (j.contains("b")) model.b = as_number(j["b"], origin, ptr + "/b");
        if (model.a <= 0.0 || model.a > 1.0) fail(origin, ptr + "/a", "expected a value in (0, 1]");
        if (model.b <= 0.0 || model.b >= 1.0) fail(origin, ptr + "/b", "expected a value in (0, 1)");
        return model;
    }
    if (kind == "andor") {
        AndOrModel model;
        if (j.contains("iterations")) {
            auto n = as_positive_int(j["iterations"], origin, ptr + "/iterations");
            model.max_iterations = static_cast<uint32_t>(n);
        }
        bool single = j.contains("distribution");
        bool multi = j.contains("distributions");
        if (single == multi)
            fail(origin, ptr, "expected exactly one of 'distribution' or 'distributions'");
        if (single) {
            model.distributions.push_back(
                parse_distribution(j["distribution"], origin, ptr + "/distribution"));
        } else {
            const json& arr = j["distributions"];
            if (!arr.is_array() || arr.empty())
                fail(origin, ptr + "/distributions", "expected a nonempty array");
            for (size_t i = 0; i < arr.size(); ++i)
                model.distributions.push_back(parse_distribution(
                    arr[i], origin, ptr + "/distributions/" + std::to_string(i)));
        }
        return model;
    }
    fail(origin, ptr + "/type", "unknown model type '" + kind + "'");
}

json distribution_to_json(const DegreeDistribution& dist) {
    json entries = json::array();
    for (const auto& e : dist.entries()) entries.push_back({e.degree, e.probability});
    return {{"type", "custom"}, {"entries", entries}};
}

json model_to_json(const FailureModel& model) {
    if (const auto* raptor = std::get_if<RaptorModel>(&model))
        return {{"type", "raptor"}, {"a", raptor->a}, {"b", raptor->b}};
    const auto& andor = std::get<AndOrModel>(model);
    json out = {{"type", "andor"}, {"iterations", andor.max_iterations}};
    if (andor.distributions.size() == 1) {
        out["distribution"] = distribution_to_json(andor.distributions[0]);
    } else {
        json arr = json::array();
        for (const auto& d : andor.distributions) arr.push_back(distribution_to_json(d));
        out["distributions"] = arr;
    }
    return out;
}

Scenario parse_scenario_object(const json& root, const std::string& origin,
                               const std::string& base) {
    Scenario scenario;

    static const char* known[] = {"source",      "classes", "model", "weights",
                                  "epsilon_max", "seed",    "name",  "description"};
    for (auto it = root.begin(); it != root.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok)
            scenario.warnings.push_back("unknown key '" + it.key() + "' ignored");
    }

    const json& source = need(root, "source", origin, base);
    const json& layers = need(source, "layers", origin, base + "/source");
    if (!layers.is_array() || layers.empty())
        fail(origin, base + "/source/layers", "expected a nonempty array");
    double prev_psnr = -std::numeric_limits<double>::infinity();
    for (size_t l = 0; l < layers.size(); ++l) {
        std::string lptr = base + "/source/layers/" + std::to_string(l);
        SourceLayer layer;
        layer.symbols = as_positive_int(need(layers[l], "symbols", origin, lptr), origin,
                                        lptr + "/symbols");
        layer.psnr = as_number(need(layers[l], "psnr", origin, lptr), origin, lptr + "/psnr");
        if (layer.psnr <= prev_psnr)
            fail(origin, lptr + "/psnr", "layer quality must be strictly increasing");
        prev_psnr = layer.psnr;
        scenario.source.layers.push_back(layer);
    }

    const json& classes = need(root, "classes", origin, base);
    if (!classes.is_array() || classes.empty())
        fail(origin, base + "/classes", "expected a nonempty array");
    double prev_delta = 0.0;
    bool any_weight = false;
    for (size_t c = 0; c < classes.size(); ++c) {
        std::string cptr = base + "/classes/" + std::to_string(c);
        UserClass cls;
        cls.delta = as_number(need(classes[c], "delta", origin, cptr), origin, cptr + "/delta");
        cls.gamma = as_number(need(classes[c], "gamma", origin, cptr), origin, cptr + "/gamma");
        cls.p_min = as_number(need(classes[c], "p_min", origin, cptr), origin, cptr + "/p_min");
        if (cls.delta <= 0.0 || cls.delta > 1.0)
            fail(origin, cptr + "/delta", "expected a value in (0, 1]");
        if (cls.delta < prev_delta)
            fail(origin, cptr + "/delta", "classes must be ordered by nondecreasing delta");
        prev_delta = cls.delta;
        if (cls.p_min <= 0.0 || cls.p_min >= 1.0)
            fail(origin, cptr + "/p_min", "expected a value in (0, 1)");
        if (classes[c].contains("weight")) {
            double w = as_number(classes[c]["weight"], origin, cptr + "/weight");
            if (w < 0.0) fail(origin, cptr + "/weight", "expected a nonnegative value");
            cls.weight = w;
            any_weight = true;
        }
        scenario.classes.push_back(cls);
    }

    if (root.contains("weights")) {
        if (any_weight)
            fail(origin, base + "/weights",
                 "weights given both per class and as a top-level array");
        const json& w = root["weights"];
        if (!w.is_array() || w.size() != scenario.classes.size())
            fail(origin, base + "/weights", "expected one weight per class");
        for (size_t c = 0; c < w.size(); ++c) {
            double v = as_number(w[c], origin, base + "/weights/" + std::to_string(c));
            if (v < 0.0)
                fail(origin, base + "/weights/" + std::to_string(c),
                     "expected a nonnegative value");
            scenario.classes[c].weight = v;
        }
    }

    if (root.contains("model")) {
        scenario.model = parse_model(root["model"], origin, base + "/model");
        if (const auto* andor = std::get_if<AndOrModel>(&scenario.model)) {
            size_t n = andor->distributions.size();
            if (n != 1 && n != scenario.source.layers.size())
                fail(origin, base + "/model/distributions",
                     "expected one distribution per layer (or a single shared one)");
        }
    }

    if (root.contains("epsilon_max")) {
        double e = as_number(root["epsilon_max"], origin, base + "/epsilon_max");
        if (e < 0.0) fail(origin, base + "/epsilon_max", "expected a nonnegative value");
        scenario.epsilon_max = e;
    }
    if (root.contains("seed")) {
        const json& s = root["seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            fail(origin, base + "/seed", "expected a nonnegative integer");
        scenario.seed = s.get<uint64_t>();
    }

    if (std::holds_alternative<RaptorModel>(scenario.model)) {
        for (size_t l = 0; l < scenario.source.layers.size(); ++l) {
            if (scenario.source.layers[l].symbols < 200) {
                scenario.warnings.push_back(
                    "layer " + std::to_string(l + 1) +
                    " has fewer than 200 symbols; the exponential failure model is fitted to "
                    "large blocks");
            }
        }
    }
    return scenario;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        size_t line = 1;
        size_t limit = std::min(e.byte, text.size());
        for (size_t i = 0; i < limit; ++i)
            if (text[i] == '\n') ++line;
        // strip nlohmann's byte-offset prefix, keep its description
        std::string what = e.what();
        size_t pos = what.find("] ");
        if (pos != std::string::npos) what = what.substr(pos + 2);
        throw DataError(origin + ":" + std::to_string(line) + ": " + what);
    }
    if (!root.is_object()) fail(origin, "", "expected a JSON object");
    if (root.contains("mapped_scenario") && !root.contains("source"))
        return parse_scenario_object(root["mapped_scenario"], origin, "/mapped_scenario");
    return parse_scenario_object(root, origin, "");
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path);
    return parse_scenario(buffer.str(), path);
}

nlohmann::json scenario_to_json(const Scenario& scenario) {
    json layers = json::array();
    for (const auto& layer : scenario.source.layers)
        layers.push_back({{"symbols", layer.symbols}, {"psnr", layer.psnr}});
    json classes = json::array();
    for (const auto& cls : scenario.classes) {
        json c = {{"delta", cls.delta}, {"gamma", cls.gamma}, {"p_min", cls.p_min}};
        if (cls.weight) c["weight"] = *cls.weight;
        classes.push_back(c);
    }
    json out = {{"source", {{"layers", layers}}},
                {"classes", classes},
                {"model", model_to_json(scenario.model)}};
    if (scenario.epsilon_max) out["epsilon_max"] = *scenario.epsilon_max;
    if (scenario.seed) out["seed"] = *scenario.seed;
    return out;
}

nlohmann::json guaranteed_solution_to_json(const GuaranteedSolution& solution) {
    json out = {{"solved", solution.solved},
                {"method", solution.method == SolveMethod::sequential ? "sequential" : "numeric"}};
    if (!solution.diagnostic.empty()) out["diagnostic"] = solution.diagnostic;
    if (!solution.solved) return out;
    out["t"] = solution.t;
    out["t_real"] = solution.t_real;
    out["rho"] = solution.rho;
    out["epsilon"] = solution.epsilon;
    out["epsilon_real"] = solution.epsilon_real;
    out["epsilon_lower_bound"] = solution.epsilon_bound;
    out["feasible"] = solution.feasible;
    out["kkt"] = {{"lambda", solution.kkt.lambda},
                  {"constraint_values", solution.kkt.constraint_values},
                  {"stationarity_residual", solution.kkt.stationarity_residual},
                  {"verified", solution.kkt.verified}};
    return out;
}

nlohmann::json best_effort_to_json(const BestEffortSolution& solution) {
    json out = {{"feasible", solution.feasible}, {"epsilon", solution.epsilon}};
    if (!solution.feasible) return out;
    out["rho"] = solution.rho;
    out["avg_psnr"] = solution.avg_psnr;
    out["per_class_psnr"] = solution.per_class_psnr;
    if (solution.rho.size() == 2) {
        out["argmax_rho1_low"] = solution.argmax_lo;
        out["argmax_rho1_high"] = solution.argmax_hi;
    }
    return out;
}

nlohmann::json mapped_problem_to_json(const MappedProblem& problem, const Scenario& original) {
    json class_trace = json::array();
    for (size_t i = 0; i < problem.class_trace.size(); ++i) {
        const ClassFate& fate = problem.class_trace[i];
        json entry = {{"class", i + 1}, {"kept", fate.kept}};
        if (fate.kept)
            entry["mapped_index"] = fate.mapped_index + 1;
        else
            entry["absorbed_into"] = fate.absorbed_into_original;
        class_trace.push_back(entry);
    }

    Scenario mapped;
    mapped.source = problem.source;
    mapped.classes = problem.classes;
    mapped.model = original.model;
    mapped.epsilon_max = original.epsilon_max;
    mapped.seed = original.seed;

    return {{"original_g", problem.original_g},
            {"class_trace", class_trace},
            {"layer_trace", problem.layer_trace},
            {"lemma1_condition_ok", problem.lemma1_condition_ok},
            {"mapped_g", problem.g},
            {"mapped_scenario", scenario_to_json(mapped)}};
}

nlohmann::json dropped_checks_to_json(const std::vector<DroppedCheck>& checks) {
    json out = json::array();
    for (const auto& check : checks)
        out.push_back({{"class", check.original_class},
                       {"g", check.g_mapped},
                       {"success_prob", check.success_prob},
                       {"required", check.required},
                       {"satisfied", check.satisfied}});
    return out;
}

nlohmann::json epsilon_points_to_json(const std::vector<EpsilonPoint>& points) {
    json out = json::array();
    for (const auto& point : points)
        out.push_back({{"epsilon", point.epsilon},
                       {"total_symbols", point.total_symbols},
                       {"trials", point.trials},
                       {"successes", point.successes},
                       {"success_rate", point.success_rate},
                       {"wilson_low", point.wilson_low},
                       {"wilson_high", point.wilson_high}});
    return out;
}

}  // namespace uep
