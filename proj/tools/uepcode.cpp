// Command line front end: scenario reduction, overhead optimization,
// model evaluation, and Monte-Carlo simulation of layered rateless
// multicast.
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "uep/errors.hpp"
#include "uep/scenario.hpp"

namespace {

using nlohmann::json;

// exit codes: 0 verified success, 1 usage or input error, 2 result produced
// but not verified, 3 infeasible
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kUnverified = 2;
constexpr int kInfeasible = 3;

std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t pos = 0;
            double v = std::stod(item, &pos);
            while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
            if (pos != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw uep::ParameterError("cannot parse '" + item + "' in " + flag);
        }
    }
    if (out.empty()) throw uep::ParameterError(flag + " must list at least one number");
    return out;
}

void emit(const json& j, const std::string& out_path) {
    std::string text = j.dump(2) + "\n";
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw uep::IoError("cannot open " + out_path + " for writing");
    f << text;
    if (!f) throw uep::IoError("cannot write " + out_path);
}

uep::Scenario load_and_warn(const std::string& path) {
    uep::Scenario scenario = uep::load_scenario(path);
    for (const auto& w : scenario.warnings) std::cerr << "warning: " << path << ": " << w << "\n";
    return scenario;
}

const uep::RaptorModel& require_raptor(const uep::Scenario& scenario, const char* what) {
    const auto* model = std::get_if<uep::RaptorModel>(&scenario.model);
    if (!model)
        throw uep::ParameterError(std::string(what) +
                                  " needs the raptor failure model (model.type == \"raptor\")");
    return *model;
}

struct CommonArgs {
    std::string scenario_path;
    std::string out_path;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--scenario", args.scenario_path, "scenario JSON file")->required();
    sub->add_option("--out", args.out_path, "write the JSON result here instead of stdout");
}

int run_map(const CommonArgs& args) {
    uep::Scenario scenario = load_and_warn(args.scenario_path);
    uep::MappedProblem problem = uep::map_problem(scenario.source, scenario.classes);
    if (!problem.lemma1_condition_ok)
        std::cerr << "note: an absorbed class demands more reliability than its absorber; "
                     "run optimize-guaranteed to check the dropped constraints explicitly\n";
    emit(uep::mapped_problem_to_json(problem, scenario), args.out_path);
    return kOk;
}

int run_lower_bound(const CommonArgs& args) {
    uep::Scenario scenario = load_and_warn(args.scenario_path);
    uep::MappedProblem problem = uep::map_problem(scenario.source, scenario.classes);
    double bound = uep::epsilon_lower_bound(problem.source, problem.classes, problem.g);
    emit({{"epsilon_lower_bound", bound}, {"mapped_g", problem.g}}, args.out_path);
    return kOk;
}

int run_optimize_guaranteed(const CommonArgs& args, const std::string& method,
                            const std::string& sweep_csv, double sweep_grid) {
    uep::Scenario scenario = load_and_warn(args.scenario_path);
    const uep::RaptorModel& model = require_raptor(scenario, "guaranteed optimization");
    uep::MappedProblem problem = uep::map_problem(scenario.source, scenario.classes);

    uep::GuaranteedSolution solution = method == "numeric" ? uep::solve_convex(problem, model)
                                                           : uep::solve_sequential(problem, model);

    json out;
    out["mapping"] = uep::mapped_problem_to_json(problem, scenario);
    out["solution"] = uep::guaranteed_solution_to_json(solution);

    int code = kOk;
    if (!solution.solved) {
        code = kUnverified;
    } else {
        std::vector<double> t(solution.t.begin(), solution.t.end());
        auto checks = uep::verify_dropped_constraints(problem, t, scenario.model);
        out["dropped_checks"] = uep::dropped_checks_to_json(checks);
        for (const auto& check : checks)
            if (!check.satisfied) code = kUnverified;
        if (!solution.kkt.verified || !solution.feasible) code = kUnverified;
    }

    if (!sweep_csv.empty() && solution.solved) {
        // minimum overhead along every grid split of the stream
        std::ofstream csv(sweep_csv, std::ios::binary);
        if (!csv) throw uep::IoError("cannot open " + sweep_csv + " for writing");
        size_t L = problem.source.layers.size();
        for (size_t l = 0; l < L; ++l) csv << "rho_" << l + 1 << ",";
        csv << "epsilon_min\n";
        auto steps = static_cast<size_t>(std::lround(1.0 / sweep_grid));
        std::vector<double> rho(L, 0.0);
        std::vector<size_t> counts(L, 0);
        // lexicographic simplex walk
        std::function<void(size_t, size_t)> walk = [&](size_t pos, size_t left) {
            if (pos + 1 == L) {
                counts[pos] = left;
                for (size_t l = 0; l < L; ++l) rho[l] = static_cast<double>(counts[l]) * sweep_grid;
                double eps = uep::min_overhead_along_rho(problem, model, rho);
                for (size_t l = 0; l < L; ++l) csv << rho[l] << ",";
                csv << eps << "\n";
                return;
            }
            for (size_t c = 0; c <= left; ++c) {
                counts[pos] = c;
                walk(pos + 1, left - c);
            }
        };
        walk(0, steps);
        if (!csv) throw uep::IoError("cannot write " + sweep_csv);
    }

    emit(out, args.out_path);
    return code;
}

int run_optimize_best_effort(const CommonArgs& args, double epsilon_max, bool has_epsilon_max,
                             bool with_constraints, double grid, double refine,
                             const std::string& csv_path) {
    uep::Scenario scenario = load_and_warn(args.scenario_path);
    uep::BestEffortOptions options;
    if (has_epsilon_max)
        options.epsilon_max = epsilon_max;
    else if (scenario.epsilon_max)
        options.epsilon_max = *scenario.epsilon_max;
    else
        throw uep::ParameterError(
            "no overhead budget: pass --epsilon-max or set epsilon_max in the scenario");
    options.grid_step = grid;
    options.refine_step = refine;
    options.enforce_constraints = with_constraints;

    uep::BestEffortSolution solution =
        uep::best_effort_search(scenario.source, scenario.classes, scenario.model, options);

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path, std::ios::binary);
        if (!csv) throw uep::IoError("cannot open " + csv_path + " for writing");
        size_t L = scenario.source.layers.size();
        for (size_t l = 0; l < L; ++l) csv << "rho_" << l + 1 << ",";
        for (size_t j = 0; j < scenario.classes.size(); ++j) csv << "psnr_class_" << j + 1 << ",";
        csv << "avg_psnr,feasible\n";
        for (const auto& row : solution.sweep) {
            for (double r : row.rho) csv << r << ",";
            for (double p : row.per_class_psnr) csv << p << ",";
            csv << row.avg_psnr << "," << (row.feasible ? 1 : 0) << "\n";
        }
        if (!csv) throw uep::IoError("cannot write " + csv_path);
    }

    emit(uep::best_effort_to_json(solution), args.out_path);
    return solution.feasible ? kOk : kInfeasible;
}

int run_analyze(const CommonArgs& args, const std::string& t_list) {
    uep::Scenario scenario = load_and_warn(args.scenario_path);
    std::vector<double> t = parse_number_list(t_list, "--t");
    size_t L = scenario.source.layers.size();
    size_t J = scenario.classes.size();
    if (t.size() != L) throw uep::ParameterError("--t must list one allocation per layer");

    std::vector<double> dims(L);
    std::vector<double> q(L);
    for (size_t l = 0; l < L; ++l) {
        dims[l] = static_cast<double>(scenario.source.layers[l].symbols);
        q[l] = scenario.source.layers[l].psnr;
    }
    std::vector<size_t> g = uep::compute_g(scenario.source, scenario.classes);

    std::vector<std::vector<double>> failure(L, std::vector<double>(J));
    for (size_t l = 0; l < L; ++l)
        for (size_t j = 0; j < J; ++j)
            failure[l][j] = uep::layer_failure_prob(scenario.model, l, t[l],
                                                    scenario.classes[j].delta, dims[l]);

    std::vector<double> success(J), deltas(J), w(J, 1.0 / static_cast<double>(J));
    bool any_weight = false;
    for (size_t j = 0; j < J; ++j) {
        deltas[j] = scenario.classes[j].delta;
        success[j] = uep::class_success_prob(scenario.model, t, dims, deltas[j], g[j]);
        if (scenario.classes[j].weight) any_weight = true;
    }
    if (any_weight)
        for (size_t j = 0; j < J; ++j)
            w[j] = scenario.classes[j].weight ? *scenario.classes[j].weight : 0.0;

    uep::RecoveryProfile profile = uep::recovery_profile(scenario.model, t, dims, deltas);
    uep::PsnrSummary summary = uep::expected_psnr(profile, q, w);

    json out = {{"t", t},
                {"g", g},
                {"layer_failure", failure},
                {"class_success", success},
                {"profile", profile.p},
                {"per_class_psnr", summary.per_class},
                {"avg_psnr", summary.weighted}};
    emit(out, args.out_path);
    return kOk;
}

int run_simulate(const CommonArgs& args, const std::string& rho_list,
                 const std::string& epsilon_list, size_t trials, const std::string& channel,
                 const std::string& decoder, const std::string& scheduling, uint64_t seed,
                 bool seed_given, uint32_t symbol_size) {
    uep::Scenario scenario = load_and_warn(args.scenario_path);
    const auto* andor = std::get_if<uep::AndOrModel>(&scenario.model);
    if (!andor)
        throw uep::ParameterError(
            "simulation needs an and-or scenario: its degree distributions define the code");

    uep::SweepOptions options;
    options.epsilon_list = parse_number_list(epsilon_list, "--epsilon-list");
    options.trials = trials;
    options.sim.channel = channel == "bernoulli" ? uep::ChannelMode::bernoulli
                                                 : uep::ChannelMode::deterministic_fraction;
    options.sim.decoder = decoder == "ml" ? uep::DecoderKind::ml : uep::DecoderKind::peel;
    options.sim.scheduling = scheduling == "iid" ? uep::SchedulingMode::iid
                                                 : uep::SchedulingMode::proportional;
    options.sim.symbol_size = symbol_size;
    options.seed = seed_given ? seed : scenario.seed.value_or(1);

    std::vector<double> rho = parse_number_list(rho_list, "--rho");
    auto points = uep::sweep_epsilon(scenario.source, scenario.classes, rho,
                                     andor->distributions, options);

    json out = {{"seed", options.seed},
                {"trials", options.trials},
                {"channel", channel},
                {"decoder", decoder},
                {"scheduling", scheduling},
                {"rho", rho},
                {"points", uep::epsilon_points_to_json(points)}};
    emit(out, args.out_path);
    return kOk;
}

int run_eep(const CommonArgs& args) {
    uep::Scenario scenario = load_and_warn(args.scenario_path);
    const uep::RaptorModel& model = require_raptor(scenario, "overhead comparison");
    uep::MappedProblem problem = uep::map_problem(scenario.source, scenario.classes);

    uep::GuaranteedSolution solution = uep::solve_sequential(problem, model);
    if (!solution.solved || !solution.kkt.verified) {
        uep::GuaranteedSolution numeric = uep::solve_convex(problem, model);
        if (numeric.solved) solution = numeric;
    }
    double eep = uep::eep_min_overhead(problem, model);

    json out = {{"epsilon_eep", eep}};
    int code = kOk;
    if (solution.solved) {
        out["epsilon_uep"] = solution.epsilon;
        out["overhead_ratio"] = (1.0 + eep) / (1.0 + solution.epsilon);
        out["solution"] = uep::guaranteed_solution_to_json(solution);
        if (!solution.kkt.verified || !solution.feasible) code = kUnverified;
    } else {
        out["solution"] = uep::guaranteed_solution_to_json(solution);
        code = kUnverified;
    }
    emit(out, args.out_path);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"design and simulation of layered-protection rateless multicast"};
    app.require_subcommand(1);

    CommonArgs map_args;
    CLI::App* map_cmd = app.add_subcommand(
        "map", "reduce a scenario: class thresholds, amalgamation, layer merge");
    add_common(map_cmd, map_args);

    CommonArgs lb_args;
    CLI::App* lb_cmd =
        app.add_subcommand("lower-bound", "overhead floor of the reduced scenario");
    add_common(lb_cmd, lb_args);

    CommonArgs og_args;
    std::string og_method = "sequential";
    std::string og_sweep_csv;
    double og_sweep_grid = 0.01;
    CLI::App* og_cmd = app.add_subcommand(
        "optimize-guaranteed", "minimum-overhead allocation meeting every class target");
    add_common(og_cmd, og_args);
    og_cmd->add_option("--method", og_method, "sequential (closed form) or numeric (interior point)")
        ->check(CLI::IsMember({"sequential", "numeric"}));
    og_cmd->add_option("--sweep-csv", og_sweep_csv,
                       "also write minimum overhead along every grid split to this CSV");
    og_cmd->add_option("--sweep-grid", og_sweep_grid, "grid step for --sweep-csv")
        ->check(CLI::PositiveNumber);

    CommonArgs be_args;
    double be_epsilon_max = 0.0;
    bool be_with_constraints = false;
    double be_grid = 0.01;
    double be_refine = 0.001;
    std::string be_csv;
    CLI::App* be_cmd = app.add_subcommand(
        "optimize-best-effort", "split a fixed overhead budget for the best expected quality");
    add_common(be_cmd, be_args);
    CLI::Option* be_eps_opt =
        be_cmd->add_option("--epsilon-max", be_epsilon_max,
                           "overhead budget (falls back to the scenario's epsilon_max)");
    be_cmd->add_flag("--with-constraints", be_with_constraints,
                     "only consider splits meeting every class target");
    be_cmd->add_option("--grid", be_grid, "simplex grid step")->check(CLI::PositiveNumber);
    be_cmd->add_option("--refine", be_refine,
                       "local refinement step around the grid optimum (0 disables)");
    be_cmd->add_option("--csv", be_csv, "write the full grid sweep to this CSV");

    CommonArgs an_args;
    std::string an_t;
    CLI::App* an_cmd = app.add_subcommand(
        "analyze", "failure probabilities and expected quality at a given allocation");
    add_common(an_cmd, an_args);
    an_cmd->add_option("--t", an_t, "comma list: transmitted symbols per layer")->required();

    CommonArgs sim_args;
    std::string sim_rho, sim_eps, sim_channel = "deterministic", sim_decoder = "peel",
                         sim_scheduling = "proportional";
    size_t sim_trials = 2000;
    uint64_t sim_seed = 1;
    uint32_t sim_symbol_size = 4;
    CLI::App* sim_cmd =
        app.add_subcommand("simulate", "Monte-Carlo decoding runs over erasure channels");
    add_common(sim_cmd, sim_args);
    sim_cmd->add_option("--rho", sim_rho, "comma list: share of the stream per layer")->required();
    sim_cmd->add_option("--epsilon-list", sim_eps, "comma list: overheads to simulate")->required();
    sim_cmd->add_option("--trials", sim_trials, "sessions per overhead")
        ->check(CLI::PositiveNumber);
    sim_cmd->add_option("--channel", sim_channel, "deterministic (fixed survivor count) or bernoulli")
        ->check(CLI::IsMember({"deterministic", "bernoulli"}));
    sim_cmd->add_option("--decoder", sim_decoder, "peel or ml")
        ->check(CLI::IsMember({"peel", "ml"}));
    sim_cmd->add_option("--scheduling", sim_scheduling, "proportional or iid layer interleaving")
        ->check(CLI::IsMember({"proportional", "iid"}));
    CLI::Option* sim_seed_opt =
        sim_cmd->add_option("--seed", sim_seed, "master seed (falls back to the scenario's seed)");
    sim_cmd->add_option("--symbol-size", sim_symbol_size, "payload bytes per symbol")
        ->check(CLI::PositiveNumber);

    CommonArgs eep_args;
    CLI::App* eep_cmd = app.add_subcommand(
        "eep", "uniform-protection overhead needed for the same targets, for comparison");
    add_common(eep_cmd, eep_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (map_cmd->parsed()) return run_map(map_args);
        if (lb_cmd->parsed()) return run_lower_bound(lb_args);
        if (og_cmd->parsed())
            return run_optimize_guaranteed(og_args, og_method, og_sweep_csv, og_sweep_grid);
        if (be_cmd->parsed())
            return run_optimize_best_effort(be_args, be_epsilon_max, be_eps_opt->count() > 0,
                                            be_with_constraints, be_grid, be_refine, be_csv);
        if (an_cmd->parsed()) return run_analyze(an_args, an_t);
        if (sim_cmd->parsed())
            return run_simulate(sim_args, sim_rho, sim_eps, sim_trials, sim_channel, sim_decoder,
                                sim_scheduling, sim_seed, sim_seed_opt->count() > 0,
                                sim_symbol_size);
        if (eep_cmd->parsed()) return run_eep(eep_args);
    } catch (const uep::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const uep::ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const uep::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const uep::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
