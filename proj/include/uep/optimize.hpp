#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uep/analysis.hpp"
#include "uep/mapping.hpp"
#include "uep/types.hpp"

namespace uep {

// Necessary overhead floor: each class must at least fill the dimension of
// its selected layer through its own channel, so
// epsilon >= (1/K) sum_j S_{g_j} / delta_j - 1.  Expects the reduced problem
// (distinct g per class).
double epsilon_lower_bound(const LayeredSource& source, std::span<const UserClass> classes,
                           std::span<const size_t> g);

// Log-domain constraint for the reduced problem under the raptor model:
// f_j(t) = -sum_{l<=j} ln(1 - a b^(t_l delta_j - S_l)) + ln P_j.
// Returns +infinity when any needed layer sits at or below its dimension
// (t_l delta_j <= S_l).
double constraint_value(const MappedProblem& problem, const RaptorModel& model,
                        std::span<const double> t, size_t j);

struct KktReport {
    std::vector<double> lambda;
    std::vector<double> constraint_values;
    double stationarity_residual = 0.0;
    bool verified = false;
};

// Solves the stationarity system 1 + sum_{j>=l} lambda_j df_j/dt_l = 0 by
// back-substitution (triangular in reversed index) and checks feasibility,
// multiplier sign (>= -1e-9), and complementary slackness (|lambda f| <=
// 1e-6).
KktReport kkt_verify(const MappedProblem& problem, const RaptorModel& model,
                     std::span<const double> t);

enum class SolveMethod { sequential, numeric };

struct GuaranteedSolution {
    bool solved = false;
    std::string diagnostic;
    SolveMethod method = SolveMethod::sequential;

    std::vector<double> t_real;  // pre-rounding optimum
    std::vector<long long> t;    // ceil-rounded allocation
    std::vector<double> rho;     // t / sum(t)
    double epsilon = 0.0;        // sum(t) / K - 1 after rounding
    double epsilon_real = 0.0;   // before rounding
    double epsilon_bound = 0.0;
    bool feasible = false;  // all constraints hold at the rounded t
    KktReport kkt;
};

// Equality chain: activates constraints in class order and solves each for
// one new variable in closed form.  KKT verification tells whether the
// all-active point is the optimum.
GuaranteedSolution solve_sequential(const MappedProblem& problem, const RaptorModel& model);

// Interior-point (log-barrier Newton) minimizer of sum(t) subject to
// f_j(t) <= 0; agrees with solve_sequential within 0.1 symbols per layer
// whenever the latter passes KKT verification.
GuaranteedSolution solve_convex(const MappedProblem& problem, const RaptorModel& model);

// Smallest uniform overhead where t_l = (1 + eps) S_l satisfies every
// constraint; bisection to the given tolerance.
double eep_min_overhead(const MappedProblem& problem, const RaptorModel& model, double tol = 1e-4);

// Smallest overhead along a fixed split: t_l = (1 + eps) K rho_l.  Returns
// +infinity when a needed layer has rho 0.
double min_overhead_along_rho(const MappedProblem& problem, const RaptorModel& model,
                              std::span<const double> rho, double tol = 1e-6);

struct BestEffortOptions {
    double epsilon_max = 0.0;
    double grid_step = 0.01;
    double refine_step = 0.001;  // local refinement around the grid optimum
    bool enforce_constraints = false;
};

struct BestEffortSolution {
    bool feasible = false;
    std::vector<double> rho;
    double avg_psnr = 0.0;
    std::vector<double> per_class_psnr;
    double epsilon = 0.0;  // always epsilon_max: the budget is spent in full

    // Two-layer case: base-grid rho_1 plateau attaining the maximum within
    // 1e-9.
    double argmax_lo = 0.0;
    double argmax_hi = 0.0;

    struct SweepRow {
        std::vector<double> rho;
        double avg_psnr = 0.0;
        std::vector<double> per_class_psnr;
        bool feasible = true;
    };
    std::vector<SweepRow> sweep;  // base grid, lexicographic order
};

// Maximizes the weighted expected quality over the rho simplex grid with
// M = (1 + epsilon_max) K transmitted symbols.  With enforce_constraints the
// per-class success targets filter the grid first.  Ties break toward the
// lexicographically smallest rho.
BestEffortSolution best_effort_search(const LayeredSource& source,
                                      std::span<const UserClass> classes,
                                      const FailureModel& model, const BestEffortOptions& options);

struct SplitComparison {
    double merged_success = 0.0;
    double split_success = 0.0;
};

// Success probability of one layer (dimension S, t symbols sent, fraction
// delta received) against the same budget split into two sub-layers of
// dimensions S_m / S - S_m carrying t_m / t - t_m symbols.
SplitComparison partition_split_compare(const RaptorModel& model, double S, double t, double delta,
                                        double S_m, double t_m);

struct PartitionCheckResult {
    size_t trials = 0;
    size_t violations = 0;
    double worst_margin = 0.0;  // min over trials of merged - split
};

// Randomized check that merging any layer split never lowers the success
// probability at equal budget.
PartitionCheckResult partition_monotonicity_check(const MappedProblem& problem,
                                                  const RaptorModel& model,
                                                  std::span<const double> t, size_t trials,
                                                  uint64_t seed);

}  // namespace uep
