#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "uep/degree.hpp"

namespace uep {

// Exponential decoding-failure model for the standardized raptor code:
// P(m, k) = 1 for m <= k, else min(1, a * b^(m-k)).
struct RaptorModel {
    double a = 0.85;
    double b = 0.567;
};

// Iterative (peeling) failure model: and-or tree evolution of the symbol
// error probability.  One distribution shared by all layers, or one per
// layer.
struct AndOrModel {
    std::vector<DegreeDistribution> distributions;
    uint32_t max_iterations = 1000;
    double residual_tol = 1e-12;

    const DegreeDistribution& for_layer(size_t l) const {
        return distributions.size() == 1 ? distributions[0] : distributions.at(l);
    }
};

using FailureModel = std::variant<RaptorModel, AndOrModel>;

// Failure probability after receiving m symbols of a dimension-k block.
// Overflow-safe for large |m - k|.
double raptor_failure_prob(const RaptorModel& model, double m, double k);

struct FixedPointResult {
    double value = 1.0;
    uint32_t iterations = 0;
    bool converged = false;
};

// Symbol error probability of iterative decoding: e_0 = 1,
// e_n = exp(-(t * delta / dimension) * Omega'(1 - e_{n-1})).  Stops when the
// residual drops below residual_tol or after max_iterations steps.
FixedPointResult and_or_symbol_error(const DegreeDistribution& dist, double t, double delta,
                                     double dimension, uint32_t max_iterations = 1000,
                                     double residual_tol = 1e-12);

// Probability that a layer of the given dimension fails to decode completely
// when t symbols were transmitted and the fraction delta of them arrives.
double layer_failure_prob(const FailureModel& model, size_t layer_index, double t, double delta,
                          double dimension);

std::vector<double> layer_failure_probs(const FailureModel& model, std::span<const double> t,
                                        std::span<const double> dims, double delta);

// Probability that layers 1..g all decode for a user receiving fraction
// delta: prod_{l<=g} (1 - P_e(l)).
double class_success_prob(const FailureModel& model, std::span<const double> t,
                          std::span<const double> dims, double delta, size_t g);

// p[l][j]: probability that class j decodes layers 1..l+1 but not layer l+2
// (the last row: decodes everything).  Columns need not sum to 1; the deficit
// is the probability of losing layer 1.
struct RecoveryProfile {
    std::vector<std::vector<double>> p;  // [layer][class]
    size_t layers() const { return p.size(); }
    size_t classes() const { return p.empty() ? 0 : p[0].size(); }
};

RecoveryProfile recovery_profile(const FailureModel& model, std::span<const double> t,
                                 std::span<const double> dims, std::span<const double> deltas);

struct PsnrSummary {
    std::vector<double> per_class;
    double weighted = 0.0;
};

// Expected received quality per class, E_j = sum_l p[l][j] * q_l, and the
// weighted average sum_j w_j E_j.
PsnrSummary expected_psnr(const RecoveryProfile& profile, std::span<const double> q,
                          std::span<const double> w);

}  // namespace uep
