#include "uep/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uep/errors.hpp"

namespace uep {

double raptor_failure_prob(const RaptorModel& model, double m, double k) {
    if (!(model.a > 0.0) || !(model.b > 0.0) || !(model.b < 1.0))
        throw ParameterError("raptor model: need a > 0 and b in (0,1)");
    if (m <= k) return 1.0;
    return std::min(1.0, model.a * std::exp(std::log(model.b) * (m - k)));
}

FixedPointResult and_or_symbol_error(const DegreeDistribution& dist, double t, double delta,
                                     double dimension, uint32_t max_iterations,
                                     double residual_tol) {
    if (!(dimension > 0.0)) throw ParameterError("and_or_symbol_error: dimension must be positive");
    if (t < 0.0 || delta < 0.0) throw ParameterError("and_or_symbol_error: t and delta must be nonnegative");
    const double c = t * delta / dimension;
    FixedPointResult result;
    double e = 1.0;
    for (uint32_t n = 0; n < max_iterations; ++n) {
        const double next = std::exp(-c * dist.derivative(1.0 - e));
        result.iterations = n + 1;
        if (std::abs(next - e) <= residual_tol) {
            result.value = next;
            result.converged = true;
            return result;
        }
        e = next;
    }
    result.value = e;
    return result;
}

namespace {

double failure_one_layer(const FailureModel& model, size_t layer_index, double t, double delta,
                         double dimension) {
    if (const auto* raptor = std::get_if<RaptorModel>(&model))
        return raptor_failure_prob(*raptor, t * delta, dimension);
    const auto& andor = std::get<AndOrModel>(model);
    const auto fp = and_or_symbol_error(andor.for_layer(layer_index), t, delta, dimension,
                                        andor.max_iterations, andor.residual_tol);
    if (fp.value >= 1.0) return 1.0;
    // 1 - (1 - e)^S without cancellation for tiny e.
    return -std::expm1(dimension * std::log1p(-fp.value));
}

}  // namespace

double layer_failure_prob(const FailureModel& model, size_t layer_index, double t, double delta,
                          double dimension) {
    const double p = failure_one_layer(model, layer_index, t, delta, dimension);
    return std::clamp(p, 0.0, 1.0);
}

std::vector<double> layer_failure_probs(const FailureModel& model, std::span<const double> t,
                                        std::span<const double> dims, double delta) {
    if (t.size() != dims.size()) throw ParameterError("layer_failure_probs: size mismatch");
    std::vector<double> out(t.size());
    for (size_t l = 0; l < t.size(); ++l) out[l] = layer_failure_prob(model, l, t[l], delta, dims[l]);
    return out;
}

double class_success_prob(const FailureModel& model, std::span<const double> t,
                          std::span<const double> dims, double delta, size_t g) {
    if (t.size() != dims.size()) throw ParameterError("class_success_prob: size mismatch");
    if (g > t.size()) throw ParameterError("class_success_prob: g exceeds layer count");
    double prob = 1.0;
    for (size_t l = 0; l < g; ++l) prob *= 1.0 - layer_failure_prob(model, l, t[l], delta, dims[l]);
    return prob;
}

RecoveryProfile recovery_profile(const FailureModel& model, std::span<const double> t,
                                 std::span<const double> dims, std::span<const double> deltas) {
    if (t.size() != dims.size()) throw ParameterError("recovery_profile: size mismatch");
    const size_t L = t.size();
    const size_t J = deltas.size();
    RecoveryProfile profile;
    profile.p.assign(L, std::vector<double>(J, 0.0));
    for (size_t j = 0; j < J; ++j) {
        const auto pe = layer_failure_probs(model, t, dims, deltas[j]);
        double prefix = 1.0;
        for (size_t l = 0; l < L; ++l) {
            prefix *= 1.0 - pe[l];
            profile.p[l][j] = prefix * (l + 1 < L ? pe[l + 1] : 1.0);
        }
    }
    return profile;
}

PsnrSummary expected_psnr(const RecoveryProfile& profile, std::span<const double> q,
                          std::span<const double> w) {
    if (q.size() != profile.layers()) throw ParameterError("expected_psnr: q size mismatch");
    if (w.size() != profile.classes()) throw ParameterError("expected_psnr: w size mismatch");
    double w_sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw ParameterError("expected_psnr: weights must be nonnegative");
        w_sum += x;
    }
    if (std::abs(w_sum - 1.0) > 1e-9) throw ParameterError("expected_psnr: weights must sum to 1");
    PsnrSummary summary;
    summary.per_class.assign(profile.classes(), 0.0);
    for (size_t j = 0; j < profile.classes(); ++j) {
        double e = 0.0;
        for (size_t l = 0; l < profile.layers(); ++l) e += profile.p[l][j] * q[l];
        summary.per_class[j] = e;
        summary.weighted += w[j] * e;
    }
    return summary;
}

}  // namespace uep
