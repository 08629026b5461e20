#include "uep/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uep/errors.hpp"

namespace uep {

namespace {

void validate_source(const LayeredSource& source) {
    if (source.layers.empty()) throw ParameterError("source: needs at least one layer");
    for (size_t l = 0; l < source.layers.size(); ++l) {
        if (source.layers[l].symbols <= 0) throw ParameterError("source: layer sizes must be positive");
        if (l > 0 && !(source.layers[l].psnr > source.layers[l - 1].psnr))
            throw ParameterError("source: quality must be strictly increasing across layers");
    }
}

void validate_classes(std::span<const UserClass> classes) {
    if (classes.empty()) throw ParameterError("classes: need at least one");
    for (size_t j = 0; j < classes.size(); ++j) {
        const auto& c = classes[j];
        if (!(c.delta > 0.0) || c.delta > 1.0) throw ParameterError("classes: delta must be in (0,1]");
        if (!(c.p_min > 0.0) || !(c.p_min < 1.0))
            throw ParameterError("classes: target probability must be in (0,1)");
        if (j > 0 && classes[j].delta < classes[j - 1].delta)
            throw ParameterError("classes: must be ordered by nondecreasing delta");
    }
}

}  // namespace

std::vector<size_t> compute_g(const LayeredSource& source, std::span<const UserClass> classes) {
    validate_source(source);
    validate_classes(classes);
    std::vector<size_t> g(classes.size());
    for (size_t j = 0; j < classes.size(); ++j) {
        const double gamma = classes[j].gamma;
        size_t level = 0;
        for (size_t l = 0; l < source.layers.size(); ++l) {
            if (source.layers[l].psnr >= gamma) {
                level = l + 1;
                break;
            }
        }
        if (level == 0)
            throw InfeasibleError("class " + std::to_string(j + 1) +
                                  " requires quality above the top layer");
        g[j] = level;
    }
    return g;
}

AmalgamationResult amalgamate_classes(std::vector<UserClass> classes, std::vector<size_t> g) {
    if (classes.size() != g.size()) throw ParameterError("amalgamate_classes: size mismatch");
    validate_classes(classes);
    const size_t n = classes.size();
    std::vector<size_t> original(n);
    for (size_t j = 0; j < n; ++j) original[j] = j;

    AmalgamationResult result;
    result.trace.assign(n, ClassFate{});
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i + 1 < classes.size() && !changed; ++i) {
            for (size_t k = i + 1; k < classes.size(); ++k) {
                if (g[i] >= g[k]) {
                    result.trace[original[k]] = {false, 0, original[i] + 1};
                    classes.erase(classes.begin() + static_cast<long>(k));
                    g.erase(g.begin() + static_cast<long>(k));
                    original.erase(original.begin() + static_cast<long>(k));
                    changed = true;
                    break;
                }
            }
        }
    }
    for (size_t j = 0; j < classes.size(); ++j) result.trace[original[j]] = {true, j, 0};
    result.classes = std::move(classes);
    result.g = std::move(g);
    return result;
}

MergeResult merge_layers(const LayeredSource& source, std::span<const size_t> g) {
    validate_source(source);
    const size_t L = source.layers.size();
    std::vector<bool> targeted(L + 1, false);
    size_t top = 0;
    for (size_t v : g) {
        if (v < 1 || v > L) throw ParameterError("merge_layers: g out of range");
        targeted[v] = true;
        top = std::max(top, v);
    }
    MergeResult result;
    result.layer_trace.assign(L, 0);
    long long acc_symbols = 0;
    for (size_t l = 1; l <= top; ++l) {
        acc_symbols += source.layers[l - 1].symbols;
        result.layer_trace[l - 1] = result.source.layers.size() + 1;
        if (targeted[l]) {
            result.source.layers.push_back({acc_symbols, source.layers[l - 1].psnr});
            acc_symbols = 0;
        }
    }
    // Layers above the highest targeted one serve nobody; they stay out of
    // the transmission plan (trace value 0).
    return result;
}

MappedProblem map_problem(const LayeredSource& source, std::vector<UserClass> classes) {
    MappedProblem mapped;
    mapped.original_source = source;
    mapped.original_classes = classes;
    mapped.original_g = compute_g(source, classes);

    auto reduced = amalgamate_classes(std::move(classes), mapped.original_g);
    auto merged = merge_layers(source, reduced.g);

    mapped.source = std::move(merged.source);
    mapped.classes = std::move(reduced.classes);
    mapped.class_trace = std::move(reduced.trace);
    mapped.layer_trace = std::move(merged.layer_trace);
    mapped.g = compute_g(mapped.source, mapped.classes);
    for (size_t j = 0; j < mapped.g.size(); ++j) {
        if (mapped.g[j] != j + 1)
            throw DataError("map_problem: reduction violated g[j] = j invariant");
    }
    mapped.lemma1_condition_ok = true;
    for (size_t k = 0; k < mapped.class_trace.size(); ++k) {
        const auto& fate = mapped.class_trace[k];
        if (fate.kept) continue;
        const auto& absorber = mapped.original_classes[fate.absorbed_into_original - 1];
        if (absorber.p_min < mapped.original_classes[k].p_min) mapped.lemma1_condition_ok = false;
    }
    return mapped;
}

std::vector<DroppedCheck> verify_dropped_constraints(const MappedProblem& problem,
                                                     std::span<const double> t,
                                                     const FailureModel& model) {
    if (t.size() != problem.source.layers.size())
        throw ParameterError("verify_dropped_constraints: t size mismatch");
    std::vector<double> dims;
    dims.reserve(problem.source.layers.size());
    for (const auto& l : problem.source.layers) dims.push_back(static_cast<double>(l.symbols));

    std::vector<DroppedCheck> checks;
    for (size_t k = 0; k < problem.class_trace.size(); ++k) {
        if (problem.class_trace[k].kept) continue;
        const UserClass& cls = problem.original_classes[k];
        // Threshold re-derived against the merged layers.
        const auto g = compute_g(problem.source, std::span<const UserClass>{&cls, 1});
        DroppedCheck check;
        check.original_class = k + 1;
        check.g_mapped = g[0];
        check.required = cls.p_min;
        check.success_prob = class_success_prob(model, t, dims, cls.delta, g[0]);
        check.satisfied = check.success_prob >= cls.p_min;
        checks.push_back(check);
    }
    return checks;
}

}  // namespace uep
