#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uep/analysis.hpp"
#include "uep/types.hpp"

namespace uep {

// Smallest 1-based layer index whose cumulative quality reaches each class
// threshold.  Classes asking for more than the top layer delivers raise
// InfeasibleError.
std::vector<size_t> compute_g(const LayeredSource& source, std::span<const UserClass> classes);

struct ClassFate {
    bool kept = true;
    size_t mapped_index = 0;            // index into the reduced class list, when kept
    size_t absorbed_into_original = 0;  // 1-based original index of the absorber, when dropped
};

struct AmalgamationResult {
    std::vector<UserClass> classes;  // survivors, delta order preserved
    std::vector<size_t> g;           // strictly increasing after the pass
    std::vector<ClassFate> trace;    // one entry per original class
};

// Repeatedly absorbs class k into an earlier class i (delta_i <= delta_k)
// whenever g_i >= g_k: the earlier class has worse reception, so meeting its
// constraint delivers layer g_k to class k as well.
AmalgamationResult amalgamate_classes(std::vector<UserClass> classes, std::vector<size_t> g);

struct MergeResult {
    LayeredSource source;
    // 1-based merged index per original layer; 0 marks a trailing layer no
    // class demands, which is excluded from transmission.
    std::vector<size_t> layer_trace;
};

// Merges every layer no class targets into its successor; untargeted layers
// after the last targeted one are dropped.
MergeResult merge_layers(const LayeredSource& source, std::span<const size_t> g);

struct MappedProblem {
    LayeredSource source;            // merged layers, one per class
    std::vector<UserClass> classes;  // survivors, nondecreasing delta
    std::vector<size_t> g;           // g[j] == j+1

    std::vector<ClassFate> class_trace;
    std::vector<size_t> layer_trace;
    // Sufficient condition that absorbed constraints stay satisfied wherever
    // the reduced ones are: every absorbed class demands no more reliability
    // than its absorber.
    bool lemma1_condition_ok = true;

    LayeredSource original_source;
    std::vector<UserClass> original_classes;
    std::vector<size_t> original_g;
};

// Full reduction pipeline: thresholds -> class amalgamation -> layer merge.
// Post: as many layers as classes and g[j] = j+1.
MappedProblem map_problem(const LayeredSource& source, std::vector<UserClass> classes);

struct DroppedCheck {
    size_t original_class = 0;  // 1-based
    size_t g_mapped = 0;        // 1-based prefix needed in merged layers
    double success_prob = 0.0;
    double required = 0.0;
    bool satisfied = false;
};

// Re-checks every absorbed class against an allocation t over the merged
// layers (needed when the sufficient condition above does not hold).
std::vector<DroppedCheck> verify_dropped_constraints(const MappedProblem& problem,
                                                     std::span<const double> t,
                                                     const FailureModel& model);

}  // namespace uep
