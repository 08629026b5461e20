#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uep/degree.hpp"
#include "uep/ltcode.hpp"
#include "uep/types.hpp"

namespace uep {

// deterministic_fraction: exactly floor(delta * M) symbols survive, chosen
// uniformly.  bernoulli: each symbol survives independently with
// probability delta.
enum class ChannelMode { deterministic_fraction, bernoulli };

struct SimOptions {
    ChannelMode channel = ChannelMode::deterministic_fraction;
    DecoderKind decoder = DecoderKind::peel;
    SchedulingMode scheduling = SchedulingMode::proportional;
    uint32_t symbol_size = 4;
};

struct ClassSessionResult {
    size_t received = 0;
    std::vector<bool> layer_decoded;
    double achieved_psnr = 0.0;  // -inf when no layer decodes
    bool success = false;        // achieved_psnr >= gamma
};

struct SessionResult {
    std::vector<size_t> layer_counts;
    std::vector<ClassSessionResult> per_class;
};

// One multicast session: encode total_symbols across the layers, run each
// class's erasure channel, decode layer by layer, and grade the prefix
// quality against the class target.  Encoder and channels draw from
// substreams of session_seed, so results are reproducible symbol for symbol.
SessionResult simulate_session(const std::vector<SourceBlock>& blocks, const LayerPlan& plan,
                               std::span<const double> psnr, std::span<const UserClass> classes,
                               size_t total_symbols, const SimOptions& options,
                               uint64_t session_seed);

struct WilsonInterval {
    double low = 0.0;
    double high = 1.0;
};

// 95% score interval by default (z = 1.959964).
WilsonInterval wilson_interval(size_t successes, size_t trials, double z = 1.959964);

struct EpsilonPoint {
    double epsilon = 0.0;
    size_t total_symbols = 0;
    size_t trials = 0;
    std::vector<size_t> successes;  // per class
    std::vector<double> success_rate;
    std::vector<double> wilson_low;
    std::vector<double> wilson_high;
};

struct SweepOptions {
    std::vector<double> epsilon_list;
    size_t trials = 2000;
    SimOptions sim;
    uint64_t seed = 1;
};

// Monte-Carlo success frequency per class at each overhead in epsilon_list.
// Session seeds derive from (seed, epsilon index, trial), so any point can
// be recomputed in isolation.  distributions: one per layer, or a single
// shared one.
std::vector<EpsilonPoint> sweep_epsilon(const LayeredSource& source,
                                        std::span<const UserClass> classes,
                                        std::span<const double> rho,
                                        std::span<const DegreeDistribution> distributions,
                                        const SweepOptions& options);

}  // namespace uep
