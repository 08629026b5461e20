#include "uep/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uep/errors.hpp"

namespace uep {

namespace {

// exactly `count` distinct indices out of [0, n), uniform without
// replacement
std::vector<uint32_t> pick_survivors(size_t n, size_t count, Rng& rng) {
    std::vector<uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    for (size_t i = 0; i < count; ++i) {
        size_t j = i + rng.next_below(static_cast<uint32_t>(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace

SessionResult simulate_session(const std::vector<SourceBlock>& blocks, const LayerPlan& plan,
                               std::span<const double> psnr, std::span<const UserClass> classes,
                               size_t total_symbols, const SimOptions& options,
                               uint64_t session_seed) {
    size_t L = blocks.size();
    if (plan.layers.size() != L || psnr.size() != L)
        throw ParameterError("blocks, plan, and psnr must cover the same layers");
    if (classes.empty()) throw ParameterError("at least one class expected");

    Rng encoder_rng = Rng::child(session_seed, 0);
    EncodeStreamResult encoded =
        uep_encode_stream(blocks, plan, total_symbols, encoder_rng, options.scheduling);

    std::vector<size_t> dims(L);
    for (size_t l = 0; l < L; ++l) dims[l] = blocks[l].dimension();

    SessionResult session;
    session.layer_counts = encoded.layer_counts;
    session.per_class.resize(classes.size());

    std::vector<uint32_t> survivors;
    for (size_t c = 0; c < classes.size(); ++c) {
        Rng channel_rng = Rng::child(session_seed, 1 + c);
        double delta = classes[c].delta;
        if (options.channel == ChannelMode::deterministic_fraction) {
            auto count = static_cast<size_t>(std::floor(delta * static_cast<double>(total_symbols)));
            survivors = pick_survivors(total_symbols, count, channel_rng);
        } else {
            survivors.clear();
            for (size_t i = 0; i < total_symbols; ++i)
                if (channel_rng.next_double() < delta) survivors.push_back(static_cast<uint32_t>(i));
        }

        UepDecodeResult decoded = uep_decode(encoded.stream, survivors, dims, options.decoder);

        ClassSessionResult& res = session.per_class[c];
        res.received = survivors.size();
        res.layer_decoded.resize(L);
        size_t prefix = 0;
        for (size_t l = 0; l < L; ++l) {
            res.layer_decoded[l] = decoded.per_layer[l].success;
            if (prefix == l && res.layer_decoded[l]) prefix = l + 1;
        }
        res.achieved_psnr =
            prefix == 0 ? -std::numeric_limits<double>::infinity() : psnr[prefix - 1];
        res.success = res.achieved_psnr >= classes[c].gamma - 1e-12;
    }
    return session;
}

WilsonInterval wilson_interval(size_t successes, size_t trials, double z) {
    if (trials == 0) throw ParameterError("wilson interval needs at least one trial");
    if (successes > trials) throw ParameterError("more successes than trials");
    double n = static_cast<double>(trials);
    double p = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::vector<EpsilonPoint> sweep_epsilon(const LayeredSource& source,
                                        std::span<const UserClass> classes,
                                        std::span<const double> rho,
                                        std::span<const DegreeDistribution> distributions,
                                        const SweepOptions& options) {
    size_t L = source.layers.size();
    if (rho.size() != L) throw ParameterError("one rho entry per layer expected");
    if (distributions.size() != 1 && distributions.size() != L)
        throw ParameterError("one degree distribution per layer (or a single shared one) expected");
    if (options.trials == 0) throw ParameterError("at least one trial expected");
    if (options.epsilon_list.empty()) throw ParameterError("epsilon list must not be empty");

    LayerPlan plan;
    std::vector<SourceBlock> blocks;
    std::vector<double> psnr(L);
    for (size_t l = 0; l < L; ++l) {
        const auto& dist = distributions[distributions.size() == 1 ? 0 : l];
        auto dim = static_cast<size_t>(source.layers[l].symbols);
        plan.layers.push_back({dim, dist, rho[l]});
        Rng data_rng = Rng::child(options.seed, 0xB10C0000ull + l);
        blocks.push_back(SourceBlock::random(dim, options.sim.symbol_size, data_rng));
        psnr[l] = source.layers[l].psnr;
    }
    double K = static_cast<double>(source.total_symbols());

    std::vector<EpsilonPoint> points;
    for (size_t ei = 0; ei < options.epsilon_list.size(); ++ei) {
        double eps = options.epsilon_list[ei];
        if (eps < 0.0) throw ParameterError("epsilon must be nonnegative");
        EpsilonPoint point;
        point.epsilon = eps;
        point.total_symbols = static_cast<size_t>(std::llround((1.0 + eps) * K));
        point.trials = options.trials;
        point.successes.assign(classes.size(), 0);

        uint64_t eps_seed = splitmix64(splitmix64(options.seed) + 0x5E550000ull + ei);
        for (size_t trial = 0; trial < options.trials; ++trial) {
            uint64_t session_seed = splitmix64(eps_seed + trial);
            SessionResult session = simulate_session(blocks, plan, psnr, classes,
                                                     point.total_symbols, options.sim, session_seed);
            for (size_t c = 0; c < classes.size(); ++c)
                if (session.per_class[c].success) ++point.successes[c];
        }

        for (size_t c = 0; c < classes.size(); ++c) {
            point.success_rate.push_back(static_cast<double>(point.successes[c]) /
                                         static_cast<double>(options.trials));
            WilsonInterval wi = wilson_interval(point.successes[c], options.trials);
            point.wilson_low.push_back(wi.low);
            point.wilson_high.push_back(wi.high);
        }
        points.push_back(std::move(point));
    }
    return points;
}

}  // namespace uep
