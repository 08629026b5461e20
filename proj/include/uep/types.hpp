#pragma once

#include <optional>
#include <vector>

namespace uep {

struct SourceLayer {
    long long symbols = 0;  // code dimension S_l
    double psnr = 0.0;      // quality q_l after decoding layers 1..l
};

struct LayeredSource {
    std::vector<SourceLayer> layers;
    long long total_symbols() const {
        long long k = 0;
        for (const auto& l : layers) k += l.symbols;
        return k;
    }
};

struct UserClass {
    double delta = 1.0;   // fraction of transmitted symbols received
    double gamma = 0.0;   // required quality threshold
    double p_min = 0.0;   // required success probability
    std::optional<double> weight;
};

}  // namespace uep
