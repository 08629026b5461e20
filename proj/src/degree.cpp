#include "uep/degree.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uep/errors.hpp"

namespace uep {

namespace {

// x^n by squaring; deterministic across libm implementations.
double powu(double x, uint32_t n) {
    double acc = 1.0;
    while (n != 0) {
        if (n & 1u) acc *= x;
        x *= x;
        n >>= 1;
    }
    return acc;
}

}  // namespace

DegreeDistribution::DegreeDistribution(std::vector<Entry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw ParameterError("degree distribution: no entries");
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.degree < b.degree; });
    double sum = 0.0;
    uint32_t prev = 0;
    for (const Entry& e : entries_) {
        if (e.degree < 1) throw ParameterError("degree distribution: degree must be >= 1");
        if (e.degree == prev) throw ParameterError("degree distribution: duplicate degree " + std::to_string(e.degree));
        if (!(e.probability > 0.0) || !std::isfinite(e.probability))
            throw ParameterError("degree distribution: probabilities must be positive");
        prev = e.degree;
        sum += e.probability;
    }
    if (std::abs(sum - 1.0) > 1e-2)
        throw ParameterError("degree distribution: probabilities sum to " + std::to_string(sum) +
                             ", expected 1 within 1e-2");
    raw_sum_ = sum;
    cdf_.reserve(entries_.size());
    double acc = 0.0;
    for (Entry& e : entries_) {
        e.probability /= sum;
        acc += e.probability;
        cdf_.push_back(acc);
    }
    cdf_.back() = 1.0;
}

double DegreeDistribution::eval(double x) const {
    double v = 0.0;
    for (const Entry& e : entries_) v += e.probability * powu(x, e.degree);
    return v;
}

double DegreeDistribution::derivative(double x) const {
    double v = 0.0;
    for (const Entry& e : entries_) v += e.probability * e.degree * powu(x, e.degree - 1);
    return v;
}

uint32_t DegreeDistribution::sample(Rng& rng) const {
    const double u = rng.next_double();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const size_t i = std::min<size_t>(it - cdf_.begin(), entries_.size() - 1);
    return entries_[i].degree;
}

const std::vector<DegreeDistribution::Entry>& omega_r_raw() {
    static const std::vector<DegreeDistribution::Entry> table = {
        {1, 0.007969}, {2, 0.493570}, {3, 0.166622}, {4, 0.072646}, {5, 0.082558},
        {8, 0.056058}, {9, 0.037229}, {19, 0.055590}, {65, 0.025023}, {66, 0.003135},
    };
    return table;
}

const DegreeDistribution& omega_r() {
    static const DegreeDistribution dist{omega_r_raw()};
    return dist;
}

DegreeDistribution robust_soliton(uint32_t k, double delta, double c) {
    if (k < 1) throw ParameterError("robust_soliton: k must be >= 1");
    if (!(delta > 0.0) || !(delta < 1.0)) throw ParameterError("robust_soliton: delta must be in (0,1)");
    if (!(c > 0.0)) throw ParameterError("robust_soliton: c must be positive");

    const double kd = static_cast<double>(k);
    const double R = c * std::log(kd / delta) * std::sqrt(kd);
    const uint64_t spike = R > 0.0 ? static_cast<uint64_t>(std::floor(kd / R)) : UINT64_MAX;

    std::vector<double> w(k + 1, 0.0);
    w[1] = 1.0 / kd;
    for (uint32_t d = 2; d <= k; ++d) w[d] = 1.0 / (static_cast<double>(d) * (d - 1.0));
    for (uint32_t d = 1; d <= k; ++d) {
        if (d < spike) {
            w[d] += R / (d * kd);
        } else if (d == spike) {
            // ln(R/delta) can go negative for tiny R; a negative spike mass is
            // meaningless, so it is clipped out.
            w[d] += std::max(0.0, R * std::log(R / delta) / kd);
        }
    }
    double beta = 0.0;
    for (uint32_t d = 1; d <= k; ++d) beta += w[d];
    std::vector<DegreeDistribution::Entry> entries;
    entries.reserve(k);
    for (uint32_t d = 1; d <= k; ++d)
        if (w[d] > 0.0) entries.push_back({d, w[d] / beta});
    return DegreeDistribution(std::move(entries));
}

}  // namespace uep
