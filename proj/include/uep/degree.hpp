#pragma once

#include <cstdint>
#include <vector>

#include "uep/rng.hpp"

namespace uep {

// Output degree distribution Omega(x) = sum_d p_d x^d over support {1..max}.
class DegreeDistribution {
  public:
    struct Entry {
        uint32_t degree;
        double probability;
    };

    // Entries need distinct degrees >= 1 and positive probabilities.  The raw
    // sum may deviate from 1 by up to 1e-2 (tabulated coefficients are often
    // printed rounded); the whole vector is rescaled by the raw sum so that
    // Omega(1) = 1 exactly.  Larger deviations are rejected.
    explicit DegreeDistribution(std::vector<Entry> entries);

    const std::vector<Entry>& entries() const { return entries_; }
    uint32_t max_degree() const { return entries_.back().degree; }
    double raw_sum() const { return raw_sum_; }

    double eval(double x) const;        // Omega(x)
    double derivative(double x) const;  // Omega'(x)

    // Inverse-CDF draw; deterministic given the rng state.
    uint32_t sample(Rng& rng) const;

  private:
    std::vector<Entry> entries_;  // sorted by degree, normalized
    std::vector<double> cdf_;
    double raw_sum_ = 0.0;
};

// Coefficient table of the standardized raptor output distribution, exactly
// as printed in its defining spec table (raw sum 1.0004).
const std::vector<DegreeDistribution::Entry>& omega_r_raw();

// The same table normalized; shared instance.
const DegreeDistribution& omega_r();

// Robust soliton distribution truncated to support {1..k}: ideal soliton plus
// the R/(d k) tail and the spike at floor(k/R), R = c ln(k/delta) sqrt(k).
// When floor(k/R) > k the spike falls outside the support and is dropped.
DegreeDistribution robust_soliton(uint32_t k, double delta, double c);

}  // namespace uep
