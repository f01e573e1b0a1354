// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "moeplan/trace.hpp"
#include "moeplan/types.hpp"

namespace moeplan {

// Knobs for the synthetic routing-trace generator.
//
//   skew             Zipf-like exponent over a per-layer expert ranking;
//                    0 = uniform, larger = heavier concentration.
//   affinity_strength  probability that each additional expert slot follows
//                    the planted co-activation partner of the previous pick.
//   layer_locality   probability a token reuses its previous-layer expert set.
//   drift            fraction of the ranking the hot experts rotate by per
//                    iteration; 0 = stationary hot set.
struct TraceGenConfig {
    ModelSpec model;
    int batch = 1;
    int iterations = 1;
    double skew = 0.0;
    double affinity_strength = 0.0;
    double layer_locality = 0.0;
    double drift = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Deterministic given the seed; every token activates exactly
// model.experts_per_token distinct experts. Each iteration derives its RNG
// stream from (seed, iteration index), so iterations are independent.
ActivationTrace generate_trace(const TraceGenConfig& cfg);

}  // namespace moeplan
