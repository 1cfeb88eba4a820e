#pragma once

#include <map>
#include <string>
#include <vector>

#include "unseennet/simrank.hpp"
#include "unseennet/tinydet.hpp"

namespace unseennet {

// per-class detector-minus-classifier weight corrections
struct DeltaTable {
    std::map<std::string, std::vector<double>> deltas;
    int length = 0;
};

// delta_i = strong slot i - weak slot i; both models must share the
// architecture and the exact ordered class list
DeltaTable compute_deltas(const DetectorModel& strong, const DetectorModel& weak);

// w_u += sum_i weight_i * delta_i over the neighbor set; only the class-u
// channels of `cu` change, no gradient steps involved. `exclude_source`
// drops that class from the sum when it appears among the neighbors.
DetectorModel adapt_unseen(const DetectorModel& cu, const std::string& unseen,
                           const DeltaTable& deltas, const NeighborSet& neighbors,
                           const std::string& exclude_source = "");

} // namespace unseennet
