#include "unseennet/adapt.hpp"

#include "unseennet/errors.hpp"

namespace unseennet {

DeltaTable compute_deltas(const DetectorModel& strong, const DetectorModel& weak) {
    if (!(strong.arch == weak.arch)) throw ValidationError("compute_deltas: architecture mismatch");
    if (strong.classes != weak.classes)
        throw ValidationError("compute_deltas: class lists must match in order");

    DeltaTable out;
    out.length = strong.arch.weight_vector_length();
    for (const auto& cls : strong.classes) {
        auto ws = class_weight_vector(strong, cls);
        const auto ww = class_weight_vector(weak, cls);
        for (size_t k = 0; k < ws.size(); ++k) ws[k] -= ww[k];
        out.deltas[cls] = std::move(ws);
    }
    return out;
}

DetectorModel adapt_unseen(const DetectorModel& cu, const std::string& unseen,
                           const DeltaTable& deltas, const NeighborSet& neighbors,
                           const std::string& exclude_source) {
    if (neighbors.entries.empty()) throw ValidationError("adapt_unseen: empty neighbor set");
    if (deltas.length != cu.arch.weight_vector_length())
        throw ValidationError("adapt_unseen: delta length does not match architecture");

    auto wu = class_weight_vector(cu, unseen);
    for (const auto& [cls, weight] : neighbors.entries) {
        if (cls == exclude_source) continue;
        const auto it = deltas.deltas.find(cls);
        if (it == deltas.deltas.end())
            throw ValidationError("adapt_unseen: no delta for neighbor " + cls);
        if (it->second.size() != wu.size())
            throw ValidationError("adapt_unseen: delta shape mismatch for " + cls);
        for (size_t k = 0; k < wu.size(); ++k) wu[k] += weight * it->second[k];
    }
    return set_class_weight_vector(cu, unseen, wu);
}

} // namespace unseennet
