#pragma once

#include <map>
#include <string>
#include <vector>

#include "unseennet/taxonomy.hpp"
#include "unseennet/tinydet.hpp"

namespace unseennet {

struct SimilarityRow {
    double d_vis = 0;  // Euclidean weight-space distance
    double s_v = 0;    // visual similarity in [0,1]
    double s_s = 0;    // semantic (path) similarity in [0,1]
    double s = 0;      // alpha * s_v + (1-alpha) * s_s
    bool eligible = true;
};

struct SimilarityTable {
    std::string unseen;
    std::map<std::string, SimilarityRow> rows;  // per seen class
    double alpha = 0.6;
};

// Ordered descending by pre-normalization s; weights >= 0.
struct NeighborSet {
    std::vector<std::pair<std::string, double>> entries;
};

struct SimilarityThresholds {
    double v = 0.0;  // visual eligibility floor
    double s = 0.0;  // semantic eligibility floor
};

double visual_distance(const std::vector<double>& wu, const std::vector<double>& wi);

// min-max map from distances to similarities; all 0.5 when distances are equal
std::map<std::string, double> normalize_visual(const std::map<std::string, double>& distances);

double comprehensive_similarity(double s_v, double s_s, double alpha);

// d_vis between the unseen slot of `cu` and each seen slot of `weak`;
// eligibility = {s_v >= thresholds.v} intersect {s_s >= thresholds.s}.
SimilarityTable build_table(const std::string& unseen, const DetectorModel& cu,
                            const DetectorModel& weak, const Taxonomy& taxonomy, double alpha,
                            const SimilarityThresholds& thresholds = {});

// Top-k eligible rows by s (ties lexicographic). With normalize_weights the
// weights are s / sum(s) over the selection (uniform when all s are 0);
// otherwise the raw similarities are used.
NeighborSet topk_neighbors(const SimilarityTable& tbl, int k, bool normalize_weights = true);

// mean of the top-m comprehensive similarities among eligible rows
double average_similarity(const SimilarityTable& tbl, int m);

// CSV export: seen_class,d_vis,s_v,s_s,s,eligible
void write_similarity_csv(const std::filesystem::path& path, const SimilarityTable& tbl);
SimilarityTable read_similarity_csv(const std::filesystem::path& path, const std::string& unseen,
                                    double alpha);

} // namespace unseennet
