#include "unseennet/simrank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "unseennet/errors.hpp"

namespace unseennet {

double visual_distance(const std::vector<double>& wu, const std::vector<double>& wi) {
    if (wu.size() != wi.size()) throw ValidationError("visual_distance: length mismatch");
    double sum = 0;
    for (size_t k = 0; k < wu.size(); ++k) {
        const double d = wu[k] - wi[k];
        sum += d * d;
    }
    return std::sqrt(sum);
}

std::map<std::string, double> normalize_visual(const std::map<std::string, double>& distances) {
    if (distances.empty()) throw ValidationError("normalize_visual: empty distance map");
    double dmin = 1e300, dmax = -1e300;
    for (const auto& [cls, d] : distances) {
        if (!std::isfinite(d)) throw ValidationError("normalize_visual: non-finite distance");
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    std::map<std::string, double> out;
    for (const auto& [cls, d] : distances)
        out[cls] = (dmax == dmin) ? 0.5 : (dmax - d) / (dmax - dmin);
    return out;
}

double comprehensive_similarity(double s_v, double s_s, double alpha) {
    if (s_v < 0 || s_v > 1 || s_s < 0 || s_s > 1 || alpha < 0 || alpha > 1)
        throw ValidationError("comprehensive_similarity: arguments must lie in [0,1]");
    return alpha * s_v + (1 - alpha) * s_s;
}

SimilarityTable build_table(const std::string& unseen, const DetectorModel& cu,
                            const DetectorModel& weak, const Taxonomy& taxonomy, double alpha,
                            const SimilarityThresholds& thresholds) {
    if (!(cu.arch == weak.arch)) throw ValidationError("build_table: architecture mismatch");
    const auto wu = class_weight_vector(cu, unseen);

    std::map<std::string, double> distances;
    for (const auto& seen : weak.classes)
        distances[seen] = visual_distance(wu, class_weight_vector(weak, seen));
    const auto s_v = normalize_visual(distances);

    SimilarityTable tbl;
    tbl.unseen = unseen;
    tbl.alpha = alpha;
    for (const auto& seen : weak.classes) {
        SimilarityRow row;
        row.d_vis = distances.at(seen);
        row.s_v = s_v.at(seen);
        row.s_s = path_similarity(taxonomy, unseen, seen);
        row.s = comprehensive_similarity(row.s_v, row.s_s, alpha);
        row.eligible = row.s_v >= thresholds.v && row.s_s >= thresholds.s;
        tbl.rows[seen] = row;
    }
    return tbl;
}

NeighborSet topk_neighbors(const SimilarityTable& tbl, int k, bool normalize_weights) {
    if (k < 1) throw ValidationError("topk_neighbors: k must be >= 1");
    std::vector<std::pair<std::string, double>> eligible;
    for (const auto& [cls, row] : tbl.rows)
        if (row.eligible) eligible.emplace_back(cls, row.s);
    if (eligible.empty()) throw ValidationError("topk_neighbors: empty eligible set");

    std::sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(eligible.size()) > k) eligible.resize(k);

    NeighborSet out;
    out.entries = std::move(eligible);
    if (normalize_weights) {
        double sum = 0;
        for (const auto& [cls, s] : out.entries) sum += s;
        if (sum <= 0) {
            for (auto& [cls, w] : out.entries) w = 1.0 / out.entries.size();
        } else {
            for (auto& [cls, w] : out.entries) w /= sum;
        }
    }
    return out;
}

double average_similarity(const SimilarityTable& tbl, int m) {
    if (m < 1) throw ValidationError("average_similarity: m must be >= 1");
    std::vector<double> s;
    for (const auto& [cls, row] : tbl.rows)
        if (row.eligible) s.push_back(row.s);
    if (m > static_cast<int>(s.size()))
        throw ValidationError("average_similarity: m exceeds eligible rows");
    std::sort(s.rbegin(), s.rend());
    double sum = 0;
    for (int i = 0; i < m; ++i) sum += s[i];
    return sum / m;
}

void write_similarity_csv(const std::filesystem::path& path, const SimilarityTable& tbl) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write similarity table: " + path.string());
    out << "seen_class,d_vis,s_v,s_s,s,eligible\n";
    out.precision(17);
    for (const auto& [cls, r] : tbl.rows)
        out << cls << "," << r.d_vis << "," << r.s_v << "," << r.s_s << "," << r.s << ","
            << (r.eligible ? 1 : 0) << "\n";
}

SimilarityTable read_similarity_csv(const std::filesystem::path& path, const std::string& unseen,
                                    double alpha) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot read similarity table: " + path.string());
    SimilarityTable tbl;
    tbl.unseen = unseen;
    tbl.alpha = alpha;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cls, field;
        std::getline(ls, cls, ',');
        SimilarityRow r;
        std::getline(ls, field, ',');
        r.d_vis = std::stod(field);
        std::getline(ls, field, ',');
        r.s_v = std::stod(field);
        std::getline(ls, field, ',');
        r.s_s = std::stod(field);
        std::getline(ls, field, ',');
        r.s = std::stod(field);
        std::getline(ls, field, ',');
        r.eligible = field == "1";
        tbl.rows[cls] = r;
    }
    return tbl;
}

} // namespace unseennet
