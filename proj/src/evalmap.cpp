#include "unseennet/evalmap.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "unseennet/errors.hpp"
#include "unseennet/rng.hpp"

using json = nlohmann::json;

namespace unseennet {

double iou(const Box& a, const Box& b) {
    if (a.xmax <= a.xmin || a.ymax <= a.ymin || b.xmax <= b.xmin || b.ymax <= b.ymin)
        throw ValidationError("iou: degenerate box");
    const double ix = std::max(0.0, std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin));
    const double iy = std::max(0.0, std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin));
    const double inter = ix * iy;
    const double uni =
        (a.xmax - a.xmin) * (a.ymax - a.ymin) + (b.xmax - b.xmin) * (b.ymax - b.ymin) - inter;
    return inter / uni;
}

std::map<std::string, std::vector<LabeledDetection>> match_detections(
    const std::vector<Detection>& dets,
    const std::map<std::string, std::vector<BoxLabel>>& gts_by_image, double iou_thresh) {
    // (class, image) -> matched flags alongside the gt boxes
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<Box, bool>>> gt;
    for (const auto& [image, boxes] : gts_by_image)
        for (const auto& b : boxes)
            gt[{b.cls, image}].emplace_back(
                Box{static_cast<double>(b.xmin), static_cast<double>(b.ymin),
                    static_cast<double>(b.xmax), static_cast<double>(b.ymax)},
                false);

    std::map<std::string, std::vector<std::pair<int, const Detection*>>> by_class;
    for (size_t i = 0; i < dets.size(); ++i)
        by_class[dets[i].cls].emplace_back(static_cast<int>(i), &dets[i]);

    std::map<std::string, std::vector<LabeledDetection>> out;
    for (auto& [cls, cdets] : by_class) {
        std::sort(cdets.begin(), cdets.end(), [](const auto& a, const auto& b) {
            if (a.second->confidence != b.second->confidence)
                return a.second->confidence > b.second->confidence;
            return a.first < b.first;  // confidence ties: insertion order
        });
        auto& labeled = out[cls];
        for (const auto& [idx, d] : cdets) {
            LabeledDetection ld{d->confidence, idx, false};
            auto git = gt.find({cls, d->image_id});
            if (git != gt.end()) {
                const Box db{d->xmin, d->ymin, d->xmax, d->ymax};
                double best = -1;
                int best_i = -1;
                for (size_t gi = 0; gi < git->second.size(); ++gi) {
                    if (git->second[gi].second) continue;  // already claimed
                    const double v = iou(db, git->second[gi].first);
                    if (v >= iou_thresh && v > best) {
                        best = v;
                        best_i = static_cast<int>(gi);
                    }
                }
                if (best_i >= 0) {
                    git->second[best_i].second = true;
                    ld.tp = true;
                }
            }
            labeled.push_back(ld);
        }
    }
    return out;
}

double average_precision(const std::vector<LabeledDetection>& labeled, int num_gt) {
    if (num_gt < 1) throw ValidationError("average_precision: num_gt must be >= 1");
    if (labeled.empty()) return 0.0;

    std::vector<double> precision, recall;
    int tp = 0, fp = 0;
    for (const auto& d : labeled) {
        d.tp ? ++tp : ++fp;
        precision.push_back(static_cast<double>(tp) / (tp + fp));
        recall.push_back(static_cast<double>(tp) / num_gt);
    }
    // all-point interpolation: running max of precision from the right
    for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
        precision[i] = std::max(precision[i], precision[i + 1]);

    double ap = 0, prev_r = 0;
    for (size_t i = 0; i < recall.size(); ++i) {
        if (recall[i] > prev_r) {
            ap += (recall[i] - prev_r) * precision[i];
            prev_r = recall[i];
        }
    }
    return ap;
}

double mean_ap(const std::vector<double>& per_class_aps) {
    if (per_class_aps.empty()) throw ValidationError("mean_ap: no evaluable classes");
    double sum = 0;
    for (double ap : per_class_aps) sum += ap;
    return sum / static_cast<double>(per_class_aps.size());
}

EvalReport evaluate_detections(const std::vector<Detection>& dets, const DatasetManifest& gt,
                               double iou_thresh) {
    EvalReport r;
    r.iou_threshold = iou_thresh;

    std::map<std::string, std::vector<BoxLabel>> gts_by_image;
    std::map<std::string, int> gt_counts;
    for (const auto& s : gt.samples) {
        auto& v = gts_by_image[s.image_path];
        for (const auto& o : s.objects) {
            v.push_back(o);
            gt_counts[o.cls]++;
        }
    }

    auto labeled = match_detections(dets, gts_by_image, iou_thresh);

    std::set<std::string> all_classes(gt.classes.begin(), gt.classes.end());
    for (const auto& [cls, v] : labeled) all_classes.insert(cls);

    std::vector<double> aps;
    for (const auto& cls : all_classes) {
        const int num_gt = gt_counts.count(cls) ? gt_counts[cls] : 0;
        if (num_gt == 0) {
            r.excluded.push_back(cls);
            continue;
        }
        EvalReport::ClassStats st;
        st.num_gt = num_gt;
        const auto it = labeled.find(cls);
        if (it != labeled.end()) {
            for (const auto& d : it->second) d.tp ? ++st.tp : ++st.fp;
            st.ap = average_precision(it->second, num_gt);
        }
        aps.push_back(st.ap);
        r.per_class[cls] = st;
    }
    if (aps.empty()) throw ValidationError("evaluate: no class with ground truth");
    r.map = mean_ap(aps);
    return r;
}

std::vector<std::pair<std::string, std::vector<std::string>>> make_splits(
    const std::vector<std::string>& classes, const std::vector<int>& sizes, uint64_t seed) {
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    for (size_t si = 0; si < sizes.size(); ++si) {
        const int size = sizes[si];
        if (size < 1 || size > static_cast<int>(classes.size()))
            throw ValidationError("make_splits: size " + std::to_string(size) +
                                  " exceeds class count");
        std::vector<std::string> pool = classes;
        Rng rng(derive_seed(seed, si));
        rng.shuffle(pool);
        pool.resize(size);
        out.emplace_back(std::to_string(size) + "-class", std::move(pool));
    }
    return out;
}

void write_detections(const std::filesystem::path& path, const std::vector<Detection>& dets) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write detections: " + path.string());
    for (const auto& d : dets) {
        json j = {{"image", d.image_id},
                  {"class", d.cls},
                  {"confidence", d.confidence},
                  {"bbox", {d.xmin, d.ymin, d.xmax, d.ymax}}};
        out << j.dump() << "\n";
    }
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot read detections: " + path.string());
    std::vector<Detection> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        Detection d;
        d.image_id = j.at("image").get<std::string>();
        d.cls = j.at("class").get<std::string>();
        d.confidence = j.at("confidence").get<double>();
        d.xmin = j.at("bbox").at(0).get<double>();
        d.ymin = j.at("bbox").at(1).get<double>();
        d.xmax = j.at("bbox").at(2).get<double>();
        d.ymax = j.at("bbox").at(3).get<double>();
        out.push_back(std::move(d));
    }
    return out;
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& r) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write report: " + path.string());
    out << "class,AP,num_GT,TP,FP\n";
    for (const auto& [cls, st] : r.per_class)
        out << cls << "," << st.ap << "," << st.num_gt << "," << st.tp << "," << st.fp << "\n";
    for (const auto& cls : r.excluded) out << cls << ",excluded,0,,\n";
    out << "mAP," << r.map << ",,,\n";
}

} // namespace unseennet
