#pragma once

#include <map>
#include <string>
#include <vector>

#include "unseennet/dataset.hpp"
#include "unseennet/tinydet.hpp"

namespace unseennet {

struct Box {
    double xmin = 0, ymin = 0, xmax = 0, ymax = 0;
};

// intersection over union; throws on zero-area boxes
double iou(const Box& a, const Box& b);

struct LabeledDetection {
    double confidence = 0;
    int index = 0;  // insertion order, breaks confidence ties
    bool tp = false;
};

// Pascal-style greedy matching at `iou_thresh`: per class, per image,
// confidence-descending detections claim the unmatched GT with highest
// IoU >= thresh; each GT matches at most once.
std::map<std::string, std::vector<LabeledDetection>> match_detections(
    const std::vector<Detection>& dets,
    const std::map<std::string, std::vector<BoxLabel>>& gts_by_image, double iou_thresh);

// All-point interpolated AP from a confidence-ordered TP/FP sequence.
double average_precision(const std::vector<LabeledDetection>& labeled, int num_gt);

double mean_ap(const std::vector<double>& per_class_aps);

struct EvalReport {
    double iou_threshold = 0.5;
    double map = 0;
    struct ClassStats {
        double ap = 0;
        int num_gt = 0, tp = 0, fp = 0;
    };
    std::map<std::string, ClassStats> per_class;   // classes with >= 1 GT
    std::vector<std::string> excluded;             // zero-GT classes, not in the mean
};

EvalReport evaluate_detections(const std::vector<Detection>& dets, const DatasetManifest& gt,
                               double iou_thresh = 0.5);

// Seeded sampling without replacement; one named split per requested size.
std::vector<std::pair<std::string, std::vector<std::string>>> make_splits(
    const std::vector<std::string>& classes, const std::vector<int>& sizes, uint64_t seed);

// JSON Lines {image, class, confidence, bbox} / CSV `class,AP,num_GT,TP,FP`.
void write_detections(const std::filesystem::path& path, const std::vector<Detection>& dets);
std::vector<Detection> read_detections(const std::filesystem::path& path);
void write_report_csv(const std::filesystem::path& path, const EvalReport& r);

} // namespace unseennet
