#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "unseennet/dataset.hpp"
#include "unseennet/image.hpp"

namespace unseennet {

struct Anchor {
    double w = 0, h = 0;  // fractions of input size
};

// Single-scale grid detector: 4 stride-2 conv blocks (3->16->32->48->64,
// 3x3, leaky ReLU) followed by a 1x1 head with anchors*(5+C) channels.
struct ArchConfig {
    int input_size = 96;
    int grid = 6;  // = input_size / 16
    std::vector<Anchor> anchors = {{0.24, 0.24}, {0.55, 0.55}};
    int head_channels = 64;  // feature width F into the 1x1 head

    static constexpr int block_channels[4] = {16, 32, 48, 64};

    void validate() const;
    bool operator==(const ArchConfig& o) const;
    // per-class slice length: anchors * (F + 1)
    int weight_vector_length() const {
        return static_cast<int>(anchors.size()) * (head_channels + 1);
    }
};

struct DetectorModel {
    ArchConfig arch;
    std::vector<std::string> classes;
    std::map<std::string, std::vector<double>> params;  // named flat arrays
    std::vector<double> history;                        // per-epoch training losses
    uint64_t rng_seed = 0;

    int num_classes() const { return static_cast<int>(classes.size()); }
    int class_index(const std::string& c) const;  // throws ValidationError
};

// Planar CHW double image in [0,1].
struct FloatImage {
    int width = 0, height = 0;
    std::vector<double> chw;
    static FloatImage from(const Image& img);
};

// grid x grid x anchors x (5+C); per-anchor layout (tx, ty, tw, th,
// objectness-logit, class-logits...).
struct RawGrid {
    int grid = 0, anchors = 0, channels = 0;
    std::vector<double> values;

    double& at(int cy, int cx, int a, int j) {
        return values[((static_cast<size_t>(cy) * grid + cx) * anchors + a) * channels + j];
    }
    double at(int cy, int cx, int a, int j) const {
        return values[((static_cast<size_t>(cy) * grid + cx) * anchors + a) * channels + j];
    }
};

struct TrainSchedule {
    enum class Mode { baseline, unseen };
    // which parameters move: the whole net, the 1x1 head, or only the
    // per-class score rows of the head (box/objectness channels frozen)
    enum class Scope { all, head, class_rows };
    Mode mode = Mode::baseline;
    Scope scope = Scope::all;
    double lr_initial = 1e-3;
    double lr_final = 1e-4;
    int epochs = 1;
    int batch_size = 16;

    void validate() const;
    // baseline: initial LR for the first third, exponential decay to lr_final
    // over the second third, lr_final for the rest. unseen: constant lr_initial.
    double learning_rate(int epoch) const;
};

struct LossComponents {
    double localization = 0, objectness = 0, classification = 0;
    double total() const { return localization + objectness + classification; }
};

struct Detection {
    std::string image_id;
    std::string cls;
    double confidence = 0;
    double xmin = 0, ymin = 0, xmax = 0, ymax = 0;
    int cell_index = 0;  // decode provenance, used for deterministic ordering
};

using ParamMap = std::map<std::string, std::vector<double>>;

DetectorModel init_model(const ArchConfig& arch, const std::vector<std::string>& classes,
                         uint64_t seed);

RawGrid forward(const DetectorModel& m, const FloatImage& img);

LossComponents compute_loss(const DetectorModel& m, const RawGrid& raw,
                            const std::vector<BoxLabel>& gts);

// Forward pass plus gradient of the total loss accumulated into `grads`
// (same keys/shapes as m.params).
LossComponents forward_backward(const DetectorModel& m, const FloatImage& img,
                                const std::vector<BoxLabel>& gts, ParamMap& grads);

// SGD with momentum 0.9, seeded shuffling. Returns the trained model and the
// per-epoch mean losses.
std::pair<DetectorModel, std::vector<double>> train(const DetectorModel& m,
                                                    const DatasetManifest& dataset,
                                                    const TrainSchedule& sched, uint64_t seed);

// Metadata-only: swaps the ConceptId of one head slot, parameters untouched.
DetectorModel rename_slot(const DetectorModel& m, const std::string& old_cls,
                          const std::string& new_cls);

// Class-score channel weights + bias across anchors, length anchors*(F+1).
std::vector<double> class_weight_vector(const DetectorModel& m, const std::string& cls);
DetectorModel set_class_weight_vector(const DetectorModel& m, const std::string& cls,
                                      const std::vector<double>& v);

void save_checkpoint(const DetectorModel& m, const std::filesystem::path& path);
DetectorModel load_checkpoint(const std::filesystem::path& path);

// confidence = sigmoid(objectness) * softmax(class); boxes clipped to the
// image; per-class greedy NMS; output ordered by confidence desc, then cell.
std::vector<Detection> decode(const DetectorModel& m, const RawGrid& raw, double conf_thresh,
                              double nms_iou = 0.45);

uint64_t params_hash(const DetectorModel& m);

} // namespace unseennet
