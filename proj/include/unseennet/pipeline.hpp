#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "unseennet/dataset.hpp"
#include "unseennet/evalmap.hpp"
#include "unseennet/simrank.hpp"
#include "unseennet/taxonomy.hpp"
#include "unseennet/tinydet.hpp"

namespace unseennet {

// Every field has a usable default; a JSON config file overrides by key.
struct PipelineConfig {
    std::filesystem::path taxonomy_path = "data/shapesworld.tax";
    std::filesystem::path run_dir = "runs";

    std::vector<std::string> seen_classes = {"pentagon",  "square",  "rectangle", "triangle",
                                             "circle",    "ring",    "star5",     "arrow_up",
                                             "cross_plus", "boxed_dot"};
    std::vector<std::string> unseen_classes = {"hexagon", "ellipse", "star6", "diamond"};

    ArchConfig arch;
    GeneratorConfig generator;
    int train_images = 400;                    // seen detection training set
    int classification_images_per_class = 40;  // weak baseline training set
    int unseen_train_images = 256;             // per online request
    int test_images = 60;                      // held-out detection set per unseen class
    int baseline_epochs = 30;
    double baseline_lr_initial = 1e-3;
    double baseline_lr_final = 1e-4;
    double finetune_lr = 1e-4;
    int batch_size = 16;

    double alpha = 0.6;
    int k = 10;
    double budget_s = 120.0;
    // measured per request when 0; pin to a constant for reproducible epoch
    // counts across runs on one machine
    double step_time_s = 0.0;
    std::string mode = "finetune_adapt";  // no_adapt | finetune | finetune_adapt
    double eval_conf = 0.05;
    double eval_iou = 0.5;
    uint64_t seed = 1234;

    static PipelineConfig from_file(const std::filesystem::path& path);
    std::string hash() const;
    void validate(const Taxonomy& tax) const;

    std::filesystem::path data_dir() const { return run_dir / "data"; }
    std::filesystem::path baselines_dir() const { return run_dir / "baselines"; }
    std::filesystem::path runs_dir() const { return run_dir / "runs"; }
    std::filesystem::path reports_dir() const { return run_dir / "reports"; }
};

struct StageTimings {
    double ingest_s = 0, measure_s = 0, finetune_s = 0, adapt_s = 0, eval_s = 0;
};

struct RunRecord {
    std::string id;
    std::string unseen, source, mode;
    uint64_t seed = 0;
    std::string config_hash;

    double budget_s = 0;
    double step_time_s = 0;
    int epochs = 0, steps_per_epoch = 0;
    bool reused_finetune = false;

    StageTimings timings;
    double map = 0;
    double avg_similarity = 0;  // Eq. 4 style mean over the top-10 rows
    uint64_t train_data_hash = 0, test_data_hash = 0, model_hash = 0;
    std::map<std::string, std::string> artifacts;  // name -> path under the run dir
};

void save_run_record(const RunRecord& r, const std::filesystem::path& path);
RunRecord load_run_record(const std::filesystem::path& path);

// Generated lazily and cached on disk; regenerating is a no-op when present.
DatasetManifest ensure_detection_train(const PipelineConfig& cfg);
DatasetManifest ensure_classification_train(const PipelineConfig& cfg);
DatasetManifest ensure_unseen_test(const PipelineConfig& cfg, const std::string& u);

// D_S on the detection set (full training), then D_W initialized from D_S
// with only the head retrained on the classification set. Both persisted
// under baselines_dir with a meta document.
void train_baselines(const PipelineConfig& cfg);

struct RequestOptions {
    std::filesystem::path images_dir;  // empty: synthesize iconic images
    std::filesystem::path reuse_cu;    // existing C_u checkpoint, skips fine-tuning
};

// Figure-style online request: ingest, pick the source by semantic rank,
// rename its slot, budgeted fine-tune of the class rows, optional delta
// adaptation, then evaluation on the held-out test set.
RunRecord request_unseen(const PipelineConfig& cfg, const std::string& unseen,
                         const RequestOptions& opt = {});

std::vector<Detection> detect_on_manifest(const DetectorModel& m, const DatasetManifest& ds,
                                          double conf_thresh, double nms_iou = 0.45);

// Re-adapts and re-evaluates one fine-tuned C_u per alpha; fine-tuning is
// never repeated. Writes `alpha,mAP` CSV and returns the rows.
std::vector<std::pair<double, double>> alpha_sweep(const PipelineConfig& cfg,
                                                   const std::string& unseen,
                                                   const std::vector<double>& alphas,
                                                   const std::filesystem::path& out_csv);

// Report bundle: budget curve, mAP vs average similarity, mode ladder.
void write_reports(const PipelineConfig& cfg, const std::vector<std::string>& run_ids);

} // namespace unseennet
