#include "unseennet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "unseennet/adapt.hpp"
#include "unseennet/budget.hpp"
#include "unseennet/errors.hpp"
#include "unseennet/hash.hpp"
#include "unseennet/rng.hpp"
#include "unseennet/shapes.hpp"

using json = nlohmann::json;

namespace unseennet {

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json generator_json(const GeneratorConfig& g) {
    return json{{"image_size", g.image_size},
                {"min_objects", g.min_objects},
                {"max_objects", g.max_objects},
                {"min_radius_frac", g.min_radius_frac},
                {"max_radius_frac", g.max_radius_frac},
                {"iconic_min_extent", g.iconic_min_extent},
                {"max_distractors", g.max_distractors},
                {"noise_amp", g.noise_amp},
                {"min_test_images", g.min_test_images}};
}

void apply_generator(GeneratorConfig& g, const json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "image_size") g.image_size = value.get<int>();
        else if (key == "min_objects") g.min_objects = value.get<int>();
        else if (key == "max_objects") g.max_objects = value.get<int>();
        else if (key == "min_radius_frac") g.min_radius_frac = value.get<double>();
        else if (key == "max_radius_frac") g.max_radius_frac = value.get<double>();
        else if (key == "iconic_min_extent") g.iconic_min_extent = value.get<double>();
        else if (key == "max_distractors") g.max_distractors = value.get<int>();
        else if (key == "noise_amp") g.noise_amp = value.get<double>();
        else if (key == "min_test_images") g.min_test_images = value.get<int>();
        else throw ValidationError("config: unknown generator key '" + key + "'");
    }
}

json config_json(const PipelineConfig& c) {
    json anchors = json::array();
    for (const auto& a : c.arch.anchors) anchors.push_back({a.w, a.h});
    return json{{"taxonomy_path", c.taxonomy_path.string()},
                {"run_dir", c.run_dir.string()},
                {"seen_classes", c.seen_classes},
                {"unseen_classes", c.unseen_classes},
                {"arch",
                 {{"input_size", c.arch.input_size},
                  {"grid", c.arch.grid},
                  {"anchors", anchors},
                  {"head_channels", c.arch.head_channels}}},
                {"generator", generator_json(c.generator)},
                {"train_images", c.train_images},
                {"classification_images_per_class", c.classification_images_per_class},
                {"unseen_train_images", c.unseen_train_images},
                {"test_images", c.test_images},
                {"baseline_epochs", c.baseline_epochs},
                {"baseline_lr_initial", c.baseline_lr_initial},
                {"baseline_lr_final", c.baseline_lr_final},
                {"finetune_lr", c.finetune_lr},
                {"batch_size", c.batch_size},
                {"alpha", c.alpha},
                {"k", c.k},
                {"budget_s", c.budget_s},
                {"step_time_s", c.step_time_s},
                {"mode", c.mode},
                {"eval_conf", c.eval_conf},
                {"eval_iou", c.eval_iou},
                {"seed", c.seed}};
}

std::string short_hash(const std::string& s) { return hex64(fnv1a64(s)).substr(8); }

std::string classes_key(const std::vector<std::string>& classes) {
    std::string key;
    for (const auto& c : classes) key += c + ";";
    return key;
}

DatasetManifest ensure_set(const std::filesystem::path& root, const std::vector<std::string>& cls,
                           int n, uint64_t seed, const GeneratorConfig& gen, bool detection) {
    if (std::filesystem::exists(root / "meta.json")) return load_manifest(root);
    std::filesystem::create_directories(root);
    return detection ? generate_detection_set(cls, n, seed, gen, root)
                     : generate_classification_set(cls, n, seed, gen, root);
}

std::filesystem::path set_path(const PipelineConfig& cfg, const std::string& stem,
                               const std::vector<std::string>& cls, int n, uint64_t seed) {
    const std::string key = stem + "|" + classes_key(cls) + "|" + std::to_string(n) + "|" +
                            std::to_string(seed) + "|" + cfg.generator.fingerprint();
    return cfg.data_dir() / (stem + "-" + short_hash(key));
}

json timings_json(const StageTimings& t) {
    return json{{"ingest_s", t.ingest_s},
                {"measure_s", t.measure_s},
                {"finetune_s", t.finetune_s},
                {"adapt_s", t.adapt_s},
                {"eval_s", t.eval_s}};
}

} // namespace

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("config parse error: " + std::string(e.what()));
    }

    PipelineConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "taxonomy_path") c.taxonomy_path = value.get<std::string>();
            else if (key == "run_dir") c.run_dir = value.get<std::string>();
            else if (key == "seen_classes") c.seen_classes = value.get<std::vector<std::string>>();
            else if (key == "unseen_classes")
                c.unseen_classes = value.get<std::vector<std::string>>();
            else if (key == "arch") {
                for (const auto& [ak, av] : value.items()) {
                    if (ak == "input_size") c.arch.input_size = av.get<int>();
                    else if (ak == "grid") c.arch.grid = av.get<int>();
                    else if (ak == "head_channels") c.arch.head_channels = av.get<int>();
                    else if (ak == "anchors") {
                        c.arch.anchors.clear();
                        for (const auto& p : av)
                            c.arch.anchors.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                    } else throw ValidationError("config: unknown arch key '" + ak + "'");
                }
            } else if (key == "generator") apply_generator(c.generator, value);
            else if (key == "train_images") c.train_images = value.get<int>();
            else if (key == "classification_images_per_class")
                c.classification_images_per_class = value.get<int>();
            else if (key == "unseen_train_images") c.unseen_train_images = value.get<int>();
            else if (key == "test_images") c.test_images = value.get<int>();
            else if (key == "baseline_epochs") c.baseline_epochs = value.get<int>();
            else if (key == "baseline_lr_initial") c.baseline_lr_initial = value.get<double>();
            else if (key == "baseline_lr_final") c.baseline_lr_final = value.get<double>();
            else if (key == "finetune_lr") c.finetune_lr = value.get<double>();
            else if (key == "batch_size") c.batch_size = value.get<int>();
            else if (key == "alpha") c.alpha = value.get<double>();
            else if (key == "k") c.k = value.get<int>();
            else if (key == "budget_s") c.budget_s = value.get<double>();
            else if (key == "step_time_s") c.step_time_s = value.get<double>();
            else if (key == "mode") c.mode = value.get<std::string>();
            else if (key == "eval_conf") c.eval_conf = value.get<double>();
            else if (key == "eval_iou") c.eval_iou = value.get<double>();
            else if (key == "seed") c.seed = value.get<uint64_t>();
            else throw ValidationError("config: unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ValidationError("config type error: " + std::string(e.what()));
    }
    return c;
}

std::string PipelineConfig::hash() const { return hex64(fnv1a64(config_json(*this).dump())); }

void PipelineConfig::validate(const Taxonomy& tax) const {
    arch.validate();
    if (alpha < 0 || alpha > 1) throw ValidationError("config: alpha must lie in [0,1]");
    if (k < 1) throw ValidationError("config: k must be >= 1");
    if (budget_s <= 0) throw ValidationError("config: budget_s must be positive");
    if (step_time_s < 0) throw ValidationError("config: step_time_s must be >= 0");
    if (train_images < 1 || classification_images_per_class < 1 || unseen_train_images < 1 ||
        test_images < 1)
        throw ValidationError("config: image counts must be positive");
    if (baseline_epochs < 1 || batch_size < 1)
        throw ValidationError("config: epochs and batch size must be positive");
    if (mode != "no_adapt" && mode != "finetune" && mode != "finetune_adapt")
        throw ValidationError("config: mode must be no_adapt | finetune | finetune_adapt");
    if (seen_classes.empty() || unseen_classes.empty())
        throw ValidationError("config: seen and unseen class lists must be non-empty");

    std::set<std::string> seen(seen_classes.begin(), seen_classes.end());
    if (seen.size() != seen_classes.size())
        throw ValidationError("config: duplicate seen class");
    for (const auto& u : unseen_classes)
        if (seen.count(u))
            throw ValidationError("config: class '" + u + "' is both seen and unseen");
    for (const auto& c : seen_classes) {
        resolve_alias(tax, c);
        if (!is_renderable(c)) throw ValidationError("config: class '" + c + "' not renderable");
    }
    for (const auto& c : unseen_classes) {
        resolve_alias(tax, c);
        if (!is_renderable(c)) throw ValidationError("config: class '" + c + "' not renderable");
    }
}

void save_run_record(const RunRecord& r, const std::filesystem::path& path) {
    json j{{"id", r.id},
           {"unseen", r.unseen},
           {"source", r.source},
           {"mode", r.mode},
           {"seed", r.seed},
           {"config_hash", r.config_hash},
           {"budget_s", r.budget_s},
           {"step_time_s", r.step_time_s},
           {"epochs", r.epochs},
           {"steps_per_epoch", r.steps_per_epoch},
           {"reused_finetune", r.reused_finetune},
           {"timings", timings_json(r.timings)},
           {"map", r.map},
           {"avg_similarity", r.avg_similarity},
           {"train_data_hash", r.train_data_hash},
           {"test_data_hash", r.test_data_hash},
           {"model_hash", r.model_hash},
           {"artifacts", r.artifacts}};
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write run record: " + path.string());
    out << j.dump(2) << "\n";
}

RunRecord load_run_record(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("missing run record: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw RuntimeError("corrupt run record " + path.string() + ": " + e.what());
    }
    RunRecord r;
    r.id = j.at("id").get<std::string>();
    r.unseen = j.at("unseen").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.budget_s = j.at("budget_s").get<double>();
    r.step_time_s = j.at("step_time_s").get<double>();
    r.epochs = j.at("epochs").get<int>();
    r.steps_per_epoch = j.at("steps_per_epoch").get<int>();
    r.reused_finetune = j.at("reused_finetune").get<bool>();
    const auto& t = j.at("timings");
    r.timings.ingest_s = t.at("ingest_s").get<double>();
    r.timings.measure_s = t.at("measure_s").get<double>();
    r.timings.finetune_s = t.at("finetune_s").get<double>();
    r.timings.adapt_s = t.at("adapt_s").get<double>();
    r.timings.eval_s = t.at("eval_s").get<double>();
    r.map = j.at("map").get<double>();
    r.avg_similarity = j.at("avg_similarity").get<double>();
    r.train_data_hash = j.at("train_data_hash").get<uint64_t>();
    r.test_data_hash = j.at("test_data_hash").get<uint64_t>();
    r.model_hash = j.at("model_hash").get<uint64_t>();
    r.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    return r;
}

DatasetManifest ensure_detection_train(const PipelineConfig& cfg) {
    const auto seed = derive_seed(cfg.seed, fnv1a64("det-train"));
    return ensure_set(set_path(cfg, "det_train", cfg.seen_classes, cfg.train_images, seed),
                      cfg.seen_classes, cfg.train_images, seed, cfg.generator, true);
}

DatasetManifest ensure_classification_train(const PipelineConfig& cfg) {
    const auto seed = derive_seed(cfg.seed, fnv1a64("cls-train"));
    const int n = cfg.classification_images_per_class * static_cast<int>(cfg.seen_classes.size());
    return ensure_set(set_path(cfg, "cls_train", cfg.seen_classes, n, seed), cfg.seen_classes, n,
                      seed, cfg.generator, false);
}

DatasetManifest ensure_unseen_test(const PipelineConfig& cfg, const std::string& u) {
    const auto seed = derive_seed(cfg.seed, fnv1a64("test-" + u));
    return ensure_set(set_path(cfg, "test_" + u, {u}, cfg.test_images, seed), {u},
                      cfg.test_images, seed, cfg.generator, true);
}

void train_baselines(const PipelineConfig& cfg) {
    const auto tax = load_taxonomy(cfg.taxonomy_path);
    cfg.validate(tax);

    const auto det = ensure_detection_train(cfg);
    const auto cls = ensure_classification_train(cfg);
    if (det.classes != cls.classes)
        throw ValidationError("train_baselines: class order differs between the two datasets");

    std::filesystem::create_directories(cfg.baselines_dir());

    TrainSchedule base;
    base.mode = TrainSchedule::Mode::baseline;
    base.lr_initial = cfg.baseline_lr_initial;
    base.lr_final = cfg.baseline_lr_final;
    base.epochs = cfg.baseline_epochs;
    base.batch_size = cfg.batch_size;

    const auto t0 = std::chrono::steady_clock::now();
    auto init = init_model(cfg.arch, cfg.seen_classes, derive_seed(cfg.seed, fnv1a64("init")));
    auto [strong, strong_hist] = train(init, det, base, derive_seed(cfg.seed, fnv1a64("strong")));
    const double strong_s = seconds_since(t0);

    // The weak baseline shares the strong backbone: only the head is retrained
    // on iconic images with full-image boxes, keeping the two heads in one
    // feature space so the per-class deltas stay meaningful.
    TrainSchedule weak_sched = base;
    weak_sched.scope = TrainSchedule::Scope::head;
    const auto t1 = std::chrono::steady_clock::now();
    auto [weak, weak_hist] = train(strong, cls, weak_sched, derive_seed(cfg.seed, fnv1a64("weak")));
    const double weak_s = seconds_since(t1);

    save_checkpoint(strong, cfg.baselines_dir() / "strong.ckpt");
    save_checkpoint(weak, cfg.baselines_dir() / "weak.ckpt");

    json meta{{"config_hash", cfg.hash()},
              {"classes", cfg.seen_classes},
              {"detection_data_hash", dataset_hash(det)},
              {"classification_data_hash", dataset_hash(cls)},
              {"strong_train_s", strong_s},
              {"weak_train_s", weak_s},
              {"strong_final_loss", strong_hist.empty() ? 0.0 : strong_hist.back()},
              {"weak_final_loss", weak_hist.empty() ? 0.0 : weak_hist.back()}};
    std::ofstream out(cfg.baselines_dir() / "meta.json");
    if (!out) throw RuntimeError("cannot write baseline meta");
    out << meta.dump(2) << "\n";
}

std::vector<Detection> detect_on_manifest(const DetectorModel& m, const DatasetManifest& ds,
                                          double conf_thresh, double nms_iou) {
    std::vector<Detection> out;
    for (const auto& s : ds.samples) {
        const auto img = FloatImage::from(read_png(ds.root / s.image_path));
        auto dets = decode(m, forward(m, img), conf_thresh, nms_iou);
        for (auto& d : dets) {
            d.image_id = s.image_path;
            out.push_back(std::move(d));
        }
    }
    return out;
}

RunRecord request_unseen(const PipelineConfig& cfg, const std::string& unseen,
                         const RequestOptions& opt) {
    const auto tax = load_taxonomy(cfg.taxonomy_path);
    cfg.validate(tax);
    const std::string u = resolve_alias(tax, unseen);
    for (const auto& s : cfg.seen_classes)
        if (s == u) throw ValidationError("request_unseen: '" + u + "' is a seen class");
    if (!is_renderable(u)) throw ValidationError("request_unseen: '" + u + "' not renderable");

    const auto strong_path = cfg.baselines_dir() / "strong.ckpt";
    const auto weak_path = cfg.baselines_dir() / "weak.ckpt";
    if (!std::filesystem::exists(strong_path) || !std::filesystem::exists(weak_path))
        throw ValidationError("request_unseen: baselines missing, run train-baselines first");
    const auto strong = load_checkpoint(strong_path);
    const auto weak = load_checkpoint(weak_path);

    RunRecord rec;
    rec.unseen = u;
    rec.mode = cfg.mode;
    rec.seed = cfg.seed;
    rec.config_hash = cfg.hash();
    rec.budget_s = cfg.budget_s;
    rec.id = u + "-" + cfg.mode + "-s" + std::to_string(cfg.seed);

    const auto run_dir = cfg.runs_dir() / rec.id;
    std::filesystem::create_directories(run_dir);

    // stage 1: image collection (local directory or synthetic iconic set)
    auto t0 = std::chrono::steady_clock::now();
    DatasetManifest train_set;
    if (!opt.images_dir.empty()) {
        train_set = ingest_directory(opt.images_dir, u);
    } else {
        const auto seed = derive_seed(cfg.seed, fnv1a64("unseen-" + u));
        train_set = ensure_set(set_path(cfg, "unseen_" + u, {u}, cfg.unseen_train_images, seed),
                               {u}, cfg.unseen_train_images, seed, cfg.generator, false);
    }
    if (train_set.samples.empty()) throw ValidationError("request_unseen: empty image source");
    rec.timings.ingest_s = seconds_since(t0);
    rec.train_data_hash = dataset_hash(train_set);

    // stage 2: source selection by semantic rank alone
    const auto ranked = nearest_semantic(tax, u, cfg.seen_classes);
    rec.source = ranked.front().first;

    // stage 3: rename the source slot on a copy of the starting baseline
    const auto& start = cfg.mode == "no_adapt" ? weak : strong;
    auto renamed = rename_slot(start, rec.source, u);

    // stage 4: budgeted fine-tuning of the class rows
    DetectorModel cu;
    if (!opt.reuse_cu.empty()) {
        cu = load_checkpoint(opt.reuse_cu);
        rec.reused_finetune = true;
        rec.step_time_s = cfg.step_time_s;
        const auto plan = epochs_for_budget(cfg.budget_s,
                                            static_cast<int>(train_set.samples.size()),
                                            cfg.batch_size,
                                            cfg.step_time_s > 0 ? cfg.step_time_s : 1.0);
        if (cfg.step_time_s > 0) rec.epochs = plan.epochs;
        rec.steps_per_epoch = plan.steps_per_epoch;
    } else {
        if (cfg.step_time_s > 0) {
            rec.step_time_s = cfg.step_time_s;
        } else {
            t0 = std::chrono::steady_clock::now();
            rec.step_time_s = measure_step_time(renamed, train_set, cfg.batch_size, 1, 3);
            rec.timings.measure_s = seconds_since(t0);
        }

        const auto plan =
            epochs_for_budget(cfg.budget_s, static_cast<int>(train_set.samples.size()),
                              cfg.batch_size, rec.step_time_s);
        rec.epochs = plan.epochs;
        rec.steps_per_epoch = plan.steps_per_epoch;

        TrainSchedule sched;
        sched.mode = TrainSchedule::Mode::unseen;
        sched.scope = TrainSchedule::Scope::class_rows;
        sched.lr_initial = cfg.finetune_lr;
        sched.lr_final = cfg.finetune_lr;
        sched.epochs = plan.epochs;
        sched.batch_size = cfg.batch_size;

        t0 = std::chrono::steady_clock::now();
        cu = train(renamed, train_set, sched, derive_seed(cfg.seed, fnv1a64("finetune-" + u))).first;
        rec.timings.finetune_s = seconds_since(t0);
    }
    save_checkpoint(cu, run_dir / "cu.ckpt");
    rec.artifacts["cu"] = "cu.ckpt";

    // the similarity table is descriptive for every mode, applied only in
    // finetune_adapt
    t0 = std::chrono::steady_clock::now();
    const auto tbl = build_table(u, cu, weak, tax, cfg.alpha);
    write_similarity_csv(run_dir / "similarity.csv", tbl);
    rec.artifacts["similarity"] = "similarity.csv";
    int eligible = 0;
    for (const auto& [c, row] : tbl.rows) eligible += row.eligible;
    rec.avg_similarity = average_similarity(tbl, std::min(10, eligible));

    DetectorModel du = cu;
    if (cfg.mode == "finetune_adapt") {
        const auto neighbors = topk_neighbors(tbl, std::min<int>(cfg.k, eligible));
        const auto deltas = compute_deltas(strong, weak);
        du = adapt_unseen(cu, u, deltas, neighbors);
        save_checkpoint(du, run_dir / "du.ckpt");
        rec.artifacts["du"] = "du.ckpt";
    }
    rec.timings.adapt_s = seconds_since(t0);
    rec.model_hash = params_hash(du);

    // stage 6: held-out evaluation
    t0 = std::chrono::steady_clock::now();
    const auto test_set = ensure_unseen_test(cfg, u);
    rec.test_data_hash = dataset_hash(test_set);
    const auto dets = detect_on_manifest(du, test_set, cfg.eval_conf);
    const auto report = evaluate_detections(dets, test_set, cfg.eval_iou);
    rec.map = report.map;
    rec.timings.eval_s = seconds_since(t0);

    write_detections(run_dir / "detections.jsonl", dets);
    write_report_csv(run_dir / "report.csv", report);
    rec.artifacts["detections"] = "detections.jsonl";
    rec.artifacts["report"] = "report.csv";
    save_run_record(rec, run_dir / "record.json");
    return rec;
}

std::vector<std::pair<double, double>> alpha_sweep(const PipelineConfig& cfg,
                                                   const std::string& unseen,
                                                   const std::vector<double>& alphas,
                                                   const std::filesystem::path& out_csv) {
    if (alphas.empty()) throw ValidationError("alpha_sweep: empty alpha list");
    for (double a : alphas)
        if (a < 0 || a > 1) throw ValidationError("alpha_sweep: alpha out of range");

    const auto tax = load_taxonomy(cfg.taxonomy_path);
    cfg.validate(tax);
    const std::string u = resolve_alias(tax, unseen);

    std::filesystem::path cu_path;
    for (const char* mode : {"finetune_adapt", "finetune"}) {
        auto p = cfg.runs_dir() / (u + "-" + mode + "-s" + std::to_string(cfg.seed)) / "cu.ckpt";
        if (std::filesystem::exists(p)) {
            cu_path = p;
            break;
        }
    }
    if (cu_path.empty())
        throw ValidationError("alpha_sweep: no fine-tuned model for '" + u +
                              "', run request-unseen first");

    const auto cu = load_checkpoint(cu_path);
    const auto strong = load_checkpoint(cfg.baselines_dir() / "strong.ckpt");
    const auto weak = load_checkpoint(cfg.baselines_dir() / "weak.ckpt");
    const auto deltas = compute_deltas(strong, weak);
    const auto test_set = ensure_unseen_test(cfg, u);

    std::vector<std::pair<double, double>> rows;
    for (double a : alphas) {
        const auto tbl = build_table(u, cu, weak, tax, a);
        int eligible = 0;
        for (const auto& [c, row] : tbl.rows) eligible += row.eligible;
        const auto du = adapt_unseen(cu, u, deltas, topk_neighbors(tbl, std::min(cfg.k, eligible)));
        const auto report =
            evaluate_detections(detect_on_manifest(du, test_set, cfg.eval_conf), test_set,
                                cfg.eval_iou);
        rows.emplace_back(a, report.map);
    }

    std::filesystem::create_directories(out_csv.parent_path());
    std::ofstream out(out_csv);
    if (!out) throw RuntimeError("cannot write alpha sweep: " + out_csv.string());
    out << "alpha,mAP\n";
    out.precision(17);
    for (const auto& [a, m] : rows) out << a << "," << m << "\n";
    return rows;
}

void write_reports(const PipelineConfig& cfg, const std::vector<std::string>& run_ids) {
    if (run_ids.empty()) throw ValidationError("report: empty run list");

    std::vector<RunRecord> recs;
    for (const auto& id : run_ids)
        recs.push_back(load_run_record(cfg.runs_dir() / id / "record.json"));

    std::filesystem::create_directories(cfg.reports_dir());

    {
        auto sorted = recs;
        std::sort(sorted.begin(), sorted.end(),
                  [](const RunRecord& a, const RunRecord& b) { return a.budget_s < b.budget_s; });
        std::ofstream out(cfg.reports_dir() / "budget_curve.csv");
        if (!out) throw RuntimeError("cannot write budget curve");
        out << "budget_s,mAP,run\n";
        out.precision(17);
        for (const auto& r : sorted) out << r.budget_s << "," << r.map << "," << r.id << "\n";
    }
    {
        std::ofstream out(cfg.reports_dir() / "similarity_map.csv");
        if (!out) throw RuntimeError("cannot write similarity report");
        out << "unseen_class,mAP,avg_similarity,run\n";
        out.precision(17);
        for (const auto& r : recs) {
            const auto it = r.artifacts.find("similarity");
            if (it == r.artifacts.end()) continue;
            const auto tbl =
                read_similarity_csv(cfg.runs_dir() / r.id / it->second, r.unseen, cfg.alpha);
            int eligible = 0;
            for (const auto& [c, row] : tbl.rows) eligible += row.eligible;
            const double avg = average_similarity(tbl, std::min(10, eligible));
            out << r.unseen << "," << r.map << "," << avg << "," << r.id << "\n";
        }
    }
    {
        std::ofstream out(cfg.reports_dir() / "mode_ladder.csv");
        if (!out) throw RuntimeError("cannot write mode ladder");
        out << "# no_adapt: weak baseline start; finetune: strong baseline start;\n"
            << "# finetune_adapt: finetune plus weighted delta adaptation.\n"
            << "# AP uses all-point interpolation.\n"
            << "mode,unseen_class,seed,mAP\n";
        out.precision(17);
        for (const auto& r : recs)
            out << r.mode << "," << r.unseen << "," << r.seed << "," << r.map << "\n";
    }
}

} // namespace unseennet
