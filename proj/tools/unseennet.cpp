#include <iostream>

#include <CLI11.hpp>

#include "unseennet/errors.hpp"
#include "unseennet/pipeline.hpp"
#include "unseennet/shapes.hpp"

using namespace unseennet;

int main(int argc, char** argv) {
    CLI::App app{"unseennet: budgeted unseen-class detector training on synthetic shapes"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "JSON config file (defaults apply per key)");

    auto* gen = app.add_subcommand("gen-data", "generate the training and test datasets");

    auto* baselines =
        app.add_subcommand("train-baselines", "train and persist the strong and weak baselines");

    auto* request = app.add_subcommand("request-unseen", "run the online unseen-class pipeline");
    std::string unseen_name, images_dir, mode;
    double budget = -1, alpha = -1;
    int k = -1;
    int64_t seed = -1;
    request->add_option("name", unseen_name, "unseen concept (canonical id or alias)")->required();
    request->add_option("--images", images_dir, "directory of user-supplied images");
    request->add_option("--budget-s", budget, "response-time budget in seconds");
    request->add_option("--k", k, "neighbor count for adaptation");
    request->add_option("--alpha", alpha, "visual/semantic blend");
    request->add_option("--mode", mode, "no_adapt | finetune | finetune_adapt");
    request->add_option("--seed", seed, "override the config seed");

    auto* sweep = app.add_subcommand("alpha-sweep", "re-adapt one fine-tuned model per alpha");
    std::string sweep_name, sweep_out;
    std::vector<double> alphas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    sweep->add_option("name", sweep_name, "unseen concept")->required();
    sweep->add_option("--alphas", alphas, "alpha grid");
    sweep->add_option("--out", sweep_out, "output CSV path");

    auto* eval = app.add_subcommand("evaluate", "score detections against a dataset");
    std::string det_file, ckpt_file, dataset_dir, eval_out;
    double eval_iou = 0.5, eval_conf = 0.05;
    eval->add_option("--detections", det_file, "JSONL detections file");
    eval->add_option("--checkpoint", ckpt_file, "detector checkpoint to run instead");
    eval->add_option("--dataset", dataset_dir, "dataset manifest root")->required();
    eval->add_option("--iou", eval_iou, "IoU threshold");
    eval->add_option("--conf", eval_conf, "decode confidence threshold");
    eval->add_option("--out", eval_out, "report CSV path");

    auto* report = app.add_subcommand("report", "emit the report bundle for finished runs");
    std::vector<std::string> run_ids;
    report->add_option("runs", run_ids, "run ids (default: every run found)");

    auto* splits = app.add_subcommand("splits", "named random class splits of the vocabulary");
    std::vector<int> sizes = {5, 20};
    uint64_t split_seed = 1234;
    splits->add_option("--sizes", sizes, "split sizes");
    splits->add_option("--seed", split_seed, "split seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        PipelineConfig cfg =
            config_path.empty() ? PipelineConfig{} : PipelineConfig::from_file(config_path);

        if (gen->parsed()) {
            const auto tax = load_taxonomy(cfg.taxonomy_path);
            cfg.validate(tax);
            auto det = ensure_detection_train(cfg);
            auto cls = ensure_classification_train(cfg);
            std::cout << "detection train: " << det.root.string() << " (" << det.samples.size()
                      << " images)\n";
            std::cout << "classification train: " << cls.root.string() << " ("
                      << cls.samples.size() << " images)\n";
            for (const auto& u : cfg.unseen_classes) {
                auto test = ensure_unseen_test(cfg, u);
                std::cout << "test " << u << ": " << test.root.string() << " ("
                          << test.samples.size() << " images)\n";
            }
        } else if (baselines->parsed()) {
            train_baselines(cfg);
            std::cout << "baselines written to " << cfg.baselines_dir().string() << "\n";
        } else if (request->parsed()) {
            if (budget > 0) cfg.budget_s = budget;
            if (k > 0) cfg.k = k;
            if (alpha >= 0) cfg.alpha = alpha;
            if (!mode.empty()) cfg.mode = mode;
            if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
            RequestOptions opt;
            if (!images_dir.empty()) opt.images_dir = images_dir;
            auto rec = request_unseen(cfg, unseen_name, opt);
            std::cout << "run " << rec.id << ": source=" << rec.source
                      << " epochs=" << rec.epochs << " mAP=" << rec.map
                      << " finetune_s=" << rec.timings.finetune_s << "\n";
        } else if (sweep->parsed()) {
            const auto out = sweep_out.empty()
                                 ? cfg.reports_dir() / ("alpha_sweep_" + sweep_name + ".csv")
                                 : std::filesystem::path(sweep_out);
            auto rows = alpha_sweep(cfg, sweep_name, alphas, out);
            for (const auto& [a, m] : rows) std::cout << "alpha=" << a << " mAP=" << m << "\n";
            std::cout << "written to " << out.string() << "\n";
        } else if (eval->parsed()) {
            auto manifest = load_manifest(dataset_dir);
            std::vector<Detection> dets;
            if (!det_file.empty())
                dets = read_detections(det_file);
            else if (!ckpt_file.empty())
                dets = detect_on_manifest(load_checkpoint(ckpt_file), manifest, eval_conf);
            else
                throw ValidationError("evaluate: pass --detections or --checkpoint");
            auto r = evaluate_detections(dets, manifest, eval_iou);
            std::cout << "mAP@" << eval_iou << " = " << r.map << "\n";
            for (const auto& [cls, st] : r.per_class)
                std::cout << "  " << cls << ": AP=" << st.ap << " GT=" << st.num_gt
                          << " TP=" << st.tp << " FP=" << st.fp << "\n";
            for (const auto& cls : r.excluded) std::cout << "  " << cls << ": excluded (0 GT)\n";
            if (!eval_out.empty()) write_report_csv(eval_out, r);
        } else if (report->parsed()) {
            if (run_ids.empty() && std::filesystem::exists(cfg.runs_dir()))
                for (const auto& e : std::filesystem::directory_iterator(cfg.runs_dir()))
                    if (e.is_directory() && std::filesystem::exists(e.path() / "record.json"))
                        run_ids.push_back(e.path().filename().string());
            std::sort(run_ids.begin(), run_ids.end());
            write_reports(cfg, run_ids);
            std::cout << "reports written to " << cfg.reports_dir().string() << "\n";
        } else if (splits->parsed()) {
            for (const auto& [name, members] : make_splits(renderable_classes(), sizes,
                                                           split_seed)) {
                std::cout << name << ":";
                for (const auto& c : members) std::cout << " " << c;
                std::cout << "\n";
            }
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const RuntimeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
