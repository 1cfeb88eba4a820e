// Acceptance gate: one printed PASS/FAIL line per criterion.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>

#include "unseennet/adapt.hpp"
#include "unseennet/budget.hpp"
#include "unseennet/errors.hpp"
#include "unseennet/pipeline.hpp"
#include "unseennet/rng.hpp"

using namespace unseennet;

namespace {

#define ACC_CHECK(expr)        \
    do {                       \
        const bool v = (expr); \
        CHECK(v);              \
        ok = ok && v;          \
    } while (0)

void verdict(int criterion, bool ok, const char* what) {
    std::printf("[ACCEPTANCE] criterion %d: %s - %s\n", criterion, ok ? "PASS" : "FAIL", what);
    std::fflush(stdout);
}

std::filesystem::path taxonomy_path() {
    return std::filesystem::path(UNSEENNET_DATA_DIR) / "shapesworld.tax";
}

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// independent shortest-path oracle, kept separate from the library BFS
int bfs_edges(const Taxonomy& t, int a, int b) {
    if (a == b) return 0;
    std::vector<int> dist(t.nodes.size(), -1);
    std::deque<int> q{a};
    dist[a] = 0;
    while (!q.empty()) {
        const int n = q.front();
        q.pop_front();
        for (int m : t.adj[n]) {
            if (dist[m] >= 0) continue;
            dist[m] = dist[n] + 1;
            if (m == b) return dist[m];
            q.push_back(m);
        }
    }
    return -1;
}

ArchConfig small_arch() {
    ArchConfig a;
    a.input_size = 48;
    a.grid = 3;
    return a;
}

DetectorModel leveled_model(const std::vector<std::string>& classes,
                            const std::vector<double>& levels) {
    auto m = init_model(small_arch(), classes, 99);
    for (size_t i = 0; i < classes.size(); ++i)
        m = set_class_weight_vector(m, classes[i],
                                    std::vector<double>(m.arch.weight_vector_length(), levels[i]));
    return m;
}

FloatImage noise_image(int size, uint64_t seed) {
    Image img(size, size);
    Rng rng(seed);
    for (auto& b : img.rgb) b = static_cast<uint8_t>(rng.uniform_int(0, 255));
    return FloatImage::from(img);
}

double max_grad_rel_error(DetectorModel m, const FloatImage& img,
                          const std::vector<BoxLabel>& gts, int n_params, uint64_t seed) {
    ParamMap grads;
    forward_backward(m, img, gts, grads);
    std::vector<std::string> names;
    for (const auto& [k, v] : m.params) names.push_back(k);

    Rng rng(seed);
    double worst = 0;
    const double h = 1e-5;
    int taken = 0, attempts = 0;
    while (taken < n_params && attempts < 20 * n_params) {
        ++attempts;
        const std::string& name = names[rng.next() % names.size()];
        auto& p = m.params[name];
        const size_t j = rng.next() % p.size();
        const double orig = p[j];
        auto fd_at = [&](double step) {
            p[j] = orig + step;
            const double lp = compute_loss(m, forward(m, img), gts).total();
            p[j] = orig - step;
            const double lm = compute_loss(m, forward(m, img), gts).total();
            p[j] = orig;
            return (lp - lm) / (2 * step);
        };
        const double fd = fd_at(h);
        // a leaky-ReLU kink inside the stencil makes the difference quotient
        // step-size dependent; the check is only meaningful at smooth points
        if (std::abs(fd - fd_at(2 * h)) / std::max(std::abs(fd), 1e-6) > 1e-5) continue;
        const double an = grads[name][j];
        worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
        ++taken;
    }
    return taken == n_params ? worst : 1.0;
}

// Reference experiment shared by criteria 7, 8 and 9. Built once.
struct ReferenceRuns {
    PipelineConfig cfg;
    RunRecord na, ft, ad;                 // seed 1234 mode ladder
    std::vector<RunRecord> ft_seeds, ad_seeds;  // seeds 1, 2, 3
    RunRecord ad_repeat;                  // fresh rerun of the seed-1234 adapt run
    double wall_s = 0;
};

const ReferenceRuns& reference_runs() {
    static const ReferenceRuns runs = [] {
        ReferenceRuns r;
        const double t_start = now_s();

        r.cfg.taxonomy_path = taxonomy_path();
        r.cfg.run_dir = std::filesystem::temp_directory_path() / "unseennet_acceptance";
        r.cfg.unseen_classes = {"hexagon"};
        r.cfg.budget_s = 120.0;
        r.cfg.seed = 1234;
        std::filesystem::remove_all(r.cfg.run_dir);

        train_baselines(r.cfg);

        // one step-time probe, then pinned so every run plans the same epochs
        {
            const auto strong = load_checkpoint(r.cfg.baselines_dir() / "strong.ckpt");
            const auto renamed = rename_slot(strong, "pentagon", "hexagon");
            GeneratorConfig gen = r.cfg.generator;
            const auto probe_dir = r.cfg.run_dir / "probe";
            std::filesystem::create_directories(probe_dir);
            const auto probe =
                generate_classification_set({"hexagon"}, r.cfg.batch_size, 1, gen, probe_dir);
            r.cfg.step_time_s = measure_step_time(renamed, probe, r.cfg.batch_size, 1, 3);
        }

        auto with = [&](const std::string& mode, uint64_t seed) {
            auto c = r.cfg;
            c.mode = mode;
            c.seed = seed;
            return c;
        };
        auto cu_of = [&](const RunRecord& rec) {
            return r.cfg.runs_dir() / rec.id / rec.artifacts.at("cu");
        };

        r.na = request_unseen(with("no_adapt", 1234), "hexagon");
        r.ft = request_unseen(with("finetune", 1234), "hexagon");
        // the adapt run reuses the identical fine-tune artifact; criterion 9
        // later reruns it from scratch and must reproduce the same mAP
        RequestOptions reuse;
        reuse.reuse_cu = cu_of(r.ft);
        r.ad = request_unseen(with("finetune_adapt", 1234), "hexagon", reuse);

        for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            r.ft_seeds.push_back(request_unseen(with("finetune", seed), "hexagon"));
            RequestOptions ro;
            ro.reuse_cu = cu_of(r.ft_seeds.back());
            r.ad_seeds.push_back(request_unseen(with("finetune_adapt", seed), "hexagon", ro));
        }

        // everything up to here is the criterion-7 ladder; the fresh repeat
        // below is criterion 9's determinism probe and is timed separately
        r.wall_s = now_s() - t_start;
        r.ad_repeat = request_unseen(with("finetune_adapt", 1234), "hexagon");

        std::printf("[ACCEPTANCE] reference runs: no_adapt=%.4f finetune=%.4f "
                    "finetune_adapt=%.4f (seed 1234), adapt-finetune diffs %.4f %.4f %.4f, "
                    "epochs=%d, step=%.4fs, wall=%.0fs\n",
                    r.na.map, r.ft.map, r.ad.map, r.ad_seeds[0].map - r.ft_seeds[0].map,
                    r.ad_seeds[1].map - r.ft_seeds[1].map, r.ad_seeds[2].map - r.ft_seeds[2].map,
                    r.ft.epochs, r.cfg.step_time_s, r.wall_s);
        std::fflush(stdout);
        return r;
    }();
    return runs;
}

} // namespace

TEST_CASE("criterion 1: semantic similarity oracle") {
    bool ok = true;
    const double t0 = now_s();
    const auto tax = load_taxonomy(taxonomy_path());

    Rng rng(2024);
    for (int i = 0; i < 50; ++i) {
        const auto& a = tax.nodes[rng.next() % tax.nodes.size()];
        const auto& b = tax.nodes[rng.next() % tax.nodes.size()];
        const int edges = bfs_edges(tax, tax.index.at(a), tax.index.at(b));
        const double expected = edges < 0 ? 0.0 : 1.0 / (edges + 1);
        ACC_CHECK(path_similarity(tax, a, b) == expected);
        ACC_CHECK(path_similarity(tax, a, b) == path_similarity(tax, b, a));
    }
    for (const auto& n : tax.nodes) ACC_CHECK(path_similarity(tax, n, n) == 1.0);
    ACC_CHECK(now_s() - t0 < 1.0);
    verdict(1, ok, "path similarity equals the BFS oracle with symmetry and identity");
}

TEST_CASE("criterion 2: comprehensive similarity arithmetic") {
    bool ok = true;
    ACC_CHECK(std::abs(comprehensive_similarity(0.5, 1.0, 0.6) - 0.7) <= 1e-12);
    Rng rng(5);
    for (int i = 0; i < 25; ++i) {
        const double sv = rng.uniform(), ss = rng.uniform();
        ACC_CHECK(comprehensive_similarity(sv, ss, 0.0) == ss);
        ACC_CHECK(comprehensive_similarity(sv, ss, 1.0) == sv);
    }

    const auto tax = load_taxonomy(taxonomy_path());
    const std::vector<std::string> seen = {"pentagon", "square", "circle", "star5", "arrow_up"};
    const auto weak = leveled_model(seen, {0.1, 0.2, 0.4, 0.7, 1.0});
    const auto cu = leveled_model({"hexagon"}, {0.0});

    const auto visual_tbl = build_table("hexagon", cu, weak, tax, 1.0);
    const auto visual = topk_neighbors(visual_tbl, 5, false);
    auto by_sv = seen;
    std::sort(by_sv.begin(), by_sv.end(), [&](const auto& a, const auto& b) {
        if (visual_tbl.rows.at(a).s_v != visual_tbl.rows.at(b).s_v)
            return visual_tbl.rows.at(a).s_v > visual_tbl.rows.at(b).s_v;
        return a < b;
    });
    for (size_t i = 0; i < seen.size(); ++i) ACC_CHECK(visual.entries[i].first == by_sv[i]);

    const auto semantic = topk_neighbors(build_table("hexagon", cu, weak, tax, 0.0), 5, false);
    const auto sem_rank = nearest_semantic(tax, "hexagon", seen);
    for (size_t i = 0; i < seen.size(); ++i)
        ACC_CHECK(semantic.entries[i].first == sem_rank[i].first);

    verdict(2, ok, "Eq. 2 fixture, endpoint identities and endpoint rankings");
}

TEST_CASE("criterion 3: epoch budget fixture and monotonicity") {
    bool ok = true;
    ACC_CHECK(epochs_for_budget(600.0, 320, 16, 0.465).epochs == 64);

    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        const double rt = rng.uniform(1.0, 2000.0);
        const int n = rng.uniform_int(1, 600);
        const int b = rng.uniform_int(1, 64);
        const double t = rng.uniform(0.005, 3.0);
        const int base = epochs_for_budget(rt, n, b, t).epochs;
        ACC_CHECK(epochs_for_budget(rt * 1.5, n, b, t).epochs >= base);
        ACC_CHECK(epochs_for_budget(rt, n + 50, b, t).epochs <= base);
        ACC_CHECK(epochs_for_budget(rt, n, b, t * 1.5).epochs <= base);
    }
    verdict(3, ok, "Eq. 3 reference point and 100-point monotonicity grid");
}

TEST_CASE("criterion 4: adaptation algebra") {
    bool ok = true;
    auto cu = init_model(small_arch(), {"hexagon", "circle"}, 7);
    const int len = cu.arch.weight_vector_length();

    DeltaTable zeros;
    zeros.length = len;
    zeros.deltas["a"] = std::vector<double>(len, 0.0);
    zeros.deltas["b"] = std::vector<double>(len, 0.0);
    NeighborSet two;
    two.entries = {{"a", 0.75}, {"b", 0.25}};
    ACC_CHECK(params_hash(adapt_unseen(cu, "hexagon", zeros, two)) == params_hash(cu));

    std::vector<double> wu(len, 0.0);
    wu[0] = wu[1] = 1.0;
    auto base = set_class_weight_vector(cu, "hexagon", wu);
    DeltaTable d;
    d.length = len;
    d.deltas["a"] = std::vector<double>(len, 0.0);
    d.deltas["a"][0] = 0.4;
    d.deltas["b"] = std::vector<double>(len, 0.0);
    d.deltas["b"][1] = 0.4;
    auto w = class_weight_vector(adapt_unseen(base, "hexagon", d, two), "hexagon");
    ACC_CHECK(std::abs(w[0] - 1.3) <= 1e-12);
    ACC_CHECK(std::abs(w[1] - 1.1) <= 1e-12);

    // locality on a fixed image
    Rng rng(12);
    DeltaTable full;
    full.length = len;
    full.deltas["src"] = std::vector<double>(len);
    for (auto& x : full.deltas["src"]) x = rng.normal();
    NeighborSet one;
    one.entries = {{"src", 1.0}};
    const auto adapted = adapt_unseen(cu, "hexagon", full, one);
    const auto img = noise_image(small_arch().input_size, 3);
    const auto before = forward(cu, img);
    const auto after = forward(adapted, img);
    const int hex = cu.class_index("hexagon");
    bool local = true, changed = false;
    for (int cy = 0; cy < before.grid; ++cy)
        for (int cx = 0; cx < before.grid; ++cx)
            for (int a = 0; a < before.anchors; ++a)
                for (int j = 0; j < before.channels; ++j) {
                    const bool same = after.at(cy, cx, a, j) == before.at(cy, cx, a, j);
                    if (j == 5 + hex) changed = changed || !same;
                    else local = local && same;
                }
    ACC_CHECK(local);
    ACC_CHECK(changed);

    // convexity bound over seeded random fixtures
    for (int trial = 0; trial < 20; ++trial) {
        Rng trng(100 + trial);
        DeltaTable t;
        t.length = len;
        NeighborSet nb;
        double sum = 0;
        for (int i = 0; i < 4; ++i) {
            const std::string name = "n" + std::to_string(i);
            t.deltas[name] = std::vector<double>(len);
            for (auto& x : t.deltas[name]) x = trng.normal();
            const double wgt = trng.uniform(0.01, 1.0);
            nb.entries.emplace_back(name, wgt);
            sum += wgt;
        }
        for (auto& [n, wgt] : nb.entries) wgt /= sum;
        const auto w0 = class_weight_vector(cu, "hexagon");
        const auto w1 = class_weight_vector(adapt_unseen(cu, "hexagon", t, nb), "hexagon");
        for (int c = 0; c < len; ++c) {
            double lo = 1e300, hi = -1e300;
            for (const auto& [n, wgt] : nb.entries) {
                lo = std::min(lo, t.deltas[n][c]);
                hi = std::max(hi, t.deltas[n][c]);
            }
            ACC_CHECK(w1[c] - w0[c] >= lo - 1e-12);
            ACC_CHECK(w1[c] - w0[c] <= hi + 1e-12);
        }
    }
    verdict(4, ok, "Eq. 1 identity, hand fixture, locality and convexity bound");
}

TEST_CASE("criterion 5: evaluation oracle") {
    bool ok = true;
    ACC_CHECK(iou({0, 0, 4, 4}, {0, 0, 4, 4}) == 1.0);
    ACC_CHECK(iou({0, 0, 2, 2}, {5, 5, 9, 9}) == 0.0);
    ACC_CHECK(std::abs(iou({0, 0, 2, 2}, {1, 1, 3, 3}) - 1.0 / 7.0) <= 1e-9);

    std::vector<LabeledDetection> seq = {{0.9, 0, true}, {0.8, 1, false}, {0.7, 2, true}};
    ACC_CHECK(std::abs(average_precision(seq, 2) - (0.5 + 0.5 * 2.0 / 3.0)) <= 1e-6);

    GeneratorConfig gen;
    gen.image_size = 48;
    const auto root = std::filesystem::temp_directory_path() / "unseennet_acceptance_eval";
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);
    const auto m = generate_detection_set({"circle", "square"}, 10, 17, gen, root);
    std::vector<Detection> dets;
    for (const auto& s : m.samples)
        for (const auto& o : s.objects) {
            Detection d;
            d.image_id = s.image_path;
            d.cls = o.cls;
            d.confidence = 1.0;
            d.xmin = o.xmin;
            d.ymin = o.ymin;
            d.xmax = o.xmax;
            d.ymax = o.ymax;
            dets.push_back(d);
        }
    ACC_CHECK(evaluate_detections(dets, m, 0.5).map == 1.0);
    verdict(5, ok, "IoU fixtures, AP hand fixture and ground-truth replay at mAP 1.0");
}

TEST_CASE("criterion 6: gradient check") {
    bool ok = true;
    const double t0 = now_s();
    for (uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        auto m = init_model(small_arch(), {"x", "y", "z"}, seed);
        const auto img = noise_image(small_arch().input_size, seed);
        std::vector<BoxLabel> gts = {{"x", 6, 8, 26, 30}, {"z", 30, 28, 46, 46}};
        ACC_CHECK(max_grad_rel_error(m, img, gts, 20, seed) < 1e-4);
    }
    ACC_CHECK(now_s() - t0 < 30.0);
    verdict(6, ok, "analytic gradients match central differences within 1e-4");
}

TEST_CASE("criterion 7: end-to-end mode ladder") {
    bool ok = true;
    const auto& r = reference_runs();

    ACC_CHECK(r.ft.map >= r.na.map + 0.05);
    ACC_CHECK(r.ad.map >= r.ft.map - 0.01);

    std::vector<double> diffs;
    for (size_t i = 0; i < 3; ++i) diffs.push_back(r.ad_seeds[i].map - r.ft_seeds[i].map);
    std::sort(diffs.begin(), diffs.end());
    ACC_CHECK(diffs[1] >= 0.0);

    // reference values from the first verified run on this platform; the
    // epoch count tracks the measured step time, hence the wide band
    ACC_CHECK(std::abs(r.na.map - 0.000) <= 0.15);
    ACC_CHECK(std::abs(r.ft.map - 0.607) <= 0.20);
    ACC_CHECK(std::abs(r.ad.map - 0.606) <= 0.20);

    ACC_CHECK(r.wall_s < 900.0);
    verdict(7, ok, "finetune >= no_adapt + 5 pts, adapt within 1 pt and ahead in median");
}

TEST_CASE("criterion 8: budget honesty") {
    bool ok = true;
    const auto& r = reference_runs();
    ACC_CHECK(r.ft.timings.finetune_s > 0);
    ACC_CHECK(r.ft.timings.finetune_s <= 2 * r.cfg.budget_s);
    ACC_CHECK(r.na.timings.finetune_s <= 2 * r.cfg.budget_s);
    verdict(8, ok, "stage-4 wall clock within twice the requested budget");
}

TEST_CASE("criterion 9: determinism") {
    bool ok = true;
    const auto& r = reference_runs();
    ACC_CHECK(std::abs(r.ad_repeat.map - r.ad.map) <= 1e-6);
    ACC_CHECK(r.ad_repeat.model_hash == r.ad.model_hash);
    ACC_CHECK(r.ad_repeat.train_data_hash == r.ad.train_data_hash);
    ACC_CHECK(r.ad_repeat.test_data_hash == r.ad.test_data_hash);
    verdict(9, ok, "seed-identical rerun reproduces mAP, model and dataset hashes");
}
