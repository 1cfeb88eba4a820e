#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "unseennet/budget.hpp"
#include "unseennet/errors.hpp"
#include "unseennet/rng.hpp"
#include "unseennet/shapes.hpp"

using namespace unseennet;

namespace {

ArchConfig small_arch() {
    ArchConfig a;
    a.input_size = 48;
    a.grid = 3;
    return a;
}

DatasetManifest small_dataset() {
    GeneratorConfig cfg;
    cfg.image_size = 48;
    auto root = std::filesystem::temp_directory_path() / "unseennet_tests" / "budget_ds";
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);
    return generate_detection_set({"circle"}, 8, 31, cfg, root);
}

} // namespace

TEST_CASE("epoch estimate") {
    SUBCASE("reference operating point") {
        auto p = epochs_for_budget(600.0, 320, 16, 0.465);
        CHECK(p.steps_per_epoch == 20);
        CHECK(p.epochs == 64);
    }
    SUBCASE("partial final batch is a full step") {
        auto p = epochs_for_budget(10.0, 8, 16, 0.5);
        CHECK(p.steps_per_epoch == 1);
        CHECK(p.epochs == 20);
    }
    SUBCASE("budget of exactly one epoch") {
        auto p = epochs_for_budget(2.0, 32, 16, 1.0);
        CHECK(p.epochs == 1);
    }
    SUBCASE("never plans zero epochs") {
        auto p = epochs_for_budget(0.001, 320, 16, 0.465);
        CHECK(p.epochs == 1);
    }
    SUBCASE("non-positive arguments rejected") {
        CHECK_THROWS_AS(epochs_for_budget(0.0, 320, 16, 0.465), ValidationError);
        CHECK_THROWS_AS(epochs_for_budget(600.0, 0, 16, 0.465), ValidationError);
        CHECK_THROWS_AS(epochs_for_budget(600.0, 320, 0, 0.465), ValidationError);
        CHECK_THROWS_AS(epochs_for_budget(600.0, 320, 16, 0.0), ValidationError);
    }
}

TEST_CASE("epoch estimate monotonicity") {
    Rng rng(41);
    for (int i = 0; i < 50; ++i) {
        const double rt = rng.uniform(1.0, 1000.0);
        const int n = rng.uniform_int(1, 500);
        const int b = rng.uniform_int(1, 64);
        const double t = rng.uniform(0.01, 2.0);

        auto base = epochs_for_budget(rt, n, b, t);
        CHECK(epochs_for_budget(rt * 2, n, b, t).epochs >= base.epochs);
        CHECK(epochs_for_budget(rt, n + 100, b, t).epochs <= base.epochs);
        CHECK(epochs_for_budget(rt, n, b, t * 2).epochs <= base.epochs);

        // planned cost never overshoots by more than one epoch
        const double epoch_cost = base.steps_per_epoch * t;
        CHECK(base.epochs * epoch_cost <= rt + epoch_cost);
    }
}

TEST_CASE("step-time probe") {
    auto ds = small_dataset();
    auto m = init_model(small_arch(), {"circle"}, 43);

    const double t1 = measure_step_time(m, ds, 4, 1, 5);
    CHECK(t1 > 0);
    CHECK(std::isfinite(t1));

    SUBCASE("repeat measurement is in the same ballpark") {
        const double t2 = measure_step_time(m, ds, 4, 1, 5);
        CHECK(std::abs(t1 - t2) / std::max(t1, t2) < 0.5);
    }
    SUBCASE("contract violations") {
        CHECK_THROWS_AS(measure_step_time(m, ds, 4, 1, 0), ValidationError);
        CHECK_THROWS_AS(measure_step_time(m, ds, 4, -1, 5), ValidationError);
        CHECK_THROWS_AS(measure_step_time(m, ds, 0, 1, 5), ValidationError);
        CHECK_THROWS_AS(measure_step_time(m, DatasetManifest{}, 4, 1, 5), ValidationError);
    }
}
