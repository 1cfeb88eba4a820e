#include "unseennet/budget.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "unseennet/errors.hpp"
#include "unseennet/image.hpp"

namespace unseennet {

BudgetPlan epochs_for_budget(double response_time_s, int num_images, int batch_size,
                             double step_time_s) {
    if (response_time_s <= 0 || num_images < 1 || batch_size < 1 || step_time_s <= 0)
        throw ValidationError("epochs_for_budget: all arguments must be positive");

    BudgetPlan p;
    p.response_time_s = response_time_s;
    p.num_images = num_images;
    p.batch_size = batch_size;
    p.step_time_s = step_time_s;
    p.steps_per_epoch = (num_images + batch_size - 1) / batch_size;
    p.epochs = std::max(1, static_cast<int>(std::floor(
                               response_time_s / (p.steps_per_epoch * step_time_s))));
    return p;
}

double measure_step_time(const DetectorModel& model, const DatasetManifest& dataset,
                         int batch_size, int warmup, int sample) {
    if (sample < 1) throw ValidationError("measure_step_time: sample must be >= 1");
    if (warmup < 0) throw ValidationError("measure_step_time: warmup must be >= 0");
    if (batch_size < 1) throw ValidationError("measure_step_time: batch size must be >= 1");
    if (dataset.samples.empty()) throw ValidationError("measure_step_time: insufficient data");

    std::vector<FloatImage> images;
    std::vector<const std::vector<BoxLabel>*> labels;
    const size_t need = std::min(dataset.samples.size(), static_cast<size_t>(batch_size));
    for (size_t i = 0; i < need; ++i) {
        images.push_back(FloatImage::from(read_png(dataset.root / dataset.samples[i].image_path)));
        labels.push_back(&dataset.samples[i].objects);
    }

    DetectorModel m = model;
    ParamMap velocity;
    for (const auto& [name, p] : m.params) velocity[name].assign(p.size(), 0.0);

    std::vector<double> times;
    for (int step = 0; step < warmup + sample; ++step) {
        const auto t0 = std::chrono::steady_clock::now();

        ParamMap grads;
        for (const auto& [name, p] : m.params) grads[name].assign(p.size(), 0.0);
        for (int b = 0; b < batch_size; ++b) {
            const size_t i = b % images.size();
            forward_backward(m, images[i], *labels[i], grads);
        }
        const double inv = 1.0 / batch_size;
        const double lr = 1e-4;
        for (auto& [name, p] : m.params) {
            auto& v = velocity[name];
            const auto& g = grads[name];
            for (size_t k = 0; k < p.size(); ++k) {
                v[k] = 0.9 * v[k] - lr * g[k] * inv;
                p[k] += v[k];
            }
        }

        const auto t1 = std::chrono::steady_clock::now();
        if (step >= warmup)
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }

    std::sort(times.begin(), times.end());
    const size_t n = times.size();
    return n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

} // namespace unseennet
