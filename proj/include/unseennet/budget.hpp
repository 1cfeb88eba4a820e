#pragma once

#include "unseennet/dataset.hpp"
#include "unseennet/tinydet.hpp"

namespace unseennet {

struct BudgetPlan {
    double response_time_s = 0;
    int num_images = 0;
    int batch_size = 0;
    double step_time_s = 0;
    int steps_per_epoch = 0;
    int epochs = 1;
};

// epochs = floor(response_time / (ceil(N / batch) * step_time)), clamped to >= 1
BudgetPlan epochs_for_budget(double response_time_s, int num_images, int batch_size,
                             double step_time_s);

// median wall time of `sample` optimizer steps on real batches, after
// `warmup` untimed steps; the model copy is discarded
double measure_step_time(const DetectorModel& model, const DatasetManifest& dataset,
                         int batch_size, int warmup, int sample);

} // namespace unseennet
