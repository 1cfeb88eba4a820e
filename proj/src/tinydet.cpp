#include "unseennet/tinydet.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "unseennet/errors.hpp"
#include "unseennet/hash.hpp"
#include "unseennet/rng.hpp"

using json = nlohmann::json;

namespace unseennet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

constexpr double kLeak = 0.1;
constexpr double kLambdaCoord = 5.0;
constexpr double kLambdaNoobj = 0.5;
constexpr double kMomentum = 0.9;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// stable binary cross entropy on a logit
double bce_logit(double x, double target) {
    return std::max(x, 0.0) - x * target + std::log1p(std::exp(-std::abs(x)));
}

struct ConvSpec {
    std::string name;
    int cin, cout, k, stride, pad;
    bool relu;
    int in_size, out_size;
};

std::vector<ConvSpec> conv_stack(const ArchConfig& arch, int num_classes) {
    std::vector<ConvSpec> specs;
    int side = arch.input_size;
    int cin = 3;
    for (int b = 0; b < 4; ++b) {
        int cout = ArchConfig::block_channels[b];
        specs.push_back({"conv" + std::to_string(b + 1), cin, cout, 3, 2, 1, true, side, side / 2});
        cin = cout;
        side /= 2;
    }
    const int head_out = static_cast<int>(arch.anchors.size()) * (5 + num_classes);
    specs.push_back({"head", cin, head_out, 1, 1, 0, false, side, side});
    return specs;
}

void im2col(const double* input, const ConvSpec& s, double* col) {
    const int W = s.in_size, OW = s.out_size;
    const int ohw = OW * OW;
    for (int ci = 0; ci < s.cin; ++ci) {
        const double* plane = input + static_cast<size_t>(ci) * W * W;
        for (int ky = 0; ky < s.k; ++ky) {
            for (int kx = 0; kx < s.k; ++kx) {
                double* row = col + (static_cast<size_t>(ci) * s.k * s.k + ky * s.k + kx) * ohw;
                for (int oy = 0; oy < OW; ++oy) {
                    const int y = oy * s.stride + ky - s.pad;
                    for (int ox = 0; ox < OW; ++ox) {
                        const int x = ox * s.stride + kx - s.pad;
                        row[oy * OW + ox] =
                            (y >= 0 && y < W && x >= 0 && x < W) ? plane[y * W + x] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_accumulate(const double* col, const ConvSpec& s, double* dinput) {
    const int W = s.in_size, OW = s.out_size;
    const int ohw = OW * OW;
    std::fill(dinput, dinput + static_cast<size_t>(s.cin) * W * W, 0.0);
    for (int ci = 0; ci < s.cin; ++ci) {
        double* plane = dinput + static_cast<size_t>(ci) * W * W;
        for (int ky = 0; ky < s.k; ++ky) {
            for (int kx = 0; kx < s.k; ++kx) {
                const double* row =
                    col + (static_cast<size_t>(ci) * s.k * s.k + ky * s.k + kx) * ohw;
                for (int oy = 0; oy < OW; ++oy) {
                    const int y = oy * s.stride + ky - s.pad;
                    if (y < 0 || y >= W) continue;
                    for (int ox = 0; ox < OW; ++ox) {
                        const int x = ox * s.stride + kx - s.pad;
                        if (x >= 0 && x < W) plane[y * W + x] += row[oy * OW + ox];
                    }
                }
            }
        }
    }
}

struct LayerCache {
    std::vector<double> col;     // im2col of the layer input
    std::vector<double> preact;  // output before the nonlinearity
};

// Runs the stack; fills caches when provided. Returns head output
// (head_out x grid^2, row-major).
std::vector<double> run_stack(const DetectorModel& m, const FloatImage& img,
                              std::vector<LayerCache>* caches) {
    const auto specs = conv_stack(m.arch, m.num_classes());
    std::vector<double> activ = img.chw;
    if (caches) caches->resize(specs.size());
    for (size_t li = 0; li < specs.size(); ++li) {
        const auto& s = specs[li];
        const int ohw = s.out_size * s.out_size;
        const int krows = s.cin * s.k * s.k;
        std::vector<double> col_local;
        std::vector<double>& col = caches ? (*caches)[li].col : col_local;
        col.resize(static_cast<size_t>(krows) * ohw);
        im2col(activ.data(), s, col.data());

        const auto& wv = m.params.at(s.name + ".weight");
        const auto& bv = m.params.at(s.name + ".bias");
        std::vector<double> out(static_cast<size_t>(s.cout) * ohw);
        CMapMat W(wv.data(), s.cout, krows);
        CMapMat X(col.data(), krows, ohw);
        MapMat Y(out.data(), s.cout, ohw);
        Y.noalias() = W * X;
        for (int c = 0; c < s.cout; ++c) Y.row(c).array() += bv[c];

        if (caches) (*caches)[li].preact = out;
        if (s.relu) {
            for (auto& v : out)
                if (v < 0) v *= kLeak;
        }
        activ = std::move(out);
    }
    return activ;
}

RawGrid to_rawgrid(const ArchConfig& arch, int num_classes, const std::vector<double>& head_out) {
    RawGrid raw;
    raw.grid = arch.grid;
    raw.anchors = static_cast<int>(arch.anchors.size());
    raw.channels = 5 + num_classes;
    raw.values.resize(static_cast<size_t>(raw.grid) * raw.grid * raw.anchors * raw.channels);
    const int cells = raw.grid * raw.grid;
    for (int a = 0; a < raw.anchors; ++a)
        for (int j = 0; j < raw.channels; ++j) {
            const double* src = head_out.data() + static_cast<size_t>(a * raw.channels + j) * cells;
            for (int cy = 0; cy < raw.grid; ++cy)
                for (int cx = 0; cx < raw.grid; ++cx)
                    raw.at(cy, cx, a, j) = src[cy * raw.grid + cx];
        }
    return raw;
}

// responsible gt index per (cell, anchor): the cell containing the box center
// and the anchor with maximal shape IoU. -1 when none; later gts overwrite.
std::vector<int> assign_responsible(const ArchConfig& arch, const std::vector<BoxLabel>& gts) {
    const int G = arch.grid;
    const int A = static_cast<int>(arch.anchors.size());
    const double cell_px = static_cast<double>(arch.input_size) / G;
    std::vector<int> resp(static_cast<size_t>(G) * G * A, -1);
    for (size_t gi = 0; gi < gts.size(); ++gi) {
        const auto& g = gts[gi];
        const double bw = (g.xmax - g.xmin) / static_cast<double>(arch.input_size);
        const double bh = (g.ymax - g.ymin) / static_cast<double>(arch.input_size);
        const int cx = std::min(G - 1, std::max(0, static_cast<int>(0.5 * (g.xmin + g.xmax) / cell_px)));
        const int cy = std::min(G - 1, std::max(0, static_cast<int>(0.5 * (g.ymin + g.ymax) / cell_px)));
        int best_a = 0;
        double best_iou = -1;
        for (int a = 0; a < A; ++a) {
            const double aw = arch.anchors[a].w, ah = arch.anchors[a].h;
            const double inter = std::min(bw, aw) * std::min(bh, ah);
            const double iou = inter / (bw * bh + aw * ah - inter);
            if (iou > best_iou) {
                best_iou = iou;
                best_a = a;
            }
        }
        resp[(static_cast<size_t>(cy) * G + cx) * A + best_a] = static_cast<int>(gi);
    }
    return resp;
}

struct LossGrad {
    LossComponents components;
    std::vector<double> draw;  // dL/dRawGrid, empty unless requested
};

LossGrad loss_on_grid(const DetectorModel& m, const RawGrid& raw,
                      const std::vector<BoxLabel>& gts, bool want_grad) {
    const ArchConfig& arch = m.arch;
    const int G = raw.grid, A = raw.anchors, ch = raw.channels;
    const int C = m.num_classes();
    const double cell_px = static_cast<double>(arch.input_size) / G;
    const auto resp = assign_responsible(arch, gts);

    std::vector<int> gt_cls(gts.size());
    for (size_t gi = 0; gi < gts.size(); ++gi) gt_cls[gi] = m.class_index(gts[gi].cls);

    LossGrad out;
    if (want_grad) out.draw.assign(raw.values.size(), 0.0);
    auto dref = [&](int cy, int cx, int a, int j) -> double& {
        return out.draw[((static_cast<size_t>(cy) * G + cx) * A + a) * ch + j];
    };

    for (int cy = 0; cy < G; ++cy)
        for (int cx = 0; cx < G; ++cx)
            for (int a = 0; a < A; ++a) {
                const int gi = resp[(static_cast<size_t>(cy) * G + cx) * A + a];
                const double obj_logit = raw.at(cy, cx, a, 4);
                if (gi < 0) {
                    out.components.objectness += kLambdaNoobj * bce_logit(obj_logit, 0.0);
                    if (want_grad) dref(cy, cx, a, 4) += kLambdaNoobj * sigmoid(obj_logit);
                    continue;
                }
                const auto& g = gts[gi];
                out.components.objectness += bce_logit(obj_logit, 1.0);
                if (want_grad) dref(cy, cx, a, 4) += sigmoid(obj_logit) - 1.0;

                const double tx_t = 0.5 * (g.xmin + g.xmax) / cell_px - cx;
                const double ty_t = 0.5 * (g.ymin + g.ymax) / cell_px - cy;
                const double tw_t =
                    std::log((g.xmax - g.xmin) / (arch.anchors[a].w * arch.input_size));
                const double th_t =
                    std::log((g.ymax - g.ymin) / (arch.anchors[a].h * arch.input_size));
                const double sx = sigmoid(raw.at(cy, cx, a, 0));
                const double sy = sigmoid(raw.at(cy, cx, a, 1));
                const double tw = raw.at(cy, cx, a, 2), th = raw.at(cy, cx, a, 3);
                out.components.localization +=
                    kLambdaCoord * ((sx - tx_t) * (sx - tx_t) + (sy - ty_t) * (sy - ty_t) +
                                    (tw - tw_t) * (tw - tw_t) + (th - th_t) * (th - th_t));
                if (want_grad) {
                    dref(cy, cx, a, 0) += kLambdaCoord * 2 * (sx - tx_t) * sx * (1 - sx);
                    dref(cy, cx, a, 1) += kLambdaCoord * 2 * (sy - ty_t) * sy * (1 - sy);
                    dref(cy, cx, a, 2) += kLambdaCoord * 2 * (tw - tw_t);
                    dref(cy, cx, a, 3) += kLambdaCoord * 2 * (th - th_t);
                }

                // softmax cross entropy over the class logits
                double mx = raw.at(cy, cx, a, 5);
                for (int c = 1; c < C; ++c) mx = std::max(mx, raw.at(cy, cx, a, 5 + c));
                double z = 0;
                for (int c = 0; c < C; ++c) z += std::exp(raw.at(cy, cx, a, 5 + c) - mx);
                const int tc = gt_cls[gi];
                out.components.classification +=
                    -(raw.at(cy, cx, a, 5 + tc) - mx - std::log(z));
                if (want_grad) {
                    for (int c = 0; c < C; ++c) {
                        const double p = std::exp(raw.at(cy, cx, a, 5 + c) - mx) / z;
                        dref(cy, cx, a, 5 + c) += p - (c == tc ? 1.0 : 0.0);
                    }
                }
            }
    return out;
}

// dRawGrid -> head-layout gradient (head_out x grid^2)
std::vector<double> from_rawgrid_grad(const ArchConfig& arch, int num_classes,
                                      const std::vector<double>& draw) {
    const int G = arch.grid;
    const int A = static_cast<int>(arch.anchors.size());
    const int ch = 5 + num_classes;
    const int cells = G * G;
    std::vector<double> out(static_cast<size_t>(A) * ch * cells);
    for (int a = 0; a < A; ++a)
        for (int j = 0; j < ch; ++j) {
            double* dst = out.data() + static_cast<size_t>(a * ch + j) * cells;
            for (int cy = 0; cy < G; ++cy)
                for (int cx = 0; cx < G; ++cx)
                    dst[cy * G + cx] =
                        draw[((static_cast<size_t>(cy) * G + cx) * A + a) * ch + j];
        }
    return out;
}

} // namespace

void ArchConfig::validate() const {
    if (input_size % 16 != 0) throw ValidationError("arch: input_size must be divisible by 16");
    if (grid != input_size / 16) throw ValidationError("arch: grid must equal input_size/16");
    if (anchors.empty()) throw ValidationError("arch: anchors must be non-empty");
    if (head_channels != block_channels[3])
        throw ValidationError("arch: head_channels must match the last backbone block");
}

bool ArchConfig::operator==(const ArchConfig& o) const {
    if (input_size != o.input_size || grid != o.grid || head_channels != o.head_channels ||
        anchors.size() != o.anchors.size())
        return false;
    for (size_t i = 0; i < anchors.size(); ++i)
        if (anchors[i].w != o.anchors[i].w || anchors[i].h != o.anchors[i].h) return false;
    return true;
}

int DetectorModel::class_index(const std::string& c) const {
    for (size_t i = 0; i < classes.size(); ++i)
        if (classes[i] == c) return static_cast<int>(i);
    throw ValidationError("model has no class '" + c + "'");
}

FloatImage FloatImage::from(const Image& img) {
    FloatImage out;
    out.width = img.width;
    out.height = img.height;
    out.chw.resize(static_cast<size_t>(img.width) * img.height * 3);
    const size_t plane = static_cast<size_t>(img.width) * img.height;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const uint8_t* p = img.px(x, y);
            const size_t i = static_cast<size_t>(y) * img.width + x;
            out.chw[i] = p[0] / 255.0;
            out.chw[plane + i] = p[1] / 255.0;
            out.chw[2 * plane + i] = p[2] / 255.0;
        }
    return out;
}

void TrainSchedule::validate() const {
    if (epochs < 1) throw ValidationError("schedule: epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("schedule: batch_size must be >= 1");
    if (lr_initial <= 0 || lr_final <= 0)
        throw ValidationError("schedule: learning rates must be positive");
}

double TrainSchedule::learning_rate(int epoch) const {
    if (mode == Mode::unseen) return lr_initial;
    const double third = epochs / 3.0;
    if (epoch < third) return lr_initial;
    if (epoch < 2 * third) {
        const double frac = (epoch - third) / third;
        return lr_initial * std::pow(lr_final / lr_initial, frac);
    }
    return lr_final;
}

DetectorModel init_model(const ArchConfig& arch, const std::vector<std::string>& classes,
                         uint64_t seed) {
    arch.validate();
    if (classes.empty()) throw ValidationError("init_model: class list must be non-empty");
    std::set<std::string> uniq(classes.begin(), classes.end());
    if (uniq.size() != classes.size()) throw ValidationError("init_model: duplicate class in list");

    DetectorModel m;
    m.arch = arch;
    m.classes = classes;
    m.rng_seed = seed;
    Rng rng(seed);
    for (const auto& s : conv_stack(arch, m.num_classes())) {
        const int fan_in = s.cin * s.k * s.k;
        const double limit = std::sqrt(1.0 / fan_in);
        std::vector<double> w(static_cast<size_t>(s.cout) * fan_in);
        for (auto& v : w) v = rng.uniform(-limit, limit);
        m.params[s.name + ".weight"] = std::move(w);
        m.params[s.name + ".bias"] = std::vector<double>(s.cout, 0.0);
    }
    return m;
}

RawGrid forward(const DetectorModel& m, const FloatImage& img) {
    if (img.width != m.arch.input_size || img.height != m.arch.input_size)
        throw ValidationError("forward: image size does not match arch.input_size");
    return to_rawgrid(m.arch, m.num_classes(), run_stack(m, img, nullptr));
}

LossComponents compute_loss(const DetectorModel& m, const RawGrid& raw,
                            const std::vector<BoxLabel>& gts) {
    return loss_on_grid(m, raw, gts, false).components;
}

LossComponents forward_backward(const DetectorModel& m, const FloatImage& img,
                                const std::vector<BoxLabel>& gts, ParamMap& grads) {
    if (img.width != m.arch.input_size || img.height != m.arch.input_size)
        throw ValidationError("forward_backward: image size does not match arch.input_size");
    const auto specs = conv_stack(m.arch, m.num_classes());
    std::vector<LayerCache> caches;
    const auto head_out = run_stack(m, img, &caches);
    const auto raw = to_rawgrid(m.arch, m.num_classes(), head_out);
    auto lg = loss_on_grid(m, raw, gts, true);

    std::vector<double> dout = from_rawgrid_grad(m.arch, m.num_classes(), lg.draw);
    for (int li = static_cast<int>(specs.size()) - 1; li >= 0; --li) {
        const auto& s = specs[li];
        const int ohw = s.out_size * s.out_size;
        const int krows = s.cin * s.k * s.k;

        if (s.relu) {
            const auto& pre = caches[li].preact;
            for (size_t i = 0; i < dout.size(); ++i)
                if (pre[i] < 0) dout[i] *= kLeak;
        }

        auto& gw = grads[s.name + ".weight"];
        auto& gb = grads[s.name + ".bias"];
        gw.resize(static_cast<size_t>(s.cout) * krows, 0.0);
        gb.resize(s.cout, 0.0);

        CMapMat dY(dout.data(), s.cout, ohw);
        CMapMat X(caches[li].col.data(), krows, ohw);
        MapMat gW(gw.data(), s.cout, krows);
        gW.noalias() += dY * X.transpose();
        for (int c = 0; c < s.cout; ++c) gb[c] += dY.row(c).sum();

        if (li > 0) {
            const auto& wv = m.params.at(s.name + ".weight");
            CMapMat W(wv.data(), s.cout, krows);
            std::vector<double> dcol(static_cast<size_t>(krows) * ohw);
            MapMat dX(dcol.data(), krows, ohw);
            dX.noalias() = W.transpose() * dY;
            std::vector<double> dinput(static_cast<size_t>(s.cin) * s.in_size * s.in_size);
            col2im_accumulate(dcol.data(), s, dinput.data());
            dout = std::move(dinput);
        }
    }
    return lg.components;
}

std::pair<DetectorModel, std::vector<double>> train(const DetectorModel& m,
                                                    const DatasetManifest& dataset,
                                                    const TrainSchedule& sched, uint64_t seed) {
    sched.validate();
    for (const auto& c : dataset.classes)
        m.class_index(c);  // throws on dataset/model class mismatch
    if (dataset.samples.empty()) throw ValidationError("train: dataset has no samples");

    // Decode the whole set up front; desk-scale sets fit in memory easily.
    std::vector<FloatImage> images;
    images.reserve(dataset.samples.size());
    for (const auto& s : dataset.samples)
        images.push_back(FloatImage::from(read_png(dataset.root / s.image_path)));

    DetectorModel model = m;
    ParamMap velocity;
    for (const auto& [name, p] : model.params) velocity[name].assign(p.size(), 0.0);

    std::vector<double> history;
    std::vector<size_t> order(dataset.samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        Rng shuffler(derive_seed(seed, static_cast<uint64_t>(epoch)));
        shuffler.shuffle(order);
        const double lr = sched.learning_rate(epoch);

        double epoch_loss = 0;
        size_t batches = 0;
        for (size_t start = 0; start < order.size(); start += sched.batch_size) {
            const size_t end = std::min(order.size(), start + sched.batch_size);
            ParamMap grads;
            double batch_loss = 0;
            for (size_t bi = start; bi < end; ++bi) {
                const auto& sample = dataset.samples[order[bi]];
                batch_loss +=
                    forward_backward(model, images[order[bi]], sample.objects, grads).total();
            }
            const double inv_n = 1.0 / static_cast<double>(end - start);
            const int ch = 5 + model.num_classes();
            const int F = model.arch.head_channels;
            for (auto& [name, g] : grads) {
                if (sched.scope != TrainSchedule::Scope::all && name.rfind("head.", 0) != 0)
                    continue;
                const bool rows_only = sched.scope == TrainSchedule::Scope::class_rows;
                const bool is_weight = name == "head.weight";
                auto& v = velocity[name];
                auto& p = model.params[name];
                for (size_t i = 0; i < p.size(); ++i) {
                    if (rows_only) {
                        const size_t row = is_weight ? i / F : i;
                        if (static_cast<int>(row % ch) < 5) continue;
                    }
                    v[i] = kMomentum * v[i] - lr * g[i] * inv_n;
                    p[i] += v[i];
                }
            }
            epoch_loss += batch_loss * inv_n;
            ++batches;
        }
        history.push_back(epoch_loss / static_cast<double>(batches));
    }
    model.history.insert(model.history.end(), history.begin(), history.end());
    return {std::move(model), std::move(history)};
}

DetectorModel rename_slot(const DetectorModel& m, const std::string& old_cls,
                          const std::string& new_cls) {
    const int idx = m.class_index(old_cls);
    if (std::find(m.classes.begin(), m.classes.end(), new_cls) != m.classes.end())
        throw ValidationError("rename_slot: class '" + new_cls + "' already present");
    DetectorModel out = m;
    out.classes[idx] = new_cls;
    return out;
}

std::vector<double> class_weight_vector(const DetectorModel& m, const std::string& cls) {
    const int ci = m.class_index(cls);
    const int F = m.arch.head_channels;
    const int ch = 5 + m.num_classes();
    const auto& w = m.params.at("head.weight");
    const auto& b = m.params.at("head.bias");
    std::vector<double> out;
    out.reserve(m.arch.weight_vector_length());
    for (size_t a = 0; a < m.arch.anchors.size(); ++a) {
        const int row = static_cast<int>(a) * ch + 5 + ci;
        for (int f = 0; f < F; ++f) out.push_back(w[static_cast<size_t>(row) * F + f]);
        out.push_back(b[row]);
    }
    return out;
}

DetectorModel set_class_weight_vector(const DetectorModel& m, const std::string& cls,
                                      const std::vector<double>& v) {
    const int ci = m.class_index(cls);
    if (static_cast<int>(v.size()) != m.arch.weight_vector_length())
        throw ValidationError("set_class_weight_vector: wrong length");
    const int F = m.arch.head_channels;
    const int ch = 5 + m.num_classes();
    DetectorModel out = m;
    auto& w = out.params.at("head.weight");
    auto& b = out.params.at("head.bias");
    size_t k = 0;
    for (size_t a = 0; a < m.arch.anchors.size(); ++a) {
        const int row = static_cast<int>(a) * ch + 5 + ci;
        for (int f = 0; f < F; ++f) w[static_cast<size_t>(row) * F + f] = v[k++];
        b[row] = v[k++];
    }
    return out;
}

void save_checkpoint(const DetectorModel& m, const std::filesystem::path& path) {
    json anchors = json::array();
    for (const auto& a : m.arch.anchors) anchors.push_back({a.w, a.h});
    json doc = {{"format", "tinydet-ckpt/1"},
                {"arch",
                 {{"input_size", m.arch.input_size},
                  {"grid", m.arch.grid},
                  {"head_channels", m.arch.head_channels},
                  {"anchors", anchors}}},
                {"classes", m.classes},
                {"rng_seed", m.rng_seed},
                {"history", m.history},
                {"params", json::object()}};
    for (const auto& [name, p] : m.params) doc["params"][name] = p;
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write checkpoint: " + path.string());
    out << doc.dump() << "\n";
}

DetectorModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot open checkpoint: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("corrupt checkpoint " + path.string() + ": " + e.what());
    }
    const std::string fmt = doc.value("format", "");
    if (fmt != "tinydet-ckpt/1")
        throw ValidationError("checkpoint version mismatch: got '" + fmt +
                              "', expected 'tinydet-ckpt/1'");
    DetectorModel m;
    try {
        const auto& a = doc.at("arch");
        m.arch.input_size = a.at("input_size").get<int>();
        m.arch.grid = a.at("grid").get<int>();
        m.arch.head_channels = a.at("head_channels").get<int>();
        m.arch.anchors.clear();
        for (const auto& an : a.at("anchors"))
            m.arch.anchors.push_back({an.at(0).get<double>(), an.at(1).get<double>()});
        m.classes = doc.at("classes").get<std::vector<std::string>>();
        m.rng_seed = doc.at("rng_seed").get<uint64_t>();
        m.history = doc.at("history").get<std::vector<double>>();
        for (const auto& [name, p] : doc.at("params").items())
            m.params[name] = p.get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ValidationError("corrupt checkpoint " + path.string() + ": " + e.what());
    }
    return m;
}

std::vector<Detection> decode(const DetectorModel& m, const RawGrid& raw, double conf_thresh,
                              double nms_iou) {
    if (conf_thresh < 0 || conf_thresh > 1 || nms_iou < 0 || nms_iou > 1)
        throw ValidationError("decode: thresholds must lie in [0,1]");
    const int G = raw.grid, A = raw.anchors;
    const int C = m.num_classes();
    const double cell_px = static_cast<double>(m.arch.input_size) / G;
    const double in = m.arch.input_size;

    std::vector<Detection> cand;
    for (int cy = 0; cy < G; ++cy)
        for (int cx = 0; cx < G; ++cx)
            for (int a = 0; a < A; ++a) {
                const double obj = sigmoid(raw.at(cy, cx, a, 4));
                double mx = raw.at(cy, cx, a, 5);
                for (int c = 1; c < C; ++c) mx = std::max(mx, raw.at(cy, cx, a, 5 + c));
                double z = 0;
                for (int c = 0; c < C; ++c) z += std::exp(raw.at(cy, cx, a, 5 + c) - mx);

                const double bx = (cx + sigmoid(raw.at(cy, cx, a, 0))) * cell_px;
                const double by = (cy + sigmoid(raw.at(cy, cx, a, 1))) * cell_px;
                const double bw = m.arch.anchors[a].w * std::exp(raw.at(cy, cx, a, 2)) * in;
                const double bh = m.arch.anchors[a].h * std::exp(raw.at(cy, cx, a, 3)) * in;

                for (int c = 0; c < C; ++c) {
                    const double p = std::exp(raw.at(cy, cx, a, 5 + c) - mx) / z;
                    const double conf = obj * p;
                    if (conf < conf_thresh) continue;
                    Detection d;
                    d.cls = m.classes[c];
                    d.confidence = conf;
                    d.xmin = std::clamp(bx - bw / 2, 0.0, in);
                    d.xmax = std::clamp(bx + bw / 2, 0.0, in);
                    d.ymin = std::clamp(by - bh / 2, 0.0, in);
                    d.ymax = std::clamp(by + bh / 2, 0.0, in);
                    d.cell_index = (cy * G + cx) * A + a;
                    if (d.xmax > d.xmin && d.ymax > d.ymin) cand.push_back(std::move(d));
                }
            }

    auto order = [](const Detection& x, const Detection& y) {
        if (x.confidence != y.confidence) return x.confidence > y.confidence;
        if (x.cell_index != y.cell_index) return x.cell_index < y.cell_index;
        return x.cls < y.cls;
    };
    std::sort(cand.begin(), cand.end(), order);

    auto box_iou = [](const Detection& a, const Detection& b) {
        const double ix = std::max(0.0, std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin));
        const double iy = std::max(0.0, std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin));
        const double inter = ix * iy;
        const double uni = (a.xmax - a.xmin) * (a.ymax - a.ymin) +
                           (b.xmax - b.xmin) * (b.ymax - b.ymin) - inter;
        return uni > 0 ? inter / uni : 0.0;
    };

    std::vector<Detection> kept;
    for (const auto& d : cand) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (k.cls == d.cls && box_iou(k, d) >= nms_iou) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

uint64_t params_hash(const DetectorModel& m) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [name, p] : m.params) {
        h = fnv1a64(name, h);
        h = fnv1a64(p.data(), p.size() * sizeof(double), h);
    }
    return h;
}

} // namespace unseennet
