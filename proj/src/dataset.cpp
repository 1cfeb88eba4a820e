#include "unseennet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "unseennet/errors.hpp"
#include "unseennet/hash.hpp"
#include "unseennet/image.hpp"
#include "unseennet/rng.hpp"
#include "unseennet/shapes.hpp"

using json = nlohmann::json;

namespace unseennet {

namespace {

void check_generator_args(const std::vector<std::string>& classes, int n_images) {
    if (n_images < 1) throw ValidationError("n_images must be >= 1");
    if (classes.empty()) throw ValidationError("class list must be non-empty");
    std::set<std::string> seen;
    for (const auto& c : classes) {
        if (!is_renderable(c)) throw ValidationError("class '" + c + "' is not renderable");
        if (!seen.insert(c).second) throw ValidationError("duplicate class '" + c + "'");
    }
}

std::string image_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%05d.png", index);
    return std::string("images/") + buf;
}

// Round-robin class deck: every |classes| consecutive draws cover each class
// once, which keeps frequencies balanced regardless of per-image counts.
class ClassDeck {
public:
    ClassDeck(std::vector<std::string> classes, uint64_t seed)
        : classes_(std::move(classes)), rng_(derive_seed(seed, 0xDECull)) {}

    const std::string& draw() {
        if (deck_.empty()) {
            deck_ = classes_;
            rng_.shuffle(deck_);
        }
        current_ = deck_.back();
        deck_.pop_back();
        return current_;
    }

private:
    std::vector<std::string> classes_;
    std::vector<std::string> deck_;
    std::string current_;
    Rng rng_;
};

std::vector<std::string> appearing_classes(const std::vector<Sample>& samples) {
    std::set<std::string> s;
    for (const auto& sm : samples)
        for (const auto& o : sm.objects) s.insert(o.cls);
    return {s.begin(), s.end()};
}

json sample_to_json(const Sample& s) {
    json objs = json::array();
    for (const auto& o : s.objects) {
        objs.push_back({{"class", o.cls}, {"bbox", {o.xmin, o.ymin, o.xmax, o.ymax}}});
    }
    return {{"image", s.image_path}, {"width", s.width}, {"height", s.height}, {"objects", objs}};
}

Sample sample_from_json(const json& j) {
    Sample s;
    s.image_path = j.at("image").get<std::string>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    for (const auto& o : j.at("objects")) {
        BoxLabel b;
        b.cls = o.at("class").get<std::string>();
        const auto& bb = o.at("bbox");
        b.xmin = bb.at(0).get<int>();
        b.ymin = bb.at(1).get<int>();
        b.xmax = bb.at(2).get<int>();
        b.ymax = bb.at(3).get<int>();
        s.objects.push_back(std::move(b));
    }
    return s;
}

} // namespace

std::string GeneratorConfig::fingerprint() const {
    std::ostringstream os;
    os << "v1|" << image_size << '|' << min_objects << '|' << max_objects << '|'
       << min_radius_frac << '|' << max_radius_frac << '|' << iconic_min_extent << '|'
       << max_distractors << '|' << noise_amp << '|' << min_test_images;
    return hex64(fnv1a64(os.str()));
}

DatasetManifest generate_detection_set(const std::vector<std::string>& classes, int n_images,
                                       uint64_t seed, const GeneratorConfig& cfg,
                                       const std::filesystem::path& root) {
    check_generator_args(classes, n_images);
    std::filesystem::create_directories(root / "images");

    const int size = cfg.image_size;
    ClassDeck deck(classes, seed);
    DatasetManifest m;
    m.root = root;
    m.kind = DatasetKind::detection;
    m.seed = seed;
    m.config_hash = cfg.fingerprint();

    for (int i = 0; i < n_images; ++i) {
        Rng rng(derive_seed(seed, static_cast<uint64_t>(i)));
        Image img(size, size);
        render_background(img, rng, cfg.noise_amp, cfg.max_distractors);

        Sample s;
        s.image_path = image_name(i);
        s.width = size;
        s.height = size;

        const int want = rng.uniform_int(cfg.min_objects, cfg.max_objects);
        struct Placed { double cx, cy, r; };
        std::vector<Placed> placed;
        for (int o = 0; o < want; ++o) {
            bool ok = false;
            double cx = 0, cy = 0, r = 0;
            for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
                r = rng.uniform(cfg.min_radius_frac, cfg.max_radius_frac) * size;
                cx = rng.uniform(r + 2, size - r - 2);
                cy = rng.uniform(r + 2, size - r - 2);
                ok = true;
                for (const auto& p : placed) {
                    double dx = cx - p.cx, dy = cy - p.cy;
                    if (std::sqrt(dx * dx + dy * dy) < r + p.r + 2) {
                        ok = false;
                        break;
                    }
                }
            }
            if (!ok && !placed.empty()) continue;  // image stays with fewer objects
            if (!ok) {  // first object always fits: drop it in the middle
                r = cfg.min_radius_frac * size;
                cx = cy = size / 2.0;
            }
            auto obj = render_object(img, deck.draw(), cx, cy, r, rng);
            if (obj.xmax - obj.xmin < 3 || obj.ymax - obj.ymin < 3) continue;
            placed.push_back({cx, cy, r});
            s.objects.push_back({obj.cls, obj.xmin, obj.ymin, obj.xmax, obj.ymax});
        }
        write_png(root / s.image_path, img);
        m.samples.push_back(std::move(s));
    }
    m.classes = appearing_classes(m.samples);
    save_manifest(m);
    return m;
}

DatasetManifest generate_classification_set(const std::vector<std::string>& classes,
                                            int n_images, uint64_t seed,
                                            const GeneratorConfig& cfg,
                                            const std::filesystem::path& root) {
    check_generator_args(classes, n_images);
    std::filesystem::create_directories(root / "images");

    const int size = cfg.image_size;
    ClassDeck deck(classes, seed);
    DatasetManifest m;
    m.root = root;
    m.kind = DatasetKind::classification;
    m.seed = seed;
    m.config_hash = cfg.fingerprint();

    for (int i = 0; i < n_images; ++i) {
        Rng rng(derive_seed(seed, static_cast<uint64_t>(i)));
        Image bg(size, size);
        render_background(bg, rng, cfg.noise_amp, cfg.max_distractors);

        const std::string& cls = deck.draw();
        double r = rng.uniform(0.40, 0.46) * size;
        double cx = size / 2.0 + rng.uniform(-6, 6);
        double cy = size / 2.0 + rng.uniform(-6, 6);
        Image img = bg;
        RenderedObject obj;
        for (int attempt = 0; attempt < 6; ++attempt) {
            img = bg;
            obj = render_object(img, cls, cx, cy, r, rng);
            int extent = std::min(obj.xmax - obj.xmin, obj.ymax - obj.ymin);
            if (extent >= static_cast<int>(cfg.iconic_min_extent * size)) break;
            r = std::min(r * 1.15, 0.48 * size);
            cx = size / 2.0;
            cy = size / 2.0;
        }

        Sample s;
        s.image_path = image_name(i);
        s.width = size;
        s.height = size;
        s.objects.push_back({cls, 0, 0, size, size});  // weak label: full-image box
        write_png(root / s.image_path, img);
        m.samples.push_back(std::move(s));
    }
    m.classes = appearing_classes(m.samples);
    save_manifest(m);
    return m;
}

DatasetManifest ingest_directory(const std::filesystem::path& dir, const std::string& label) {
    if (!std::filesystem::is_directory(dir))
        throw ValidationError("ingest: not a directory: " + dir.string());

    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ValidationError("ingest: directory is empty: " + dir.string());

    DatasetManifest m;
    m.root = dir;
    m.kind = DatasetKind::classification;
    m.classes = {label};
    m.config_hash = "ingest";
    for (const auto& f : files) {
        auto img = try_read_png(f);
        if (!img) {
            std::cerr << "warning: skipping undecodable file " << f.string() << "\n";
            continue;
        }
        Sample s;
        s.image_path = f.filename().string();
        s.width = img->width;
        s.height = img->height;
        s.objects.push_back({label, 0, 0, img->width, img->height});
        m.samples.push_back(std::move(s));
    }
    if (m.samples.empty())
        throw ValidationError("ingest: no decodable images in " + dir.string());
    return m;
}

std::vector<std::string> validate_manifest(const DatasetManifest& m) {
    std::vector<std::string> out;
    std::set<std::string> appearing;
    for (size_t i = 0; i < m.samples.size(); ++i) {
        const auto& s = m.samples[i];
        const std::string tag = "sample " + std::to_string(i) + " (" + s.image_path + "): ";
        if (!std::filesystem::exists(m.root / s.image_path)) {
            out.push_back(tag + "image file missing");
        } else {
            auto img = try_read_png(m.root / s.image_path);
            if (!img)
                out.push_back(tag + "image not decodable");
            else if (img->width != s.width || img->height != s.height)
                out.push_back(tag + "decoded size differs from stated size");
        }
        if (m.kind == DatasetKind::detection && s.objects.empty())
            out.push_back(tag + "detection sample has no objects");
        if (m.kind == DatasetKind::classification) {
            if (s.objects.size() != 1)
                out.push_back(tag + "classification sample must have exactly one object");
            else if (s.objects[0].xmin != 0 || s.objects[0].ymin != 0 ||
                     s.objects[0].xmax != s.width || s.objects[0].ymax != s.height)
                out.push_back(tag + "classification box must cover the full image");
        }
        for (const auto& o : s.objects) {
            appearing.insert(o.cls);
            if (!(0 <= o.xmin && o.xmin < o.xmax && o.xmax <= s.width &&
                  0 <= o.ymin && o.ymin < o.ymax && o.ymax <= s.height))
                out.push_back(tag + "box out of bounds for class " + o.cls);
        }
    }
    std::set<std::string> declared(m.classes.begin(), m.classes.end());
    if (declared != appearing) out.push_back("manifest class list differs from classes in samples");
    return out;
}

void save_manifest(const DatasetManifest& m) {
    std::filesystem::create_directories(m.root);
    {
        std::ofstream ann(m.root / "annotations.jsonl");
        if (!ann) throw RuntimeError("cannot write annotations under " + m.root.string());
        for (const auto& s : m.samples) ann << sample_to_json(s).dump() << "\n";
    }
    json meta = {{"kind", m.kind == DatasetKind::detection ? "detection" : "classification"},
                 {"seed", m.seed},
                 {"classes", m.classes},
                 {"config_hash", m.config_hash},
                 {"n_images", m.samples.size()}};
    std::ofstream mf(m.root / "meta.json");
    mf << meta.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::filesystem::path& root) {
    std::ifstream mf(root / "meta.json");
    if (!mf) throw RuntimeError("no meta.json under " + root.string());
    json meta;
    try {
        mf >> meta;
    } catch (const json::exception& e) {
        throw ValidationError("malformed meta.json: " + std::string(e.what()));
    }

    DatasetManifest m;
    m.root = root;
    const std::string kind = meta.at("kind").get<std::string>();
    if (kind == "detection") m.kind = DatasetKind::detection;
    else if (kind == "classification") m.kind = DatasetKind::classification;
    else throw ValidationError("meta.json: unknown kind '" + kind + "'");
    m.seed = meta.at("seed").get<uint64_t>();
    m.classes = meta.at("classes").get<std::vector<std::string>>();
    m.config_hash = meta.at("config_hash").get<std::string>();

    std::ifstream ann(root / "annotations.jsonl");
    if (!ann) throw RuntimeError("no annotations.jsonl under " + root.string());
    std::string line;
    while (std::getline(ann, line)) {
        if (line.empty()) continue;
        try {
            m.samples.push_back(sample_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ValidationError("malformed annotation line: " + std::string(e.what()));
        }
    }
    return m;
}

uint64_t dataset_hash(const DatasetManifest& m) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& s : m.samples) {
        h = fnv1a64(sample_to_json(s).dump(), h);
        const auto img = m.root / s.image_path;
        if (std::filesystem::exists(img)) {
            uint64_t fh = hash_file(img);
            h = fnv1a64(&fh, sizeof(fh), h);
        }
    }
    return h;
}

} // namespace unseennet
