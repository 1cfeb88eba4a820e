#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace unseennet {

struct BoxLabel {
    std::string cls;
    // inclusive-exclusive pixel box
    int xmin = 0, ymin = 0, xmax = 0, ymax = 0;
};

struct Sample {
    std::string image_path;  // relative to manifest root
    int width = 0, height = 0;
    std::vector<BoxLabel> objects;
};

enum class DatasetKind { detection, classification };

struct GeneratorConfig {
    int image_size = 96;
    int min_objects = 1;
    int max_objects = 4;
    double min_radius_frac = 0.10;   // circumradius as fraction of image size
    double max_radius_frac = 0.27;
    double iconic_min_extent = 0.60; // classification sets: extent / min dimension
    int max_distractors = 3;
    double noise_amp = 0.05;
    int min_test_images = 0;

    std::string fingerprint() const;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<Sample> samples;
    std::vector<std::string> classes;  // exactly the classes appearing in samples
    DatasetKind kind = DatasetKind::detection;
    uint64_t seed = 0;
    std::string config_hash;
};

// Writes <root>/images/*.png, <root>/annotations.jsonl and <root>/meta.json.
// Byte-identical output for identical (classes, n_images, seed, cfg).
DatasetManifest generate_detection_set(const std::vector<std::string>& classes, int n_images,
                                       uint64_t seed, const GeneratorConfig& cfg,
                                       const std::filesystem::path& root);

// One large centered object per image; every sample carries a single
// full-image box.
DatasetManifest generate_classification_set(const std::vector<std::string>& classes,
                                            int n_images, uint64_t seed,
                                            const GeneratorConfig& cfg,
                                            const std::filesystem::path& root);

// Local stand-in for web image collection: every decodable image in `dir`
// becomes a classification sample labeled `label`. Undecodable files are
// skipped with a warning on stderr.
DatasetManifest ingest_directory(const std::filesystem::path& dir, const std::string& label);

// Empty result iff all Sample/BoxLabel invariants hold and files exist.
std::vector<std::string> validate_manifest(const DatasetManifest& m);

void save_manifest(const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& root);

// Fingerprint over annotations and image bytes, for determinism checks.
uint64_t dataset_hash(const DatasetManifest& m);

} // namespace unseennet
