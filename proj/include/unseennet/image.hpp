#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace unseennet {

// 8-bit RGB image, row-major, 3 bytes per pixel.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb;

    Image() = default;
    Image(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0) {}

    uint8_t* px(int x, int y) { return rgb.data() + (static_cast<size_t>(y) * width + x) * 3; }
    const uint8_t* px(int x, int y) const {
        return rgb.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
};

void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);                  // throws RuntimeError
std::optional<Image> try_read_png(const std::filesystem::path& path);  // nullopt if undecodable

} // namespace unseennet
