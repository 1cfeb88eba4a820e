#include "unseennet/image.hpp"

#include <png.h>

#include "unseennet/errors.hpp"

namespace unseennet {

void write_png(const std::filesystem::path& path, const Image& img) {
    png_image pi{};
    pi.version = PNG_IMAGE_VERSION;
    pi.width = static_cast<png_uint_32>(img.width);
    pi.height = static_cast<png_uint_32>(img.height);
    pi.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&pi, path.string().c_str(), 0, img.rgb.data(),
                                 static_cast<png_int_32>(img.width * 3), nullptr)) {
        throw RuntimeError("png write failed: " + path.string() + ": " + pi.message);
    }
}

std::optional<Image> try_read_png(const std::filesystem::path& path) {
    png_image pi{};
    pi.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&pi, path.string().c_str())) {
        png_image_free(&pi);
        return std::nullopt;
    }
    pi.format = PNG_FORMAT_RGB;
    Image img(static_cast<int>(pi.width), static_cast<int>(pi.height));
    if (!png_image_finish_read(&pi, nullptr, img.rgb.data(),
                               static_cast<png_int_32>(img.width * 3), nullptr)) {
        png_image_free(&pi);
        return std::nullopt;
    }
    return img;
}

Image read_png(const std::filesystem::path& path) {
    auto img = try_read_png(path);
    if (!img) throw RuntimeError("cannot decode PNG: " + path.string());
    return *img;
}

} // namespace unseennet
