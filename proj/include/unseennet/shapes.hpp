#pragma once

#include <array>
#include <string>
#include <vector>

#include "unseennet/image.hpp"
#include "unseennet/rng.hpp"

namespace unseennet {

// The 26 renderable classes, grouped into taxonomy families so that held-out
// classes always have visually similar siblings among the remaining ones.
const std::vector<std::string>& renderable_classes();
bool is_renderable(const std::string& cls);

struct RenderedObject {
    std::string cls;
    // tight pixel-extent box, inclusive-exclusive
    int xmin = 0, ymin = 0, xmax = 0, ymax = 0;
};

// Fills the image with background clutter: base tint, low-amplitude noise and
// 0..max_strokes thin distractor strokes.
void render_background(Image& img, Rng& rng, double noise_amp, int max_strokes);

// Draws one instance of `cls` with circumradius `radius` centered at
// (cx, cy). Returns the tight box of the touched pixels, or an object with
// xmax<=xmin if nothing was rasterized.
RenderedObject render_object(Image& img, const std::string& cls, double cx, double cy,
                             double radius, Rng& rng);

} // namespace unseennet
