#include "unseennet/shapes.hpp"

#include <algorithm>
#include <cmath>

#include "unseennet/errors.hpp"

namespace unseennet {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Poly {
    std::vector<double> xs, ys;
};

// A shape is a union of additive parts minus subtractive parts.
struct Part {
    enum Kind { polygon, ellipse } kind = polygon;
    bool subtract = false;
    Poly poly;
    // ellipse: center, semi-axes, rotation
    double ex = 0, ey = 0, ea = 1, eb = 1, erot = 0;
};

bool point_in_poly(const Poly& p, double x, double y) {
    bool inside = false;
    size_t n = p.xs.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const double xi = p.xs[i], yi = p.ys[i], xj = p.xs[j], yj = p.ys[j];
        if ((yi > y) != (yj > y)) {
            double t = (y - yi) / (yj - yi);
            if (x < xi + t * (xj - xi)) inside = !inside;
        }
    }
    return inside;
}

bool point_in_part(const Part& p, double x, double y) {
    if (p.kind == Part::polygon) return point_in_poly(p.poly, x, y);
    const double dx = x - p.ex, dy = y - p.ey;
    const double c = std::cos(-p.erot), s = std::sin(-p.erot);
    const double u = dx * c - dy * s, v = dx * s + dy * c;
    return (u * u) / (p.ea * p.ea) + (v * v) / (p.eb * p.eb) <= 1.0;
}

bool point_in_shape(const std::vector<Part>& parts, double x, double y) {
    bool in = false;
    for (const auto& p : parts) {
        if (!p.subtract && point_in_part(p, x, y)) in = true;
    }
    if (!in) return false;
    for (const auto& p : parts) {
        if (p.subtract && point_in_part(p, x, y)) return false;
    }
    return true;
}

Poly regular_polygon(double cx, double cy, double r, int n, double phase) {
    Poly p;
    for (int k = 0; k < n; ++k) {
        double a = phase + 2.0 * kPi * k / n;
        p.xs.push_back(cx + r * std::cos(a));
        p.ys.push_back(cy + r * std::sin(a));
    }
    return p;
}

Poly star_polygon(double cx, double cy, double r, int points, double phase) {
    Poly p;
    for (int k = 0; k < 2 * points; ++k) {
        double rad = (k % 2 == 0) ? r : 0.45 * r;
        double a = phase + kPi * k / points;
        p.xs.push_back(cx + rad * std::cos(a));
        p.ys.push_back(cy + rad * std::sin(a));
    }
    return p;
}

Poly from_points(double cx, double cy, double r, double rot,
                 const std::vector<std::pair<double, double>>& pts) {
    Poly p;
    const double c = std::cos(rot), s = std::sin(rot);
    for (auto [x, y] : pts) {
        p.xs.push_back(cx + r * (x * c - y * s));
        p.ys.push_back(cy + r * (x * s + y * c));
    }
    return p;
}

Part poly_part(Poly p, bool subtract = false) {
    Part out;
    out.kind = Part::polygon;
    out.subtract = subtract;
    out.poly = std::move(p);
    return out;
}

Part ellipse_part(double cx, double cy, double a, double b, double rot, bool subtract = false) {
    Part out;
    out.kind = Part::ellipse;
    out.subtract = subtract;
    out.ex = cx;
    out.ey = cy;
    out.ea = a;
    out.eb = b;
    out.erot = rot;
    return out;
}

std::vector<Part> build_shape(const std::string& cls, double cx, double cy, double r, Rng& rng) {
    std::vector<Part> parts;
    const double jitter = rng.uniform(-kPi / 12, kPi / 12);  // small class-preserving tilt
    const double phase = rng.uniform(0, 2 * kPi);

    if (cls == "triangle") {
        parts.push_back(poly_part(regular_polygon(cx, cy, r, 3, phase)));
    } else if (cls == "square") {
        parts.push_back(poly_part(regular_polygon(cx, cy, r, 4, kPi / 4 + jitter)));
    } else if (cls == "rectangle") {
        double aspect = rng.uniform(1.7, 2.3);
        std::vector<std::pair<double, double>> pts = {
            {1, 1.0 / aspect}, {-1, 1.0 / aspect}, {-1, -1.0 / aspect}, {1, -1.0 / aspect}};
        parts.push_back(poly_part(from_points(cx, cy, r, jitter, pts)));
    } else if (cls == "diamond") {
        parts.push_back(poly_part(regular_polygon(cx, cy, r, 4, jitter)));
    } else if (cls == "pentagon") {
        parts.push_back(poly_part(regular_polygon(cx, cy, r, 5, phase)));
    } else if (cls == "hexagon") {
        parts.push_back(poly_part(regular_polygon(cx, cy, r, 6, phase)));
    } else if (cls == "heptagon") {
        parts.push_back(poly_part(regular_polygon(cx, cy, r, 7, phase)));
    } else if (cls == "octagon") {
        parts.push_back(poly_part(regular_polygon(cx, cy, r, 8, phase)));
    } else if (cls == "circle") {
        parts.push_back(ellipse_part(cx, cy, r, r, 0));
    } else if (cls == "ellipse") {
        double aspect = rng.uniform(1.7, 2.4);
        parts.push_back(ellipse_part(cx, cy, r, r / aspect, phase));
    } else if (cls == "semicircle") {
        Poly p;
        for (int k = 0; k <= 24; ++k) {
            double a = kPi * k / 24.0;
            p.xs.push_back(r * std::cos(a));
            p.ys.push_back(-r * std::sin(a));
        }
        const double c = std::cos(jitter), s = std::sin(jitter);
        for (size_t i = 0; i < p.xs.size(); ++i) {
            double x = p.xs[i], y = p.ys[i];
            p.xs[i] = cx + x * c - y * s;
            p.ys[i] = cy + x * s + y * c;
        }
        parts.push_back(poly_part(std::move(p)));
    } else if (cls == "ring") {
        parts.push_back(ellipse_part(cx, cy, r, r, 0));
        parts.push_back(ellipse_part(cx, cy, 0.58 * r, 0.58 * r, 0, true));
    } else if (cls == "star4") {
        parts.push_back(poly_part(star_polygon(cx, cy, r, 4, phase)));
    } else if (cls == "star5") {
        parts.push_back(poly_part(star_polygon(cx, cy, r, 5, phase)));
    } else if (cls == "star6") {
        parts.push_back(poly_part(star_polygon(cx, cy, r, 6, phase)));
    } else if (cls == "star8") {
        parts.push_back(poly_part(star_polygon(cx, cy, r, 8, phase)));
    } else if (cls.rfind("arrow_", 0) == 0) {
        double rot = jitter;
        if (cls == "arrow_up") rot += -kPi / 2;
        else if (cls == "arrow_down") rot += kPi / 2;
        else if (cls == "arrow_left") rot += kPi;
        // canonical arrow points +x
        std::vector<std::pair<double, double>> pts = {{1, 0},       {0.2, 0.6},  {0.2, 0.27},
                                                      {-1, 0.27},   {-1, -0.27}, {0.2, -0.27},
                                                      {0.2, -0.6}};
        parts.push_back(poly_part(from_points(cx, cy, r, rot, pts)));
    } else if (cls == "cross_plus" || cls == "cross_x") {
        double rot = jitter + (cls == "cross_x" ? kPi / 4 : 0.0);
        const double w = 0.34;
        std::vector<std::pair<double, double>> pts = {{1, w},   {w, w},   {w, 1},   {-w, 1},
                                                      {-w, w},  {-1, w},  {-1, -w}, {-w, -w},
                                                      {-w, -1}, {w, -1},  {w, -w},  {1, -w}};
        parts.push_back(poly_part(from_points(cx, cy, r, rot, pts)));
    } else if (cls == "cross_t") {
        const double w = 0.30;
        std::vector<std::pair<double, double>> pts = {{-1, -1},     {1, -1},    {1, -1 + 2 * w},
                                                      {w, -1 + 2 * w}, {w, 1}, {-w, 1},
                                                      {-w, -1 + 2 * w}, {-1, -1 + 2 * w}};
        parts.push_back(poly_part(from_points(cx, cy, r, jitter, pts)));
    } else if (cls == "ringed_dot") {
        parts.push_back(ellipse_part(cx, cy, r, r, 0));
        parts.push_back(ellipse_part(cx, cy, 0.62 * r, 0.62 * r, 0, true));
        parts.push_back(ellipse_part(cx, cy, 0.32 * r, 0.32 * r, 0));
    } else if (cls == "boxed_dot") {
        parts.push_back(poly_part(regular_polygon(cx, cy, r, 4, kPi / 4 + jitter)));
        parts.push_back(poly_part(regular_polygon(cx, cy, 0.62 * r, 4, kPi / 4 + jitter), true));
        parts.push_back(ellipse_part(cx, cy, 0.28 * r, 0.28 * r, 0));
    } else if (cls == "diamond_dot") {
        parts.push_back(poly_part(regular_polygon(cx, cy, r, 4, jitter)));
        parts.push_back(poly_part(regular_polygon(cx, cy, 0.62 * r, 4, jitter), true));
        parts.push_back(ellipse_part(cx, cy, 0.28 * r, 0.28 * r, 0));
    } else {
        throw ValidationError("class '" + cls + "' is not renderable");
    }
    return parts;
}

} // namespace

const std::vector<std::string>& renderable_classes() {
    static const std::vector<std::string> classes = {
        "triangle", "square",     "rectangle",  "diamond",    "pentagon",  "hexagon",
        "heptagon", "octagon",    "circle",     "ellipse",    "semicircle", "ring",
        "star4",    "star5",      "star6",      "star8",      "arrow_up",  "arrow_down",
        "arrow_left", "arrow_right", "cross_plus", "cross_x",  "cross_t",   "ringed_dot",
        "boxed_dot", "diamond_dot"};
    return classes;
}

bool is_renderable(const std::string& cls) {
    const auto& all = renderable_classes();
    return std::find(all.begin(), all.end(), cls) != all.end();
}

void render_background(Image& img, Rng& rng, double noise_amp, int max_strokes) {
    const double base_r = rng.uniform(0.72, 0.90);
    const double base_g = rng.uniform(0.72, 0.90);
    const double base_b = rng.uniform(0.72, 0.90);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double n = rng.uniform(-noise_amp, noise_amp);
            uint8_t* p = img.px(x, y);
            p[0] = static_cast<uint8_t>(std::clamp(base_r + n, 0.0, 1.0) * 255.0);
            p[1] = static_cast<uint8_t>(std::clamp(base_g + n, 0.0, 1.0) * 255.0);
            p[2] = static_cast<uint8_t>(std::clamp(base_b + n, 0.0, 1.0) * 255.0);
        }
    }
    const int strokes = max_strokes > 0 ? rng.uniform_int(0, max_strokes) : 0;
    for (int s = 0; s < strokes; ++s) {
        double x0 = rng.uniform(0, img.width), y0 = rng.uniform(0, img.height);
        double ang = rng.uniform(0, 2 * kPi);
        double len = rng.uniform(10, 30);
        double shade = rng.uniform(0.45, 0.68);
        uint8_t v = static_cast<uint8_t>(shade * 255.0);
        int steps = static_cast<int>(len * 2);
        for (int i = 0; i <= steps; ++i) {
            int x = static_cast<int>(x0 + std::cos(ang) * len * i / steps);
            int y = static_cast<int>(y0 + std::sin(ang) * len * i / steps);
            if (x >= 0 && x < img.width && y >= 0 && y < img.height) {
                uint8_t* p = img.px(x, y);
                p[0] = p[1] = p[2] = v;
            }
        }
    }
}

RenderedObject render_object(Image& img, const std::string& cls, double cx, double cy,
                             double radius, Rng& rng) {
    auto parts = build_shape(cls, cx, cy, radius, rng);
    uint8_t col[3];
    for (auto& c : col) c = static_cast<uint8_t>(rng.uniform(0.04, 0.58) * 255.0);

    RenderedObject out;
    out.cls = cls;
    int x0 = std::max(0, static_cast<int>(cx - radius - 2));
    int x1 = std::min(img.width, static_cast<int>(cx + radius + 3));
    int y0 = std::max(0, static_cast<int>(cy - radius - 2));
    int y1 = std::min(img.height, static_cast<int>(cy + radius + 3));
    int mnx = img.width, mny = img.height, mxx = -1, mxy = -1;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            if (point_in_shape(parts, x + 0.5, y + 0.5)) {
                uint8_t* p = img.px(x, y);
                p[0] = col[0];
                p[1] = col[1];
                p[2] = col[2];
                mnx = std::min(mnx, x);
                mny = std::min(mny, y);
                mxx = std::max(mxx, x);
                mxy = std::max(mxy, y);
            }
        }
    }
    out.xmin = mnx;
    out.ymin = mny;
    out.xmax = mxx + 1;
    out.ymax = mxy + 1;
    return out;
}

} // namespace unseennet
