#include "tsrules/chart.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string_view>

namespace tsrules {

namespace {

constexpr int kPlotW = static_cast<int>(kChartWidth - kMarginLeft - kMarginRight);
constexpr int kPlotH = static_cast<int>(kChartHeight - kMarginTop - kMarginBottom);
constexpr int kGlyphScale = 2;

// 3x5 glyphs, one row per entry, bit 2 is the leftmost column.
struct Glyph {
    char c;
    std::array<std::uint8_t, 5> rows;
};
constexpr std::array<Glyph, 14> kFont = {{
    {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}}, {'3', {7, 1, 7, 1, 7}},
    {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}}, {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 1, 1}},
    {'8', {7, 5, 7, 5, 7}}, {'9', {7, 5, 7, 1, 7}}, {'.', {0, 0, 0, 0, 2}}, {'-', {0, 0, 7, 0, 0}},
    {'+', {0, 2, 7, 2, 0}}, {'e', {0, 7, 7, 4, 7}},
}};

class Canvas {
public:
    Canvas() : r_{kChartWidth, kChartHeight, std::vector<std::uint8_t>(std::size_t{kChartWidth} * kChartHeight, kBackground)} {}

    void set(int x, int y, std::uint8_t c) {
        if (x < 0 || y < 0 || x >= static_cast<int>(r_.width) || y >= static_cast<int>(r_.height)) return;
        r_.pixels[static_cast<std::size_t>(y) * r_.width + static_cast<std::size_t>(x)] = c;
    }

    void rect(int x0, int y0, int x1, int y1, std::uint8_t c) {
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) set(x, y, c);
    }

    // Bresenham, two pixels thick.
    void line(int x0, int y0, int x1, int y1, std::uint8_t c) {
        const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
        const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
        const bool steep = -dy > dx;
        int err = dx + dy;
        while (true) {
            set(x0, y0, c);
            steep ? set(x0 + 1, y0, c) : set(x0, y0 + 1, c);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) { err += dy; x0 += sx; }
            if (e2 <= dx) { err += dx; y0 += sy; }
        }
    }

    int text_width(std::string_view s) const { return static_cast<int>(s.size()) * 4 * kGlyphScale - kGlyphScale; }

    void text(int x, int y, std::string_view s, std::uint8_t c) {
        for (const char ch : s) {
            const auto g = std::find_if(kFont.begin(), kFont.end(), [&](const Glyph& f) { return f.c == ch; });
            if (g != kFont.end()) {
                for (int row = 0; row < 5; ++row)
                    for (int col = 0; col < 3; ++col)
                        if (g->rows[row] & (4 >> col))
                            rect(x + col * kGlyphScale, y + row * kGlyphScale, x + col * kGlyphScale + kGlyphScale - 1,
                                 y + row * kGlyphScale + kGlyphScale - 1, c);
            }
            x += 4 * kGlyphScale;
        }
    }

    Raster take() { return std::move(r_); }

private:
    Raster r_;
};

std::string tick_label(double v) {
    if (std::abs(v) < 1e-12) v = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

Raster rasterize_chart(const TimeSeriesSample& sample) {
    const auto& v = sample.values;
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    if (hi - lo < 1e-12) {
        lo -= 1.0;
        hi += 1.0;
    } else {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    const int left = static_cast<int>(kMarginLeft), top = static_cast<int>(kMarginTop);
    const int bottom = top + kPlotH - 1, right = left + kPlotW - 1;
    const auto px = [&](std::size_t i) {
        return left + static_cast<int>(std::lround(static_cast<double>(i) * (kPlotW - 1) /
                                                   static_cast<double>(std::max<std::size_t>(v.size() - 1, 1))));
    };
    const auto py = [&](double y) { return top + static_cast<int>(std::lround((hi - y) / (hi - lo) * (kPlotH - 1))); };

    Canvas c;
    c.rect(left - 1, top, left - 1, bottom + 1, kAxis);
    c.rect(left - 1, bottom + 1, right, bottom + 1, kAxis);
    for (int k = 0; k <= 4; ++k) {
        const double value = lo + (hi - lo) * k / 4.0;
        const int y = py(value);
        c.rect(left - 6, y, left - 2, y, kAxis);
        const auto label = tick_label(value);
        c.text(left - 10 - c.text_width(label), y - 5, label, kAxis);
    }
    for (std::size_t i = 0; i < v.size(); i += 13) {
        const int x = px(i);
        c.rect(x, bottom + 2, x, bottom + 6, kAxis);
        const auto label = std::to_string(i);
        c.text(x - c.text_width(label) / 2, bottom + 10, label, kAxis);
    }
    for (std::size_t i = 1; i < v.size(); ++i) c.line(px(i - 1), py(v[i - 1]), px(i), py(v[i]), kSeries);
    const int cx = px(v.size() - 1), cy = py(v.back());
    c.rect(cx - 3, cy - 3, cx + 3, cy + 3, kSeries);
    return c.take();
}

std::vector<std::uint8_t> render_chart(const TimeSeriesSample& sample) {
    const auto r = rasterize_chart(sample);
    return encode_png(r.width, r.height, kChartPalette, r.pixels);
}

}  // namespace tsrules
