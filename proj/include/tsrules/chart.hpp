#pragma once

#include <cstdint>
#include <vector>

#include "tsrules/dataset.hpp"
#include "tsrules/png.hpp"

namespace tsrules {

inline constexpr std::uint32_t kChartWidth = 800;
inline constexpr std::uint32_t kChartHeight = 400;

// Plot area margins in pixels.
inline constexpr std::uint32_t kMarginLeft = 64;
inline constexpr std::uint32_t kMarginRight = 16;
inline constexpr std::uint32_t kMarginTop = 16;
inline constexpr std::uint32_t kMarginBottom = 40;

enum ChartColor : std::uint8_t { kBackground = 0, kAxis = 1, kSeries = 2 };
inline constexpr std::array<Rgb, 3> kChartPalette = {Rgb{255, 255, 255}, Rgb{96, 96, 96}, Rgb{31, 119, 180}};

struct Raster {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels;  // palette indices, row-major

    std::uint8_t at(std::uint32_t x, std::uint32_t y) const { return pixels[std::size_t{y} * width + x]; }
};

// Week index on x, value on y, last point marked. A flat series is padded by
// one unit each way so it lands mid-plot.
Raster rasterize_chart(const TimeSeriesSample& sample);

// rasterize_chart encoded as PNG; identical samples give identical bytes.
std::vector<std::uint8_t> render_chart(const TimeSeriesSample& sample);

}  // namespace tsrules
