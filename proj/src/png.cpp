#include "tsrules/png.hpp"

#include <string_view>

#include <zlib.h>

#include "tsrules/error.hpp"

namespace tsrules {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void chunk(std::vector<std::uint8_t>& out, std::string_view type, std::span<const std::uint8_t> data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    const auto start = out.size();
    out.insert(out.end(), type.begin(), type.end());
    out.insert(out.end(), data.begin(), data.end());
    const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_png(std::uint32_t width, std::uint32_t height, std::span<const Rgb> palette,
                                     std::span<const std::uint8_t> pixels) {
    if (width == 0 || height == 0 || pixels.size() != std::size_t{width} * height) {
        throw Error(ErrorCode::InvalidConfig, "pixel buffer does not match image size");
    }
    if (palette.empty() || palette.size() > 256) throw Error(ErrorCode::InvalidConfig, "palette needs 1..256 entries");

    std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, width);
    put_u32(ihdr, height);
    ihdr.insert(ihdr.end(), {8, 3, 0, 0, 0});  // depth 8, indexed, deflate, no filter, no interlace
    chunk(out, "IHDR", ihdr);

    std::vector<std::uint8_t> plte;
    for (const auto& c : palette) plte.insert(plte.end(), c.begin(), c.end());
    chunk(out, "PLTE", plte);

    std::vector<std::uint8_t> raw;
    raw.reserve(std::size_t{height} * (width + 1));
    for (std::uint32_t y = 0; y < height; ++y) {
        raw.push_back(0);  // filter type None
        const auto row = pixels.subspan(std::size_t{y} * width, width);
        raw.insert(raw.end(), row.begin(), row.end());
    }
    uLongf size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> idat(size);
    if (compress2(idat.data(), &size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
        throw Error(ErrorCode::Io, "deflate failed");
    }
    idat.resize(size);
    chunk(out, "IDAT", idat);
    chunk(out, "IEND", {});
    return out;
}

}  // namespace tsrules
