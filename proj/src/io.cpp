#include "tsrules/io.hpp"

#include <fstream>
#include <sstream>

#include "tsrules/error.hpp"

namespace tsrules {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot move '" + tmp.string() + "' into place: " + ec.message());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
    write_file(path, std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

}  // namespace tsrules
