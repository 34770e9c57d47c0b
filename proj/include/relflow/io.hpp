#pragma once

#include <array>
#include <charconv>
#include <concepts>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>

#include "relflow/errors.hpp"

namespace relflow {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

/// One comma-separated line; the newline is written on destruction.
class CsvRow {
public:
    explicit CsvRow(std::ostream& os) : os_(os) {}
    CsvRow(const CsvRow&) = delete;
    CsvRow& operator=(const CsvRow&) = delete;
    ~CsvRow() { os_ << '\n'; }

    CsvRow& operator<<(double v) { return put(format_double(v)); }
    CsvRow& operator<<(std::string_view s) { return put(s); }
    template <std::integral I>
    CsvRow& operator<<(I v) { return put(std::to_string(v)); }

private:
    CsvRow& put(std::string_view s) {
        if (!first_) os_ << ',';
        os_ << s;
        first_ = false;
        return *this;
    }

    std::ostream& os_;
    bool first_ = true;
};

/// Writes through a sibling temporary and renames into place, so a failed
/// write never leaves a partial file at `path`.
inline void write_file_atomically(const std::filesystem::path& path,
                                  const std::function<void(std::ostream&)>& body) {
    std::filesystem::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open '" + tmp.string() + "' for writing");
        try {
            body(os);
        } catch (...) {
            os.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw;
        }
        os.flush();
        if (!os) {
            os.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw Error("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot move output into '" + path.string() + "'");
    }
}

} // namespace relflow
