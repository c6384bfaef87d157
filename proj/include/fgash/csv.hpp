#ifndef FGASH_CSV_HPP
#define FGASH_CSV_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "fgash/errors.hpp"

namespace fgash {
namespace csv {

/**
 * Locale-independent decimal rendering with 17 significant digits, enough to
 * round-trip any double bit pattern.  Output bytes depend only on the value,
 * which is what makes run-to-run CSV comparisons meaningful.
 */
inline std::string format(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v,
                             std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string format(std::int64_t v) {
    char buf[24];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/** Minimal row-at-a-time CSV writer. */
class Writer {
public:
    Writer(const std::string& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary) {
        detail::require<ConfigError>(out_.good(), "cannot open output file: " + path);
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ',';
            out_ << header[i];
        }
        out_ << '\n';
        ncols_ = header.size();
    }

    void row(const std::vector<std::string>& cells) {
        detail::require<ConfigError>(cells.size() == ncols_, "csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::size_t ncols_ = 0;
};

} // namespace csv
} // namespace fgash

#endif
