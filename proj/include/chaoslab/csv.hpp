#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "chaoslab/errors.hpp"

/// Minimal CSV writing: fixed header row, '.' decimal separator, shortest
/// round-trip number formatting (std::to_chars), one row per write_row.
namespace chaoslab::io {

inline std::string format_number(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary), columns_(header.size()) {
        if (!out_) throw UsageError("cannot open CSV file for writing: " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ',';
            out_ << header[i];
        }
        out_ << '\n';
    }

    void write_row(const std::vector<double>& values) {
        if (values.size() != columns_)
            throw UsageError("CSV row width does not match the header");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << format_number(values[i]);
        }
        out_ << '\n';
        ++rows_;
    }

    /// Mixed text/number row (used for label columns).
    void write_row(const std::vector<std::string>& values) {
        if (values.size() != columns_)
            throw UsageError("CSV row width does not match the header");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << values[i];
        }
        out_ << '\n';
        ++rows_;
    }

    long rows() const { return rows_; }

private:
    std::ofstream out_;
    std::size_t columns_;
    long rows_ = 0;
};

} // namespace chaoslab::io
