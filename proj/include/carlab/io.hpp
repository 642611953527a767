#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "carlab/errors.hpp"

namespace carlab {

using ordered_json = nlohmann::ordered_json;

/// Shortest exact decimal form of a double; the one formatting used in every
/// CSV cell so reruns are byte-identical.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Plain CSV writer: UTF-8, LF line endings, '.' decimal separator.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) {
        std::filesystem::create_directories(path.parent_path());
        out_.open(path, std::ios::binary);
        if (!out_) throw ConfigInvalid("cannot open output file " + path.string());
        write_row_strings(header);
    }

    void write_row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void cell(const std::string& s) { row_.push_back(s); }
    void cell(double v) { row_.push_back(fmt_double(v)); }
    void cell(int v) { row_.push_back(std::to_string(v)); }

    void end_row() {
        write_row_strings(row_);
        row_.clear();
    }

private:
    std::ofstream out_;
    std::vector<std::string> row_;
};

inline void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigInvalid("cannot open output file " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace carlab
