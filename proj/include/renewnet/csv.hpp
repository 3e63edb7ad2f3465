#pragma once

// Locale-free CSV output with shortest round-trip number formatting.

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "renewnet/error.hpp"

namespace renewnet::csv {

inline std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string quote(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Rows are already-formatted cells.
class Writer {
public:
    explicit Writer(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != header_.size()) throw Error("csv: row width does not match the header");
        rows_.push_back(cells);
    }

    std::string str() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += quote(cells[i]);
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot write '" + path + "'");
        f << str();
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace renewnet::csv
