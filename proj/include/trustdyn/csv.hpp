#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

// Minimal CSV plumbing. Reals are written as fixed 6-decimal strings so
// outputs are byte-reproducible across runs and platforms.

namespace trustdyn {

struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& column)
        : std::runtime_error("missing column: " + column), column_name(column) {}
    std::string column_name;
};
struct EmptyFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(char sep = ',') : sep_(sep) {}

    CsvWriter& header(const std::vector<std::string>& cols) {
        row_strings(cols);
        return *this;
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << sep_;
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    char sep_;
    std::ostringstream out_;
};

// Header-indexed reader; all cells kept as strings, converted on access.
class CsvReader {
public:
    explicit CsvReader(const std::string& text, char sep = ',') {
        std::istringstream is(text);
        std::string line;
        bool first = true;
        while (std::getline(is, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::string cell;
            std::istringstream ls(line);
            while (std::getline(ls, cell, sep)) cells.push_back(cell);
            if (line.back() == sep) cells.push_back("");
            if (first) {
                for (std::size_t i = 0; i < cells.size(); ++i) col_index_[cells[i]] = i;
                first = false;
            } else {
                rows_.push_back(std::move(cells));
            }
        }
        if (first) throw EmptyFile("empty csv");
    }

    std::size_t column(const std::string& name) const {
        auto it = col_index_.find(name);
        if (it == col_index_.end()) throw SchemaError(name);
        return it->second;
    }

    std::size_t size() const { return rows_.size(); }

    const std::string& cell(std::size_t row, std::size_t col) const {
        return rows_[row][col];
    }
    double real(std::size_t row, std::size_t col) const {
        return std::stod(rows_[row][col]);
    }
    long integer(std::size_t row, std::size_t col) const {
        return std::stol(rows_[row][col]);
    }

private:
    std::unordered_map<std::string, std::size_t> col_index_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// FNV-1a content digest for the run manifest.
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string digest_hex(const std::string& data) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

}  // namespace trustdyn
