/*
 *  io.cpp
 *  CSV and binary matrix I/O.
 */
#include "bhsne/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

namespace bhsne {

namespace {

constexpr char kMagic[8] = {'B', 'H', 'S', 'N', 'E', '\0', 'v', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

// Strict double parse over [begin, end); rejects trailing garbage.
bool parse_double(const char* begin, const char* end, double& out) {
    const auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc{} && result.ptr == end;
}

bool parse_int(const char* begin, const char* end, long& out) {
    const auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc{} && result.ptr == end;
}

void append_double(std::string& out, double v) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, result.ptr);
}

}  // namespace

void validate_matrix(const Matrix& m) {
    if (m.rows() < 2) throw DataError("matrix must contain at least two rows");
    if (m.cols() < 1) throw DataError("matrix must contain at least one column");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (!std::isfinite(m(i, j))) {
                throw DataError("non-finite value at row " + std::to_string(i + 1) +
                                ", column " + std::to_string(j + 1));
            }
        }
    }
}

CsvData load_csv(const std::string& path, bool has_label_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);

    std::vector<double> values;
    LabelVector labels;
    std::size_t columns = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        // Split on commas and parse in place.
        std::size_t field_count = 0;
        const char* p = line.data();
        const char* line_end = line.data() + line.size();
        while (p <= line_end) {
            const char* q = static_cast<const char*>(std::memchr(p, ',', line_end - p));
            if (q == nullptr) q = line_end;
            ++field_count;
            const bool is_label = has_label_column && q == line_end;
            if (is_label) {
                long label = 0;
                if (!parse_int(p, q, label)) {
                    throw DataError(path + ":" + std::to_string(line_no) +
                                    ": label field is not an integer");
                }
                labels.push_back(static_cast<int>(label));
            } else {
                double v = 0.0;
                if (!parse_double(p, q, v)) {
                    throw DataError(path + ":" + std::to_string(line_no) +
                                    ": field " + std::to_string(field_count) +
                                    " is not numeric");
                }
                values.push_back(v);
            }
            if (q == line_end) break;
            p = q + 1;
        }

        if (columns == 0) {
            columns = field_count;
            if (has_label_column && columns < 2) {
                throw DataError(path + ": need at least one value column besides the label");
            }
        } else if (field_count != columns) {
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(columns) + " fields, got " +
                            std::to_string(field_count));
        }
        ++rows;
    }

    const std::size_t d = has_label_column ? columns - 1 : columns;
    Matrix m(rows, d);
    m.values() = std::move(values);
    validate_matrix(m);

    CsvData out;
    out.matrix = std::move(m);
    if (has_label_column) out.labels = std::move(labels);
    return out;
}

Matrix load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);

    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw DataError(path + ": bad magic, not a matrix file");
    }
    const std::uint64_t n = get_u64(in);
    const std::uint64_t d = get_u64(in);
    if (!in) throw DataError(path + ": truncated header");
    if (n < 2) throw DataError(path + ": matrix must contain at least two rows");
    if (d < 1) throw DataError(path + ": matrix must contain at least one column");

    // The declared payload must actually be present before anything is
    // allocated for it.
    const auto header_end = in.tellg();
    in.seekg(0, std::ios::end);
    const std::uint64_t available = static_cast<std::uint64_t>(in.tellg() - header_end);
    in.seekg(header_end);
    if (d > available / sizeof(double) / n) {
        throw DataError(path + ": truncated payload");
    }

    Matrix m(n, d);
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(m.values().data()),
                static_cast<std::streamsize>(n * d * sizeof(double)));
    } else {
        for (auto& v : m.values()) {
            v = std::bit_cast<double>(get_u64(in));
        }
    }
    if (!in) throw DataError(path + ": truncated payload");
    validate_matrix(m);
    return m;
}

void write_binary(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out.write(kMagic, 8);
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(m.values().data()),
                  static_cast<std::streamsize>(m.size() * sizeof(double)));
    } else {
        for (double v : m.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    if (!out) throw DataError("write failed: " + path);
}

void write_embedding(const std::string& path, const Matrix& embedding,
                     const LabelVector* labels) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    std::string buf;
    buf.reserve(embedding.rows() * 48);
    for (std::size_t i = 0; i < embedding.rows(); ++i) {
        for (std::size_t j = 0; j < embedding.cols(); ++j) {
            if (j > 0) buf.push_back(',');
            append_double(buf, embedding(i, j));
        }
        if (labels != nullptr) {
            buf.push_back(',');
            buf.append(std::to_string((*labels)[i]));
        }
        buf.push_back('\n');
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("write failed: " + path);
}

LabelVector load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    LabelVector labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        long v = 0;
        if (!parse_int(line.data(), line.data() + line.size(), v)) {
            throw DataError(path + ":" + std::to_string(line_no) + ": not an integer label");
        }
        labels.push_back(static_cast<int>(v));
    }
    return labels;
}

}  // namespace bhsne
