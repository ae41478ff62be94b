#include "csls/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "csls/error.hpp"

namespace csls::io {

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "binary32 payloads require IEEE-754 floats");

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Splits on LF; a single trailing newline does not produce an extra line.
std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
    return v;
}

}  // namespace

MatrixFormat format_for_path(const std::filesystem::path& path) {
    return path.extension() == ".bin" ? MatrixFormat::binary : MatrixFormat::csv;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

Matrix parse_csv_matrix(const std::string& text) {
    const auto lines = split_lines(text);
    std::vector<double> values;
    std::size_t cols = 0;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1;
        std::string_view line = trim(lines[li]);
        if (line.empty()) fail_data("CSV line " + std::to_string(line_no) + ": empty row");
        std::size_t fields = 0;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            std::string_view field =
                trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
                fail_data("CSV line " + std::to_string(line_no) + ", field " + std::to_string(fields + 1) +
                          ": cannot parse '" + std::string(field) + "' as a number");
            }
            if (!std::isfinite(v)) {
                fail_data("CSV line " + std::to_string(line_no) + ", field " + std::to_string(fields + 1) +
                          ": non-finite value");
            }
            values.push_back(v);
            ++fields;
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        if (li == 0) {
            cols = fields;
        } else if (fields != cols) {
            fail_data("CSV line " + std::to_string(line_no) + ": ragged row with " + std::to_string(fields) +
                      " fields, expected " + std::to_string(cols));
        }
    }
    return Matrix(lines.size(), cols, std::move(values));
}

std::string format_csv_matrix(const Matrix& m) {
    std::string out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out.push_back(',');
            out += format_double(m(r, c));
        }
        out.push_back('\n');
    }
    return out;
}

Matrix decode_binary_matrix(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes) {
        fail_data("binary matrix truncated in header: " + std::to_string(bytes.size()) + " of " +
                  std::to_string(kHeaderBytes) + " bytes");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail_data("binary matrix: bad magic at byte 0");
    if (bytes[4] != kVersion) {
        fail_data("binary matrix: unsupported version " + std::to_string(bytes[4]) + " at byte 4");
    }
    const std::uint64_t rows = get_u32(bytes, 5);
    const std::uint64_t cols = get_u32(bytes, 9);
    const std::uint64_t expected = kHeaderBytes + 4 * rows * cols;
    if (bytes.size() < expected) {
        fail_data("binary matrix truncated at byte " + std::to_string(bytes.size()) + ": " +
                  std::to_string(rows) + "x" + std::to_string(cols) + " needs " + std::to_string(expected) +
                  " bytes");
    }
    if (bytes.size() > expected) {
        fail_data("binary matrix: " + std::to_string(bytes.size() - expected) + " trailing bytes after byte " +
                  std::to_string(expected));
    }
    std::vector<double> values(rows * cols);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::size_t at = kHeaderBytes + 4 * i;
        const float f = std::bit_cast<float>(get_u32(bytes, at));
        if (!std::isfinite(f)) fail_data("binary matrix: non-finite value at byte " + std::to_string(at));
        values[i] = static_cast<double>(f);
    }
    return Matrix(rows, cols, std::move(values));
}

std::vector<std::uint8_t> encode_binary_matrix(const Matrix& m) {
    m.require_finite("matrix to write");
    if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) fail_data("matrix too large for binary format");
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.reserve(kHeaderBytes + 4 * m.size());
    out.push_back(kVersion);
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i) {
        const float f = static_cast<float>(m.values()[i]);
        if (!std::isfinite(f)) {
            fail_data("matrix value at row " + std::to_string(i / m.cols()) + " overflows binary32");
        }
        put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_data("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail_data("write failed: " + path.string());
}

Matrix read_matrix(const std::filesystem::path& path, MatrixFormat format) {
    const std::string text = read_text(path);
    try {
        if (format == MatrixFormat::csv) return parse_csv_matrix(text);
        const auto* p = reinterpret_cast<const std::uint8_t*>(text.data());
        return decode_binary_matrix({p, text.size()});
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

void write_matrix(const Matrix& m, const std::filesystem::path& path, MatrixFormat format) {
    if (format == MatrixFormat::csv) {
        m.require_finite("matrix to write");
        write_text(path, format_csv_matrix(m));
        return;
    }
    const auto bytes = encode_binary_matrix(m);
    write_text(path, std::string(bytes.begin(), bytes.end()));
}

std::vector<std::size_t> read_indices(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    const auto lines = split_lines(text);
    std::vector<std::size_t> out;
    out.reserve(lines.size());
    for (std::size_t li = 0; li < lines.size(); ++li) {
        std::string_view line = trim(lines[li]);
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
        if (line.empty() || ec != std::errc() || ptr != line.data() + line.size()) {
            fail_data(path.string() + " line " + std::to_string(li + 1) + ": expected a nonnegative integer, got '" +
                      std::string(line) + "'");
        }
        out.push_back(v);
    }
    return out;
}

LabelSet read_labels(const std::filesystem::path& path, std::optional<std::size_t> num_classes) {
    auto labels = read_indices(path);
    if (num_classes) return LabelSet(std::move(labels), *num_classes);
    return LabelSet::infer(std::move(labels));
}

void write_indices(std::span<const std::size_t> indices, const std::filesystem::path& path) {
    std::string out;
    for (std::size_t i : indices) {
        out += std::to_string(i);
        out.push_back('\n');
    }
    write_text(path, out);
}

void write_labels(const LabelSet& labels, const std::filesystem::path& path) {
    write_indices(labels.labels(), path);
}

}  // namespace csls::io
