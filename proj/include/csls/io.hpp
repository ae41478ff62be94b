#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csls/labels.hpp"
#include "csls/matrix.hpp"

namespace csls::io {

enum class MatrixFormat { csv, binary };

// Binary layout: "CSLS" magic, version byte 0x01, u32 LE rows, u32 LE cols,
// then rows*cols IEEE-754 binary32 LE values in row-major order.
inline constexpr std::uint8_t kMagic[4] = {0x43, 0x53, 0x4C, 0x53};
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderBytes = 13;

/// ".bin" selects binary, anything else CSV.
MatrixFormat format_for_path(const std::filesystem::path& path);

Matrix read_matrix(const std::filesystem::path& path, MatrixFormat format);
void write_matrix(const Matrix& m, const std::filesystem::path& path, MatrixFormat format);

Matrix parse_csv_matrix(const std::string& text);
std::string format_csv_matrix(const Matrix& m);
Matrix decode_binary_matrix(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_binary_matrix(const Matrix& m);

/// One nonnegative integer per line. With no class count, uses max + 1.
LabelSet read_labels(const std::filesystem::path& path, std::optional<std::size_t> num_classes);
void write_labels(const LabelSet& labels, const std::filesystem::path& path);

void write_indices(std::span<const std::size_t> indices, const std::filesystem::path& path);
std::vector<std::size_t> read_indices(const std::filesystem::path& path);

/// 17 significant digits, same text as printf("%.17g"); parses back exactly.
std::string format_double(double v);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace csls::io
