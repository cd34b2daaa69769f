#pragma once

#include <filesystem>
#include <string>

#include "opinf/numkernel.hpp"

namespace opinf {

/// Canonical text form of a double: scientific, 17 significant digits,
/// locale-independent. Round-trips binary64 exactly.
std::string format_double(double value);

/// Serializes a dense matrix in MatrixMarket array format (entries in
/// column-major order, one per line). Formatting is deterministic.
std::string matrix_market_string(const Matrix& a);

/// Writes `a` to `path` atomically (temp file + rename).
void write_matrix_market(const std::filesystem::path& path, const Matrix& a);

/// Reads a MatrixMarket file. Supports the array format this library writes
/// plus coordinate format (general or symmetric) for user-supplied systems.
Matrix read_matrix_market(const std::filesystem::path& path);

/// Writes `content` to `path` via a temporary file and rename, creating
/// parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Reads a whole file; throws IoError when missing/unreadable.
std::string read_file(const std::filesystem::path& path);

}  // namespace opinf
