#include "opinf/matrixmarket.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include "opinf/errors.hpp"

namespace opinf {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view token, const std::filesystem::path& path) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && token.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw IoError("invalid numeric token '" + std::string(token) + "' in " + path.string());
  }
  return value;
}

long long parse_int(std::string_view token, const std::filesystem::path& path) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw IoError("invalid integer token '" + std::string(token) + "' in " + path.string());
  }
  return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::scientific, 16);
  if (ec != std::errc()) throw Error("floating point formatting failed");
  return std::string(buf, ptr);
}

std::string matrix_market_string(const Matrix& a) {
  std::string out;
  out.reserve(64 + static_cast<std::size_t>(a.size()) * 26);
  out += "%%MatrixMarket matrix array real general\n";
  out += std::to_string(a.rows());
  out += ' ';
  out += std::to_string(a.cols());
  out += '\n';
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out += format_double(a(i, j));
      out += '\n';
    }
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(tid % 100000);
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.flush();
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  if (is.bad()) throw IoError("read failed for " + path.string());
  return ss.str();
}

void write_matrix_market(const std::filesystem::path& path, const Matrix& a) {
  write_file_atomic(path, matrix_market_string(a));
}

Matrix read_matrix_market(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw IoError(path.string() + " is empty");

  auto header = split_ws(trim(line));
  if (header.size() < 4 || header[0] != "%%MatrixMarket" || header[1] != "matrix") {
    throw IoError(path.string() + " lacks a MatrixMarket header");
  }
  const std::string layout(header[2]);
  const std::string field(header[3]);
  const std::string symmetry(header.size() > 4 ? std::string(header[4]) : "general");
  if (layout != "array" && layout != "coordinate") {
    throw IoError("unsupported MatrixMarket layout '" + layout + "' in " + path.string());
  }
  if (field != "real" && field != "integer") {
    throw IoError("unsupported MatrixMarket field '" + field + "' in " + path.string());
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw IoError("unsupported MatrixMarket symmetry '" + symmetry + "' in " + path.string());
  }

  auto next_data_line = [&](std::string& dst) -> bool {
    while (std::getline(is, dst)) {
      auto t = trim(dst);
      if (t.empty() || t.front() == '%') continue;
      dst = std::string(t);
      return true;
    }
    return false;
  };

  if (!next_data_line(line)) throw IoError(path.string() + " lacks a size line");
  auto size_tokens = split_ws(line);

  if (layout == "array") {
    if (size_tokens.size() != 2) throw IoError("bad array size line in " + path.string());
    const Index rows = static_cast<Index>(parse_int(size_tokens[0], path));
    const Index cols = static_cast<Index>(parse_int(size_tokens[1], path));
    if (rows < 0 || cols < 0) throw IoError("negative dimensions in " + path.string());
    Matrix a(rows, cols);
    Index count = 0;
    const Index total = symmetry == "symmetric" ? rows * (rows + 1) / 2 : rows * cols;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(total));
    while (next_data_line(line)) {
      for (auto tok : split_ws(line)) {
        if (count >= total) throw IoError("too many entries in " + path.string());
        values.push_back(parse_double(tok, path));
        ++count;
      }
    }
    if (count != total) {
      throw IoError("expected " + std::to_string(total) + " entries in " + path.string() +
                    ", found " + std::to_string(count));
    }
    if (symmetry == "symmetric") {
      if (rows != cols) throw IoError("symmetric matrix must be square in " + path.string());
      std::size_t p = 0;
      for (Index j = 0; j < cols; ++j) {
        for (Index i = j; i < rows; ++i) {
          a(i, j) = values[p];
          a(j, i) = values[p];
          ++p;
        }
      }
    } else {
      std::size_t p = 0;
      for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) a(i, j) = values[p++];
      }
    }
    return a;
  }

  if (size_tokens.size() != 3) throw IoError("bad coordinate size line in " + path.string());
  const Index rows = static_cast<Index>(parse_int(size_tokens[0], path));
  const Index cols = static_cast<Index>(parse_int(size_tokens[1], path));
  const Index nnz = static_cast<Index>(parse_int(size_tokens[2], path));
  if (rows < 0 || cols < 0 || nnz < 0) throw IoError("negative dimensions in " + path.string());
  Matrix a = Matrix::Zero(rows, cols);
  Index seen = 0;
  while (next_data_line(line)) {
    auto tokens = split_ws(line);
    if (tokens.size() != 3) throw IoError("bad coordinate entry in " + path.string());
    const Index i = static_cast<Index>(parse_int(tokens[0], path)) - 1;
    const Index j = static_cast<Index>(parse_int(tokens[1], path)) - 1;
    if (i < 0 || i >= rows || j < 0 || j >= cols) {
      throw IoError("coordinate entry out of range in " + path.string());
    }
    const double v = parse_double(tokens[2], path);
    a(i, j) = v;
    if (symmetry == "symmetric" && i != j) a(j, i) = v;
    ++seen;
  }
  if (seen != nnz) {
    throw IoError("expected " + std::to_string(nnz) + " coordinate entries in " + path.string() +
                  ", found " + std::to_string(seen));
  }
  return a;
}

}  // namespace opinf
