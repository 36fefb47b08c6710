#include "gvfl/io_util.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gvfl {

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m,
                      const std::vector<std::string>& header) {
  std::string out;
  out.reserve(m.size() * 12);
  if (!header.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out += ',';
      out += header[i];
    }
    out += '\n';
  }
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  atomic_write_text(path, out);
}

DenseMatrix read_matrix_csv(const std::filesystem::path& path,
                            bool skip_header) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::vector<double> data;
  int cols = -1;
  int rows = 0;
  bool first = true;
  while (std::getline(f, line)) {
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty() || line == "\r") continue;
    std::string_view sv = line;
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    int c = 0;
    std::size_t pos = 0;
    while (pos <= sv.size()) {
      const auto comma = sv.find(',', pos);
      const auto tok = sv.substr(
          pos, comma == std::string_view::npos ? sv.size() - pos : comma - pos);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw std::runtime_error(path.string() + ": bad number '" +
                                 std::string(tok) + "'");
      data.push_back(v);
      ++c;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (cols == -1) cols = c;
    if (c != cols)
      throw std::runtime_error(path.string() + ": ragged rows");
    ++rows;
  }
  return DenseMatrix(rows, cols == -1 ? 0 : cols, std::move(data));
}

void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content) {
  const auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace gvfl
