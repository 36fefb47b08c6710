#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gvfl/dense_matrix.hpp"

namespace gvfl {

/// Writes rows of comma-separated values with round-trip precision (%.17g).
/// An optional header line is emitted first.
void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m,
                      const std::vector<std::string>& header = {});

DenseMatrix read_matrix_csv(const std::filesystem::path& path,
                            bool skip_header = false);

/// Writes via a temp file in the same directory plus rename, so readers
/// never observe a partial file.
void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace gvfl
