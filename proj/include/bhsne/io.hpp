/*
 *  io.hpp
 *  Loading and persisting data matrices, labels and embeddings.
 *
 *  Binary matrix format: 8-byte magic "BHSNE\0v1", two 64-bit little-endian
 *  unsigned integers N and D, then N*D little-endian IEEE-754 doubles in
 *  row-major order.
 */
#pragma once

#include <optional>
#include <string>

#include "error.hpp"
#include "matrix.hpp"

namespace bhsne {

struct CsvData {
    Matrix matrix;
    std::optional<LabelVector> labels;
};

// Parses a CSV of reals, one object per line. With has_label_column, the last
// column is split off as integer labels. Throws DataError on ragged rows,
// non-numeric fields (both diagnosed with a line number) and non-finite
// values (diagnosed with row and column).
CsvData load_csv(const std::string& path, bool has_label_column = false);

Matrix load_binary(const std::string& path);
void write_binary(const std::string& path, const Matrix& m);

// Writes "y1,y2[,label]" rows with shortest round-trip double formatting.
void write_embedding(const std::string& path, const Matrix& embedding,
                     const LabelVector* labels = nullptr);

// One integer label per line.
LabelVector load_labels(const std::string& path);

// Enforces the DataMatrix invariants: n >= 2, d >= 1, all entries finite.
// Throws DataError naming the offending row and column.
void validate_matrix(const Matrix& m);

}  // namespace bhsne
