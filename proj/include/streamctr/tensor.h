// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace streamctr::nn {

// Row-major dense storage shared by every parameter and activation.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class Mode { kTrain, kEval };

// Row-sparse gradient of a table: values.row(i) belongs to table row rows[i].
// Rows are unique and ascending.
struct SparseRows {
  std::vector<std::int64_t> rows;
  Matrix values;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace streamctr::nn
