#pragma once

// Dense kernels shared by the MLP, the attention head and the linear baselines.

#include "asen/linalg.hpp"

#include <span>

namespace asen::detail {

/// X * W + b, evaluated row by row with a fixed accumulation order so a row's
/// result does not depend on how many other rows share the batch.
Matrix affine(const Eigen::Ref<const Matrix>& x, const Matrix& w, const RowVector& b);

/// Left-to-right sum and dot product. Eigen's vectorized reductions pick their
/// packet order from the operand's memory alignment, which for a row view
/// depends on its position in the batch.
double ordered_sum(const Eigen::Ref<const RowVector>& v);
double ordered_dot(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b);

/// Max-shifted softmax of one row, in place, with scalar std::exp so the
/// result does not depend on the row's alignment either.
void softmax_inplace(Eigen::Ref<RowVector> row);

/// softmax_inplace on every row.
void softmax_rows(Matrix& z);

/// Fused softmax + cross-entropy over logits. Returns the summed loss; writes
/// probabilities into `probs` and counts argmax hits into `correct`.
double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix& probs, std::size_t& correct);

/// Index of the largest entry; ties go to the lowest index.
int argmax(const Eigen::Ref<const RowVector>& row);

void check_labels(std::span<const int> labels, Eigen::Index rows, Eigen::Index classes);

} // namespace asen::detail
