#include "asen/detail/ops.hpp"

#include "asen/error.hpp"

#include <cmath>
#include <string>

namespace asen::detail {

Matrix affine(const Eigen::Ref<const Matrix>& x, const Matrix& w, const RowVector& b) {
    if (x.cols() != w.rows() || w.cols() != b.cols()) {
        throw DimensionError("affine: input has " + std::to_string(x.cols()) + " columns, layer expects " +
                             std::to_string(w.rows()));
    }
    Matrix out(x.rows(), w.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        auto row = out.row(r);
        row = b;
        for (Eigen::Index k = 0; k < x.cols(); ++k) {
            const double v = x(r, k);
            if (v != 0.0) row.noalias() += v * w.row(k);
        }
    }
    return out;
}

double ordered_sum(const Eigen::Ref<const RowVector>& v) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += v(i);
    return s;
}

double ordered_dot(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) s += a(i) * b(i);
    return s;
}

void softmax_inplace(Eigen::Ref<RowVector> row) {
    const double m = row.maxCoeff();
    double total = 0.0;
    for (Eigen::Index i = 0; i < row.size(); ++i) total += (row(i) = std::exp(row(i) - m));
    for (Eigen::Index i = 0; i < row.size(); ++i) row(i) /= total;
}

void softmax_rows(Matrix& z) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) softmax_inplace(z.row(r));
}

double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix& probs, std::size_t& correct) {
    check_labels(labels, logits.rows(), logits.cols());
    probs.resize(logits.rows(), logits.cols());
    double total = 0.0;
    correct = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const auto z = logits.row(r);
        const double m = z.maxCoeff();
        double denom = 0.0;
        for (Eigen::Index c = 0; c < z.size(); ++c) denom += std::exp(z(c) - m);
        const double lse = m + std::log(denom);
        for (Eigen::Index c = 0; c < z.size(); ++c) probs(r, c) = std::exp(z(c) - lse);
        const int y = labels[static_cast<std::size_t>(r)];
        total += lse - z(y);
        if (argmax(z) == y) ++correct;
    }
    return total;
}

int argmax(const Eigen::Ref<const RowVector>& row) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < row.size(); ++i) {
        if (row(i) > row(best)) best = i;
    }
    return static_cast<int>(best);
}

void check_labels(std::span<const int> labels, Eigen::Index rows, Eigen::Index classes) {
    if (static_cast<Eigen::Index>(labels.size()) != rows) {
        throw DimensionError("got " + std::to_string(labels.size()) + " labels for " + std::to_string(rows) + " rows");
    }
    for (int y : labels) {
        if (y < 0 || y >= classes) throw DataError("label " + std::to_string(y) + " outside class range");
    }
}

} // namespace asen::detail
