#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace oracle {

using CountMatrix = std::vector<std::vector<std::int64_t>>;

// Printed confusion matrices, rows = true class, columns = predicted class,
// class order sugarcane, wheat, potato, mustard, maize, cotton.
inline CountMatrix svm_matrix() {
    return {{7514, 259, 17, 6, 192, 21},      {264, 17694, 27, 51, 178, 36}, {19, 23, 2679, 213, 62, 296},
            {57, 38, 244, 5592, 34, 671},     {204, 249, 13, 5, 3678, 1},    {107, 192, 287, 417, 107, 8799}};
}
inline CountMatrix logreg_matrix() {
    return {{7623, 274, 45, 24, 109, 27},  {153, 19214, 34, 62, 94, 74}, {34, 42, 2714, 134, 32, 190},
            {31, 15, 167, 5629, 46, 421},  {105, 161, 19, 32, 3714, 9},  {68, 108, 135, 234, 62, 8799}};
}
inline CountMatrix asen_matrix() {
    return {{7573, 285, 3, 35, 384, 35},  {324, 18293, 4, 9, 341, 13}, {11, 24, 2754, 187, 3, 291},
            {18, 14, 240, 5612, 13, 324}, {264, 123, 16, 7, 3612, 31}, {23, 91, 528, 492, 13, 8845}};
}

// Hand tallies of the matrices above (spreadsheet-style, done before coding).
struct Tally {
    std::int64_t trace;
    std::int64_t total;
    double macro_precision;
    double macro_recall;
    double macro_f1;
};
inline constexpr Tally kSvmTally{45956, 50246, 0.891633882614, 0.889740296863, 0.890534669536};
inline constexpr Tally kLogregTally{47693, 50634, 0.925453231662, 0.921551795834, 0.923447411536};
inline constexpr Tally kAsenTally{46689, 50835, 0.884977923807, 0.899178681535, 0.891557110590};
inline constexpr std::array<std::int64_t, 6> kAsenRowSums{8315, 18984, 3270, 6221, 4053, 9992};
inline constexpr std::array<std::int64_t, 6> kAsenColSums{8213, 18830, 3545, 6342, 4366, 9539};

/// Pairwise AUC: fraction of (positive, negative) pairs where the positive
/// scores higher, ties counting one half. O(P * N).
inline double brute_force_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!positive[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (positive[j]) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

/// Best single-threshold accuracy for separating labels `a` and `b` on one
/// feature column (either orientation). Exhaustive over midpoints.
inline double best_stump_accuracy(const std::vector<double>& values, const std::vector<int>& labels, int a, int b) {
    std::vector<std::pair<double, int>> pts;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (labels[i] == a || labels[i] == b) pts.emplace_back(values[i], labels[i] == a ? 1 : 0);
    }
    std::sort(pts.begin(), pts.end());
    const auto n = static_cast<double>(pts.size());
    std::int64_t pos_total = 0;
    for (auto& p : pts) pos_total += p.second;
    // Threshold before index k: left side predicted one class, right side the other.
    std::int64_t pos_left = 0;
    double best = 0.0;
    for (std::size_t k = 0; k <= pts.size(); ++k) {
        if (k == 0 || k == pts.size() || pts[k - 1].first != pts[k].first) {
            const auto left = static_cast<std::int64_t>(k);
            const std::int64_t neg_left = left - pos_left;
            const std::int64_t neg_right = static_cast<std::int64_t>(pts.size()) - pos_total - neg_left;
            const double acc1 = static_cast<double>(pos_left + neg_right) / n;      // left = a
            const double acc2 = static_cast<double>(neg_left + pos_total - pos_left) / n; // left = b
            best = std::max({best, acc1, acc2});
        }
        if (k < pts.size()) pos_left += pts[k].second;
    }
    return best;
}

/// Best multi-class accuracy of a single threshold-free 1-D rule: each class
/// takes an interval on the sorted axis is hard in general, so this measures
/// the one-vs-rest separability of class c as the best stump accuracy.
inline double one_vs_rest_stump(const std::vector<double>& values, const std::vector<int>& labels, int c) {
    std::vector<int> bin(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) bin[i] = labels[i] == c ? 1 : 0;
    return best_stump_accuracy(values, bin, 1, 0);
}

/// Half-width of the normal-approximation binomial 95% interval.
inline double binomial_half_width(double p, double n) { return 1.96 * std::sqrt(p * (1.0 - p) / n); }

/// Central-difference derivative of f at x.
template <class F>
double central_difference(F&& f, double x, double eps) {
    return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

} // namespace oracle
