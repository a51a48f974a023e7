// Matrix permanent via Ryser's inclusion-exclusion formula, iterating column
// subsets in Gray-code order so each step updates the row sums with a single
// column add or remove. Cost O(2^n * n).
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace qphot {

inline std::complex<double> permanent(const Eigen::MatrixXcd& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("permanent: matrix is not square");
    const auto n = static_cast<int>(a.rows());
    if (n == 0) return 1.0;
    if (n > 30) throw std::invalid_argument("permanent: matrix too large for exact evaluation");

    // perm(A) = (-1)^n sum_{S != {}} (-1)^{|S|} prod_i sum_{j in S} a_ij
    std::vector<std::complex<double>> row_sums(static_cast<std::size_t>(n), 0.0);
    std::complex<double> total = 0.0;
    std::uint64_t gray = 0;
    int subset_size = 0;
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t k = 1; k < count; ++k) {
        const int col = __builtin_ctzll(k);
        const std::uint64_t bit = std::uint64_t{1} << col;
        gray ^= bit;
        const bool added = (gray & bit) != 0;
        subset_size += added ? 1 : -1;
        std::complex<double> prod = 1.0;
        for (int i = 0; i < n; ++i) {
            row_sums[static_cast<std::size_t>(i)] += added ? a(i, col) : -a(i, col);
            prod *= row_sums[static_cast<std::size_t>(i)];
        }
        total += (subset_size % 2 == 0) ? prod : -prod;
    }
    return (n % 2 == 0) ? total : -total;
}

/// Builds the matrix whose row j of `u` is repeated row_reps[j] times and
/// column i repeated col_reps[i] times.
inline Eigen::MatrixXcd repeat_rows_cols(const Eigen::MatrixXcd& u,
                                         const std::vector<int>& row_reps,
                                         const std::vector<int>& col_reps) {
    if (row_reps.size() != static_cast<std::size_t>(u.rows()) ||
        col_reps.size() != static_cast<std::size_t>(u.cols())) {
        throw std::invalid_argument("repeat_rows_cols: repetition list does not match matrix shape");
    }
    std::vector<int> rows, cols;
    for (std::size_t j = 0; j < row_reps.size(); ++j)
        for (int r = 0; r < row_reps[j]; ++r) rows.push_back(static_cast<int>(j));
    for (std::size_t i = 0; i < col_reps.size(); ++i)
        for (int r = 0; r < col_reps[i]; ++r) cols.push_back(static_cast<int>(i));
    if (rows.size() != cols.size()) {
        throw std::invalid_argument("repeat_rows_cols: photon number not conserved (non-square request)");
    }
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = u(rows[r], cols[c]);
    return out;
}

}  // namespace qphot
