#include "qphot/permanent.hpp"

#include <random>

#include "gtest/gtest.h"

#include "oracles.hpp"

using namespace qphot;

TEST(permanent, small_cases) {
    ASSERT_EQ(permanent(Eigen::MatrixXcd(0, 0)), std::complex<double>(1.0));
    ASSERT_NEAR(std::abs(permanent(Eigen::MatrixXcd::Identity(2, 2)) - 1.0), 0.0, 1e-15);

    Eigen::MatrixXcd m(2, 2);
    const std::complex<double> a(1, 2), b(-0.5, 0.25), c(3, -1), d(0.1, 0.7);
    m << a, b, c, d;
    ASSERT_NEAR(std::abs(permanent(m) - (a * d + b * c)), 0.0, 1e-14);

    ASSERT_NEAR(std::abs(permanent(Eigen::MatrixXcd::Ones(3, 3)) - 6.0), 0.0, 1e-13);
    ASSERT_NEAR(std::abs(oracle::permanent_by_permutations(Eigen::MatrixXcd::Ones(3, 3)) - 6.0), 0.0, 1e-13);
}

TEST(permanent, rejects_non_square) {
    ASSERT_THROW(permanent(Eigen::MatrixXcd::Ones(2, 3)), std::invalid_argument);
}

TEST(permanent, ryser_matches_permutation_sum) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int n = 1; n <= 7; ++n) {
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::MatrixXcd a(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
            const auto ref = oracle::permanent_by_permutations(a);
            ASSERT_NEAR(std::abs(permanent(a) - ref), 0.0, 1e-10 * std::max(1.0, std::abs(ref))) << "n=" << n;
        }
    }
}

TEST(permanent, repeated_rows_and_columns) {
    Eigen::MatrixXcd u(2, 2);
    u << 1, 2, 3, 4;
    auto r = repeat_rows_cols(u, {2, 0}, {1, 1});
    Eigen::MatrixXcd expected(2, 2);
    expected << 1, 2, 1, 2;
    ASSERT_TRUE(r.isApprox(expected));
    ASSERT_THROW(repeat_rows_cols(u, {2, 1}, {1, 1}), std::invalid_argument);
}
