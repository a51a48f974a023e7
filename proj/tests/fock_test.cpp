#include "qphot/fock.hpp"

#include <random>

#include "gtest/gtest.h"

#include "oracles.hpp"

using namespace qphot;

TEST(fock, enumerate_basis_small) {
    auto b = enumerate_basis(2, 1);
    ASSERT_EQ(b.size(), 2u);
    ASSERT_EQ(b[0], (FockState{1, 0}));
    ASSERT_EQ(b[1], (FockState{0, 1}));

    auto b4 = enumerate_basis(2, 4);
    std::vector<FockState> expected{{4, 0}, {3, 1}, {2, 2}, {1, 3}, {0, 4}};
    ASSERT_EQ(b4, expected);

    ASSERT_EQ(enumerate_basis(4, 3).size(), 20u);
    ASSERT_EQ(enumerate_basis(3, 0).size(), 1u);
    ASSERT_THROW(enumerate_basis(0, 2), std::invalid_argument);
}

TEST(fock, enumerate_basis_counts_and_order) {
    for (std::size_t m = 1; m <= 6; ++m) {
        for (int n = 0; n <= 6; ++n) {
            auto b = enumerate_basis(m, n);
            ASSERT_EQ(static_cast<double>(b.size()), oracle::binomial(n + static_cast<int>(m) - 1, static_cast<int>(m) - 1));
            for (std::size_t i = 0; i < b.size(); ++i) {
                ASSERT_EQ(b[i].photon_count(), n);
                if (i) ASSERT_TRUE(CanonicalOrder{}(b[i - 1], b[i]));  // strictly descending, so no duplicates
            }
        }
    }
}

TEST(fock, negative_occupation_rejected) {
    ASSERT_THROW(FockState({1, -1}), std::invalid_argument);
}

TEST(fock, inner_product_basics) {
    auto e10 = FockVector::basis({1, 0});
    auto e01 = FockVector::basis({0, 1});
    ASSERT_EQ(inner_product(e10, e10), Complex(1.0));
    ASSERT_EQ(inner_product(e10, e01), Complex(0.0));

    auto psi = (e10 + e01.scaled(Complex(0, 1))).scaled(1.0 / std::sqrt(2.0));
    ASSERT_NEAR(std::abs(inner_product(psi, psi) - 1.0), 0.0, 1e-12);
    ASSERT_THROW(inner_product(e10, FockVector::basis({1, 0, 0})), std::invalid_argument);
}

TEST(fock, normalize_examples) {
    auto v = normalize(FockVector::basis({1, 0}).scaled(2.0));
    ASSERT_NEAR(std::abs(v.amplitude({1, 0}) - 1.0), 0.0, 1e-12);

    FockVector w(2);
    w.add({4, 0}, 1.0).add({0, 4}, 1.0);
    auto nw = normalize(w);
    ASSERT_NEAR(nw.amplitude({4, 0}).real(), 1.0 / std::sqrt(2.0), 1e-12);
    ASSERT_NEAR(nw.amplitude({0, 4}).real(), 1.0 / std::sqrt(2.0), 1e-12);

    FockVector u(2);
    u.add({2, 0}, std::sqrt(3.0)).add({0, 2}, 1.0);
    auto nu = normalize(u);
    ASSERT_NEAR(nu.amplitude({2, 0}).real(), std::sqrt(0.75), 1e-12);
    ASSERT_NEAR(nu.amplitude({0, 2}).real(), std::sqrt(0.25), 1e-12);

    ASSERT_THROW(normalize(FockVector(2)), std::invalid_argument);
}

namespace {

FockVector random_vector(std::mt19937_64& rng, std::size_t m, int n) {
    std::normal_distribution<double> g;
    std::bernoulli_distribution keep(0.6);
    FockVector v(m);
    for (const auto& s : enumerate_basis(m, n)) {
        if (keep(rng)) v.add(s, Complex(g(rng), g(rng)));
    }
    if (v.empty()) v.add(enumerate_basis(m, n).front(), 1.0);
    return v;
}

}  // namespace

TEST(fock, inner_product_is_hermitian_and_positive) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + trial % 4;
        const int n = trial % 4;
        auto a = random_vector(rng, m, n);
        auto b = random_vector(rng, m, n);
        const Complex ab = inner_product(a, b), ba = inner_product(b, a);
        ASSERT_NEAR(std::abs(ab - std::conj(ba)), 0.0, 1e-12);
        const Complex aa = inner_product(a, a);
        ASSERT_GT(aa.real(), 0.0);
        ASSERT_EQ(aa.imag(), 0.0);
    }
}

TEST(fock, normalize_is_idempotent) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        auto v = normalize(random_vector(rng, 3, 3));
        ASSERT_NEAR(v.norm_squared(), 1.0, 1e-12);
        auto w = normalize(v);
        for (const auto& [s, c] : v.terms()) ASSERT_NEAR(std::abs(w.amplitude(s) - c), 0.0, 1e-12);
    }
}

TEST(fock, json_round_trip_is_canonical) {
    FockVector v(2);
    v.add({0, 2}, Complex(0.25, -0.5)).add({2, 0}, Complex(0.5, 0.0)).add({1, 1}, Complex(0.0, 1.0));
    auto j = to_json(v);
    ASSERT_EQ(j["terms"][0]["occupations"], nlohmann::json::array({2, 0}));
    ASSERT_EQ(j["terms"][2]["occupations"], nlohmann::json::array({0, 2}));
    auto back = fock_vector_from_json(j);
    ASSERT_EQ(to_json(back).dump(), j.dump());
}
