// Occupation-number states and sparse superpositions over a fixed set of
// optical modes.
#pragma once

#include <complex>
#include <cstddef>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qphot {

using Complex = std::complex<double>;

/// A basis state |n_0, n_1, ..., n_{m-1}> with a definite photon count per mode.
class FockState {
public:
    FockState() = default;

    explicit FockState(std::vector<int> occupations) : occupations_(std::move(occupations)) {
        for (int n : occupations_) {
            if (n < 0) throw std::invalid_argument("FockState: negative occupation");
        }
    }

    FockState(std::initializer_list<int> occupations) : FockState(std::vector<int>(occupations)) {}

    std::size_t mode_count() const { return occupations_.size(); }
    int operator[](std::size_t mode) const { return occupations_.at(mode); }
    const std::vector<int>& occupations() const { return occupations_; }

    int photon_count() const {
        int n = 0;
        for (int k : occupations_) n += k;
        return n;
    }

    /// prod_i n_i!
    double factorial_product() const {
        double p = 1.0;
        for (int k : occupations_) p *= std::tgamma(k + 1.0);
        return p;
    }

    std::string to_string() const {
        std::string s = "|";
        for (std::size_t i = 0; i < occupations_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(occupations_[i]);
        }
        return s + ">";
    }

    friend bool operator==(const FockState&, const FockState&) = default;

private:
    std::vector<int> occupations_;
};

/// Canonical basis order: lexicographic descending on the occupation list,
/// so |2,0> precedes |1,1> precedes |0,2>.
struct CanonicalOrder {
    bool operator()(const FockState& a, const FockState& b) const {
        return a.occupations() > b.occupations();
    }
};

/// Every occupation list of `photon_count` photons in `mode_count` modes, in
/// canonical order. Size is binomial(n + m - 1, m - 1).
inline std::vector<FockState> enumerate_basis(std::size_t mode_count, int photon_count) {
    if (mode_count == 0) throw std::invalid_argument("enumerate_basis: mode_count must be >= 1");
    if (photon_count < 0) throw std::invalid_argument("enumerate_basis: negative photon_count");

    std::vector<FockState> out;
    std::vector<int> occ(mode_count, 0);
    auto fill = [&](auto&& self, std::size_t mode, int remaining) -> void {
        if (mode + 1 == mode_count) {
            occ[mode] = remaining;
            out.emplace_back(occ);
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            occ[mode] = k;
            self(self, mode + 1, remaining - k);
        }
    };
    fill(fill, 0, photon_count);
    return out;
}

/// A finite superposition sum_S c_S |S> over basis states sharing one mode count.
class FockVector {
public:
    using Terms = std::map<FockState, Complex, CanonicalOrder>;

    explicit FockVector(std::size_t mode_count) : mode_count_(mode_count) {
        if (mode_count == 0) throw std::invalid_argument("FockVector: mode_count must be >= 1");
    }

    static FockVector basis(const FockState& s) {
        FockVector v(s.mode_count());
        v.add(s, 1.0);
        return v;
    }

    std::size_t mode_count() const { return mode_count_; }
    const Terms& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    /// Accumulates `amplitude` onto the coefficient of `s`.
    FockVector& add(const FockState& s, Complex amplitude) {
        if (s.mode_count() != mode_count_) {
            throw std::invalid_argument("FockVector: state " + s.to_string() + " has wrong mode count");
        }
        terms_[s] += amplitude;
        return *this;
    }

    Complex amplitude(const FockState& s) const {
        auto it = terms_.find(s);
        return it == terms_.end() ? Complex{} : it->second;
    }

    double probability(const FockState& s) const { return std::norm(amplitude(s)); }

    double norm_squared() const {
        double acc = 0.0;
        for (const auto& [s, c] : terms_) acc += std::norm(c);
        return acc;
    }

    FockVector scaled(Complex factor) const {
        FockVector out = *this;
        for (auto& [s, c] : out.terms_) c *= factor;
        return out;
    }

    /// Copy without terms whose magnitude is at or below `tol`.
    FockVector pruned(double tol = 0.0) const {
        FockVector out(mode_count_);
        for (const auto& [s, c] : terms_) {
            if (std::abs(c) > tol) out.terms_.emplace(s, c);
        }
        return out;
    }

    friend FockVector operator+(const FockVector& a, const FockVector& b) {
        if (a.mode_count_ != b.mode_count_) throw std::invalid_argument("FockVector: mode-count mismatch");
        FockVector out = a;
        for (const auto& [s, c] : b.terms_) out.terms_[s] += c;
        return out;
    }

private:
    std::size_t mode_count_;
    Terms terms_;
};

/// <a|b>, conjugate-linear in `a`.
inline Complex inner_product(const FockVector& a, const FockVector& b) {
    if (a.mode_count() != b.mode_count()) {
        throw std::invalid_argument("inner_product: mode-count mismatch");
    }
    Complex acc{};
    const auto& small = a.terms().size() <= b.terms().size() ? a : b;
    const auto& large = &small == &a ? b : a;
    for (const auto& [s, c] : small.terms()) {
        auto it = large.terms().find(s);
        if (it == large.terms().end()) continue;
        acc += &small == &a ? std::conj(c) * it->second : std::conj(it->second) * c;
    }
    return acc;
}

inline FockVector normalize(const FockVector& v) {
    const double n2 = v.norm_squared();
    if (!(n2 > 0.0)) throw std::invalid_argument("normalize: zero vector");
    return v.scaled(1.0 / std::sqrt(n2));
}

// Serialized form: {"mode_count": m, "terms": [{"occupations": [...], "re": x, "im": y}, ...]}
// with terms in canonical order.
inline nlohmann::json to_json(const FockVector& v) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [s, c] : v.terms()) {
        terms.push_back({{"occupations", s.occupations()}, {"re", c.real()}, {"im", c.imag()}});
    }
    return {{"mode_count", v.mode_count()}, {"terms", std::move(terms)}};
}

inline FockVector fock_vector_from_json(const nlohmann::json& j) {
    FockVector v(j.at("mode_count").get<std::size_t>());
    for (const auto& t : j.at("terms")) {
        v.add(FockState(t.at("occupations").get<std::vector<int>>()),
              Complex(t.at("re").get<double>(), t.at("im").get<double>()));
    }
    return v;
}

}  // namespace qphot
