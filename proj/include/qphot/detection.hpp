// Detection: post-selection patterns, detector efficiency, click detectors
// cascaded behind fibre splitters, partial distinguishability of photon pairs,
// and Poissonian count sampling.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "qphot/circuit.hpp"
#include "qphot/fock.hpp"

namespace qphot {

struct ModeCount {
    std::size_t mode = 0;
    int count = 0;
};

/// Required photon numbers on a set of monitored output modes. Unmonitored
/// modes are unconstrained.
class DetectionPattern {
public:
    DetectionPattern() = default;

    explicit DetectionPattern(std::vector<ModeCount> requirements) : requirements_(std::move(requirements)) {
        std::set<std::size_t> seen;
        for (const auto& r : requirements_) {
            if (r.count < 0) throw std::invalid_argument("DetectionPattern: negative required count");
            if (!seen.insert(r.mode).second) {
                throw std::invalid_argument("DetectionPattern: mode " + std::to_string(r.mode) + " listed twice");
            }
        }
    }

    DetectionPattern(std::initializer_list<ModeCount> requirements)
        : DetectionPattern(std::vector<ModeCount>(requirements)) {}

    const std::vector<ModeCount>& requirements() const { return requirements_; }

    int detected_photons() const {
        int n = 0;
        for (const auto& r : requirements_) n += r.count;
        return n;
    }

    bool matches(const FockState& s) const {
        for (const auto& r : requirements_) {
            if (r.mode >= s.mode_count() || s[r.mode] != r.count) return false;
        }
        return true;
    }

    void check_modes(std::size_t mode_count) const {
        for (const auto& r : requirements_) {
            if (r.mode >= mode_count) throw std::invalid_argument("DetectionPattern: mode index out of range");
        }
    }

private:
    std::vector<ModeCount> requirements_;
};

inline double outcome_probability(const FockVector& state, const DetectionPattern& pattern) {
    pattern.check_modes(state.mode_count());
    double p = 0.0;
    for (const auto& [s, c] : state.terms()) {
        if (pattern.matches(s)) p += std::norm(c);
    }
    return std::clamp(p, 0.0, 1.0);
}

/// Probability of `pattern` when every photon of `input` propagates as an
/// independent classical particle: photon from mode i exits in mode j with
/// probability |U(j, i)|^2.
inline double distinguishable_probability(const ModeUnitary& u, const FockState& input, const DetectionPattern& pattern) {
    const std::size_t m = u.mode_count();
    if (input.mode_count() != m) throw std::invalid_argument("distinguishable_probability: dimension mismatch");
    pattern.check_modes(m);
    std::vector<std::size_t> sources;
    for (std::size_t i = 0; i < m; ++i)
        for (int k = 0; k < input[i]; ++k) sources.push_back(i);

    double total = 0.0;
    std::vector<int> occ(m, 0);
    auto walk = [&](auto&& self, std::size_t photon, double weight) -> void {
        if (weight == 0.0) return;
        if (photon == sources.size()) {
            if (pattern.matches(FockState(occ))) total += weight;
            return;
        }
        for (std::size_t j = 0; j < m; ++j) {
            ++occ[j];
            self(self, photon + 1, weight * std::norm(u(j, sources[photon])));
            --occ[j];
        }
    };
    walk(walk, 0, 1.0);
    return total;
}

/// x * P_indistinguishable + (1 - x) * P_distinguishable for a photon pair
/// entering two different modes. `overlap` is the mode overlap |gamma|^2.
inline double distinguishable_mixture_probability(const ModeUnitary& u, const FockState& input,
                                                  const DetectionPattern& pattern, double overlap) {
    if (!(overlap >= 0.0 && overlap <= 1.0)) throw std::invalid_argument("overlap must lie in [0, 1]");
    if (input.photon_count() != 2 ||
        std::any_of(input.occupations().begin(), input.occupations().end(), [](int n) { return n > 1; })) {
        throw std::invalid_argument("distinguishable_mixture_probability: requires one photon in each of two modes");
    }
    const double p_ind = outcome_probability(evolve(FockVector::basis(input), u), pattern);
    const double p_dis = distinguishable_probability(u, input, pattern);
    return overlap * p_ind + (1.0 - overlap) * p_dis;
}

inline double distinguishable_mixture_probability(const Circuit& c, const FockState& input,
                                                  const DetectionPattern& pattern, double overlap) {
    return distinguishable_mixture_probability(compose(c), input, pattern, overlap);
}

enum class FilterShape { gaussian, sinc2 };

/// Temporal mode overlap of two filtered photons versus path difference.
struct OverlapModel {
    double center_nm = 780.0;
    double bandwidth_nm = 3.0;
    FilterShape shape = FilterShape::gaussian;

    /// l_c = lambda0^2 / dlambda, in micrometres.
    double coherence_length_um() const {
        if (!(bandwidth_nm > 0.0)) throw std::invalid_argument("OverlapModel: bandwidth must be positive");
        if (!(center_nm > 0.0)) throw std::invalid_argument("OverlapModel: center wavelength must be positive");
        return center_nm * center_nm / bandwidth_nm * 1e-3;
    }
};

/// |gamma(tau)|^2 with tau the optical path difference in micrometres.
///   gaussian: exp(-(pi/2) (tau / l_c)^2)
///   sinc2:    sinc^2(pi tau / l_c)
inline double overlap(const OverlapModel& model, double tau_um) {
    if (!std::isfinite(tau_um)) throw std::invalid_argument("overlap: non-finite delay");
    const double x = tau_um / model.coherence_length_um();
    switch (model.shape) {
        case FilterShape::gaussian:
            return std::exp(-0.5 * std::numbers::pi * x * x);
        case FilterShape::sinc2: {
            if (x == 0.0) return 1.0;
            const double s = std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
            return s * s;
        }
    }
    return 0.0;
}

/// Terminal branch probabilities of a tree of 1x2 splitters feeding click detectors.
class CascadeTree {
public:
    CascadeTree() : branches_{1.0} {}

    explicit CascadeTree(std::vector<double> branches) : branches_(std::move(branches)) {
        if (branches_.empty()) throw std::invalid_argument("CascadeTree: empty tree");
        double sum = 0.0;
        for (double p : branches_) {
            if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("CascadeTree: branch probability outside (0, 1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("CascadeTree: branch probabilities must sum to 1");
    }

    /// Two-level tree: one splitter output to a detector, the other to a second splitter.
    static CascadeTree two_level() { return CascadeTree({0.5, 0.25, 0.25}); }

    static CascadeTree balanced(int k) {
        if (k < 1) throw std::invalid_argument("CascadeTree: need at least one branch");
        return CascadeTree(std::vector<double>(static_cast<std::size_t>(k), 1.0 / k));
    }

    const std::vector<double>& branches() const { return branches_; }
    std::size_t size() const { return branches_.size(); }

private:
    std::vector<double> branches_;
};

/// Probability that every terminal detector receives at least one of
/// `photons` photons, each routed independently:
///   sum_{S subset of branches} (-1)^{|S|} (1 - sum_{i in S} p_i)^photons
/// `survival` < 1 additionally loses each photon with probability 1 - survival.
inline double cascade_click_probability(int photons, const CascadeTree& tree, double survival = 1.0) {
    if (tree.size() == 0) throw std::invalid_argument("cascade_click_probability: empty tree");
    if (photons < 0) throw std::invalid_argument("cascade_click_probability: negative photon count");
    if (!(survival >= 0.0 && survival <= 1.0)) throw std::invalid_argument("cascade_click_probability: survival outside [0, 1]");
    const std::size_t k = tree.size();
    if (k > 20) throw std::invalid_argument("cascade_click_probability: tree too large");
    if (static_cast<std::size_t>(photons) < k) return 0.0;
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
        double excluded = 0.0;
        int size = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (mask & (1u << i)) {
                excluded += tree.branches()[i];
                ++size;
            }
        }
        const double term = std::pow(std::max(0.0, 1.0 - survival * excluded), photons);
        total += (size % 2 == 0) ? term : -term;
    }
    return std::clamp(total, 0.0, 1.0);
}

/// How loss enters event rates. `scale` multiplies ideal post-selected
/// probabilities by efficiency^photons; `thinning` removes photons binomially
/// before detectors fire, so higher-number terms can mimic the target pattern.
enum class LossModel { scale, thinning };

struct DetectorModel {
    double efficiency = 1.0;
    std::map<std::size_t, double> mode_efficiency;  // per-mode overrides
    bool number_resolving = true;
    std::map<std::size_t, CascadeTree> cascades;    // per-mode trees for click detection

    void validate() const {
        auto check = [](double e) {
            if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("DetectorModel: efficiency outside [0, 1]");
        };
        check(efficiency);
        for (const auto& [mode, e] : mode_efficiency) check(e);
    }

    double efficiency_for(std::size_t mode) const {
        auto it = mode_efficiency.find(mode);
        return it == mode_efficiency.end() ? efficiency : it->second;
    }

    /// Tree used to register `required` photons on `mode` with click detectors.
    /// Defaults: one detector for a single photon, the two-level tree for three,
    /// a balanced tree otherwise.
    CascadeTree tree_for(std::size_t mode, int required) const {
        auto it = cascades.find(mode);
        if (it != cascades.end()) return it->second;
        if (required <= 1) return CascadeTree();
        if (required == 3) return CascadeTree::two_level();
        return CascadeTree::balanced(required);
    }
};

/// event_probability * prod over pattern modes of efficiency^count.
inline double apply_efficiency(double event_probability, const DetectionPattern& pattern, const DetectorModel& model) {
    if (!(event_probability >= 0.0 && event_probability <= 1.0)) {
        throw std::invalid_argument("apply_efficiency: probability outside [0, 1]");
    }
    model.validate();
    double scale = 1.0;
    for (const auto& r : pattern.requirements()) scale *= std::pow(model.efficiency_for(r.mode), r.count);
    return event_probability * scale;
}

/// Probability that `pattern` is registered when ideal (lossless) pattern
/// probability is `ideal` under the scale loss model, including the click
/// cascade factor when detectors do not resolve photon number.
inline double detected_probability_scaled(double ideal, const DetectionPattern& pattern, const DetectorModel& model) {
    double p = apply_efficiency(ideal, pattern, model);
    if (!model.number_resolving) {
        for (const auto& r : pattern.requirements()) {
            if (r.count > 0) p *= cascade_click_probability(r.count, model.tree_for(r.mode, r.count));
        }
    }
    return p;
}

namespace detail {

inline double binomial_pmf(int n, int k, double p) {
    if (k < 0 || k > n) return 0.0;
    const double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    if (p == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p == 1.0) return k == n ? 1.0 : 0.0;
    return std::exp(log_c + k * std::log(p) + (n - k) * std::log1p(-p));
}

}  // namespace detail

/// Probability that the detectors on one mode holding `photons` photons
/// register the requirement `required`, with each photon surviving
/// independently with probability `survival`.
inline double mode_register_probability(int photons, int required, double survival, bool number_resolving,
                                        const CascadeTree& tree) {
    if (number_resolving) return detail::binomial_pmf(photons, required, survival);
    if (required == 0) return std::pow(1.0 - survival, photons);
    return cascade_click_probability(photons, tree, survival);
}

/// Event probability for an output state with loss applied by binomial
/// thinning before detection.
inline double detected_probability_thinned(const FockVector& output, const DetectionPattern& pattern,
                                           const DetectorModel& model) {
    pattern.check_modes(output.mode_count());
    model.validate();
    double total = 0.0;
    for (const auto& [s, c] : output.terms()) {
        const double w = std::norm(c);
        if (w == 0.0) continue;
        double p = w;
        for (const auto& r : pattern.requirements()) {
            p *= mode_register_probability(s[r.mode], r.count, model.efficiency_for(r.mode), model.number_resolving,
                                           model.tree_for(r.mode, r.count));
            if (p == 0.0) break;
        }
        total += p;
    }
    return std::clamp(total, 0.0, 1.0);
}

/// Pseudo-random generator used for every stochastic output.
using Rng = std::mt19937_64;
inline constexpr const char* kRngName = "mt19937_64";

/// Independent stream for sweep point `index`, derived only from (seed, index).
inline Rng point_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

/// Poisson-distributed count with mean probability * trials.
inline long long sample_counts(double probability, long long trials, Rng& rng) {
    if (trials < 0) throw std::invalid_argument("sample_counts: negative trials");
    if (!(probability >= 0.0 && probability <= 1.0)) throw std::invalid_argument("sample_counts: probability outside [0, 1]");
    const double mean = probability * static_cast<double>(trials);
    if (mean == 0.0) return 0;
    std::poisson_distribution<long long> dist(mean);
    return dist(rng);
}

}  // namespace qphot
