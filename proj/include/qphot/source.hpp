// Photon-pair source: a truncated two-mode pair state sum_n c_n lambda^n |n, n>.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "qphot/fock.hpp"

namespace qphot {

struct SpdcSource {
    double pair_amplitude = 0.0;  // lambda, 0 <= lambda < 1
    int max_pairs = 3;            // truncation n_max
    /// Relative weight c_n of the n-pair term. Empty means c_n = 1.
    std::function<double(int)> profile;

    void validate() const {
        if (!(pair_amplitude >= 0.0 && pair_amplitude < 1.0)) {
            throw std::invalid_argument("SpdcSource: pair amplitude must lie in [0, 1)");
        }
        if (max_pairs < 1) throw std::invalid_argument("SpdcSource: max_pairs must be >= 1");
    }
};

inline FockVector spdc_state(const SpdcSource& src) {
    src.validate();
    FockVector v(2);
    double lambda_n = 1.0;
    for (int n = 0; n <= src.max_pairs; ++n) {
        const double c = src.profile ? src.profile(n) : 1.0;
        if (c * lambda_n != 0.0) v.add(FockState{n, n}, c * lambda_n);
        lambda_n *= src.pair_amplitude;
    }
    return normalize(v);
}

/// The |pairs, pairs> term alone, as selected by ideal heralding.
inline FockVector post_selected_input(const SpdcSource& src, int pairs) {
    src.validate();
    if (pairs < 0 || pairs > src.max_pairs) {
        throw std::invalid_argument("post_selected_input: pairs outside [0, max_pairs]");
    }
    return FockVector::basis(FockState{pairs, pairs});
}

}  // namespace qphot
