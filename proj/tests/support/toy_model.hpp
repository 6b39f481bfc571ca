#pragma once

// Closed-form reference model for validating the decoy estimators: photons
// transport classically (no interference), every photon routes to a random
// detector, so yields and error rates are exact functions of the photon
// numbers. Gains under Poisson sources follow by direct mixture. This mirrors
// the tagged mode of simulate_session.

#include "mdinet/core.hpp"
#include "mdinet/keyrate.hpp"
#include "mdinet/optics.hpp"

#include <array>

namespace mdinet::testsupport {

struct ToyModel {
    static constexpr int kMaxPhotons = 12;

    ChannelModel channel_a;
    ChannelModel channel_b;
    DetectorPair detectors;

    /// P(psi-minus | n photons from A, m from B), bits and flips averaged.
    double yield(int n, int m) const;
    /// P(psi-minus and raw bits equal | n, m).
    double error_gain_nm(int n, int m) const;
    double error_rate(int n, int m) const;  // error_gain / yield

    /// Exact acceptance probability with the photons already assigned to bins.
    double psi_minus_given_bins(int n, int m, int bin_a, int bin_b) const;

    /// Poisson mixtures over the truncated photon grid.
    double gain(const ProtocolParams& params, IntensityLabel a, IntensityLabel b) const;
    double error_gain(const ProtocolParams& params, IntensityLabel a,
                      IntensityLabel b) const;

    /// Exact gains wrapped as zero-width bounds (asymptotic limit).
    CellBoundTable exact_gain_bounds(const ProtocolParams& params) const;
    CellBoundTable exact_error_gain_bounds(const ProtocolParams& params) const;
};

}  // namespace mdinet::testsupport
