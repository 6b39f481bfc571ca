#include "toy_model.hpp"

#include <cmath>

namespace mdinet::testsupport {

namespace {

// P(click subset at the two detectors) for k photons routed multinomially:
// each photon lands on D1, D2 or nowhere. Clicks on the two detectors are
// not independent (one photon feeds only one detector), so the four subset
// probabilities come from inclusion-exclusion.
struct SubsetProbs {
    double p[4];  // bit0 = D1 clicked, bit1 = D2 clicked
};

SubsetProbs photon_click_subsets(int k, double hit_d1, double hit_d2) {
    const double none = 1.0 - hit_d1 - hit_d2;
    const double p_empty = std::pow(none, k);
    const double p_no_d1 = std::pow(none + hit_d2, k);
    const double p_no_d2 = std::pow(none + hit_d1, k);
    SubsetProbs s;
    s.p[0b00] = p_empty;
    s.p[0b01] = p_no_d2 - p_empty;
    s.p[0b10] = p_no_d1 - p_empty;
    s.p[0b11] = 1.0 - p_no_d1 - p_no_d2 + p_empty;
    return s;
}

struct PairRates {
    double coincidence = 0.0;  // P(psi-minus)
    double error = 0.0;        // P(psi-minus and raw bits equal)
};

}  // namespace

// Exact acceptance probability for (n, m) photons: enumerate the photon click
// subsets of both users and the dark pattern, then apply the post-selection
// rule to the union.
double ToyModel::psi_minus_given_bins(int n, int m, int bin_a, int bin_b) const {
    const double t_a = channel_a.transmittance();
    const double t_b = channel_b.transmittance();
    const SubsetProbs sa = photon_click_subsets(n, 0.5 * t_a * detectors[0].efficiency,
                                                0.5 * t_a * detectors[1].efficiency);
    const SubsetProbs sb = photon_click_subsets(m, 0.5 * t_b * detectors[0].efficiency,
                                                0.5 * t_b * detectors[1].efficiency);
    const double dark[2] = {detectors[0].dark_probability(),
                            detectors[1].dark_probability()};

    double accept = 0.0;
    for (int subset_a = 0; subset_a < 4; ++subset_a) {
        if (sa.p[subset_a] <= 0.0) continue;
        for (int subset_b = 0; subset_b < 4; ++subset_b) {
            const double photon_weight = sa.p[subset_a] * sb.p[subset_b];
            if (photon_weight <= 0.0) continue;
            for (int dark_mask = 0; dark_mask < 16; ++dark_mask) {
                double weight = photon_weight;
                int pattern = 0;  // bit d*2+bin
                for (int d = 0; d < 2; ++d)
                    for (int bin = 0; bin < 2; ++bin) {
                        const int bit = d * 2 + bin;
                        const bool dark_here = dark_mask & (1 << bit);
                        weight *= dark_here ? dark[d] : 1.0 - dark[d];
                        const bool photon_here = (bin == bin_a && (subset_a & (1 << d))) ||
                                                 (bin == bin_b && (subset_b & (1 << d)));
                        if (photon_here || dark_here) pattern |= 1 << bit;
                    }
                if (weight <= 0.0) continue;
                // D1@early with D2@late, or D1@late with D2@early
                if (pattern == 0b1001 || pattern == 0b0110) accept += weight;
            }
        }
    }
    return accept;
}

namespace {

PairRates pair_rates(const ToyModel& toy, int n, int m) {
    const double mis_a = toy.channel_a.misalignment_error;
    const double mis_b = toy.channel_b.misalignment_error;
    PairRates rates;
    for (int bit_a = 0; bit_a < 2; ++bit_a)
        for (int bit_b = 0; bit_b < 2; ++bit_b)
            for (int flip_a = 0; flip_a < 2; ++flip_a)
                for (int flip_b = 0; flip_b < 2; ++flip_b) {
                    const double w = 0.25 * (flip_a ? mis_a : 1.0 - mis_a) *
                                     (flip_b ? mis_b : 1.0 - mis_b);
                    if (w == 0.0) continue;
                    const double accept = toy.psi_minus_given_bins(
                        n, m, flip_a ? 1 - bit_a : bit_a, flip_b ? 1 - bit_b : bit_b);
                    rates.coincidence += w * accept;
                    if (bit_a == bit_b) rates.error += w * accept;
                }
    return rates;
}

ConfidenceBound exact_bound(double value) {
    ConfidenceBound b;
    b.observed = 0;
    b.trials = 1;
    b.lower_rate = value;
    b.upper_rate = value;
    b.epsilon_share = 0.0;
    return b;
}

}  // namespace

double ToyModel::yield(int n, int m) const { return pair_rates(*this, n, m).coincidence; }

double ToyModel::error_gain_nm(int n, int m) const { return pair_rates(*this, n, m).error; }

double ToyModel::error_rate(int n, int m) const {
    const double y = yield(n, m);
    return y > 0.0 ? error_gain_nm(n, m) / y : 0.0;
}

double ToyModel::gain(const ProtocolParams& params, IntensityLabel a,
                      IntensityLabel b) const {
    double total = 0.0;
    for (int n = 0; n <= kMaxPhotons; ++n)
        for (int m = 0; m <= kMaxPhotons; ++m)
            total += poisson_photon_prob(params.mean(a), n) *
                     poisson_photon_prob(params.mean(b), m) * yield(n, m);
    return total;
}

double ToyModel::error_gain(const ProtocolParams& params, IntensityLabel a,
                            IntensityLabel b) const {
    double total = 0.0;
    for (int n = 0; n <= kMaxPhotons; ++n)
        for (int m = 0; m <= kMaxPhotons; ++m)
            total += poisson_photon_prob(params.mean(a), n) *
                     poisson_photon_prob(params.mean(b), m) * error_gain_nm(n, m);
    return total;
}

CellBoundTable ToyModel::exact_gain_bounds(const ProtocolParams& params) const {
    CellBoundTable table;
    for (IntensityLabel a : kIntensityLabels)
        for (IntensityLabel b : kIntensityLabels)
            table[static_cast<int>(a)][static_cast<int>(b)] = exact_bound(gain(params, a, b));
    return table;
}

CellBoundTable ToyModel::exact_error_gain_bounds(const ProtocolParams& params) const {
    CellBoundTable table;
    for (IntensityLabel a : kIntensityLabels)
        for (IntensityLabel b : kIntensityLabels)
            table[static_cast<int>(a)][static_cast<int>(b)] =
                exact_bound(error_gain(params, a, b));
    return table;
}

}  // namespace mdinet::testsupport
