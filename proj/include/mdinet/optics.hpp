#pragma once

#include "mdinet/core.hpp"
#include "mdinet/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mdinet {

/// One user's optical path from encoder output to the relay beam splitter.
struct ChannelModel {
    double fiber_loss_db = 0.0;
    double switch_loss_db = 1.0;
    double dwdm_loss_db = 0.7;
    double bs_insertion_loss_share_db = 0.7;  // half of the 1.4 dB BS loss per arm
    double misalignment_error = 0.0;          // probability of a mode flip at the encoder

    double total_loss_db() const {
        return fiber_loss_db + switch_loss_db + dwdm_loss_db + bs_insertion_loss_share_db;
    }
    double transmittance() const { return transmittance_from_db(total_loss_db()); }
    void validate() const;
};

struct DetectorModel {
    double efficiency = 0.65;
    double dark_count_rate_hz = 100.0;
    double gate_window_s = 1.7e-9;

    double dark_probability() const { return dark_count_rate_hz * gate_window_s; }
    void validate() const;
};

using DetectorPair = std::array<DetectorModel, 2>;

/// Two coherent time bins plus the phases that ride on them.
/// Z puts the whole intensity in the bit's bin; X splits it equally and
/// encodes the bit in the early/late relative phase (0 or pi).
struct PulsePair {
    int bit = 0;
    Basis basis = Basis::Z;
    IntensityLabel intensity_label = IntensityLabel::vacuum;
    double early_intensity = 0.0;  // mean photon number per bin
    double late_intensity = 0.0;
    double encoding_phase = 0.0;   // late bin relative to early
    double global_phase = 0.0;     // uniform in [0, 2pi)
};

/// Residual mode mismatch between the two lasers arriving at the relay.
struct DistinguishabilityState {
    double delta_wavelength_pm = 0.0;
    double delta_time_ps = 0.0;
    double polarization_overlap = 1.0;
    double intensity_ratio = 1.0;  // arrival ratio of the two calibration pulses

    /// Scalar interference visibility in [0,1]; Gaussian envelopes for the
    /// spectral and temporal mismatch of 2.5 ns pulses at 1550.12 nm.
    double mode_overlap() const;
    void validate() const;
};

enum class Detector : int { D1 = 0, D2 = 1 };
enum class TimeBin : int { early = 0, late = 1 };

struct ClickRecord {
    Detector detector = Detector::D1;
    TimeBin bin = TimeBin::early;
    bool photon = false;  // attributable to incident light
    bool dark = false;    // click with no photon attribution
};

/// Threshold detectors: at most one click per (detector, bin) per pulse pair.
struct ClickSet {
    std::array<ClickRecord, 4> records{};
    int count = 0;
    void add(const ClickRecord& r) { records[count++] = r; }
    bool clicked(Detector d, TimeBin b) const {
        for (int i = 0; i < count; ++i)
            if (records[i].detector == d && records[i].bin == b) return true;
        return false;
    }
};

enum class BellOutcome { psi_minus };

/// psi-minus post-selection: both detectors clicked, in different time bins,
/// and no further clicks beyond the accepted pattern.
std::optional<BellOutcome> bsm_postselect(const ClickSet& clicks);

/// Click probabilities per (detector, bin) for one interfered pulse pair.
struct ClickProbs {
    double q[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // [detector][bin]
};

/// Probability of the two accepted psi-minus click patterns (exactly one
/// click on each detector, in different bins).
inline double psi_minus_probability(const ClickProbs& p) {
    const double early_late =
        p.q[0][0] * (1.0 - p.q[0][1]) * (1.0 - p.q[1][0]) * p.q[1][1];
    const double late_early =
        (1.0 - p.q[0][0]) * p.q[0][1] * p.q[1][0] * (1.0 - p.q[1][1]);
    return early_late + late_early;
}

/// Output intensities of the interference beam splitter for one time bin.
/// The cross term carries the mode overlap; the non-interfering remainder
/// splits incoherently.
inline void interfere(double intensity_a, double intensity_b, double zeta,
                      double cos_relative_phase, double& out_d1, double& out_d2) {
    const double cross =
        2.0 * zeta * std::sqrt(intensity_a * intensity_b) * cos_relative_phase;
    out_d1 = 0.5 * (intensity_a + intensity_b + cross);
    out_d2 = 0.5 * (intensity_a + intensity_b - cross);
}

ClickProbs click_probabilities(const PulsePair& a, const PulsePair& b, double zeta,
                               const DetectorPair& detectors);

/// 18-cell tally: (intensity_a, intensity_b, basis), same-basis events only.
struct CellCounts {
    std::uint64_t sent = 0;
    std::uint64_t coincidences = 0;
    std::uint64_t errors = 0;
};

inline int cell_index(IntensityLabel a, IntensityLabel b, Basis basis) {
    return static_cast<int>(basis) * 9 + static_cast<int>(a) * 3 + static_cast<int>(b);
}

/// Photon-number-tagged tallies, filled only by the tagged reference model.
struct TaggedCellCounts {
    static constexpr int kMaxPhotons = 4;  // higher counts clamp into the last bin
    std::array<std::array<std::uint64_t, kMaxPhotons + 1>, kMaxPhotons + 1> sent{};
    std::array<std::array<std::uint64_t, kMaxPhotons + 1>, kMaxPhotons + 1> coincidences{};
    std::array<std::array<std::uint64_t, kMaxPhotons + 1>, kMaxPhotons + 1> errors{};
};

struct SessionStatistics {
    std::string pair_id = "A-B";
    std::uint64_t n_pulses = 0;
    double scale = 1.0;  // desk-scale factor the counts were collected at
    std::array<CellCounts, 18> cells{};
    bool tagged = false;
    std::vector<TaggedCellCounts> tags;  // 18 entries when tagged

    CellCounts& cell(IntensityLabel a, IntensityLabel b, Basis basis) {
        return cells[cell_index(a, b, basis)];
    }
    const CellCounts& cell(IntensityLabel a, IntensityLabel b, Basis basis) const {
        return cells[cell_index(a, b, basis)];
    }
    void validate() const;  // count ordering per cell
};

/// Scales every count by 1/scale so the statistics stand in for the
/// full-length run the desk-scale session represents.
SessionStatistics renormalize_counts(const SessionStatistics& stats, double scale);

// ---------------------------------------------------------------------------
// Operations

/// Fresh pulse pair with a uniformly random global phase.
PulsePair encode_pulse(int bit, Basis basis, const IntensitySetting& intensity, Rng& rng);

/// Mode error at the encoder output: swaps the bins (Z) or flips the
/// encoding phase (X) with the given probability.
void apply_misalignment(PulsePair& pulse, double probability, Rng& rng);

/// Attenuates both bins by the channel transmittance; phases untouched.
PulsePair propagate(const PulsePair& pulse, const ChannelModel& channel);

/// Interference + threshold detection for one pulse-pair slot.
ClickSet bsm_detect(const PulsePair& a, const PulsePair& b,
                    const DistinguishabilityState& distinguishability,
                    const DetectorPair& detectors, Rng& rng);

struct SimulationOptions {
    std::uint64_t n_pulses = 0;
    std::uint64_t seed = 1;
    bool tagged = false;  // photon-number reference model with truth tags
    int threads = 0;      // 0 = hardware concurrency
    std::string pair_id = "A-B";
};

/// Monte-Carlo session: fills all 18 cells. Deterministic for a fixed seed
/// and independent of the thread count (streams are keyed by pulse index).
///
/// tagged mode replaces the interfering coherent model with a classical
/// photon-transport model so that every event carries its true photon
/// numbers; use it only to validate the decoy estimators.
SessionStatistics simulate_session(const ProtocolParams& params,
                                   const ChannelModel& channel_a,
                                   const ChannelModel& channel_b,
                                   const DetectorPair& detectors,
                                   const DistinguishabilityState& distinguishability,
                                   const SimulationOptions& options);

struct ExpectedCell {
    double gain = 0.0;        // P(psi-minus | cell)
    double error_rate = 0.0;  // P(error | coincidence)
    double error_gain = 0.0;  // P(psi-minus and error | cell)
};

struct ExpectedStatistics {
    std::array<ExpectedCell, 18> cells{};
    ExpectedCell& cell(IntensityLabel a, IntensityLabel b, Basis basis) {
        return cells[cell_index(a, b, basis)];
    }
    const ExpectedCell& cell(IntensityLabel a, IntensityLabel b, Basis basis) const {
        return cells[cell_index(a, b, basis)];
    }
};

struct QuadratureSpec {
    int points_per_phase = 64;
    double phase_offset_a = 0.0;
    double phase_offset_b = 0.0;
};

/// Deterministic oracle: averages the click probabilities over both global
/// phases on a quadrature grid. Exact for the threshold-detector model up to
/// quadrature resolution; the phase average itself is exact for any grid
/// because the integrand is a finite trigonometric polynomial in each phase.
ExpectedStatistics expected_statistics(const ProtocolParams& params,
                                       const ChannelModel& channel_a,
                                       const ChannelModel& channel_b,
                                       const DetectorPair& detectors,
                                       const DistinguishabilityState& distinguishability,
                                       const QuadratureSpec& quadrature = {});

/// Normalized two-detector coincidence of unmodulated pulses:
/// (N_c * N_tot) / (N_1 * N_2). 0.5 floor at perfect overlap, 1.0 when
/// fully distinguishable. The second arm carries intensity_ratio times the
/// base intensity.
double hom_coincidence_value(const DistinguishabilityState& distinguishability,
                             double base_intensity, const DetectorPair& detectors,
                             std::uint64_t n_pulses, std::uint64_t seed);

/// Closed-form expectation of hom_coincidence_value (phase quadrature).
double expected_hom_value(const DistinguishabilityState& distinguishability,
                          double base_intensity, const DetectorPair& detectors,
                          int phase_points = 256);

}  // namespace mdinet
