#include "mdinet/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

namespace mdinet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPi = std::numbers::pi;

// 2.5 ns FWHM Gaussian pulse at 1550.12 nm.
constexpr double kPulseSigmaS = 2.5e-9 / 2.3548200450309493;  // FWHM / (2 sqrt(2 ln 2))
constexpr double kCenterWavelengthM = 1550.12e-9;
constexpr double kSpeedOfLight = 299792458.0;

double click_probability(double efficiency, double intensity, double dark_prob) {
    return 1.0 - (1.0 - dark_prob) * std::exp(-efficiency * intensity);
}

}  // namespace

void ChannelModel::validate() const {
    if (fiber_loss_db < 0.0 || switch_loss_db < 0.0 || dwdm_loss_db < 0.0 ||
        bs_insertion_loss_share_db < 0.0)
        throw ConfigError("channel: losses must be >= 0 dB");
    if (misalignment_error < 0.0 || misalignment_error > 0.5)
        throw ConfigError("channel: misalignment must lie in [0, 0.5]");
}

void DetectorModel::validate() const {
    if (efficiency < 0.0 || efficiency > 1.0)
        throw ConfigError("detector: efficiency must lie in [0,1]");
    if (dark_count_rate_hz < 0.0) throw ConfigError("detector: dark rate must be >= 0");
    if (gate_window_s <= 0.0) throw ConfigError("detector: gate window must be > 0");
    const double p = dark_probability();
    if (p < 0.0 || p >= 1.0)
        throw ConfigError("detector: dark probability per window must lie in [0,1)");
}

double DistinguishabilityState::mode_overlap() const {
    const double dl = delta_wavelength_pm * 1e-12;
    const double dt = delta_time_ps * 1e-12;
    const double spectral_arg = kPi * kSpeedOfLight * dl * kPulseSigmaS /
                                (kCenterWavelengthM * kCenterWavelengthM);
    const double spectral = std::exp(-spectral_arg * spectral_arg);
    const double temporal = std::exp(-dt * dt / (8.0 * kPulseSigmaS * kPulseSigmaS));
    const double zeta = spectral * temporal * polarization_overlap;
    return std::clamp(zeta, 0.0, 1.0);
}

void DistinguishabilityState::validate() const {
    if (polarization_overlap < 0.0 || polarization_overlap > 1.0)
        throw ConfigError("distinguishability: polarization overlap must lie in [0,1]");
    if (intensity_ratio <= 0.0)
        throw ConfigError("distinguishability: intensity ratio must be > 0");
}

void SessionStatistics::validate() const {
    for (const auto& c : cells) {
        if (c.errors > c.coincidences || c.coincidences > c.sent)
            throw DomainError("statistics: require errors <= coincidences <= sent");
    }
}

SessionStatistics renormalize_counts(const SessionStatistics& stats, double scale) {
    if (scale <= 0.0 || scale > 1.0)
        throw DomainError("renormalize_counts: scale must lie in (0,1]");
    SessionStatistics out = stats;
    if (scale == 1.0) return out;
    for (auto& c : out.cells) {
        c.sent = static_cast<std::uint64_t>(std::llround(c.sent / scale));
        c.coincidences = static_cast<std::uint64_t>(std::llround(c.coincidences / scale));
        c.errors = static_cast<std::uint64_t>(std::llround(c.errors / scale));
    }
    out.n_pulses = static_cast<std::uint64_t>(std::llround(stats.n_pulses / scale));
    out.scale = 1.0;
    return out;
}

std::optional<BellOutcome> bsm_postselect(const ClickSet& clicks) {
    if (clicks.count != 2) return std::nullopt;
    const ClickRecord& first = clicks.records[0];
    const ClickRecord& second = clicks.records[1];
    if (first.detector == second.detector) return std::nullopt;
    if (first.bin == second.bin) return std::nullopt;
    return BellOutcome::psi_minus;
}

PulsePair encode_pulse(int bit, Basis basis, const IntensitySetting& intensity, Rng& rng) {
    PulsePair pulse;
    pulse.bit = bit;
    pulse.basis = basis;
    pulse.intensity_label = intensity.label;
    pulse.global_phase = rng.uniform() * kTwoPi;
    const double mean = intensity.mean_photon_number;
    if (basis == Basis::Z) {
        pulse.early_intensity = bit == 0 ? mean : 0.0;
        pulse.late_intensity = bit == 0 ? 0.0 : mean;
        pulse.encoding_phase = 0.0;
    } else {
        pulse.early_intensity = 0.5 * mean;
        pulse.late_intensity = 0.5 * mean;
        pulse.encoding_phase = bit == 0 ? 0.0 : kPi;
    }
    return pulse;
}

void apply_misalignment(PulsePair& pulse, double probability, Rng& rng) {
    if (probability <= 0.0) return;
    if (!rng.bernoulli(probability)) return;
    if (pulse.basis == Basis::Z) {
        std::swap(pulse.early_intensity, pulse.late_intensity);
    } else {
        pulse.encoding_phase = pulse.encoding_phase == 0.0 ? kPi : 0.0;
    }
}

PulsePair propagate(const PulsePair& pulse, const ChannelModel& channel) {
    channel.validate();
    PulsePair out = pulse;
    const double t = channel.transmittance();
    out.early_intensity *= t;
    out.late_intensity *= t;
    return out;
}

ClickProbs click_probabilities(const PulsePair& a, const PulsePair& b, double zeta,
                               const DetectorPair& detectors) {
    // Relative phase in the early bin; the late bin adds the encoding phases.
    const double base = a.global_phase - b.global_phase;
    double out[2][2];  // [bin][detector]
    const double cos_early = std::cos(base);
    interfere(a.early_intensity, b.early_intensity, zeta, cos_early, out[0][0], out[0][1]);
    const double cos_late = std::cos(base + a.encoding_phase - b.encoding_phase);
    interfere(a.late_intensity, b.late_intensity, zeta, cos_late, out[1][0], out[1][1]);

    ClickProbs probs;
    for (int d = 0; d < 2; ++d) {
        const double dark = detectors[d].dark_probability();
        const double eta = detectors[d].efficiency;
        for (int bin = 0; bin < 2; ++bin)
            probs.q[d][bin] = click_probability(eta, out[bin][d], dark);
    }
    return probs;
}

ClickSet bsm_detect(const PulsePair& a, const PulsePair& b,
                    const DistinguishabilityState& distinguishability,
                    const DetectorPair& detectors, Rng& rng) {
    const ClickProbs probs = click_probabilities(a, b, distinguishability.mode_overlap(),
                                                 detectors);
    ClickSet clicks;
    for (int d = 0; d < 2; ++d) {
        const double dark = detectors[d].dark_probability();
        for (int bin = 0; bin < 2; ++bin) {
            const double u = rng.uniform();
            if (u >= probs.q[d][bin]) continue;
            ClickRecord r;
            r.detector = static_cast<Detector>(d);
            r.bin = static_cast<TimeBin>(bin);
            // photon-only click mass: 1 - exp(-eta I) = 1 - (1-q)/(1-dark)
            const double p_photon = 1.0 - (1.0 - probs.q[d][bin]) / (1.0 - dark);
            r.photon = u < p_photon;
            r.dark = !r.photon;
            clicks.add(r);
        }
    }
    return clicks;
}

namespace {

// Shared by the Monte-Carlo loop and the oracle: deterministic pulse shaping
// for a given (bit, flip) choice, without the random global phase.
PulsePair shaped_pulse(int bit, Basis basis, IntensityLabel label, double arrival_intensity,
                       bool flipped) {
    PulsePair pulse;
    pulse.bit = bit;
    pulse.basis = basis;
    pulse.intensity_label = label;
    const int effective_bit = flipped ? 1 - bit : bit;
    if (basis == Basis::Z) {
        pulse.early_intensity = effective_bit == 0 ? arrival_intensity : 0.0;
        pulse.late_intensity = effective_bit == 0 ? 0.0 : arrival_intensity;
        pulse.encoding_phase = 0.0;
    } else {
        pulse.early_intensity = 0.5 * arrival_intensity;
        pulse.late_intensity = 0.5 * arrival_intensity;
        pulse.encoding_phase = effective_bit == 0 ? 0.0 : kPi;
    }
    return pulse;
}

struct UserDraw {
    IntensityLabel label;
    Basis basis;
    int bit;
    bool flipped;
    double phase;
};

struct DrawTables {
    // cumulative send probabilities, P(X) per label, arrival intensity per label
    double cumulative[3];
    double p_x[3];
    double arrival[3];
    double misalignment;
};

DrawTables make_tables(const ProtocolParams& params, const ChannelModel& channel) {
    DrawTables t{};
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
        acc += params.intensities[i].send_probability;
        t.cumulative[i] = acc;
        t.p_x[i] = params.basis.x_probability[i];
        t.arrival[i] = params.intensities[i].mean_photon_number * channel.transmittance();
    }
    t.cumulative[2] = 1.0 + 1e-12;  // guard against rounding at the top end
    t.misalignment = channel.misalignment_error;
    return t;
}

UserDraw draw_user(const DrawTables& t, Rng& rng) {
    UserDraw d;
    const double u = rng.uniform();
    int idx = u < t.cumulative[0] ? 0 : (u < t.cumulative[1] ? 1 : 2);
    d.label = static_cast<IntensityLabel>(idx);
    d.basis = rng.uniform() < t.p_x[idx] ? Basis::X : Basis::Z;
    d.bit = rng.uniform() < 0.5 ? 0 : 1;
    d.phase = rng.uniform() * kTwoPi;
    d.flipped = t.misalignment > 0.0 && rng.bernoulli(t.misalignment);
    return d;
}

struct TallyBlock {
    std::array<CellCounts, 18> cells{};
    std::array<TaggedCellCounts, 18> tags{};
};

// Precomputed per-detector response at a given output intensity.
struct DetectorConsts {
    double efficiency;
    double dark;
};

// Coherent interfering model for one pulse slot. Basis-mismatched slots are
// dropped at sifting and never reach a cell, so their detection outcome is
// irrelevant and skipped.
void simulate_pulse_coherent(const DrawTables& ta, const DrawTables& tb, double zeta,
                             const DetectorConsts* det, Rng& rng, TallyBlock& tally) {
    const UserDraw da = draw_user(ta, rng);
    const UserDraw db = draw_user(tb, rng);
    if (da.basis != db.basis) return;

    CellCounts& cell = tally.cells[cell_index(da.label, db.label, da.basis)];
    cell.sent += 1;

    // bin intensities for both users under the (possibly flipped) encoding
    const double ia = ta.arrival[(int)da.label];
    const double ib = tb.arrival[(int)db.label];
    double a_bins[2], b_bins[2];
    double enc_sign_a = 1.0, enc_sign_b = 1.0;  // cos(pi) flips the cross term
    if (da.basis == Basis::Z) {
        const int bin_a = da.flipped ? 1 - da.bit : da.bit;
        const int bin_b = db.flipped ? 1 - db.bit : db.bit;
        a_bins[bin_a] = ia;
        a_bins[1 - bin_a] = 0.0;
        b_bins[bin_b] = ib;
        b_bins[1 - bin_b] = 0.0;
    } else {
        a_bins[0] = a_bins[1] = 0.5 * ia;
        b_bins[0] = b_bins[1] = 0.5 * ib;
        enc_sign_a = (da.bit != int(da.flipped)) ? -1.0 : 1.0;
        enc_sign_b = (db.bit != int(db.flipped)) ? -1.0 : 1.0;
    }

    // single trig evaluation: the late-bin relative phase differs from the
    // early one only by the 0/pi encoding phases
    double cos_early = 0.0;
    const bool interfere_early = a_bins[0] > 0.0 && b_bins[0] > 0.0;
    const bool interfere_late = a_bins[1] > 0.0 && b_bins[1] > 0.0;
    if (interfere_early || interfere_late) cos_early = std::cos(da.phase - db.phase);

    double out[2][2];  // [bin][detector]
    interfere(a_bins[0], b_bins[0], zeta, interfere_early ? cos_early : 0.0, out[0][0],
              out[0][1]);
    const double cos_late = enc_sign_a * enc_sign_b * cos_early;
    interfere(a_bins[1], b_bins[1], zeta, interfere_late ? cos_late : 0.0, out[1][0],
              out[1][1]);

    int pattern = 0;  // bit d*2+bin set when that (detector, bin) clicked
    int n_clicks = 0;
    for (int d = 0; d < 2; ++d)
        for (int bin = 0; bin < 2; ++bin) {
            const double intensity = out[bin][d];
            const double q = intensity > 0.0
                                 ? 1.0 - (1.0 - det[d].dark) *
                                             std::exp(-det[d].efficiency * intensity)
                                 : det[d].dark;
            if (rng.uniform() < q) {
                pattern |= 1 << (d * 2 + bin);
                ++n_clicks;
            }
        }

    // accepted patterns: D1@early + D2@late (0b1001) or D1@late + D2@early (0b0110)
    const bool psi_minus = n_clicks == 2 && (pattern == 0b1001 || pattern == 0b0110);
    if (!psi_minus) return;
    cell.coincidences += 1;
    if (da.bit == db.bit) cell.errors += 1;  // designated user flips: equal raw bits err
}

// Classical photon-transport model carrying exact photon numbers. Photons do
// not interfere; each one routes to a random detector. Only used to give the
// decoy estimators a ground truth with per-event (n_a, n_b) labels.
void simulate_pulse_tagged(const ProtocolParams& params, const DrawTables& ta,
                           const DrawTables& tb, const ChannelModel& channel_a,
                           const ChannelModel& channel_b, const DetectorPair& detectors,
                           Rng& rng, TallyBlock& tally) {
    const UserDraw da = draw_user(ta, rng);
    const UserDraw db = draw_user(tb, rng);

    const int n_a = rng.poisson(params.intensities[(int)da.label].mean_photon_number);
    const int n_b = rng.poisson(params.intensities[(int)db.label].mean_photon_number);

    const double t_a = channel_a.transmittance();
    const double t_b = channel_b.transmittance();

    // photons occupy the bin selected by the (possibly flipped) bit
    const int bin_a = (da.flipped ? 1 - da.bit : da.bit);
    const int bin_b = (db.flipped ? 1 - db.bit : db.bit);

    bool hit[2][2] = {{false, false}, {false, false}};  // [detector][bin]
    for (int i = 0; i < n_a; ++i) {
        if (rng.uniform() >= t_a) continue;
        const int d = rng.uniform() < 0.5 ? 0 : 1;
        if (rng.uniform() < detectors[d].efficiency) hit[d][bin_a] = true;
    }
    for (int i = 0; i < n_b; ++i) {
        if (rng.uniform() >= t_b) continue;
        const int d = rng.uniform() < 0.5 ? 0 : 1;
        if (rng.uniform() < detectors[d].efficiency) hit[d][bin_b] = true;
    }
    int pattern = 0;
    int n_clicks = 0;
    for (int d = 0; d < 2; ++d)
        for (int bin = 0; bin < 2; ++bin) {
            bool click = hit[d][bin];
            if (!click && rng.uniform() < detectors[d].dark_probability()) click = true;
            if (click) {
                pattern |= 1 << (d * 2 + bin);
                ++n_clicks;
            }
        }

    if (da.basis != db.basis) return;

    const int idx = cell_index(da.label, db.label, da.basis);
    CellCounts& cell = tally.cells[idx];
    TaggedCellCounts& tag = tally.tags[idx];
    const int na_clamped = std::min(n_a, TaggedCellCounts::kMaxPhotons);
    const int nb_clamped = std::min(n_b, TaggedCellCounts::kMaxPhotons);

    cell.sent += 1;
    tag.sent[na_clamped][nb_clamped] += 1;
    const bool psi_minus = n_clicks == 2 && (pattern == 0b1001 || pattern == 0b0110);
    if (!psi_minus) return;
    cell.coincidences += 1;
    tag.coincidences[na_clamped][nb_clamped] += 1;
    if (da.bit == db.bit) {
        cell.errors += 1;
        tag.errors[na_clamped][nb_clamped] += 1;
    }
}

}  // namespace

SessionStatistics simulate_session(const ProtocolParams& params,
                                   const ChannelModel& channel_a,
                                   const ChannelModel& channel_b,
                                   const DetectorPair& detectors,
                                   const DistinguishabilityState& distinguishability,
                                   const SimulationOptions& options) {
    params.validate();
    channel_a.validate();
    channel_b.validate();
    detectors[0].validate();
    detectors[1].validate();
    distinguishability.validate();
    if (options.n_pulses == 0) throw DomainError("simulate_session: n_pulses must be >= 1");

    const DrawTables ta = make_tables(params, channel_a);
    const DrawTables tb = make_tables(params, channel_b);
    const double zeta = distinguishability.mode_overlap();
    const DetectorConsts det[2] = {
        {detectors[0].efficiency, detectors[0].dark_probability()},
        {detectors[1].efficiency, detectors[1].dark_probability()}};

    unsigned hw = std::thread::hardware_concurrency();
    int n_threads = options.threads > 0 ? options.threads : (hw > 0 ? (int)hw : 1);
    n_threads = std::max(1, std::min<int>(n_threads, 16));
    if (options.n_pulses < 100000) n_threads = 1;

    std::vector<TallyBlock> blocks(n_threads);
    auto worker = [&](int which) {
        TallyBlock& tally = blocks[which];
        const std::uint64_t begin = options.n_pulses * which / n_threads;
        const std::uint64_t end = options.n_pulses * (which + 1) / n_threads;
        for (std::uint64_t i = begin; i < end; ++i) {
            Rng rng(derive_stream(options.seed, kStreamPulse, i));
            if (options.tagged)
                simulate_pulse_tagged(params, ta, tb, channel_a, channel_b, detectors, rng,
                                      tally);
            else
                simulate_pulse_coherent(ta, tb, zeta, det, rng, tally);
        }
    };

    if (n_threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    SessionStatistics stats;
    stats.pair_id = options.pair_id;
    stats.n_pulses = options.n_pulses;
    stats.scale = 1.0;
    stats.tagged = options.tagged;
    if (options.tagged) stats.tags.resize(18);
    for (const auto& block : blocks) {
        for (int c = 0; c < 18; ++c) {
            stats.cells[c].sent += block.cells[c].sent;
            stats.cells[c].coincidences += block.cells[c].coincidences;
            stats.cells[c].errors += block.cells[c].errors;
            if (!options.tagged) continue;
            for (int n = 0; n <= TaggedCellCounts::kMaxPhotons; ++n)
                for (int m = 0; m <= TaggedCellCounts::kMaxPhotons; ++m) {
                    stats.tags[c].sent[n][m] += block.tags[c].sent[n][m];
                    stats.tags[c].coincidences[n][m] += block.tags[c].coincidences[n][m];
                    stats.tags[c].errors[n][m] += block.tags[c].errors[n][m];
                }
        }
    }
    return stats;
}

ExpectedStatistics expected_statistics(const ProtocolParams& params,
                                       const ChannelModel& channel_a,
                                       const ChannelModel& channel_b,
                                       const DetectorPair& detectors,
                                       const DistinguishabilityState& distinguishability,
                                       const QuadratureSpec& quadrature) {
    params.validate();
    channel_a.validate();
    channel_b.validate();
    distinguishability.validate();

    const double zeta = distinguishability.mode_overlap();
    const double t_a = channel_a.transmittance();
    const double t_b = channel_b.transmittance();
    const double mis_a = channel_a.misalignment_error;
    const double mis_b = channel_b.misalignment_error;
    const int n_grid = quadrature.points_per_phase;

    ExpectedStatistics expected;
    for (Basis basis : {Basis::Z, Basis::X}) {
        for (IntensityLabel a : kIntensityLabels) {
            for (IntensityLabel b : kIntensityLabels) {
                const double ia = params.mean(a) * t_a;
                const double ib = params.mean(b) * t_b;
                double coincidence = 0.0;
                double error = 0.0;
                for (int bit_a = 0; bit_a < 2; ++bit_a) {
                    for (int bit_b = 0; bit_b < 2; ++bit_b) {
                        for (int flip_a = 0; flip_a < 2; ++flip_a) {
                            const double wa = flip_a ? mis_a : 1.0 - mis_a;
                            if (wa == 0.0) continue;
                            for (int flip_b = 0; flip_b < 2; ++flip_b) {
                                const double wb = flip_b ? mis_b : 1.0 - mis_b;
                                if (wb == 0.0) continue;
                                PulsePair pa = shaped_pulse(bit_a, basis, a, ia, flip_a);
                                PulsePair pb = shaped_pulse(bit_b, basis, b, ib, flip_b);
                                // interference shows up only where both arms carry
                                // light in the same bin; otherwise one evaluation
                                // covers the whole phase average
                                const bool need_phase_average =
                                    (pa.early_intensity > 0.0 && pb.early_intensity > 0.0) ||
                                    (pa.late_intensity > 0.0 && pb.late_intensity > 0.0);
                                double p_coinc = 0.0;
                                if (!need_phase_average) {
                                    pa.global_phase = 0.0;
                                    pb.global_phase = 0.0;
                                    p_coinc = psi_minus_probability(
                                        click_probabilities(pa, pb, zeta, detectors));
                                } else {
                                    for (int i = 0; i < n_grid; ++i) {
                                        pa.global_phase =
                                            kTwoPi * i / n_grid + quadrature.phase_offset_a;
                                        for (int j = 0; j < n_grid; ++j) {
                                            pb.global_phase = kTwoPi * j / n_grid +
                                                              quadrature.phase_offset_b;
                                            p_coinc += psi_minus_probability(
                                                click_probabilities(pa, pb, zeta,
                                                                    detectors));
                                        }
                                    }
                                    p_coinc /= double(n_grid) * double(n_grid);
                                }
                                const double weight = 0.25 * wa * wb;
                                coincidence += weight * p_coinc;
                                if (bit_a == bit_b) error += weight * p_coinc;
                            }
                        }
                    }
                }
                ExpectedCell& cell = expected.cell(a, b, basis);
                cell.gain = coincidence;
                cell.error_gain = error;
                cell.error_rate = coincidence > 0.0 ? error / coincidence : 0.0;
            }
        }
    }
    return expected;
}

double hom_coincidence_value(const DistinguishabilityState& distinguishability,
                             double base_intensity, const DetectorPair& detectors,
                             std::uint64_t n_pulses, std::uint64_t seed) {
    distinguishability.validate();
    if (base_intensity < 0.0) throw DomainError("hom: intensity must be >= 0");
    if (n_pulses == 0) throw DomainError("hom: n_pulses must be >= 1");

    const double zeta = distinguishability.mode_overlap();
    const double ia = base_intensity;
    const double ib = base_intensity * distinguishability.intensity_ratio;

    std::uint64_t n1 = 0, n2 = 0, nc = 0;
    for (std::uint64_t i = 0; i < n_pulses; ++i) {
        Rng rng(derive_stream(seed, kStreamPulse, i));
        const double delta = (rng.uniform() - rng.uniform()) * kTwoPi;
        double out1, out2;
        interfere(ia, ib, zeta, std::cos(delta), out1, out2);
        const bool c1 = rng.uniform() < click_probability(detectors[0].efficiency, out1,
                                                          detectors[0].dark_probability());
        const bool c2 = rng.uniform() < click_probability(detectors[1].efficiency, out2,
                                                          detectors[1].dark_probability());
        n1 += c1;
        n2 += c2;
        nc += c1 && c2;
    }
    if (n1 == 0 || n2 == 0)
        throw DomainError("hom: degenerate statistics, no singles on one detector");
    return (double(nc) * double(n_pulses)) / (double(n1) * double(n2));
}

double expected_hom_value(const DistinguishabilityState& distinguishability,
                          double base_intensity, const DetectorPair& detectors,
                          int phase_points) {
    distinguishability.validate();
    const double zeta = distinguishability.mode_overlap();
    const double ia = base_intensity;
    const double ib = base_intensity * distinguishability.intensity_ratio;

    double p1 = 0.0, p2 = 0.0, pc = 0.0;
    for (int i = 0; i < phase_points; ++i) {
        const double delta = kTwoPi * i / phase_points;
        double out1, out2;
        interfere(ia, ib, zeta, std::cos(delta), out1, out2);
        const double q1 = click_probability(detectors[0].efficiency, out1,
                                            detectors[0].dark_probability());
        const double q2 = click_probability(detectors[1].efficiency, out2,
                                            detectors[1].dark_probability());
        p1 += q1;
        p2 += q2;
        pc += q1 * q2;
    }
    p1 /= phase_points;
    p2 /= phase_points;
    pc /= phase_points;
    if (p1 <= 0.0 || p2 <= 0.0)
        throw DomainError("hom: degenerate statistics, zero singles probability");
    return pc / (p1 * p2);
}

}  // namespace mdinet
