#include "mdinet/core.hpp"

#include <cmath>

namespace mdinet {

const char* to_string(IntensityLabel label) {
    switch (label) {
        case IntensityLabel::vacuum: return "vacuum";
        case IntensityLabel::decoy: return "decoy";
        case IntensityLabel::signal: return "signal";
    }
    return "?";
}

IntensityLabel intensity_label_from_string(const std::string& s) {
    if (s == "vacuum") return IntensityLabel::vacuum;
    if (s == "decoy") return IntensityLabel::decoy;
    if (s == "signal") return IntensityLabel::signal;
    throw DomainError("unknown intensity label: " + s);
}

const char* to_string(Basis basis) { return basis == Basis::Z ? "Z" : "X"; }

Basis basis_from_string(const std::string& s) {
    if (s == "Z") return Basis::Z;
    if (s == "X") return Basis::X;
    throw DomainError("unknown basis: " + s);
}

double ProtocolParams::cell_probability(IntensityLabel a, IntensityLabel b,
                                        Basis basis_choice) const {
    const double pa = setting(a).send_probability;
    const double pb = setting(b).send_probability;
    const double ba = basis_choice == Basis::X ? basis.p_x(a) : basis.p_z(a);
    const double bb = basis_choice == Basis::X ? basis.p_x(b) : basis.p_z(b);
    return pa * pb * ba * bb;
}

void ProtocolParams::validate() const {
    double total = 0.0;
    for (const auto& s : intensities) {
        if (s.mean_photon_number < 0.0)
            throw ConfigError("protocol: mean photon number must be >= 0");
        if (s.send_probability < 0.0 || s.send_probability > 1.0)
            throw ConfigError("protocol: send probability must lie in [0,1]");
        total += s.send_probability;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("protocol: send probabilities must sum to 1");
    if (setting(IntensityLabel::vacuum).mean_photon_number != 0.0)
        throw ConfigError("protocol: vacuum setting must have zero intensity");
    if (!(setting(IntensityLabel::decoy).mean_photon_number <
          setting(IntensityLabel::signal).mean_photon_number))
        throw ConfigError("protocol: decoy intensity must be strictly below signal");
    for (double px : basis.x_probability)
        if (px < 0.0 || px > 1.0)
            throw ConfigError("protocol: basis probability must lie in [0,1]");
    if (basis.p_x(IntensityLabel::signal) != 0.0)
        throw ConfigError("protocol: signal pulses are Z-only");
    if (clock_rate_hz <= 0.0) throw ConfigError("protocol: clock rate must be > 0");
    if (coincidence_window_s <= 0.0) throw ConfigError("protocol: window must be > 0");
    if (error_correction_efficiency < 1.0)
        throw ConfigError("protocol: error correction efficiency must be >= 1");
    if (failure_probability <= 0.0 || failure_probability >= 1.0)
        throw ConfigError("protocol: failure probability must lie in (0,1)");
}

double binary_entropy(double e) {
    if (e < 0.0 || e > 1.0) throw DomainError("binary_entropy: argument outside [0,1]");
    if (e == 0.0 || e == 1.0) return 0.0;
    return -e * std::log2(e) - (1.0 - e) * std::log2(1.0 - e);
}

double poisson_photon_prob(double mean, int n) {
    if (mean < 0.0) throw DomainError("poisson_photon_prob: mean must be >= 0");
    if (n < 0) throw DomainError("poisson_photon_prob: n must be >= 0");
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    // exp(-mean + n log(mean) - log(n!))
    double log_p = -mean + n * std::log(mean) - std::lgamma(n + 1.0);
    return std::exp(log_p);
}

double transmittance_from_db(double loss_db) {
    if (loss_db < 0.0) throw DomainError("transmittance_from_db: loss must be >= 0");
    return std::pow(10.0, -loss_db / 10.0);
}

}  // namespace mdinet
