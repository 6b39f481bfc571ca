#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mdinet {

class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class IntensityLabel : int { vacuum = 0, decoy = 1, signal = 2 };

constexpr std::array<IntensityLabel, 3> kIntensityLabels = {
    IntensityLabel::vacuum, IntensityLabel::decoy, IntensityLabel::signal};

const char* to_string(IntensityLabel label);
IntensityLabel intensity_label_from_string(const std::string& s);

enum class Basis : int { Z = 0, X = 1 };

const char* to_string(Basis basis);
Basis basis_from_string(const std::string& s);

/// One source setting of the three-intensity protocol.
struct IntensitySetting {
    IntensityLabel label = IntensityLabel::vacuum;
    double mean_photon_number = 0.0;  // photons per pulse at the source
    double send_probability = 0.0;
};

/// Per-intensity basis choice probabilities, stored as P(X).
struct BasisTable {
    // indexed by IntensityLabel; signal is always Z, decoy mostly X
    std::array<double, 3> x_probability = {0.5, 0.63, 0.0};

    double p_x(IntensityLabel label) const {
        return x_probability[static_cast<int>(label)];
    }
    double p_z(IntensityLabel label) const { return 1.0 - p_x(label); }
};

struct ProtocolParams {
    std::array<IntensitySetting, 3> intensities = {
        IntensitySetting{IntensityLabel::vacuum, 0.0, 0.16},
        IntensitySetting{IntensityLabel::decoy, 0.10, 0.58},
        IntensitySetting{IntensityLabel::signal, 0.33, 0.26},
    };
    BasisTable basis;
    double clock_rate_hz = 7.5e7;
    double coincidence_window_s = 1.7e-9;
    double error_correction_efficiency = 1.2;  // >= 1
    double failure_probability = 1e-10;        // total epsilon budget

    const IntensitySetting& setting(IntensityLabel label) const {
        return intensities[static_cast<int>(label)];
    }
    double mean(IntensityLabel label) const { return setting(label).mean_photon_number; }

    /// Probability that one clock cycle lands in cell (a, b, basis):
    /// both users draw their intensity and both draw the same given basis.
    double cell_probability(IntensityLabel a, IntensityLabel b, Basis basis_choice) const;

    void validate() const;  // throws ConfigError on violated invariants
};

/// Binary Shannon entropy, extended continuously with H(0) = H(1) = 0.
double binary_entropy(double e);

/// e^(-mean) mean^n / n!
double poisson_photon_prob(double mean, int n);

/// 10^(-loss_db / 10)
double transmittance_from_db(double loss_db);

}  // namespace mdinet
