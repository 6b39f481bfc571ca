#pragma once

#include "mdinet/core.hpp"
#include "mdinet/optics.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mdinet {

/// Two-sided Chernoff (KL-form) confidence interval on a binomial rate:
/// the true rate lies in [lower_rate, upper_rate] except with probability
/// at most epsilon_share.
struct ConfidenceBound {
    std::uint64_t observed = 0;
    std::uint64_t trials = 0;
    double lower_rate = 0.0;
    double upper_rate = 1.0;
    double epsilon_share = 1.0;

    double rate() const { return trials ? double(observed) / double(trials) : 0.0; }
};

ConfidenceBound fluctuation_interval(std::uint64_t observed, std::uint64_t trials,
                                     double epsilon_share);

/// Bernoulli KL divergence, the exponent of the Chernoff tail bound.
double kl_bernoulli(double p_hat, double p);

/// Per-cell bound table for one basis, indexed [a][b].
using CellBoundTable = std::array<std::array<ConfidenceBound, 3>, 3>;

struct Y11Estimate {
    double y11_lower = 0.0;
    bool feasible = true;
    std::string diagnostic;
};

/// Certified lower bound on the yield of the (1,1) photon-number component
/// from the nine gain bounds of one basis. Vacuum/decoy/signal elimination:
/// with c_n = mu^2 nu^n - nu^2 mu^n, the combination
///   sum_ab w_ab Q^ab  with weights picked so it equals
///   sum_{n,m>=1} c_n c_m / (n! m!) Y_nm
/// has c_1 > 0, c_2 = 0 and c_n < 0 for n >= 3, so every neglected term
/// only lowers the bound except the doubly-negative block, whose maximum
/// possible mass is subtracted explicitly.
Y11Estimate estimate_y11(const CellBoundTable& gain_bounds, const ProtocolParams& params);

/// Linear-feasibility oracle for the same bound: minimizes Y_11 over all
/// truncated yield matrices consistent with the gain bounds (tails bounded
/// by the leftover Poisson mass). Slower; detects inconsistent bounds.
Y11Estimate estimate_y11_lp(const CellBoundTable& gain_bounds, const ProtocolParams& params,
                            int max_photons = 7);

struct E11Estimate {
    double e11_upper = 0.5;
    std::string diagnostic;
};

/// Certified upper bound on the single-photon error rate from the X-basis
/// decoy-decoy error gains (vacuum rows subtracted), divided by y11_lower.
/// Returns the degenerate 0.5 when y11_lower is zero.
E11Estimate estimate_e11(const CellBoundTable& x_error_gain_bounds,
                         const ProtocolParams& params, double y11_lower);

/// LP cross-check: maximizes the (1,1) error gain consistent with the bounds.
E11Estimate estimate_e11_lp(const CellBoundTable& x_error_gain_bounds,
                            const ProtocolParams& params, double y11_lower,
                            int max_photons = 7);

/// P_1(a) P_1(b) y11; zero whenever a or b is vacuum.
double single_photon_gain(double mean_a, double mean_b, double y11_lower);

struct DecoyEstimate {
    double y11_lower = 0.0;
    double e11_upper = 0.5;
    CellBoundTable z_gain_bounds;
    CellBoundTable x_error_gain_bounds;
    bool feasible = true;
    std::vector<std::string> diagnostics;
};

struct ZCellEcho {
    std::uint64_t sent = 0;
    std::uint64_t coincidences = 0;
    std::uint64_t errors = 0;
    double gain = 0.0;
    double error_rate = 0.0;
    double weight = 0.0;  // probability a clock cycle lands in this cell
};

struct KeyRateResult {
    double rate_per_pulse = 0.0;      // clamped at zero
    double rate_per_pulse_raw = 0.0;  // before clamping, may be negative
    double rate_bps = 0.0;
    double epsilon_total = 0.0;
    DecoyEstimate estimate;
    std::array<ZCellEcho, 9> z_cells;  // index a*3+b
    std::vector<std::string> diagnostics;

    bool positive() const { return rate_per_pulse > 0.0; }
};

/// Full finite-key pipeline over the nine Z cells: fluctuation bounds,
/// single-photon yield and error estimation, secure fraction minus the
/// error-correction leakage f H(E) per cell, weighted by the cell
/// probabilities and clamped at zero.
KeyRateResult secure_key_rate(const SessionStatistics& stats, const ProtocolParams& params);

/// Per-pulse rate to bits per second at the given clock and duty factor.
double rate_to_bps(double rate_per_pulse, double clock_rate_hz, double duty);

}  // namespace mdinet
