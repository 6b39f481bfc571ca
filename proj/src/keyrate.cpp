#include "mdinet/keyrate.hpp"

#include "mdinet/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdinet {

double kl_bernoulli(double p_hat, double p) {
    if (p <= 0.0 || p >= 1.0) {
        // boundary cases only make sense when p_hat sits on the same boundary
        if (p == 0.0 && p_hat == 0.0) return 0.0;
        if (p == 1.0 && p_hat == 1.0) return 0.0;
        return std::numeric_limits<double>::infinity();
    }
    double kl = 0.0;
    if (p_hat > 0.0) kl += p_hat * std::log(p_hat / p);
    if (p_hat < 1.0) kl += (1.0 - p_hat) * std::log((1.0 - p_hat) / (1.0 - p));
    return kl;
}

ConfidenceBound fluctuation_interval(std::uint64_t observed, std::uint64_t trials,
                                     double epsilon_share) {
    if (trials == 0) throw DomainError("fluctuation_interval: trials must be >= 1");
    if (observed > trials)
        throw DomainError("fluctuation_interval: observed must not exceed trials");
    if (epsilon_share <= 0.0 || epsilon_share >= 1.0)
        throw DomainError("fluctuation_interval: epsilon_share must lie in (0,1)");

    ConfidenceBound bound;
    bound.observed = observed;
    bound.trials = trials;
    bound.epsilon_share = epsilon_share;

    const double p_hat = double(observed) / double(trials);
    const double target = std::log(2.0 / epsilon_share) / double(trials);

    // Each side solves KL(p_hat || p) = target; KL grows monotonically as p
    // moves away from p_hat, so plain bisection suffices.
    if (observed == trials) {
        bound.upper_rate = 1.0;
    } else {
        double lo = p_hat, hi = 1.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (kl_bernoulli(p_hat, mid) < target)
                lo = mid;
            else
                hi = mid;
        }
        bound.upper_rate = hi;
    }
    if (observed == 0) {
        bound.lower_rate = 0.0;
    } else {
        double lo = 0.0, hi = p_hat;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (kl_bernoulli(p_hat, mid) < target)
                hi = mid;
            else
                lo = mid;
        }
        bound.lower_rate = lo;
    }
    return bound;
}

namespace {

// A bound carrying no information, used for cells with no trials.
ConfidenceBound vacuous_bound(double epsilon_share) {
    ConfidenceBound b;
    b.observed = 0;
    b.trials = 0;
    b.lower_rate = 0.0;
    b.upper_rate = 1.0;
    b.epsilon_share = epsilon_share;
    return b;
}

struct DecoyIntensities {
    double nu = 0.0;
    double mu = 0.0;
};

DecoyIntensities decoy_intensities(const ProtocolParams& params) {
    params.validate();
    DecoyIntensities d;
    d.nu = params.mean(IntensityLabel::decoy);
    d.mu = params.mean(IntensityLabel::signal);
    if (d.nu <= 0.0) throw DomainError("decoy estimation requires a nonzero decoy intensity");
    return d;
}

int label_index(IntensityLabel l) { return static_cast<int>(l); }

}  // namespace

Y11Estimate estimate_y11(const CellBoundTable& gain_bounds, const ProtocolParams& params) {
    const auto [nu, mu] = decoy_intensities(params);

    // per-cell weights of the eliminating combination (see header)
    const double e_nu = std::exp(nu);
    const double e_mu = std::exp(mu);
    const double mu2 = mu * mu, nu2 = nu * nu;
    const double gap = mu2 - nu2;

    double coeff[3][3] = {};
    coeff[1][1] = mu2 * mu2 * e_nu * e_nu;          // (nu, nu)
    coeff[1][2] = -mu2 * nu2 * e_nu * e_mu;         // (nu, mu)
    coeff[2][1] = -mu2 * nu2 * e_mu * e_nu;         // (mu, nu)
    coeff[2][2] = nu2 * nu2 * e_mu * e_mu;          // (mu, mu)
    coeff[0][1] = -mu2 * gap * e_nu;                // (0, nu)
    coeff[1][0] = -mu2 * gap * e_nu;                // (nu, 0)
    coeff[0][2] = nu2 * gap * e_mu;                 // (0, mu)
    coeff[2][0] = nu2 * gap * e_mu;                 // (mu, 0)
    coeff[0][0] = gap * gap;                        // (0, 0)

    double combination = 0.0;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const ConfidenceBound& bound = gain_bounds[a][b];
            const double q = coeff[a][b] >= 0.0 ? bound.lower_rate : bound.upper_rate;
            combination += coeff[a][b] * q;
        }
    }

    // maximum mass of the doubly-negative (n,m >= 3) block, yields at 1
    const double tail_single = nu2 * (e_mu - 1.0 - mu - 0.5 * mu2) -
                               mu2 * (e_nu - 1.0 - nu - 0.5 * nu2);
    const double tail = tail_single * tail_single;

    const double denom = mu * nu * (mu - nu);
    Y11Estimate estimate;
    const double value = (combination - tail) / (denom * denom);
    estimate.y11_lower = std::clamp(value, 0.0, 1.0);
    if (value <= 0.0) {
        estimate.feasible = false;
        estimate.diagnostic = "gain combination not positive; zero bound returned";
    }
    return estimate;
}

namespace {

struct TruncatedLp {
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    int n_vars = 0;
    int index11 = 0;
};

// Constraints: for every cell, the truncated Poisson mixture of the cell
// variables stays inside the measured bounds (lower side relaxed by the
// truncation tail); every variable lies in [0,1].
TruncatedLp build_truncated_lp(const CellBoundTable& bounds, const ProtocolParams& params,
                               int max_photons) {
    TruncatedLp lp;
    const int k = max_photons + 1;
    lp.n_vars = k * k;
    lp.index11 = 1 * k + 1;

    const std::array<double, 3> means = {params.mean(IntensityLabel::vacuum),
                                         params.mean(IntensityLabel::decoy),
                                         params.mean(IntensityLabel::signal)};
    std::array<std::vector<double>, 3> pmf;
    std::array<double, 3> head_mass{};
    for (int i = 0; i < 3; ++i) {
        pmf[i].resize(k);
        for (int n = 0; n < k; ++n) pmf[i][n] = poisson_photon_prob(means[i], n);
        head_mass[i] = 0.0;
        for (int n = 0; n < k; ++n) head_mass[i] += pmf[i][n];
    }

    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const ConfidenceBound& bound = bounds[a][b];
            std::vector<double> row(lp.n_vars, 0.0);
            for (int n = 0; n < k; ++n)
                for (int m = 0; m < k; ++m) row[n * k + m] = pmf[a][n] * pmf[b][m];
            const double tail_mass = 1.0 - head_mass[a] * head_mass[b];
            // upper side
            lp.A.push_back(row);
            lp.b.push_back(bound.upper_rate);
            // lower side (negated), relaxed by the tail mass
            for (double& v : row) v = -v;
            lp.A.push_back(std::move(row));
            lp.b.push_back(-(std::max(0.0, bound.lower_rate - tail_mass)));
        }
    }
    // variable upper bounds
    for (int v = 0; v < lp.n_vars; ++v) {
        std::vector<double> row(lp.n_vars, 0.0);
        row[v] = 1.0;
        lp.A.push_back(std::move(row));
        lp.b.push_back(1.0);
    }
    return lp;
}

}  // namespace

Y11Estimate estimate_y11_lp(const CellBoundTable& gain_bounds, const ProtocolParams& params,
                            int max_photons) {
    decoy_intensities(params);  // validates
    TruncatedLp lp = build_truncated_lp(gain_bounds, params, max_photons);
    std::vector<double> c(lp.n_vars, 0.0);
    c[lp.index11] = 1.0;
    const LpResult solved = lp_minimize(lp.A, lp.b, c);
    Y11Estimate estimate;
    if (solved.status == LpResult::Status::infeasible) {
        estimate.feasible = false;
        estimate.y11_lower = 0.0;
        estimate.diagnostic = "gain bounds mutually inconsistent; zero bound returned";
        return estimate;
    }
    if (solved.status == LpResult::Status::unbounded) {
        estimate.feasible = false;
        estimate.y11_lower = 0.0;
        estimate.diagnostic = "unexpected unbounded feasibility search";
        return estimate;
    }
    estimate.y11_lower = std::clamp(solved.objective, 0.0, 1.0);
    return estimate;
}

E11Estimate estimate_e11(const CellBoundTable& x_error_gain_bounds,
                         const ProtocolParams& params, double y11_lower) {
    const auto [nu, mu] = decoy_intensities(params);
    (void)mu;
    E11Estimate estimate;
    if (y11_lower <= 0.0) {
        estimate.e11_upper = 0.5;
        estimate.diagnostic = "no single-photon yield bound; degenerate 0.5 returned";
        return estimate;
    }
    const int v = label_index(IntensityLabel::vacuum);
    const int d = label_index(IntensityLabel::decoy);
    const double e_nu = std::exp(nu);
    // upper bound the (n,m >= 1) error mass of the decoy-decoy cell
    const double mass = e_nu * e_nu * x_error_gain_bounds[d][d].upper_rate -
                        e_nu * x_error_gain_bounds[v][d].lower_rate -
                        e_nu * x_error_gain_bounds[d][v].lower_rate +
                        x_error_gain_bounds[v][v].upper_rate;
    const double value = mass / (nu * nu * y11_lower);
    estimate.e11_upper = std::clamp(value, 0.0, 0.5);
    if (value >= 0.5)
        estimate.diagnostic = "error bound clamped at 0.5";
    return estimate;
}

E11Estimate estimate_e11_lp(const CellBoundTable& x_error_gain_bounds,
                            const ProtocolParams& params, double y11_lower,
                            int max_photons) {
    decoy_intensities(params);
    E11Estimate estimate;
    if (y11_lower <= 0.0) {
        estimate.e11_upper = 0.5;
        estimate.diagnostic = "no single-photon yield bound; degenerate 0.5 returned";
        return estimate;
    }
    TruncatedLp lp = build_truncated_lp(x_error_gain_bounds, params, max_photons);
    std::vector<double> c(lp.n_vars, 0.0);
    c[lp.index11] = -1.0;  // maximize the (1,1) error gain
    const LpResult solved = lp_minimize(lp.A, lp.b, c);
    if (solved.status != LpResult::Status::optimal) {
        estimate.e11_upper = 0.5;
        estimate.diagnostic = "error-gain bounds inconsistent; degenerate 0.5 returned";
        return estimate;
    }
    estimate.e11_upper = std::clamp(-solved.objective / y11_lower, 0.0, 0.5);
    return estimate;
}

double single_photon_gain(double mean_a, double mean_b, double y11_lower) {
    return poisson_photon_prob(mean_a, 1) * poisson_photon_prob(mean_b, 1) * y11_lower;
}

KeyRateResult secure_key_rate(const SessionStatistics& stats, const ProtocolParams& params) {
    params.validate();
    stats.validate();

    KeyRateResult result;
    result.epsilon_total = params.failure_probability;

    // epsilon budget: nine Z gains + four X error gains
    constexpr int kBoundedQuantities = 13;
    const double epsilon_share = params.failure_probability / kBoundedQuantities;

    DecoyEstimate& decoy = result.estimate;

    for (IntensityLabel a : kIntensityLabels) {
        for (IntensityLabel b : kIntensityLabels) {
            const CellCounts& cell = stats.cell(a, b, Basis::Z);
            auto& slot = decoy.z_gain_bounds[label_index(a)][label_index(b)];
            if (cell.sent == 0) {
                slot = vacuous_bound(epsilon_share);
                result.diagnostics.push_back(std::string("no Z data for cell (") +
                                             to_string(a) + "," + to_string(b) + ")");
            } else {
                slot = fluctuation_interval(cell.coincidences, cell.sent, epsilon_share);
            }
        }
    }
    // X-basis error gains, needed only for the vacuum/decoy block
    for (IntensityLabel a : {IntensityLabel::vacuum, IntensityLabel::decoy}) {
        for (IntensityLabel b : {IntensityLabel::vacuum, IntensityLabel::decoy}) {
            const CellCounts& cell = stats.cell(a, b, Basis::X);
            auto& slot = decoy.x_error_gain_bounds[label_index(a)][label_index(b)];
            if (cell.sent == 0) {
                slot = vacuous_bound(epsilon_share);
                result.diagnostics.push_back(std::string("no X data for cell (") +
                                             to_string(a) + "," + to_string(b) + ")");
            } else {
                slot = fluctuation_interval(cell.errors, cell.sent, epsilon_share);
            }
        }
    }

    Y11Estimate y11 = estimate_y11(decoy.z_gain_bounds, params);
    if (!y11.feasible) {
        // the feasibility search distinguishes "merely zero" from inconsistent
        Y11Estimate checked = estimate_y11_lp(decoy.z_gain_bounds, params);
        if (!checked.feasible && !checked.diagnostic.empty())
            y11.diagnostic = checked.diagnostic;
        else
            y11.y11_lower = std::max(y11.y11_lower, checked.y11_lower);
    }
    decoy.y11_lower = y11.y11_lower;
    decoy.feasible = y11.feasible;
    if (!y11.diagnostic.empty()) decoy.diagnostics.push_back(y11.diagnostic);

    E11Estimate e11 = estimate_e11(decoy.x_error_gain_bounds, params, decoy.y11_lower);
    decoy.e11_upper = e11.e11_upper;
    if (!e11.diagnostic.empty()) decoy.diagnostics.push_back(e11.diagnostic);

    const double f = params.error_correction_efficiency;
    const double correction_entropy = 1.0 - binary_entropy(decoy.e11_upper);
    double rate = 0.0;
    for (IntensityLabel a : kIntensityLabels) {
        for (IntensityLabel b : kIntensityLabels) {
            const CellCounts& cell = stats.cell(a, b, Basis::Z);
            ZCellEcho& echo = result.z_cells[label_index(a) * 3 + label_index(b)];
            echo.sent = cell.sent;
            echo.coincidences = cell.coincidences;
            echo.errors = cell.errors;
            echo.weight = params.cell_probability(a, b, Basis::Z);
            echo.gain = cell.sent ? double(cell.coincidences) / double(cell.sent) : 0.0;
            echo.error_rate =
                cell.coincidences ? double(cell.errors) / double(cell.coincidences) : 0.0;
            const double q11 =
                single_photon_gain(params.mean(a), params.mean(b), decoy.y11_lower);
            const double cell_rate =
                q11 * correction_entropy - echo.gain * f * binary_entropy(echo.error_rate);
            rate += echo.weight * cell_rate;
        }
    }

    result.rate_per_pulse_raw = rate;
    result.rate_per_pulse = std::max(0.0, rate);
    result.rate_bps = rate_to_bps(result.rate_per_pulse, params.clock_rate_hz, 1.0);
    if (result.rate_per_pulse == 0.0 && result.diagnostics.empty() &&
        decoy.diagnostics.empty())
        result.diagnostics.push_back("rate clamped at zero");
    return result;
}

double rate_to_bps(double rate_per_pulse, double clock_rate_hz, double duty) {
    if (clock_rate_hz <= 0.0) throw DomainError("rate_to_bps: clock rate must be > 0");
    if (duty <= 0.0 || duty > 1.0) throw DomainError("rate_to_bps: duty must lie in (0,1]");
    if (rate_per_pulse < 0.0) throw DomainError("rate_to_bps: rate must be >= 0");
    return rate_per_pulse * clock_rate_hz * duty;
}

}  // namespace mdinet
