#pragma once

#include <vector>

namespace mdinet {

/// Dense two-phase simplex for small problems:
///   minimize c.x  subject to  A x <= b,  x >= 0
/// Bland's rule, so it terminates on degenerate problems.
struct LpResult {
    enum class Status { optimal, infeasible, unbounded };
    Status status = Status::infeasible;
    double objective = 0.0;
    std::vector<double> x;
};

LpResult lp_minimize(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                     const std::vector<double>& c);

}  // namespace mdinet
