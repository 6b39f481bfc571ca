#include "mdinet/lp.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace mdinet {

namespace {

constexpr double kEps = 1e-9;

// Tableau with one row per constraint plus an objective row. Artificial
// variables give the initial basis; phase 1 drives their sum to zero.
class Simplex {
public:
    Simplex(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
            const std::vector<double>& c)
        : m_(A.size()), n_(c.size()) {
        cols_ = n_ + m_ + m_;  // structural + slack + artificial
        rows_.assign(m_, std::vector<double>(cols_ + 1, 0.0));
        basis_.assign(m_, 0);
        for (std::size_t i = 0; i < m_; ++i) {
            const double sign = b[i] < 0.0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < n_; ++j) rows_[i][j] = sign * A[i][j];
            rows_[i][n_ + i] = sign * 1.0;        // slack
            rows_[i][n_ + m_ + i] = 1.0;          // artificial
            rows_[i][cols_] = sign * b[i];
            basis_[i] = n_ + m_ + i;
        }
        cost_ = c;
    }

    LpResult solve() {
        // phase 1: minimize the sum of artificials
        std::vector<double> phase1(cols_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) phase1[n_ + m_ + i] = 1.0;
        double art_total = run(phase1, true);
        LpResult result;
        if (art_total > 1e-7) {
            result.status = LpResult::Status::infeasible;
            return result;
        }
        // pivot any artificial still sitting in the basis out at zero level
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_ + m_) continue;
            std::size_t enter = cols_;
            for (std::size_t j = 0; j < n_ + m_; ++j) {
                if (std::abs(rows_[i][j]) > kEps) {
                    enter = j;
                    break;
                }
            }
            if (enter == cols_) continue;  // redundant row
            pivot(i, enter);
        }
        // phase 2: artificials are barred from entering
        std::vector<double> phase2(cols_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) phase2[j] = cost_[j];
        double objective = run(phase2, false);
        if (unbounded_) {
            result.status = LpResult::Status::unbounded;
            return result;
        }
        result.status = LpResult::Status::optimal;
        result.objective = objective;
        result.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_) result.x[basis_[i]] = rows_[i][cols_];
        return result;
    }

private:
    void pivot(std::size_t row, std::size_t col) {
        const double p = rows_[row][col];
        for (std::size_t j = 0; j <= cols_; ++j) rows_[row][j] /= p;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == row) continue;
            const double factor = rows_[i][col];
            if (factor == 0.0) continue;
            for (std::size_t j = 0; j <= cols_; ++j) rows_[i][j] -= factor * rows_[row][j];
        }
        basis_[row] = col;
    }

    // Minimizes obj over the current feasible basis; returns the objective.
    double run(const std::vector<double>& obj, bool allow_artificials) {
        unbounded_ = false;
        const std::size_t limit_col = allow_artificials ? cols_ : n_ + m_;
        for (std::size_t iter = 0; iter < 100000; ++iter) {
            // reduced costs: r_j = obj_j - sum_i obj_basis[i] * rows[i][j]
            std::vector<double> y(m_);
            for (std::size_t i = 0; i < m_; ++i) y[i] = obj[basis_[i]];
            std::size_t enter = limit_col;
            for (std::size_t j = 0; j < limit_col; ++j) {
                double r = obj[j];
                for (std::size_t i = 0; i < m_; ++i)
                    if (y[i] != 0.0) r -= y[i] * rows_[i][j];
                if (r < -kEps) {
                    enter = j;  // Bland: first improving column
                    break;
                }
            }
            if (enter == limit_col) break;  // optimal
            std::size_t leave = m_;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                if (rows_[i][enter] > kEps) {
                    const double ratio = rows_[i][cols_] / rows_[i][enter];
                    if (ratio < best_ratio - kEps ||
                        (ratio < best_ratio + kEps &&
                         (leave == m_ || basis_[i] < basis_[leave]))) {
                        best_ratio = ratio;
                        leave = i;
                    }
                }
            }
            if (leave == m_) {
                unbounded_ = true;
                return 0.0;
            }
            pivot(leave, enter);
        }
        double value = 0.0;
        for (std::size_t i = 0; i < m_; ++i) value += obj[basis_[i]] * rows_[i][cols_];
        return value;
    }

    std::size_t m_, n_, cols_ = 0;
    std::vector<std::vector<double>> rows_;
    std::vector<std::size_t> basis_;
    std::vector<double> cost_;
    bool unbounded_ = false;
};

}  // namespace

LpResult lp_minimize(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                     const std::vector<double>& c) {
    if (A.size() != b.size()) throw std::invalid_argument("lp: A rows must match b");
    for (const auto& row : A)
        if (row.size() != c.size()) throw std::invalid_argument("lp: A cols must match c");
    if (A.empty()) {
        // unconstrained over x >= 0
        LpResult r;
        for (double cj : c)
            if (cj < 0.0) {
                r.status = LpResult::Status::unbounded;
                return r;
            }
        r.status = LpResult::Status::optimal;
        r.objective = 0.0;
        r.x.assign(c.size(), 0.0);
        return r;
    }
    Simplex simplex(A, b, c);
    return simplex.solve();
}

}  // namespace mdinet
