#pragma once

// Dense two-phase primal simplex for small LPs:
//
//   maximize c'x  subject to  A x <= b,  x >= 0.
//
// Pivoting uses Bland's rule (lowest-index entering variable, min-ratio
// leaving with lowest-index ties), which guarantees termination on
// degenerate problems. Callers should normalise constraint rows to O(1)
// magnitudes; the decoy module does this before building its tableaux.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tfqkd {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
};

class SimplexSolver {
  public:
    SimplexSolver(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double> c)
        : m_(b.size()), n_(c.size()), basis_(m_), nonbasis_(n_ + 1),
          tab_(m_ + 2, std::vector<double>(n_ + 2, 0.0)) {
        if (a.size() != m_)
            throw std::invalid_argument("SimplexSolver: A/b size mismatch");
        for (std::size_t i = 0; i < m_; ++i) {
            if (a[i].size() != n_)
                throw std::invalid_argument("SimplexSolver: A/c size mismatch");
            for (std::size_t j = 0; j < n_; ++j) tab_[i][j] = a[i][j];
            basis_[i] = static_cast<int>(n_ + i);
            tab_[i][n_] = -1.0;          // artificial column for phase 1
            tab_[i][n_ + 1] = b[i];
        }
        for (std::size_t j = 0; j < n_; ++j) {
            nonbasis_[j] = static_cast<int>(j);
            tab_[m_][j] = -c[j];
        }
        nonbasis_[n_] = -1;
        tab_[m_ + 1][n_] = 1.0;
    }

    LpResult solve() {
        LpResult res;
        // Phase 1: drive the most-negative slack out via the artificial column.
        std::size_t r = 0;
        for (std::size_t i = 1; i < m_; ++i)
            if (tab_[i][n_ + 1] < tab_[r][n_ + 1]) r = i;
        if (m_ > 0 && tab_[r][n_ + 1] < -kEps) {
            pivot(r, n_);
            if (!iterate(m_ + 1) || tab_[m_ + 1][n_ + 1] < -kEps) {
                res.status = iterations_exhausted_ ? LpStatus::IterationLimit
                                                   : LpStatus::Infeasible;
                return res;
            }
            for (std::size_t i = 0; i < m_; ++i) {
                if (basis_[i] != -1) continue;
                // Artificial variable stuck in the basis at zero level: pivot
                // it out on any eligible column.
                std::size_t s = 0;
                for (std::size_t j = 1; j <= n_; ++j)
                    if (std::abs(tab_[i][j]) > std::abs(tab_[i][s])) s = j;
                if (std::abs(tab_[i][s]) > kEps) pivot(i, s);
            }
        }
        // Phase 2.
        const bool bounded = iterate(m_);
        if (!bounded) {
            res.status = iterations_exhausted_ ? LpStatus::IterationLimit
                                               : LpStatus::Unbounded;
            return res;
        }
        res.status = LpStatus::Optimal;
        res.objective = tab_[m_][n_ + 1];
        res.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] >= 0 && basis_[i] < static_cast<int>(n_))
                res.x[basis_[i]] = tab_[i][n_ + 1];
        return res;
    }

  private:
    static constexpr double kEps = 1e-10;
    static constexpr std::size_t kMaxPivots = 500000;

    void pivot(std::size_t r, std::size_t s) {
        double* prow = tab_[r].data();
        const double inv = 1.0 / prow[s];
        for (std::size_t i = 0; i < m_ + 2; ++i) {
            if (i == r || std::abs(tab_[i][s]) < kEps * 1e-3) continue;
            double* row = tab_[i].data();
            const double f = row[s] * inv;
            for (std::size_t j = 0; j < n_ + 2; ++j) row[j] -= prow[j] * f;
            row[s] = prow[s] * f;
        }
        for (std::size_t j = 0; j < n_ + 2; ++j)
            if (j != s) prow[j] *= inv;
        for (std::size_t i = 0; i < m_ + 2; ++i)
            if (i != r) tab_[i][s] *= -inv;
        prow[s] = inv;
        std::swap(basis_[r], nonbasis_[s]);
    }

    // Runs simplex iterations on objective row `obj`. Returns false when the
    // problem is unbounded in that objective (or the pivot cap was hit).
    bool iterate(std::size_t obj) {
        const bool phase1 = obj == m_ + 1;
        for (;;) {
            // Bland: entering variable = lowest label with negative reduced cost.
            int s = -1;
            for (std::size_t j = 0; j <= n_; ++j) {
                if (!phase1 && nonbasis_[j] == -1) continue;
                if (tab_[obj][j] < -kEps &&
                    (s == -1 || nonbasis_[j] < nonbasis_[s]))
                    s = static_cast<int>(j);
            }
            if (s == -1) return true;
            // Min-ratio leaving row; ties resolved by lowest basis label.
            int r = -1;
            double best = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (tab_[i][s] <= kEps) continue;
                const double ratio = tab_[i][n_ + 1] / tab_[i][s];
                if (r == -1 || ratio < best - kEps ||
                    (ratio < best + kEps && basis_[i] < basis_[r])) {
                    r = static_cast<int>(i);
                    best = ratio;
                }
            }
            if (r == -1) return false;
            pivot(static_cast<std::size_t>(r), static_cast<std::size_t>(s));
            if (++pivots_ > kMaxPivots) {
                iterations_exhausted_ = true;
                return false;
            }
        }
    }

    std::size_t m_, n_;
    std::vector<int> basis_;
    std::vector<int> nonbasis_;
    std::vector<std::vector<double>> tab_;
    std::size_t pivots_ = 0;
    bool iterations_exhausted_ = false;
};

inline LpResult lp_maximize(std::vector<std::vector<double>> a, std::vector<double> b,
                            std::vector<double> c) {
    return SimplexSolver(std::move(a), std::move(b), std::move(c)).solve();
}

}  // namespace tfqkd
