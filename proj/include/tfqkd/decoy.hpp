#pragma once

// Decoy-state parameter estimation: closed-form yield/error bounds for the
// three-intensity protocols, and the constrained yield-matrix maximisation
// used by the Curty-style phase-error rate.

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tfqkd/core.hpp"
#include "tfqkd/simplex.hpp"

namespace tfqkd {

class decoy_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class estimation_failure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct DecoyInputs {
    // total mean photon numbers (mu_a + mu_b)
    double u = 0.4;
    double v = 0.16;
    double w = 1e-5;
    double q_u = 0.0, q_v = 0.0, q_w = 0.0;
    double e_u = 0.0, e_v = 0.0, e_w = 0.5;

    void validate() const {
        if (!(v > w && w >= 0.0))
            throw decoy_error("DecoyInputs: need v > w >= 0");
        if (u == v) throw decoy_error("DecoyInputs: u == v is degenerate");
        for (double q : {q_u, q_v, q_w})
            if (q < 0.0 || q > 1.0) throw decoy_error("DecoyInputs: gain outside [0,1]");
        for (double e : {e_u, e_v, e_w})
            if (e < 0.0 || e > 1.0) throw decoy_error("DecoyInputs: QBER outside [0,1]");
    }
};

struct BoundedValue {
    double value = 0.0;
    bool clamped = false;
};

inline BoundedValue clamp_unit(double x) {
    if (x < 0.0) return {0.0, true};
    if (x > 1.0) return {1.0, true};
    return {x, false};
}

/// Lower bound on the 0-photon yield, y0 = (v Qw e^w - w Qv e^v)/(v - w).
inline BoundedValue y0_lower(const DecoyInputs& d) {
    d.validate();
    if (d.v == d.w) throw decoy_error("y0_lower: v == w");
    const double raw =
        (d.v * d.q_w * std::exp(d.w) - d.w * d.q_v * std::exp(d.v)) / (d.v - d.w);
    return clamp_unit(raw);
}

/// Lower bound on the 1-photon yield.
inline BoundedValue y1_lower(const DecoyInputs& d) {
    d.validate();
    const double den = d.u * (d.u * d.v - d.u * d.w - d.v * d.v + d.w * d.w);
    if (den == 0.0) throw decoy_error("y1_lower: degenerate intensity triple");
    const double y0 = y0_lower(d).value;
    const double num = d.u * d.u * d.q_v * std::exp(d.v) -
                       d.u * d.u * d.q_w * std::exp(d.w) -
                       (d.v * d.v - d.w * d.w) * (d.q_u * std::exp(d.u) - y0);
    return clamp_unit(num / den);
}

/// Upper bound on the 1-photon error rate, clamped to [0, 1/2].
inline BoundedValue e1_upper(const DecoyInputs& d, double y1) {
    d.validate();
    if (d.v == d.w) throw decoy_error("e1_upper: v == w");
    if (y1 <= 0.0)
        throw estimation_failure("e1_upper: y1 lower bound is zero; rate must be zero");
    const double num =
        d.e_v * d.q_v * std::exp(d.v) - d.e_w * d.q_w * std::exp(d.w);
    const double raw = num / ((d.v - d.w) * y1);
    if (raw < 0.0) return {0.0, true};
    if (raw > 0.5) return {0.5, true};
    return {raw, false};
}

// --- yield-matrix upper bounds (Curty) ----------------------------------------

struct YieldMatrixBounds {
    int y_cut = 5;
    int n_cut = 20;
    // upper bounds for m + n < y_cut, row-major on (m, n)
    std::map<std::pair<int, int>, double> upper;
    bool any_clamped = false;

    double g(int m, int n) const {
        if (m + n >= y_cut) return 1.0;
        auto it = upper.find({m, n});
        if (it == upper.end())
            throw std::out_of_range("YieldMatrixBounds: missing entry");
        return it->second;
    }
};

using GainTable = std::map<std::pair<IntensityLabel, IntensityLabel>, double>;

namespace detail {

inline std::vector<double> poisson_row(double mu, int n_cut) {
    std::vector<double> p(n_cut + 1);
    double term = std::exp(-mu);
    for (int n = 0; n <= n_cut; ++n) {
        p[n] = term;
        term *= mu / (n + 1);
    }
    return p;
}

inline constexpr double kCoeffClip = 1e-30;

}  // namespace detail

/// Maximises each yield Y_mn with m+n < y_cut over the polytope
///   { 0 <= Y <= 1,  Q(1-slack) - tail <= sum P(j;muA) P(k;muB) Y_jk <= Q(1+slack) }
/// with one pair of constraints per directed intensity combination. `slack`
/// widens the windows to absorb measurement inconsistency between the six
/// gain combinations; with slack 0 the constraints are the pure
/// truncation-relaxed equalities.
inline YieldMatrixBounds yield_matrix_upper_bounds(const GainTable& gains,
                                                   const IntensityTriple& levels,
                                                   int n_cut, int y_cut,
                                                   double slack = 0.0) {
    using L = IntensityLabel;
    levels.validate();
    if (y_cut >= n_cut) throw decoy_error("yield_matrix_upper_bounds: y_cut must be < n_cut");
    for (auto a : {L::u, L::v, L::w})
        for (auto b : {L::u, L::v, L::w}) {
            const bool present = gains.count({a, b}) || gains.count({b, a});
            if (!present)
                throw decoy_error("yield_matrix_upper_bounds: missing gain combination");
        }

    std::map<L, std::vector<double>> pois;
    for (auto l : {L::u, L::v, L::w})
        pois[l] = detail::poisson_row(levels.per_user(l), n_cut);

    const int width = n_cut + 1;
    const int nvars_full = width * width;

    // Directed constraint rows (before variable pruning).
    struct Row {
        std::vector<double> coef;
        double q;
        double tail;
        std::string name;
    };
    std::vector<Row> rows;
    auto add_directed = [&](L a, L b, double q) {
        Row r;
        r.coef.assign(nvars_full, 0.0);
        double kept = 0.0;
        for (int j = 0; j < width; ++j)
            for (int k = 0; k < width; ++k) {
                const double c = pois[a][j] * pois[b][k];
                if (c >= detail::kCoeffClip) {
                    r.coef[j * width + k] = c;
                    kept += c;
                }
            }
        r.tail = std::max(0.0, 1.0 - kept);
        r.q = q;
        r.name = std::string(1, to_char(a)) + to_char(b);
        rows.push_back(std::move(r));
    };
    for (const auto& [key, q] : gains) {
        if (q < 0.0 || q > 1.0) throw decoy_error("yield_matrix_upper_bounds: gain outside [0,1]");
        add_directed(key.first, key.second, q);
        if (key.first != key.second) add_directed(key.second, key.first, q);
    }

    // Prune variables whose coefficient is negligible in every constraint;
    // they cannot influence the optimum of any bounded objective.
    std::vector<int> alive;
    std::vector<int> var_of_full(nvars_full, -1);
    for (int f = 0; f < nvars_full; ++f) {
        for (const Row& r : rows)
            if (r.coef[f] > 0.0) {
                var_of_full[f] = static_cast<int>(alive.size());
                alive.push_back(f);
                break;
            }
    }

    const std::size_t nv = alive.size();
    std::vector<std::vector<double>> a_mat;
    std::vector<double> b_vec;
    for (const Row& r : rows) {
        std::vector<double> upper_row(nv), lower_row(nv);
        double scale = 0.0;
        for (std::size_t i = 0; i < nv; ++i) scale = std::max(scale, r.coef[alive[i]]);
        if (scale <= 0.0) continue;
        for (std::size_t i = 0; i < nv; ++i) {
            upper_row[i] = r.coef[alive[i]] / scale;
            lower_row[i] = -upper_row[i];
        }
        a_mat.push_back(std::move(upper_row));
        b_vec.push_back(r.q * (1.0 + slack) / scale);
        a_mat.push_back(std::move(lower_row));
        b_vec.push_back(-std::max(0.0, r.q * (1.0 - slack) - r.tail) / scale);
    }
    // Unit upper bounds on the surviving variables.
    for (std::size_t i = 0; i < nv; ++i) {
        std::vector<double> row(nv, 0.0);
        row[i] = 1.0;
        a_mat.push_back(std::move(row));
        b_vec.push_back(1.0);
    }

    YieldMatrixBounds out;
    out.y_cut = y_cut;
    out.n_cut = n_cut;
    for (int m = 0; m < y_cut; ++m) {
        for (int n = 0; n + m < y_cut; ++n) {
            std::vector<double> c(nv, 0.0);
            const int var = var_of_full[m * width + n];
            if (var < 0) {
                // Yield unconstrained by any measurement: only the unit box binds.
                out.upper[{m, n}] = 1.0;
                out.any_clamped = true;
                continue;
            }
            c[var] = 1.0;
            LpResult res = lp_maximize(a_mat, b_vec, c);
            if (res.status == LpStatus::Infeasible) {
                // Report how wide the window must be for the gains to become
                // mutually consistent; saves the caller a guessing game.
                auto feasible_at = [&](double sl) {
                    std::vector<std::vector<double>> am = a_mat;
                    std::vector<double> bm = b_vec;
                    std::size_t r = 0;
                    for (const Row& row : rows) {
                        double scale = 0.0;
                        for (std::size_t i = 0; i < nv; ++i)
                            scale = std::max(scale, row.coef[alive[i]]);
                        if (scale <= 0.0) continue;
                        bm[r++] = row.q * (1.0 + sl) / scale;
                        bm[r++] = -std::max(0.0, row.q * (1.0 - sl) - row.tail) / scale;
                    }
                    return lp_maximize(am, bm, std::vector<double>(nv, 0.0)).status ==
                           LpStatus::Optimal;
                };
                double lo = slack, hi = 1.0;
                for (int it = 0; it < 25 && hi - lo > 1e-4; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (feasible_at(mid) ? hi : lo) = mid;
                }
                std::ostringstream msg;
                msg << "yield LP infeasible: measured gain combinations are mutually "
                       "inconsistent at lp_slack=" << slack
                    << "; smallest feasible relative window is about " << hi;
                throw estimation_failure(msg.str());
            }
            if (res.status != LpStatus::Optimal)
                throw estimation_failure("yield LP did not reach an optimum");
            BoundedValue y = clamp_unit(res.objective);
            out.any_clamped |= y.clamped;
            out.upper[{m, n}] = y.value;
        }
    }
    return out;
}

/// Curty-style single-photon phase error rate. `mu_user` is the signal
/// intensity prepared by each user in the encoding basis (the Z states are
/// |+-sqrt(mu_user)>), and the coefficient c_k vanishes unless k has the
/// parity selected by j.
struct PhaseErrorResult {
    double value = 0.0;
    bool clamped = false;
};

inline PhaseErrorResult phase_error_curty(const YieldMatrixBounds& bounds, double mu_user,
                                          double q_z, int y_cut, int n_cut) {
    if (q_z <= 0.0)
        throw estimation_failure("phase_error_curty: q_z must be > 0");
    if (mu_user < 0.0) throw decoy_error("phase_error_curty: negative intensity");

    std::vector<double> coeff(n_cut + 1);
    double fact = 1.0;
    for (int k = 0; k <= n_cut; ++k) {
        if (k > 0) fact *= k;
        coeff[k] = std::exp(-mu_user / 2.0) * std::pow(mu_user, k / 2.0) / std::sqrt(fact);
    }

    double total = 0.0;
    for (int parity = 0; parity <= 1; ++parity) {
        double s = 0.0;
        for (int m = parity; m <= n_cut; m += 2)
            for (int n = parity; n <= n_cut; n += 2) {
                const double g = (m + n < y_cut) ? bounds.g(m, n) : 1.0;
                s += coeff[m] * coeff[n] * std::sqrt(g);
            }
        total += s * s;
    }
    const double raw = total / q_z;
    if (raw > 0.5) return {0.5, true};
    return {raw, false};
}

}  // namespace tfqkd
