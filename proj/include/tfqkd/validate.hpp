#pragma once

// Acceptance checks against the bundled reference tables. Each criterion
// returns one pass/fail line; `tfqkd validate` and the acceptance test binary
// both run this engine.

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "tfqkd/core.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/io.hpp"
#include "tfqkd/keyrates.hpp"
#include "tfqkd/linkmodel.hpp"
#include "tfqkd/reference.hpp"
#include "tfqkd/simulator.hpp"

namespace tfqkd::validate {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

inline double rel_err(double ours, double published) {
    return (ours - published) / published;
}

inline std::string pct(double x) {
    std::ostringstream os;
    os.precision(3);
    os << 100.0 * x << "%";
    return os.str();
}

inline MeasurementTallies tallies_from_row(const io::DataTableRow& row) {
    using L = IntensityLabel;
    MeasurementTallies t;
    t.set_gain({L::u, L::u, Basis::X}, row.q_uu);
    t.set_gain({L::v, L::v, Basis::X}, row.q_vv);
    t.set_qber({L::u, L::u, Basis::X}, row.e_u);
    t.set_qber({L::v, L::v, Basis::X}, row.e_v);
    t.set_single_arm_gain(User::Alice, L::u, row.q_ua);
    t.set_single_arm_gain(User::Bob, L::u, row.q_ub);
    t.set_single_arm_gain(User::Alice, L::v, row.q_va);
    t.set_single_arm_gain(User::Bob, L::v, row.q_vb);
    t.set_vacuum_gain(row.q0);
    return t;
}

inline DecoyInputs decoy_from_row(const io::DataTableRow& row) {
    const IntensityTriple per_user = reference::main_intensities();
    DecoyInputs d;
    d.u = per_user.total(IntensityLabel::u);
    d.v = per_user.total(IntensityLabel::v);
    d.w = per_user.total(IntensityLabel::w);
    d.q_u = row.q_uu;
    d.q_v = row.q_vv;
    d.q_w = row.q0;
    d.e_u = row.e_u;
    d.e_v = row.e_v;
    d.e_w = 0.5;
    return d;
}

inline RateParams main_rate_params() {
    RateParams p;
    p.f_ec = reference::kFecFactor;
    p.m_slices = reference::kPhaseSlices;
    p.e_m = slice_misalignment(reference::kPhaseSlices);
    p.epsilon = reference::kSnsEpsilon;
    p.clock_rate_hz = reference::kClockHz;
    return p;
}

/// Analytic send-not-send rate at one loss point from the link model.
inline KeyRateReport sns_model_rate(double loss_db) {
    using L = IntensityLabel;
    const DetectorParams det = reference::detector();
    const FeedbackParams fb = reference::feedback();
    const ChannelParams ch = reference::channel(loss_db);
    const IntensityTriple per_user = reference::main_intensities();

    MeasurementTallies t;
    t.set_gain({L::u, L::u, Basis::X},
               expected_gain(per_user.u, per_user.u, ch, det, GainMode::Double));
    t.set_gain({L::v, L::v, Basis::X},
               expected_gain(per_user.v, per_user.v, ch, det, GainMode::Double));
    t.set_qber({L::u, L::u, Basis::X},
               expected_qber(per_user.total(L::u), ch, det, fb).total);
    t.set_qber({L::v, L::v, Basis::X},
               expected_qber(per_user.total(L::v), ch, det, fb).total);
    ChannelParams arm = ch;
    arm.total_loss_db = loss_db / 2.0;
    const double q_single =
        expected_gain(per_user.u, 0.0, arm, det, GainMode::SingleArmA);
    t.set_single_arm_gain(User::Alice, L::u, q_single);
    t.set_single_arm_gain(User::Bob, L::u, q_single);
    t.set_vacuum_gain(expected_gain(per_user.w, per_user.w, ch, det, GainMode::Double));
    return skr_send_not_send(t, per_user, main_rate_params(), loss_db);
}

struct SlopeFit {
    double slope = 0.0;
};

inline SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log10(x[i]), ly = std::log10(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    SlopeFit f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return f;
}

}  // namespace detail

// --- criterion 1: Table I key-rate reproduction ---------------------------------------

inline CriterionResult criterion_table1_rates(const std::vector<io::DataTableRow>& rows) {
    CriterionResult r{1, "table-1 key-rate reproduction (+-2%)", true, "", 0.0};
    std::ostringstream detail;
    const RateParams p = detail::main_rate_params();
    int checked = 0, passed = 0;
    for (const auto& row : rows) {
        const double loss = row.arm_sum_db();
        const KeyRateReport orig =
            skr_original(detail::decoy_from_row(row), p, loss, true);
        if (row.published_skr_original_bps) {
            ++checked;
            const double e =
                detail::rel_err(orig.skr_bits_per_second, *row.published_skr_original_bps);
            if (std::abs(e) <= 0.02) ++passed;
            else
                detail << " orig@" << row.total_loss_db << "dB " << detail::pct(e) << ";";
        }
        const KeyRateReport sns = skr_send_not_send(detail::tallies_from_row(row),
                                                    reference::main_intensities(), p, loss);
        if (row.published_skr_sns_bps) {
            ++checked;
            const double e =
                detail::rel_err(sns.skr_bits_per_second, *row.published_skr_sns_bps);
            if (std::abs(e) <= 0.02) ++passed;
            else
                detail << " sns@" << row.total_loss_db << "dB " << detail::pct(e) << ";";
        } else {
            // the "-" entry: the rate must clamp to zero and carry the flag
            ++checked;
            if (sns.skr_bits_per_second == 0.0 && sns.rate_clamped_to_zero) ++passed;
            else
                detail << " sns@" << row.total_loss_db << "dB not clamped-zero;";
        }
    }
    r.pass = passed == checked;
    std::ostringstream head;
    head << passed << "/" << checked << " entries within tolerance;" << detail.str();
    r.detail = head.str();
    return r;
}

// --- criterion 2: Curty reproduction ---------------------------------------------------

inline CriterionResult criterion_curty(const io::CurtyTable& table) {
    CriterionResult r{2, "curty LP rate: data 270.7 and model 271.3 bit/s (+-3%)", true, "", 0.0};
    const ProtocolConfig pc = reference::protocol(Variant::Curty);
    const RateParams p = detail::main_rate_params();
    std::ostringstream detail;

    const YieldMatrixBounds data_bounds =
        yield_matrix_upper_bounds(table.randomised, pc.intensities, pc.n_cut, pc.y_cut,
                                  reference::kLpSlackMeasured);
    const PhaseErrorResult e1x_data = phase_error_curty(
        data_bounds, pc.intensities.u, table.q_z, pc.y_cut, pc.n_cut);
    const KeyRateReport data_rate =
        skr_curty(table.q_z, table.e_z, e1x_data, p, table.total_loss_db);
    const double target_data = table.published_skr_bps.value_or(270.7);
    const double err_data = detail::rel_err(data_rate.skr_bits_per_second, target_data);
    detail << "data " << data_rate.skr_bits_per_second << " bit/s ("
           << detail::pct(err_data) << ")";
    if (std::abs(err_data) > 0.03) r.pass = false;

    // Analytic-model pipeline at the same attenuation.
    const DetectorParams det = reference::detector();
    const ChannelParams ch = reference::channel(table.total_loss_db);
    const FeedbackParams fb = reference::feedback();
    using L = IntensityLabel;
    GainTable sim;
    for (auto a : {L::u, L::v, L::w})
        for (auto b : {L::u, L::v, L::w}) {
            if (sim.count({b, a})) continue;
            sim[{a, b}] = expected_gain(pc.intensities.per_user(a),
                                        pc.intensities.per_user(b), ch, det,
                                        GainMode::Double);
        }
    const YieldMatrixBounds sim_bounds = yield_matrix_upper_bounds(
        sim, pc.intensities, pc.n_cut, pc.y_cut, reference::kLpSlackModel);
    // Encoded-basis gain: equal-bit and opposite-bit fringes average.
    const double fa = pc.intensities.u * ch.arm_transmittance(User::Alice);
    const double fbx = pc.intensities.u * ch.arm_transmittance(User::Bob);
    const double pdc = det.dark_prob_per_gate();
    const double i0 = d1_intensity(fa, fbx, det.visibility, ch.charlie_efficiency, 0.0);
    const double ipi = d1_intensity(fa, fbx, det.visibility, ch.charlie_efficiency, kPi);
    const double qz_sim = 1.0 - (1.0 - pdc) * (std::exp(-i0) + std::exp(-ipi)) / 2.0;
    const double ez_sim =
        expected_qber(pc.intensities.total(L::u), ch, det, fb).total;
    const PhaseErrorResult e1x_sim =
        phase_error_curty(sim_bounds, pc.intensities.u, qz_sim, pc.y_cut, pc.n_cut);
    const KeyRateReport sim_rate =
        skr_curty(qz_sim, ez_sim, e1x_sim, p, table.total_loss_db);
    const double err_sim = detail::rel_err(sim_rate.skr_bits_per_second, 271.3);
    detail << "; model " << sim_rate.skr_bits_per_second << " bit/s ("
           << detail::pct(err_sim) << ")";
    if (std::abs(err_sim) > 0.03) r.pass = false;

    r.detail = detail.str();
    return r;
}

// --- criterion 3: SKC0 anchors -----------------------------------------------------------

inline CriterionResult criterion_skc0(const std::vector<io::DataTableRow>& rows,
                                      const io::CurtyTable& curty) {
    CriterionResult r{3, "SKC0 anchors and supremacy ratios", true, "", 0.0};
    std::ostringstream detail;

    const double skc0_71 = skc0_ideal(71.1, reference::kClockHz);
    const double e71 = detail::rel_err(skc0_71, 112.0);
    if (std::abs(e71) > 0.01) {
        r.pass = false;
        detail << " skc0(71.1)=" << skc0_71 << " (" << detail::pct(e71) << ");";
    }

    // Printed-column comparison: 2% or the printed resolution, whichever is
    // wider (the smallest entries are printed with one significant digit).
    for (const auto& row : rows) {
        if (!row.published_skc0_bps) continue;
        const double ours = skc0_ideal(row.arm_sum_db(), reference::kClockHz);
        const double pub = *row.published_skc0_bps;
        const double half_quantum = 0.5;  // column resolution: 0.001 x 10^3 bit/s
        if (std::abs(ours - pub) > std::max(0.02 * pub, half_quantum)) {
            r.pass = false;
            detail << " skc0@" << row.total_loss_db << "dB " << ours << " vs " << pub << ";";
        }
    }

    // Supremacy ratios at 71.1 dB: published SNS rate and the computed Curty
    // rate against the ideal bound.
    const auto* row71 = [&]() -> const io::DataTableRow* {
        for (const auto& row : rows)
            if (std::abs(row.total_loss_db - 71.1) < 0.05) return &row;
        return nullptr;
    }();
    if (row71 && row71->published_skr_sns_bps) {
        const double ratio = *row71->published_skr_sns_bps / skc0_71;
        if (std::abs(ratio / 1.90 - 1.0) > 0.03) {
            r.pass = false;
            detail << " sns ratio " << ratio << ";";
        }
    }
    const ProtocolConfig pc = reference::protocol(Variant::Curty);
    const YieldMatrixBounds bounds =
        yield_matrix_upper_bounds(curty.randomised, pc.intensities, pc.n_cut, pc.y_cut,
                                  reference::kLpSlackMeasured);
    const PhaseErrorResult e1x =
        phase_error_curty(bounds, pc.intensities.u, curty.q_z, pc.y_cut, pc.n_cut);
    const KeyRateReport curty_rate = skr_curty(curty.q_z, curty.e_z, e1x,
                                               detail::main_rate_params(), 71.1);
    const double curty_ratio = curty_rate.skr_bits_per_second / skc0_71;
    if (std::abs(curty_ratio / 2.42 - 1.0) > 0.03) {
        r.pass = false;
        detail << " curty ratio " << curty_ratio << ";";
    }
    if (r.pass) detail << "skc0(71.1)=" << skc0_71 << " bit/s, ratios ok";
    r.detail = detail.str();
    return r;
}

// --- criterion 4: gain scaling laws -------------------------------------------------------

inline CriterionResult criterion_scaling(std::uint64_t mc_gates = 10'000'000,
                                         std::uint64_t seed = 20190321) {
    CriterionResult r{4, "gain scaling: double 0.5, single 1.0 (analytic +-0.005, MC +-0.03)",
                      true, "", 0.0};
    DetectorParams det = reference::detector();
    det.dark_count_rate_hz = 0.0;  // dark counts disabled for the scaling law
    const IntensityTriple per_user = reference::main_intensities();

    std::vector<double> losses = {20, 30, 40, 50, 60};
    std::vector<double> eta, g_double, g_single;
    for (double L : losses) {
        eta.push_back(db_to_transmittance(L));
        g_double.push_back(expected_gain(per_user.u, per_user.u, reference::channel(L),
                                         det, GainMode::Double));
        // matched total flux on the direct link
        g_single.push_back(expected_gain(2.0 * per_user.u, 0.0, reference::channel(L),
                                         det, GainMode::SingleArmA));
    }
    const double s_double = detail::fit_loglog(eta, g_double).slope;
    const double s_single = detail::fit_loglog(eta, g_single).slope;

    std::ostringstream detail;
    detail << "analytic slopes " << s_double << "/" << s_single;
    if (std::abs(s_double - 0.5) > 0.005 || std::abs(s_single - 1.0) > 0.005)
        r.pass = false;

    // Monte Carlo slopes with a fixed seed. Fluxes are raised so every grid
    // point collects enough clicks at 1e7 gates while staying in the linear
    // fringe regime; the scaling exponent does not depend on the flux.
    Rng rng(seed);
    const double mc_mu_double = 0.5;   // per user
    const double mc_mu_single = 120.0; // total on the direct link
    std::vector<double> mc_double, mc_single;
    for (double L : losses) {
        const ChannelParams ch_d = reference::channel(L);
        PulseState a, b;
        a.mean_photons = mc_mu_double;
        b.mean_photons = mc_mu_double;
        std::uint64_t clicks = 0;
        for (std::uint64_t i = 0; i < mc_gates; ++i) {
            a.global_phase = rng.uniform() * 2.0 * kPi;
            b.global_phase = rng.uniform() * 2.0 * kPi;
            const DetectionEvent ev = interfere_and_detect(a, b, 0.0, ch_d, det, rng);
            clicks += ev.detector == Detector::D1 ? 1 : 0;
        }
        mc_double.push_back(static_cast<double>(clicks) / mc_gates);

        // Single path: the full loss sits on one arm; Bob stays dark.
        ChannelParams ch_s = reference::channel(2.0 * L);
        PulseState sa, sb;
        sa.mean_photons = mc_mu_single;
        sb.mean_photons = 0.0;
        clicks = 0;
        for (std::uint64_t i = 0; i < mc_gates; ++i) {
            sa.global_phase = rng.uniform() * 2.0 * kPi;
            const DetectionEvent ev = interfere_and_detect(sa, sb, 0.0, ch_s, det, rng);
            clicks += ev.detector == Detector::D1 ? 1 : 0;
        }
        mc_single.push_back(static_cast<double>(clicks) / mc_gates);
    }
    const double ms_double = detail::fit_loglog(eta, mc_double).slope;
    const double ms_single = detail::fit_loglog(eta, mc_single).slope;
    detail << "; MC slopes " << ms_double << "/" << ms_single;
    if (!std::isfinite(ms_double) || !std::isfinite(ms_single) ||
        std::abs(ms_double - 0.5) > 0.03 || std::abs(ms_single - 1.0) > 0.03)
        r.pass = false;
    r.detail = detail.str();
    return r;
}

// --- criterion 5: supremacy-region crossings ----------------------------------------------

inline CriterionResult criterion_crossover() {
    CriterionResult r{5, "send-not-send crosses realistic SKC0 near 50 and 83 dB (+-3)",
                      true, "", 0.0};
    std::vector<double> crossings;
    double prev_diff = 0.0;
    bool first = true;
    for (double L = 30.0; L <= 95.0; L += 0.25) {
        const KeyRateReport rep = detail::sns_model_rate(L);
        const double diff =
            rep.skr_bits_per_second - skc0_realistic(L, reference::kClockHz);
        if (!first && prev_diff * diff < 0.0) crossings.push_back(L - 0.125);
        prev_diff = diff;
        first = false;
    }
    std::ostringstream detail;
    detail << "crossings at";
    for (double c : crossings) detail << " " << c << "dB";
    if (crossings.size() != 2 || std::abs(crossings[0] - 50.0) > 3.0 ||
        std::abs(crossings[1] - 83.0) > 3.0)
        r.pass = false;
    r.detail = detail.str();
    return r;
}

// --- criterion 6: QBER model vs table ------------------------------------------------------

inline CriterionResult criterion_qber_model(const std::vector<io::DataTableRow>& rows) {
    CriterionResult r{6, "QBER model within 0.5 pp (0.9 pp at 90.8 dB) of table QBERs",
                      true, "", 0.0};
    const DetectorParams det = reference::detector();
    const FeedbackParams fb = reference::feedback();
    const IntensityTriple per_user = reference::main_intensities();
    std::ostringstream detail;
    double worst = 0.0;
    for (const auto& row : rows) {
        const double loss = row.arm_sum_db();
        const ChannelParams ch = reference::channel(loss);
        const double tol = loss > 85.0 ? 0.009 : 0.005;
        const double mu = expected_qber(per_user.total(IntensityLabel::u), ch, det, fb).total;
        const double mv = expected_qber(per_user.total(IntensityLabel::v), ch, det, fb).total;
        worst = std::max({worst, std::abs(mu - row.e_u), std::abs(mv - row.e_v)});
        if (std::abs(mu - row.e_u) > tol || std::abs(mv - row.e_v) > tol) {
            r.pass = false;
            detail << " @" << row.total_loss_db << "dB model " << detail::pct(mu) << "/"
                   << detail::pct(mv) << " vs " << detail::pct(row.e_u) << "/"
                   << detail::pct(row.e_v) << ";";
        }
    }
    detail << " worst |model-table| = " << detail::pct(worst);
    r.detail = detail.str();
    return r;
}

// --- criterion 7: decoy-bound validity ------------------------------------------------------

inline CriterionResult criterion_decoy_validity(int trials = 100, std::uint64_t seed = 7) {
    CriterionResult r{7, "decoy bounds valid on synthetic channels; LP vs grid oracle",
                      true, "", 0.0};
    Rng rng(seed);
    std::ostringstream detail;
    int violations = 0;
    for (int t = 0; t < trials; ++t) {
        const double eta = std::pow(10.0, -(rng.uniform() * 4.0));  // 1 .. 1e-4
        const double pdc = rng.uniform() * 1e-5;
        const double e_opt = rng.uniform() * 0.05;
        auto yield = [&](int n) {
            return 1.0 - (1.0 - pdc) * std::pow(1.0 - eta, n);
        };
        auto err_yield = [&](int n) {
            return e_opt * (1.0 - std::pow(1.0 - eta, n)) +
                   0.5 * pdc * std::pow(1.0 - eta, n);
        };
        DecoyInputs d;
        d.u = 0.3 + rng.uniform() * 0.3;
        d.v = 0.08 + rng.uniform() * 0.1;
        d.w = 1e-5;
        auto fold = [&](double mu, bool errors) {
            double q = 0.0, p = std::exp(-mu);
            for (int n = 0; n <= 60; ++n) {
                q += p * (errors ? err_yield(n) : yield(n));
                p *= mu / (n + 1);
            }
            return q;
        };
        d.q_u = fold(d.u, false);
        d.q_v = fold(d.v, false);
        d.q_w = fold(d.w, false);
        d.e_u = fold(d.u, true) / d.q_u;
        d.e_v = fold(d.v, true) / d.q_v;
        d.e_w = fold(d.w, true) / d.q_w;

        const double y0 = y0_lower(d).value;
        const double y1v = y1_lower(d).value;
        const double true_e1 = err_yield(1) / yield(1);
        if (y0 > yield(0) + 1e-12) ++violations;
        if (y1v > yield(1) + 1e-12) ++violations;
        if (y1v > 0.0) {
            const double e1 = e1_upper(d, y1v).value;
            if (e1 < true_e1 - 1e-12 && e1 < 0.5) ++violations;
        }
    }
    if (violations > 0) {
        r.pass = false;
        detail << violations << " bound violations over " << trials << " draws;";
    } else {
        detail << "0 violations over " << trials << " draws";
    }

    // LP vs coarse grid oracle on an n_cut = 2 toy with an on-grid truth.
    {
        using L = IntensityLabel;
        IntensityTriple levels{0.5, 0.25, 1e-6};
        const double y_true[3][3] = {{0.25, 0.5, 0.75}, {0.5, 0.75, 1.0}, {0.75, 1.0, 1.0}};
        auto pois = [](double mu, int n) {
            double p = std::exp(-mu);
            for (int k = 0; k < n; ++k) p *= mu / (k + 1);
            return p;
        };
        GainTable g;
        for (auto a : {L::u, L::v, L::w})
            for (auto b : {L::u, L::v, L::w}) {
                if (g.count({b, a})) continue;
                double q = 0.0;
                for (int j = 0; j <= 2; ++j)
                    for (int k = 0; k <= 2; ++k)
                        q += pois(levels.per_user(a), j) * pois(levels.per_user(b), k) *
                             y_true[j][k];
                g[{a, b}] = std::min(1.0, q);
            }
        const double slack = 0.2;
        const YieldMatrixBounds b = yield_matrix_upper_bounds(g, levels, 2, 1, slack);
        // grid oracle: best feasible grid point for Y00 at resolution 0.25
        double oracle = -1.0;
        const double grid[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
        std::vector<std::array<int, 9>> idx;
        std::array<int, 9> cur{};
        std::function<void(int)> rec = [&](int pos) {
            if (pos == 9) {
                double y[3][3];
                for (int i = 0; i < 9; ++i) y[i / 3][i % 3] = grid[cur[i]];
                for (const auto& [key, q] : g) {
                    auto eval = [&](L a, L bl) {
                        double s = 0.0;
                        for (int j = 0; j <= 2; ++j)
                            for (int k = 0; k <= 2; ++k)
                                s += pois(levels.per_user(a), j) *
                                     pois(levels.per_user(bl), k) * y[j][k];
                        return s;
                    };
                    for (auto [a, bl] : {std::pair{key.first, key.second},
                                         std::pair{key.second, key.first}}) {
                        const double s = eval(a, bl);
                        if (s > q * (1 + slack) + 1e-12 || s < q * (1 - slack) - 1e-12)
                            return;
                    }
                }
                oracle = std::max(oracle, y[0][0]);
                return;
            }
            for (int i = 0; i < 5; ++i) {
                cur[pos] = i;
                rec(pos + 1);
            }
        };
        rec(0);
        const double lp00 = b.g(0, 0);
        detail << "; toy LP Y00=" << lp00 << " grid oracle=" << oracle
               << " truth=" << y_true[0][0];
        if (oracle > lp00 + 1e-9) {
            r.pass = false;  // a feasible point beats the claimed maximum
            detail << " ORACLE EXCEEDS LP;";
        }
        if (lp00 < y_true[0][0] - 1e-9) {
            r.pass = false;  // upper bound fell below the truth
            detail << " LP BELOW TRUTH;";
        }
        if (lp00 - oracle > 0.25 + 1e-9) {
            r.pass = false;  // optimum should be reachable within one grid step
            detail << " GAP EXCEEDS GRID RESOLUTION;";
        }
    }
    r.detail = detail.str();
    return r;
}

// --- criterion 8: feedback behaviour --------------------------------------------------------

inline CriterionResult criterion_feedback(std::uint64_t seed = 42) {
    CriterionResult r{8, "feedback: off swings >= 40 pp, on at 30 dB mean 1.8% +- 0.4 pp",
                      true, "", 0.0};
    SessionConfig cfg;
    cfg.protocol = reference::protocol(Variant::Original);
    cfg.channel = reference::channel(30.1);
    cfg.det = reference::detector();
    cfg.fb = reference::feedback();
    cfg.n_gates = 1;  // engines below use durations, not gate counts
    cfg.rng_seed = seed;

    SessionConfig off = cfg;
    off.fb.enabled = false;
    const TraceResult t_off = run_trace_session(off, 180.0, 20);
    const double swing = t_off.max_qber - t_off.min_qber;

    SessionConfig on = cfg;
    on.channel = reference::channel(30.0);
    on.fb.correction_interval_s = 0.01;  // interval tuned short at low loss
    const TraceResult t_on = run_trace_session(on, 120.0, 10);

    std::ostringstream detail;
    detail << "off swing " << detail::pct(swing) << "; on mean "
           << detail::pct(t_on.mean_qber);
    if (swing < 0.40) r.pass = false;
    if (std::abs(t_on.mean_qber - 0.018) > 0.004) r.pass = false;
    r.detail = detail.str();
    return r;
}

// --- criterion 9: intrinsic misalignment ------------------------------------------------------

inline CriterionResult criterion_intrinsic_misalignment(std::uint64_t target_kept = 10'000'000,
                                                        std::uint64_t seed = 99) {
    CriterionResult r{9, "sifted X QBER converges to 1.275% +- 0.1 pp (M = 16)", true, "", 0.0};
    SessionConfig cfg;
    cfg.protocol = reference::protocol(Variant::Original);
    cfg.protocol.basis_prob_z = 0.0;  // X only
    cfg.protocol.intensities = {0.2, 0.08, 5e-6};
    cfg.x_intensity_probs = {1.0, 0.0, 0.0};
    cfg.continuous_phase = true;
    // perfect hardware: unit visibility and relay efficiency, no dark counts,
    // flux chosen so the fringe stays in the linear regime
    cfg.channel = ChannelParams{12.0412, 0.0, 0.16, 1.0};
    cfg.det = reference::detector();
    cfg.det.dark_count_rate_hz = 0.0;
    cfg.det.visibility = 1.0;
    cfg.fb = reference::feedback();
    cfg.fb.drift_rate_rad_per_s = 0.0;
    cfg.fb.enabled = false;
    cfg.fb.opll_phase_variance_rad2 = 0.0;
    cfg.rng_seed = seed;
    // kept/gate ~ (2*Delta/pi) * eta_C*mu*eta ~ 0.0119
    cfg.n_gates = static_cast<std::uint64_t>(target_kept / 0.0119);

    const SessionResult res = run_session(cfg);
    const double qber = res.sift.kept_x_clicks
                            ? static_cast<double>(res.sift.kept_x_errors) /
                                  res.sift.kept_x_clicks
                            : 1.0;
    std::ostringstream detail;
    detail << "kept " << res.sift.kept_x_clicks << " events, QBER " << detail::pct(qber)
           << " (target 1.275%)";
    if (res.sift.kept_x_clicks < target_kept) {
        r.pass = false;
        detail << " TOO FEW KEPT EVENTS";
    }
    if (std::abs(qber - slice_misalignment(16)) > 0.001) r.pass = false;
    r.detail = detail.str();
    return r;
}

// --- runner -----------------------------------------------------------------------------------

inline std::vector<CriterionResult> run_all(const std::string& data_dir,
                                            bool quick = false) {
    const auto rows = io::ingest_table1(data_dir + "/table1.csv", true);
    const auto curty = io::ingest_table2(data_dir + "/table2.csv", true);

    std::vector<CriterionResult> out;
    auto push = [&](CriterionResult&& c, std::chrono::steady_clock::time_point t0) {
        c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(c));
    };

    auto t0 = std::chrono::steady_clock::now();
    push(criterion_table1_rates(rows), t0);
    t0 = std::chrono::steady_clock::now();
    push(criterion_curty(curty), t0);
    t0 = std::chrono::steady_clock::now();
    push(criterion_skc0(rows, curty), t0);
    t0 = std::chrono::steady_clock::now();
    push(criterion_scaling(quick ? 1'000'000 : 10'000'000), t0);
    t0 = std::chrono::steady_clock::now();
    push(criterion_crossover(), t0);
    t0 = std::chrono::steady_clock::now();
    push(criterion_qber_model(rows), t0);
    t0 = std::chrono::steady_clock::now();
    push(criterion_decoy_validity(), t0);
    t0 = std::chrono::steady_clock::now();
    push(criterion_feedback(), t0);
    t0 = std::chrono::steady_clock::now();
    push(criterion_intrinsic_misalignment(quick ? 1'000'000 : 10'000'000), t0);
    return out;
}

}  // namespace tfqkd::validate
