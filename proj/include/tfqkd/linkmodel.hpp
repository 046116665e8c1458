#pragma once

// Closed-form expected gain and QBER of the twin-field link.
//
// The interference model treats the weak coherent pulses classically: the
// intensity reaching detector D1 for relative phase theta is
//   I(theta) = eta_C * [ (mu_a*eta_a + mu_b*eta_b)/2
//                        + V*sqrt(mu_a*eta_a*mu_b*eta_b)*cos(theta) ]
// and a click fires with probability 1 - (1-p_dc)*exp(-I). Phase-randomised
// gains average I(theta) over [0,2pi) by midpoint quadrature.

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tfqkd/core.hpp"

namespace tfqkd {

struct FeedbackParams {
    double drift_rate_rad_per_s = 0.7;
    double correction_interval_s = 0.1;   // 10 - 100 ms in practice
    double reference_duty = 0.5;          // fraction of gates used as reference pulses
    double misalignment_coefficient = 1.302;  // maps phase-estimation error to persistent misalignment
    double opll_phase_variance_rad2 = 7.53e-3;
    bool enabled = true;

    void validate() const {
        if (reference_duty <= 0.0 || reference_duty >= 1.0)
            throw std::domain_error("FeedbackParams: reference_duty outside (0,1)");
        if (drift_rate_rad_per_s < 0.0 || correction_interval_s < 0.0 ||
            misalignment_coefficient < 0.0 || opll_phase_variance_rad2 < 0.0)
            throw std::domain_error("FeedbackParams: negative parameter");
    }

    double reference_rate_hz(const DetectorParams& det) const {
        return det.clock_rate_hz * reference_duty / (1.0 - reference_duty);
    }
};

struct QberBreakdown {
    double optical = 0.0;
    double dark = 0.0;
    double feedback = 0.0;
    double total = 0.0;
};

enum class GainMode { SingleArmA, SingleArmB, Double };

namespace detail {
inline constexpr int kPhaseNodes = 512;  // >= 256 per the quadrature requirement

inline double interference_intensity(double flux_a, double flux_b, double vis,
                                     double eta_c, double cos_theta) {
    const double base = eta_c * (flux_a + flux_b) / 2.0;
    const double amp = eta_c * vis * std::sqrt(flux_a * flux_b);
    return base + amp * cos_theta;
}
}  // namespace detail

/// Detector-D1 intensity for a fixed relative phase between the arms.
/// flux_* are the per-arm photon numbers already attenuated (mu * eta_arm).
inline double d1_intensity(double flux_a, double flux_b, double visibility,
                           double eta_c, double theta) {
    return detail::interference_intensity(flux_a, flux_b, visibility, eta_c,
                                          std::cos(theta));
}

/// Expected detections per encoding gate at D1.
inline double expected_gain(double mu_a, double mu_b, const ChannelParams& channel,
                            const DetectorParams& det, GainMode mode) {
    if (mu_a < 0.0 || mu_b < 0.0)
        throw std::domain_error("expected_gain: negative mean photon number");
    channel.validate();
    det.validate();
    const double pdc = det.dark_prob_per_gate();
    const double eta_c = channel.charlie_efficiency;

    if (mode != GainMode::Double) {
        // Direct-link reference: the quoted loss is the single path's loss and
        // the beam splitter sends half of the light to D1.
        const double mu = mode == GainMode::SingleArmA ? mu_a : mu_b;
        const double eta = db_to_transmittance(channel.total_loss_db);
        return 1.0 - (1.0 - pdc) * std::exp(-eta_c * mu * eta / 2.0);
    }

    const double fa = mu_a * channel.arm_transmittance(User::Alice);
    const double fb = mu_b * channel.arm_transmittance(User::Bob);
    double acc = 0.0;
    for (int i = 0; i < detail::kPhaseNodes; ++i) {
        const double theta = 2.0 * kPi * (i + 0.5) / detail::kPhaseNodes;
        const double intensity =
            detail::interference_intensity(fa, fb, det.visibility, eta_c, std::cos(theta));
        acc += 1.0 - (1.0 - pdc) * std::exp(-intensity);
    }
    return acc / detail::kPhaseNodes;
}

/// Counts at the feedback detector D3: C0 + C1*(1 - cos(dtheta)).
inline double d3_counts(double phase_offset_rad, double c0, double c1) {
    if (c0 < 0.0 || c1 < 0.0)
        throw std::domain_error("d3_counts: negative count parameter");
    return c0 + c1 * (1.0 - std::cos(phase_offset_rad));
}

/// Shot-noise phase estimation error 2/sqrt(C) for a correction window.
inline double feedback_phase_error(double counts) {
    if (counts <= 0.0)
        throw std::domain_error("feedback_phase_error: counts must be > 0 (feedback starves)");
    return 2.0 / std::sqrt(counts);
}

/// Expected D3 counts per correction interval when locked at quadrature.
/// Reference pulses carry the signal intensity (mu_total/2 per user).
inline double feedback_window_counts(double mu_total, const ChannelParams& channel,
                                     const DetectorParams& det, const FeedbackParams& fb) {
    const double eta_c = channel.charlie_efficiency;
    const double fa = (mu_total / 2.0) * channel.arm_transmittance(User::Alice);
    const double fbx = (mu_total / 2.0) * channel.arm_transmittance(User::Bob);
    const double c0 = eta_c * (fa + fbx) / 2.0 + det.dark_prob_per_gate();
    const double c1 = eta_c * det.visibility * std::sqrt(fa * fbx);
    return (c0 + c1) * fb.reference_rate_hz(det) * fb.correction_interval_s;
}

/// Expected QBER of the interfering link at total flux mu, split into the three
/// model contributions (optical baseline, dark counts, feedback residual).
inline QberBreakdown expected_qber(double mu_total, const ChannelParams& channel,
                                   const DetectorParams& det, const FeedbackParams& fb,
                                   double modulation_floor = 0.0) {
    channel.validate();
    det.validate();
    fb.validate();
    QberBreakdown out;
    out.optical = (1.0 - det.visibility) / 2.0 + modulation_floor;

    const double pdc = det.dark_prob_per_gate();
    const double eta_c = channel.charlie_efficiency;
    const double fa = (mu_total / 2.0) * channel.arm_transmittance(User::Alice);
    const double fbx = (mu_total / 2.0) * channel.arm_transmittance(User::Bob);
    const double constructive =
        detail::interference_intensity(fa, fbx, det.visibility, eta_c, 1.0);
    const double signal_click = 1.0 - std::exp(-constructive);
    out.dark = pdc / (2.0 * (signal_click + pdc));

    if (fb.enabled) {
        const double counts = feedback_window_counts(mu_total, channel, det, fb);
        const double theta_m =
            fb.misalignment_coefficient * feedback_phase_error(counts);
        const double s = std::sin(theta_m / 2.0);
        out.feedback = s * s;
    } else {
        out.feedback = 0.25;  // free-running drift averages sin^2 over the fringe
    }
    out.total = out.optical + out.dark + out.feedback;
    return out;
}

/// Fits the misalignment coefficient so expected_qber reproduces a target QBER
/// at one anchor point. This is the model's only fitted parameter.
inline double fit_misalignment_coefficient(double mu_total, const ChannelParams& channel,
                                           const DetectorParams& det, FeedbackParams fb,
                                           double target_qber,
                                           double modulation_floor = 0.0) {
    double lo = 0.0, hi = 50.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        fb.misalignment_coefficient = mid;
        const double q = expected_qber(mu_total, channel, det, fb, modulation_floor).total;
        (q < target_qber ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// --- loss sweep ------------------------------------------------------------------

struct SweepPoint {
    double loss_db = 0.0;
    // phase-randomised double-path gains for every intensity pairing
    std::map<std::pair<IntensityLabel, IntensityLabel>, double> gains;
    // single-arm gains at the signal and decoy settings (per user)
    std::map<std::pair<User, IntensityLabel>, double> single_arm_gains;
    double vacuum_gain = 0.0;
    QberBreakdown qber_signal;
    QberBreakdown qber_decoy;
};

inline std::vector<SweepPoint> sweep_loss(const ProtocolConfig& cfg,
                                          const std::vector<double>& loss_grid_db,
                                          const DetectorParams& det,
                                          const FeedbackParams& fb,
                                          double modulation_floor = 0.0,
                                          double charlie_efficiency = 0.308) {
    cfg.validate();
    if (loss_grid_db.empty())
        throw std::domain_error("sweep_loss: empty loss grid");
    for (std::size_t i = 1; i < loss_grid_db.size(); ++i)
        if (loss_grid_db[i] <= loss_grid_db[i - 1])
            throw std::domain_error("sweep_loss: grid must be strictly increasing");

    using L = IntensityLabel;
    const bool all_pairs = cfg.variant == Variant::Curty;
    std::vector<std::pair<L, L>> combos = {{L::u, L::u}, {L::v, L::v}, {L::w, L::w}};
    if (all_pairs) {
        combos.push_back({L::u, L::v});
        combos.push_back({L::u, L::w});
        combos.push_back({L::v, L::w});
    }

    std::vector<SweepPoint> out;
    out.reserve(loss_grid_db.size());
    for (double loss : loss_grid_db) {
        ChannelParams ch;
        ch.total_loss_db = loss;
        ch.charlie_efficiency = charlie_efficiency;
        SweepPoint pt;
        pt.loss_db = loss;
        for (auto [a, b] : combos)
            pt.gains[{a, b}] = expected_gain(cfg.intensities.per_user(a),
                                             cfg.intensities.per_user(b), ch, det,
                                             GainMode::Double);
        for (L l : {L::u, L::v}) {
            ChannelParams arm = ch;
            arm.total_loss_db = loss / 2.0;  // one arm carries half the total loss
            const double mu = cfg.intensities.per_user(l);
            const double g = expected_gain(mu, 0.0, arm, det, GainMode::SingleArmA);
            pt.single_arm_gains[{User::Alice, l}] = g;
            pt.single_arm_gains[{User::Bob, l}] = g;
        }
        pt.vacuum_gain = det.dark_prob_per_gate();
        pt.qber_signal = expected_qber(cfg.intensities.total(L::u), ch, det, fb, modulation_floor);
        pt.qber_decoy = expected_qber(cfg.intensities.total(L::v), ch, det, fb, modulation_floor);
        out.push_back(std::move(pt));
    }
    return out;
}

}  // namespace tfqkd
