#pragma once

// Canonical parameter set used to reproduce the bundled reference tables and
// curves. All values trace to the experiment description; the two calibrated
// constants (feedback misalignment coefficient, LP consistency windows) are
// derived here so every consumer agrees on them.

#include "tfqkd/core.hpp"
#include "tfqkd/linkmodel.hpp"

namespace tfqkd::reference {

inline constexpr double kClockHz = 1e9;          // effective encoding rate
inline constexpr double kCharlieEfficiency = 0.308;
inline constexpr double kVisibility = 0.964;
inline constexpr double kDarkRateHz = 22.0;
// Effective dark window per encoding gate, pinned so the per-gate dark
// probability equals the measured silent-link gain of 25.9e-9.
inline constexpr double kGateWidthS = 25.9e-9 / 22.0;
inline constexpr double kDriftRadPerS = 0.7;
inline constexpr double kOpllVarianceRad2 = 7.53e-3;
inline constexpr double kFecFactor = 1.15;
inline constexpr int kPhaseSlices = 16;
inline constexpr double kSnsEpsilon = 0.078;

// QBER anchor used to fit the single misalignment coefficient: the highest
// published attenuation and its signal QBER.
inline constexpr double kQberAnchorLossDb = 90.8;
inline constexpr double kQberAnchorValue = 0.0265;

// Measurement-consistency windows for the yield LP, calibrated once against
// the bundled reference datasets (the measured six-flux gains are mutually
// inconsistent below ~2.7%; the analytic-model gains are consistent and use a
// much smaller window).
inline constexpr double kLpSlackMeasured = 0.043;
inline constexpr double kLpSlackModel = 0.00281;

inline DetectorParams detector() {
    DetectorParams d;
    d.dark_count_rate_hz = kDarkRateHz;
    d.detection_efficiency = 0.44;
    d.coupling_efficiency = 0.70;
    d.clock_rate_hz = kClockHz;
    d.gate_width_s = kGateWidthS;
    d.visibility = kVisibility;
    return d;
}

inline ChannelParams channel(double total_loss_db) {
    ChannelParams c;
    c.total_loss_db = total_loss_db;
    c.charlie_efficiency = kCharlieEfficiency;
    c.fibre_alpha_db_per_km = 0.16;
    return c;
}

inline IntensityTriple main_intensities() { return {0.2, 0.08, 5e-6}; }
inline IntensityTriple curty_intensities() { return {0.02, 0.2, 5e-6}; }

/// Feedback parameters with the misalignment coefficient fitted at the QBER
/// anchor. The fit runs once per process.
inline FeedbackParams feedback() {
    static const double fitted = [] {
        FeedbackParams fb;
        fb.drift_rate_rad_per_s = kDriftRadPerS;
        fb.correction_interval_s = 0.1;
        fb.reference_duty = 0.5;
        fb.opll_phase_variance_rad2 = kOpllVarianceRad2;
        const double mu_total = 2.0 * main_intensities().u;
        return fit_misalignment_coefficient(mu_total, channel(kQberAnchorLossDb),
                                            detector(), fb, kQberAnchorValue);
    }();
    FeedbackParams fb;
    fb.drift_rate_rad_per_s = kDriftRadPerS;
    fb.correction_interval_s = 0.1;
    fb.reference_duty = 0.5;
    fb.opll_phase_variance_rad2 = kOpllVarianceRad2;
    fb.misalignment_coefficient = fitted;
    return fb;
}

inline ProtocolConfig protocol(Variant v) {
    ProtocolConfig p;
    p.variant = v;
    p.intensities = v == Variant::Curty ? curty_intensities() : main_intensities();
    p.phase_slices_m = kPhaseSlices;
    p.tolerance_delta = 2.0 * kPi / kPhaseSlices;
    p.epsilon = kSnsEpsilon;
    p.y_cut = 5;
    p.n_cut = 20;
    p.f_ec = kFecFactor;
    p.lp_slack = v == Variant::Curty ? kLpSlackMeasured : 0.0;
    return p;
}

}  // namespace tfqkd::reference
