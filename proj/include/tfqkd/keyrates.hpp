#pragma once

// Secret-key-rate evaluation for the three protocol variants and the
// repeaterless secret key capacity bounds.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tfqkd/core.hpp"
#include "tfqkd/decoy.hpp"

namespace tfqkd {

/// Intrinsic phase-slice misalignment: mean of sin^2(d/2) for a phase mismatch
/// d uniform over one slice width 2*pi/M. Evaluates to 1.2752% at M = 16.
inline double slice_misalignment(int m_slices) {
    if (m_slices < 2) throw std::domain_error("slice_misalignment: M < 2");
    const double s = 2.0 * kPi / m_slices;
    return 0.5 * (1.0 - std::sin(s) / s);
}

struct RateParams {
    double f_ec = 1.15;
    int m_slices = 16;
    double e_m = slice_misalignment(16);  // intrinsic misalignment for m_slices
    double epsilon = 0.078;               // send-not-send Z send probability
    double clock_rate_hz = 1e9;

    int m_prime() const { return m_slices / 2; }

    void validate() const {
        if (f_ec < 1.0) throw std::domain_error("RateParams: f_ec < 1");
        if (m_slices < 2 || m_slices % 2 != 0)
            throw std::domain_error("RateParams: M must be even and >= 2");
        if (e_m < 0.0 || e_m > 0.5) throw std::domain_error("RateParams: e_m outside [0,0.5]");
        if (epsilon < 0.0 || epsilon > 1.0)
            throw std::domain_error("RateParams: epsilon outside [0,1]");
        if (clock_rate_hz <= 0.0) throw std::domain_error("RateParams: clock <= 0");
    }
};

/// Ideal repeaterless capacity -log2(1-eta) per gate, scaled to bit/s.
inline double skc0_ideal(double total_loss_db, double clock_rate_hz) {
    const double eta = db_to_transmittance(total_loss_db);
    if (eta >= 1.0) return clock_rate_hz * 1024.0;  // zero loss: formally infinite
    return -std::log2(1.0 - eta) * clock_rate_hz;
}

/// Same bound at an effective transmittance eta * det_efficiency * 10^(-extra/10).
inline double skc0_realistic(double total_loss_db, double clock_rate_hz,
                             double det_efficiency = 0.35, double extra_loss_db = 3.0) {
    const double eta = db_to_transmittance(total_loss_db) * det_efficiency *
                       db_to_transmittance(extra_loss_db);
    return -std::log2(1.0 - eta) * clock_rate_hz;
}

namespace detail {
inline void attach_skc0(KeyRateReport& r, double loss_db, double clock) {
    if (loss_db > 0.0) {
        r.skc0_ideal_bps = skc0_ideal(loss_db, clock);
        r.skc0_realistic_bps = skc0_realistic(loss_db, clock);
    }
}
}  // namespace detail

/// Original TF-QKD rate:  R' = { Q1 [1 - h(e1)] - f_EC Qu h(Eu) } / M'.
///
/// `include_intrinsic_misalignment` adds e_m to the measured QBER before the
/// error-correction term; measured tables come from matched-phase encodings
/// and do not contain the slicing error a running protocol would see.
inline KeyRateReport skr_original(const DecoyInputs& d, const RateParams& p,
                                  double loss_db = 0.0,
                                  bool include_intrinsic_misalignment = true) {
    p.validate();
    KeyRateReport r;
    r.variant = Variant::Original;
    detail::attach_skc0(r, loss_db, p.clock_rate_hz);

    const BoundedValue y0 = y0_lower(d);
    const BoundedValue y1 = y1_lower(d);
    r.y0_lower = y0.value;
    r.y1_lower = y1.value;
    r.bounds_clamped = y0.clamped || y1.clamped;
    if (y1.value <= 0.0) {
        r.failure_reason = "single-photon yield bound is zero";
        r.finalize(p.clock_rate_hz, 0.0);
        return r;
    }
    const BoundedValue e1 = e1_upper(d, y1.value);
    r.e1_upper = e1.value;
    r.bounds_clamped |= e1.clamped;

    const double q1 = d.u * std::exp(-d.u) * y1.value;
    const double e_u = d.e_u + (include_intrinsic_misalignment ? p.e_m : 0.0);
    const double raw = (q1 * (1.0 - binary_entropy(e1.value)) -
                        p.f_ec * d.q_u * binary_entropy(std::min(e_u, 1.0))) /
                       p.m_prime();
    r.finalize(p.clock_rate_hz, raw);
    return r;
}

/// Send-not-send rate:  R'' = Q0z + Q1z [1 - h(e1)] - f_EC Qz h(Ez).
/// Single-photon quantities come from the X basis; the X basis of this
/// variant carries no slice misalignment.
inline KeyRateReport skr_send_not_send(const MeasurementTallies& tallies,
                                       const IntensityTriple& per_user,
                                       const RateParams& p, double loss_db = 0.0) {
    p.validate();
    per_user.validate();
    using L = IntensityLabel;

    const auto q_u = tallies.gain({L::u, L::u, Basis::X});
    const auto q_v = tallies.gain({L::v, L::v, Basis::X});
    const auto e_v = tallies.qber({L::v, L::v, Basis::X});
    const auto q_ua = tallies.single_arm_gain(User::Alice, L::u);
    const auto q_ub = tallies.single_arm_gain(User::Bob, L::u);
    if (!q_u || !q_v || !e_v)
        throw std::invalid_argument("skr_send_not_send: missing uu/vv gains or decoy QBER");
    if (!q_ua || !q_ub)
        throw std::invalid_argument("skr_send_not_send: missing single-arm signal gains");

    DecoyInputs d;
    d.u = per_user.total(L::u);
    d.v = per_user.total(L::v);
    d.w = per_user.total(L::w);
    d.q_u = *q_u;
    d.q_v = *q_v;
    d.q_w = tallies.vacuum_gain();
    d.e_u = tallies.qber({L::u, L::u, Basis::X}).value_or(0.0);
    d.e_v = *e_v;
    d.e_w = 0.5;  // vacuum clicks are dark counts: random outcomes

    KeyRateReport r;
    r.variant = Variant::SendNotSend;
    detail::attach_skc0(r, loss_db, p.clock_rate_hz);

    const BoundedValue y0 = y0_lower(d);
    const BoundedValue y1 = y1_lower(d);
    r.y0_lower = y0.value;
    r.y1_lower = y1.value;
    r.bounds_clamped = y0.clamped || y1.clamped;

    const double eps = p.epsilon;
    const double q0 = tallies.vacuum_gain();
    const double qz = eps * eps * *q_u + eps * (1.0 - eps) * (*q_ua + *q_ub) +
                      (1.0 - eps) * (1.0 - eps) * q0;
    if (qz <= 0.0) {
        r.failure_reason = "zero Z-basis gain";
        r.finalize(p.clock_rate_hz, 0.0);
        return r;
    }
    const double ez = (eps * eps * *q_u + (1.0 - eps) * (1.0 - eps) * q0) / qz;

    double pa_term = 0.0;
    if (y1.value > 0.0) {
        const BoundedValue e1 = e1_upper(d, y1.value);
        r.e1_upper = e1.value;
        r.bounds_clamped |= e1.clamped;
        const double ua = per_user.u, ub = per_user.u;
        const double q1z = (eps * (1.0 - eps) *
                                (ua * std::exp(-ua) + ub * std::exp(-ub)) +
                            eps * eps * d.u * std::exp(-d.u)) *
                           y1.value;
        pa_term = q1z * (1.0 - binary_entropy(e1.value));
    }
    const double ua = per_user.u, ub = per_user.u;
    const double q0z = ((1.0 - eps) * (1.0 - eps) +
                        eps * (1.0 - eps) * (std::exp(-ua) + std::exp(-ub)) +
                        eps * eps * std::exp(-d.u)) *
                       y0.value;

    const double raw = q0z + pa_term - p.f_ec * qz * binary_entropy(std::min(ez, 1.0));
    r.finalize(p.clock_rate_hz, raw);
    return r;
}

/// Curty protocol-3 rate:  R''' = Qz [1 - h(e1x)] - f_EC Qz h(Ez).
inline KeyRateReport skr_curty(double q_z, double e_z, const PhaseErrorResult& e1x,
                               const RateParams& p, double loss_db = 0.0) {
    p.validate();
    if (q_z < 0.0 || e_z < 0.0 || e_z > 1.0)
        throw std::invalid_argument("skr_curty: inputs out of range");
    KeyRateReport r;
    r.variant = Variant::Curty;
    detail::attach_skc0(r, loss_db, p.clock_rate_hz);
    r.e1x_upper = e1x.value;
    r.bounds_clamped = e1x.clamped;
    const double raw =
        q_z * (1.0 - binary_entropy(e1x.value)) - p.f_ec * q_z * binary_entropy(e_z);
    r.finalize(p.clock_rate_hz, raw);
    return r;
}

// --- supremacy comparison -------------------------------------------------------

struct SupremacyRow {
    Variant variant;
    double loss_db = 0.0;
    double skr_bps = 0.0;
    double skc0_ideal_bps = 0.0;
    double skc0_realistic_bps = 0.0;
    double ratio_ideal = 0.0;
    double ratio_realistic = 0.0;
    bool beats_ideal = false;
    bool beats_realistic = false;
};

struct LabeledReport {
    double loss_db;
    KeyRateReport report;
};

inline std::vector<SupremacyRow> supremacy_report(const std::vector<LabeledReport>& reports) {
    std::vector<SupremacyRow> out;
    out.reserve(reports.size());
    for (const auto& [loss, rep] : reports) {
        SupremacyRow row;
        row.variant = rep.variant;
        row.loss_db = loss;
        row.skr_bps = rep.skr_bits_per_second;
        row.skc0_ideal_bps = rep.skc0_ideal_bps;
        row.skc0_realistic_bps = rep.skc0_realistic_bps;
        if (rep.skr_bits_per_second > 0.0) {
            if (rep.skc0_ideal_bps > 0.0) {
                row.ratio_ideal = rep.skr_bits_per_second / rep.skc0_ideal_bps;
                row.beats_ideal = row.ratio_ideal > 1.0;
            }
            if (rep.skc0_realistic_bps > 0.0) {
                row.ratio_realistic = rep.skr_bits_per_second / rep.skc0_realistic_bps;
                row.beats_realistic = row.ratio_realistic > 1.0;
            }
        }
        out.push_back(row);
    }
    return out;
}

}  // namespace tfqkd
