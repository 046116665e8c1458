#pragma once

// Shared domain types and small math utilities for the twin-field QKD
// toolkit. Everything here is an immutable value type; validation happens
// at construction via validate() helpers that throw on bad input.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>

namespace tfqkd {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// --- unit conversions ------------------------------------------------------

/// 10^(-loss_db/10). Throws std::domain_error for negative loss.
inline double db_to_transmittance(double loss_db) {
    if (loss_db < 0.0 || !std::isfinite(loss_db))
        throw std::domain_error("db_to_transmittance: loss must be finite and >= 0 dB");
    return std::pow(10.0, -loss_db / 10.0);
}

inline double transmittance_to_db(double eta) {
    if (eta <= 0.0 || eta > 1.0)
        throw std::domain_error("transmittance_to_db: eta must be in (0,1]");
    return -10.0 * std::log10(eta);
}

/// Binary entropy h(x) = -x log2 x - (1-x) log2 (1-x), h(0)=h(1)=0.
inline double binary_entropy(double x) {
    if (x < 0.0 || x > 1.0 || !std::isfinite(x))
        throw std::domain_error("binary_entropy: argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

// --- enums ------------------------------------------------------------------

enum class Variant { Original, SendNotSend, Curty };
enum class IntensityLabel : std::uint8_t { u, v, w };
enum class Basis : std::uint8_t { Z, X };
enum class User : std::uint8_t { Alice, Bob };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::Original: return "original";
        case Variant::SendNotSend: return "send-not-send";
        case Variant::Curty: return "curty";
    }
    return "?";
}

inline char to_char(IntensityLabel l) {
    switch (l) {
        case IntensityLabel::u: return 'u';
        case IntensityLabel::v: return 'v';
        case IntensityLabel::w: return 'w';
    }
    return '?';
}

inline char to_char(Basis b) { return b == Basis::Z ? 'Z' : 'X'; }

// --- channel / detector parameters ------------------------------------------

struct ChannelParams {
    double total_loss_db = 0.0;        // Alice->Bob, both arms combined
    double asymmetry_db = 0.0;         // arm A minus arm B loss difference
    double fibre_alpha_db_per_km = 0.16;
    double charlie_efficiency = 0.308; // eta_C: detector x coupling at the relay

    void validate() const {
        if (total_loss_db < 0.0)
            throw std::domain_error("ChannelParams: total_loss_db < 0");
        if (charlie_efficiency < 0.0 || charlie_efficiency > 1.0)
            throw std::domain_error("ChannelParams: charlie_efficiency outside [0,1]");
        if (std::abs(asymmetry_db) > total_loss_db)
            throw std::domain_error("ChannelParams: |asymmetry_db| > total_loss_db");
    }

    // Total loss splits as (L/2 + a/2, L/2 - a/2) across the two arms.
    double arm_loss_db(User who) const {
        const double half = total_loss_db / 2.0;
        return who == User::Alice ? half + asymmetry_db / 2.0
                                  : half - asymmetry_db / 2.0;
    }
    double arm_transmittance(User who) const { return db_to_transmittance(arm_loss_db(who)); }
    double equivalent_fibre_km() const { return total_loss_db / fibre_alpha_db_per_km; }
};

struct DetectorParams {
    double dark_count_rate_hz = 22.0;
    double detection_efficiency = 0.44;
    double coupling_efficiency = 0.70;
    double clock_rate_hz = 1e9;     // effective encoding rate
    double gate_width_s = 0.5e-9;   // time window per gate for dark counts
    double visibility = 0.964;      // first-order interference visibility

    void validate() const {
        for (double p : {detection_efficiency, coupling_efficiency, visibility})
            if (p < 0.0 || p > 1.0)
                throw std::domain_error("DetectorParams: probability outside [0,1]");
        if (dark_count_rate_hz < 0.0 || gate_width_s < 0.0 || clock_rate_hz <= 0.0)
            throw std::domain_error("DetectorParams: negative rate or width");
        if (dark_prob_per_gate() >= 1.0)
            throw std::domain_error("DetectorParams: dark probability per gate >= 1");
    }

    double dark_prob_per_gate() const { return dark_count_rate_hz * gate_width_s; }
};

// --- protocol configuration ---------------------------------------------------

struct IntensityTriple {
    double u = 0.2;     // signal, per user
    double v = 0.08;    // decoy, per user
    double w = 5e-6;    // vacuum surrogate, per user

    void validate() const {
        if (u < 0.0 || v < 0.0 || w < 0.0)
            throw std::domain_error("IntensityTriple: negative intensity");
        if (u == v)
            throw std::domain_error("IntensityTriple: u == v degenerates the decoy system");
        // Curty runs with v > u; only require that w stays the smallest.
        if (w >= std::min(u, v))
            throw std::domain_error("IntensityTriple: w must be below min(u,v)");
    }

    double total(IntensityLabel l) const {
        switch (l) {
            case IntensityLabel::u: return 2.0 * u;
            case IntensityLabel::v: return 2.0 * v;
            case IntensityLabel::w: return 2.0 * w;
        }
        return 0.0;
    }
    double per_user(IntensityLabel l) const {
        switch (l) {
            case IntensityLabel::u: return u;
            case IntensityLabel::v: return v;
            case IntensityLabel::w: return w;
        }
        return 0.0;
    }
};

struct ProtocolConfig {
    Variant variant = Variant::Original;
    IntensityTriple intensities{};
    int phase_slices_m = 16;
    double tolerance_delta = 2.0 * kPi / 16.0;  // sifting tolerance (rad, mod pi)
    double epsilon = 0.078;                      // send-not-send Z-basis send probability
    int y_cut = 5;
    int n_cut = 20;
    double f_ec = 1.15;
    double basis_prob_z = 0.5;
    double lp_slack = 0.0;  // relative measurement-consistency window for the yield LP

    void validate() const {
        intensities.validate();
        if (phase_slices_m < 2 || phase_slices_m % 2 != 0)
            throw std::domain_error("ProtocolConfig: M must be even and >= 2");
        if (tolerance_delta < 0.0)
            throw std::domain_error("ProtocolConfig: tolerance_delta < 0");
        if (y_cut >= n_cut)
            throw std::domain_error("ProtocolConfig: y_cut must be < n_cut");
        if (f_ec < 1.0)
            throw std::domain_error("ProtocolConfig: f_ec < 1");
        if (epsilon < 0.0 || epsilon > 1.0)
            throw std::domain_error("ProtocolConfig: epsilon outside [0,1]");
        if (basis_prob_z < 0.0 || basis_prob_z > 1.0)
            throw std::domain_error("ProtocolConfig: basis_prob_z outside [0,1]");
        if (lp_slack < 0.0 || lp_slack >= 1.0)
            throw std::domain_error("ProtocolConfig: lp_slack outside [0,1)");
    }
};

// --- measurement tallies ------------------------------------------------------

struct GainKey {
    IntensityLabel alice;
    IntensityLabel bob;
    Basis basis;
    auto operator<=>(const GainKey&) const = default;
};

/// Gains and QBERs accumulated from a session or ingested from a data table.
/// QBERs are stored after bit-flip normalization min(E, 1-E); the raw value is
/// kept alongside.
class MeasurementTallies {
  public:
    void set_gain(GainKey k, double q) {
        check_unit("gain", q);
        gains_[k] = q;
    }
    void set_qber(GainKey k, double e) {
        if (e < 0.0 || e > 1.0 || !std::isfinite(e))
            throw std::domain_error("MeasurementTallies: QBER outside [0,1]");
        raw_qbers_[k] = e;
        qbers_[k] = std::min(e, 1.0 - e);
    }
    void set_single_arm_gain(User who, IntensityLabel l, double q) {
        check_unit("single-arm gain", q);
        single_arm_[{who, l}] = q;
    }
    void set_vacuum_gain(double q0) {
        check_unit("vacuum gain", q0);
        vacuum_gain_ = q0;
    }
    void set_pulses_sent(GainKey k, std::uint64_t n) { pulses_sent_[k] = n; }

    std::optional<double> gain(GainKey k) const { return find(gains_, k); }
    std::optional<double> qber(GainKey k) const { return find(qbers_, k); }
    std::optional<double> raw_qber(GainKey k) const { return find(raw_qbers_, k); }
    std::optional<double> single_arm_gain(User who, IntensityLabel l) const {
        auto it = single_arm_.find({who, l});
        if (it == single_arm_.end()) return std::nullopt;
        return it->second;
    }
    double vacuum_gain() const { return vacuum_gain_; }
    std::optional<std::uint64_t> pulses_sent(GainKey k) const {
        auto it = pulses_sent_.find(k);
        if (it == pulses_sent_.end()) return std::nullopt;
        return it->second;
    }

    const std::map<GainKey, double>& all_gains() const { return gains_; }
    const std::map<GainKey, double>& all_qbers() const { return qbers_; }

  private:
    static void check_unit(const char* what, double q) {
        if (q < 0.0 || q > 1.0 || !std::isfinite(q))
            throw std::domain_error(std::string("MeasurementTallies: ") + what + " outside [0,1]");
    }
    static std::optional<double> find(const std::map<GainKey, double>& m, GainKey k) {
        auto it = m.find(k);
        if (it == m.end()) return std::nullopt;
        return it->second;
    }

    std::map<GainKey, double> gains_;
    std::map<GainKey, double> qbers_;      // normalized min(E, 1-E)
    std::map<GainKey, double> raw_qbers_;  // as observed
    std::map<std::pair<User, IntensityLabel>, double> single_arm_;
    std::map<GainKey, std::uint64_t> pulses_sent_;
    double vacuum_gain_ = 0.0;
};

// --- key-rate report ------------------------------------------------------------

struct KeyRateReport {
    Variant variant = Variant::Original;
    double skr_bits_per_gate = 0.0;
    double skr_bits_per_second = 0.0;
    double y0_lower = 0.0;
    double y1_lower = 0.0;
    double e1_upper = 0.0;
    std::optional<double> e1x_upper;   // Curty only
    double skc0_ideal_bps = 0.0;
    double skc0_realistic_bps = 0.0;
    double supremacy_ratio = 0.0;      // skr / skc0_ideal
    bool rate_clamped_to_zero = false; // negative raw rate reported as 0
    bool bounds_clamped = false;       // a decoy bound left its probability range
    std::optional<std::string> failure_reason;

    void finalize(double clock_rate_hz, double raw_rate_per_gate) {
        if (raw_rate_per_gate < 0.0) {
            rate_clamped_to_zero = true;
            skr_bits_per_gate = 0.0;
        } else {
            skr_bits_per_gate = std::min(1.0, raw_rate_per_gate);
        }
        skr_bits_per_second = skr_bits_per_gate * clock_rate_hz;
        if (skc0_ideal_bps > 0.0) supremacy_ratio = skr_bits_per_second / skc0_ideal_bps;
    }
};

}  // namespace tfqkd
