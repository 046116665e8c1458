#pragma once

// Event-level Monte Carlo of the generalised TF-QKD protocol, plus an
// aggregated trace engine for wall-clock-scale QBER time series.
//
// The per-gate engine samples every encoded gate individually and is used for
// tally-level statistics (gain scaling, sifted QBER convergence). The trace
// engine advances the drifting phase in sub-steps and draws binomial click
// counts per step; that is statistically equivalent at the tally level and
// makes minute-long sessions at GHz clock rates tractable.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "tfqkd/core.hpp"
#include "tfqkd/linkmodel.hpp"

namespace tfqkd {

// --- deterministic RNG -----------------------------------------------------------

/// Thin wrapper over mt19937_64 with fixed output transforms, so sessions are
/// bit-reproducible for a given seed regardless of the standard library's
/// distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    int uniform_int(int n) {
        const int k = static_cast<int>(uniform() * n);
        return k >= n ? n - 1 : k;
    }

    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    /// Poisson sample; rounded-normal approximation above lambda = 64.
    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda > 64.0) {
            const double x = lambda + std::sqrt(lambda) * gauss();
            return x <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(x));
        }
        const double limit = std::exp(-lambda);
        std::uint64_t k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }

    /// Binomial sample. All uses here have small p, so a Poisson (or rounded
    /// normal) approximation is accurate.
    std::uint64_t binomial(std::uint64_t n, double p) {
        if (n == 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        const double mean = static_cast<double>(n) * p;
        std::uint64_t k;
        if (mean < 1e4) {
            k = poisson(mean);
        } else {
            const double sd = std::sqrt(mean * (1.0 - p));
            const double x = mean + sd * gauss();
            k = x <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(x));
        }
        return k > n ? n : k;
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// --- protocol state ----------------------------------------------------------------

struct PulseState {
    std::uint8_t bit = 0;              // alpha
    Basis basis = Basis::Z;
    double global_phase = 0.0;         // phi in [0, 2pi)
    IntensityLabel intensity = IntensityLabel::u;
    double mean_photons = 0.0;         // numeric value of the intensity label
    bool is_reference = false;

    // phi + alpha*pi + beta*pi/2
    double encoded_phase() const {
        const double beta = basis == Basis::X ? 1.0 : 0.0;
        double phi = global_phase + bit * kPi + beta * kPi / 2.0;
        phi = std::fmod(phi, 2.0 * kPi);
        return phi < 0.0 ? phi + 2.0 * kPi : phi;
    }
};

enum class Detector : std::uint8_t { None, D1, D2, D3 };

struct DetectionEvent {
    std::uint64_t gate_index = 0;
    Detector detector = Detector::None;
    PulseState alice;
    PulseState bob;
    double drift_at_gate = 0.0;  // residual phase misalignment at this gate
};

struct SessionConfig {
    ProtocolConfig protocol{};
    ChannelParams channel{};
    DetectorParams det{};
    FeedbackParams fb{};
    std::uint64_t n_gates = 0;       // encoded gates
    std::uint64_t rng_seed = 1;
    bool continuous_phase = false;   // default: 2^5 discrete global-phase levels
    int phase_levels = 32;
    std::array<double, 3> x_intensity_probs = {1.0 / 3, 1.0 / 3, 1.0 / 3};  // p_u,p_v,p_w
    double modulation_floor = 0.0;

    void validate() const {
        protocol.validate();
        channel.validate();
        det.validate();
        fb.validate();
        if (phase_levels < 1) throw std::domain_error("SessionConfig: phase_levels < 1");
        double s = 0.0;
        for (double p : x_intensity_probs) {
            if (p < 0.0) throw std::domain_error("SessionConfig: negative intensity prob");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-9)
            throw std::domain_error("SessionConfig: intensity probs must sum to 1");
    }
};

/// Which announcements reveal the global phase for a given variant and basis.
inline bool global_phase_announced(Variant v, Basis b) {
    switch (v) {
        case Variant::Original: return true;
        case Variant::SendNotSend: return b == Basis::X;
        case Variant::Curty: return false;
    }
    return false;
}

struct TwinMatch {
    bool twin = false;
    bool pi_pair = false;  // matched at pi: Bob flips his bit
};

/// Phase-twin test: |phi_a - phi_b| <= tol modulo pi.
inline TwinMatch phase_twin(double phi_a, double phi_b, double tol) {
    double d = std::fmod(std::abs(phi_a - phi_b), 2.0 * kPi);
    if (d > kPi) d = 2.0 * kPi - d;
    if (d <= tol) return {true, false};
    if (std::abs(d - kPi) <= tol) return {true, true};
    return {false, false};
}

// --- single-gate operations ----------------------------------------------------------

inline PulseState prepare_pulse(User user, const SessionConfig& cfg, Rng& rng) {
    (void)user;  // both users share the same preparation statistics
    const ProtocolConfig& pc = cfg.protocol;
    PulseState p;
    p.basis = rng.bernoulli(pc.basis_prob_z) ? Basis::Z : Basis::X;
    p.bit = rng.bernoulli(0.5) ? 1 : 0;

    // Curty randomises the global phase only in the test (X) basis.
    const bool randomise = pc.variant != Variant::Curty || p.basis == Basis::X;
    if (randomise) {
        p.global_phase = cfg.continuous_phase
                             ? rng.uniform() * 2.0 * kPi
                             : rng.uniform_int(cfg.phase_levels) * 2.0 * kPi /
                                   cfg.phase_levels;
    }

    if (p.basis == Basis::X || pc.variant == Variant::Original) {
        const double r = rng.uniform();
        if (r < cfg.x_intensity_probs[0]) p.intensity = IntensityLabel::u;
        else if (r < cfg.x_intensity_probs[0] + cfg.x_intensity_probs[1])
            p.intensity = IntensityLabel::v;
        else p.intensity = IntensityLabel::w;
    } else if (pc.variant == Variant::SendNotSend) {
        // Z basis: emit the signal with probability epsilon, else stay silent.
        p.intensity = rng.bernoulli(pc.epsilon) ? IntensityLabel::u : IntensityLabel::w;
    } else {
        p.intensity = IntensityLabel::u;  // Curty encoding basis
    }
    p.mean_photons = pc.intensities.per_user(p.intensity);
    return p;
}

/// Wiener phase step: increment std drift_rate * sqrt(dt), wrapped to [0, 2pi).
inline double step_drift(double current, double dt, const FeedbackParams& fb, Rng& rng) {
    if (dt <= 0.0) throw std::domain_error("step_drift: dt must be > 0");
    double next = current + fb.drift_rate_rad_per_s * std::sqrt(dt) * rng.gauss();
    next = std::fmod(next, 2.0 * kPi);
    return next < 0.0 ? next + 2.0 * kPi : next;
}

/// One feedback correction. Returns the residual misalignment after the
/// correction; an empty window loses the lock and passes the drift through.
inline double apply_feedback(double drift, double d3_window_counts,
                             const FeedbackParams& fb, Rng& rng,
                             bool* lock_lost = nullptr) {
    if (lock_lost) *lock_lost = false;
    if (!fb.enabled) return drift;
    if (d3_window_counts <= 0.0) {
        if (lock_lost) *lock_lost = true;
        return drift;
    }
    return feedback_phase_error(d3_window_counts) * rng.gauss();
}

/// Interference of one gate's pulse pair at Charlie's beam splitter. The
/// residual misalignment and OPLL phase noise shift the fringe; D1 and D2 are
/// the complementary outputs and double clicks are discarded (None).
inline DetectionEvent interfere_and_detect(const PulseState& a, const PulseState& b,
                                           double residual_phase,
                                           const ChannelParams& channel,
                                           const DetectorParams& det, Rng& rng,
                                           double opll_phase_variance_rad2 = 0.0,
                                           std::uint64_t gate_index = 0) {
    DetectionEvent ev;
    ev.gate_index = gate_index;
    ev.alice = a;
    ev.bob = b;
    ev.drift_at_gate = residual_phase;

    double delta = a.encoded_phase() - b.encoded_phase() + residual_phase;
    if (opll_phase_variance_rad2 > 0.0)
        delta += std::sqrt(opll_phase_variance_rad2) * rng.gauss();

    const double flux_a = a.mean_photons * channel.arm_transmittance(User::Alice);
    const double flux_b = b.mean_photons * channel.arm_transmittance(User::Bob);
    const double pdc = det.dark_prob_per_gate();
    const double i1 =
        d1_intensity(flux_a, flux_b, det.visibility, channel.charlie_efficiency, delta);
    const double i2 = d1_intensity(flux_a, flux_b, det.visibility,
                                   channel.charlie_efficiency, delta + kPi);
    const bool c1 = rng.bernoulli(1.0 - (1.0 - pdc) * std::exp(-i1));
    const bool c2 = rng.bernoulli(1.0 - (1.0 - pdc) * std::exp(-i2));
    if (c1 != c2) ev.detector = c1 ? Detector::D1 : Detector::D2;
    return ev;
}

// --- sifting ---------------------------------------------------------------------------

struct SiftResult {
    MeasurementTallies tallies;
    std::uint64_t kept_key_bits = 0;   // sifted raw key length
    std::uint64_t key_errors = 0;      // disagreements after the pi-flip rule
    std::uint64_t kept_x_clicks = 0;   // phase-twin X-basis D1 clicks
    std::uint64_t kept_x_errors = 0;
};

namespace detail {

/// Streaming accumulator shared by sift() and the session engine.
class SiftAccumulator {
  public:
    explicit SiftAccumulator(const ProtocolConfig& cfg) : cfg_(cfg) {}

    void add(const DetectionEvent& ev) {
        const PulseState& a = ev.alice;
        const PulseState& b = ev.bob;
        if (a.is_reference || b.is_reference) return;
        if (a.basis != b.basis) return;  // mismatched bases are discarded

        Counter& c = counters_[{a.intensity, b.intensity, a.basis}];
        c.gates += 1;
        const bool click1 = ev.detector == Detector::D1;
        const bool click2 = ev.detector == Detector::D2;
        if (click1) c.clicks += 1;

        if (cfg_.variant == Variant::SendNotSend && a.basis == Basis::Z) {
            // Raw key from single clicks irrespective of the detector: the bit
            // encodes who emitted; both-or-neither events are key errors.
            if (!(click1 || click2)) return;
            const bool a_sent = a.intensity == IntensityLabel::u;
            const bool b_sent = b.intensity == IntensityLabel::u;
            kept_key_bits_ += 1;
            if (a_sent == b_sent) key_errors_ += 1;
            return;
        }

        if (!click1) return;  // announced key material comes from D1

        // Phase twins: |phi_a - phi_b| <= Delta modulo pi. The Curty encoding
        // basis never announces phases; its Z states share a fixed phase, so
        // the Delta = 0 condition holds by construction.
        TwinMatch tm;
        if (cfg_.variant == Variant::Curty)
            tm = a.basis == Basis::Z ? TwinMatch{true, false} : TwinMatch{false, false};
        else
            tm = phase_twin(a.global_phase, b.global_phase, cfg_.tolerance_delta);
        if (!tm.twin) return;

        const std::uint8_t bob_bit = tm.pi_pair ? (1 - b.bit) : b.bit;
        const bool error = a.bit != bob_bit;
        c.kept += 1;
        if (error) c.kept_err += 1;
        if (a.basis == Basis::Z) {
            kept_key_bits_ += 1;
            if (error) key_errors_ += 1;
        } else {
            kept_x_clicks_ += 1;
            if (error) kept_x_errors_ += 1;
        }
    }

    SiftResult finish() const {
        SiftResult out;
        using L = IntensityLabel;
        for (const auto& [key, c] : counters_) {
            if (c.gates == 0) continue;
            GainKey gk{key.la, key.lb, key.basis};
            out.tallies.set_gain(gk, static_cast<double>(c.clicks) / c.gates);
            out.tallies.set_pulses_sent(gk, c.gates);
            if (c.kept > 0)
                out.tallies.set_qber(gk, static_cast<double>(c.kept_err) / c.kept);
        }
        // Single-arm and vacuum gains from the w pairings, both bases pooled.
        for (L l : {L::u, L::v}) {
            pool_single_arm(out.tallies, User::Alice, l);
            pool_single_arm(out.tallies, User::Bob, l);
        }
        std::uint64_t vac_gates = 0, vac_clicks = 0;
        for (Basis bs : {Basis::Z, Basis::X}) {
            auto it = counters_.find({L::w, L::w, bs});
            if (it != counters_.end()) {
                vac_gates += it->second.gates;
                vac_clicks += it->second.clicks;
            }
        }
        if (vac_gates > 0)
            out.tallies.set_vacuum_gain(static_cast<double>(vac_clicks) / vac_gates);

        out.kept_key_bits = kept_key_bits_;
        out.key_errors = key_errors_;
        out.kept_x_clicks = kept_x_clicks_;
        out.kept_x_errors = kept_x_errors_;
        return out;
    }

  private:
    struct CombKey {
        IntensityLabel la, lb;
        Basis basis;
        auto operator<=>(const CombKey&) const = default;
    };
    struct Counter {
        std::uint64_t gates = 0;
        std::uint64_t clicks = 0;
        std::uint64_t kept = 0;      // phase-twin D1 clicks
        std::uint64_t kept_err = 0;
    };

    void pool_single_arm(MeasurementTallies& t, User who, IntensityLabel l) const {
        std::uint64_t gates = 0, clicks = 0;
        for (Basis bs : {Basis::Z, Basis::X}) {
            const CombKey key = who == User::Alice
                                    ? CombKey{l, IntensityLabel::w, bs}
                                    : CombKey{IntensityLabel::w, l, bs};
            auto it = counters_.find(key);
            if (it != counters_.end()) {
                gates += it->second.gates;
                clicks += it->second.clicks;
            }
        }
        if (gates > 0)
            t.set_single_arm_gain(who, l, static_cast<double>(clicks) / gates);
    }

    ProtocolConfig cfg_;
    std::map<CombKey, Counter> counters_;
    std::uint64_t kept_key_bits_ = 0;
    std::uint64_t key_errors_ = 0;
    std::uint64_t kept_x_clicks_ = 0;
    std::uint64_t kept_x_errors_ = 0;
};

}  // namespace detail

/// Sifts a completed session's announced events into tallies and key counts.
inline SiftResult sift(const std::vector<DetectionEvent>& events,
                       const ProtocolConfig& cfg) {
    detail::SiftAccumulator acc(cfg);
    for (const DetectionEvent& ev : events) acc.add(ev);
    return acc.finish();
}

// --- full session ------------------------------------------------------------------------

struct SessionResult {
    SiftResult sift;
    std::vector<double> qber_trace;   // per simulated second, bit-flip folded
    std::uint64_t lock_loss_events = 0;
    std::uint64_t encoded_gates = 0;
    double mean_trace_qber = 0.0;
    std::uint64_t rng_seed = 0;
};

/// Runs the event-level session: encoded and reference gates interleave at the
/// configured duty cycle, the relative phase random-walks between feedback
/// corrections, and D3 counts on the reference pulses drive the corrections.
inline SessionResult run_session(const SessionConfig& cfg) {
    cfg.validate();
    SessionResult out;
    out.rng_seed = cfg.rng_seed;
    out.encoded_gates = cfg.n_gates;
    if (cfg.n_gates == 0) return out;

    Rng rng(cfg.rng_seed);
    detail::SiftAccumulator acc(cfg.protocol);

    const double duty = cfg.fb.reference_duty;
    const double pulse_rate = cfg.det.clock_rate_hz / (1.0 - duty);
    const double dt_pulse = 1.0 / pulse_rate;
    const double eta_c = cfg.channel.charlie_efficiency;
    const double fa_ref =
        cfg.protocol.intensities.u * cfg.channel.arm_transmittance(User::Alice);
    const double fb_ref =
        cfg.protocol.intensities.u * cfg.channel.arm_transmittance(User::Bob);
    const double pdc = cfg.det.dark_prob_per_gate();
    const double d3_c0 = eta_c * (fa_ref + fb_ref) / 2.0 + pdc;
    const double d3_c1 = eta_c * cfg.det.visibility * std::sqrt(fa_ref * fb_ref);

    // Drift advances in blocks; within a block the phase is constant, which is
    // accurate because per-pulse steps are far below the feedback resolution.
    constexpr std::uint64_t kBlock = 1024;
    const double dt_block = dt_pulse * kBlock;

    double phase_error = 0.0;  // misalignment relative to the lock point
    double d3_expected = 0.0;
    const std::uint64_t window_pulses = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(cfg.fb.correction_interval_s * pulse_rate));
    const auto second_gates = static_cast<std::uint64_t>(cfg.det.clock_rate_hz);

    std::uint64_t trace_clicks = 0, trace_errors = 0, gates_into_second = 0;
    std::uint64_t encoded_done = 0, pulse_index = 0;
    double duty_acc = 0.0;

    while (encoded_done < cfg.n_gates) {
        if (pulse_index % kBlock == 0 && cfg.fb.drift_rate_rad_per_s > 0.0) {
            phase_error = step_drift(phase_error, dt_block, cfg.fb, rng);
            if (phase_error > kPi) phase_error -= 2.0 * kPi;
        }
        duty_acc += duty;
        const bool reference_slot = duty_acc >= 1.0;
        if (reference_slot) {
            duty_acc -= 1.0;
            // Quadrature-locked D3 rate: C0 + C1 (1 - cos(pi/2 + err)).
            d3_expected += d3_counts(kPi / 2.0 + phase_error, d3_c0, d3_c1);
        } else {
            PulseState a = prepare_pulse(User::Alice, cfg, rng);
            PulseState b = prepare_pulse(User::Bob, cfg, rng);
            DetectionEvent ev =
                interfere_and_detect(a, b, phase_error, cfg.channel, cfg.det, rng,
                                     cfg.fb.opll_phase_variance_rad2, encoded_done);
            acc.add(ev);
            ++encoded_done;

            // Per-second trace: QBER of phase-twin signal pairs, folded.
            if (ev.detector == Detector::D1 && a.basis == b.basis &&
                a.intensity == IntensityLabel::u && b.intensity == IntensityLabel::u) {
                const TwinMatch tm =
                    cfg.protocol.variant == Variant::Curty
                        ? TwinMatch{a.basis == Basis::Z, false}
                        : phase_twin(a.global_phase, b.global_phase,
                                     cfg.protocol.tolerance_delta);
                if (tm.twin) {
                    const std::uint8_t bob_bit = tm.pi_pair ? (1 - b.bit) : b.bit;
                    ++trace_clicks;
                    if (a.bit != bob_bit) ++trace_errors;
                }
            }
            if (++gates_into_second >= second_gates) {
                const double e =
                    trace_clicks ? static_cast<double>(trace_errors) / trace_clicks : 0.0;
                out.qber_trace.push_back(std::min(e, 1.0 - e));
                trace_clicks = trace_errors = 0;
                gates_into_second = 0;
            }
        }
        ++pulse_index;

        if (cfg.fb.enabled && pulse_index % window_pulses == 0) {
            const auto counts = static_cast<double>(rng.poisson(d3_expected));
            bool lost = false;
            phase_error = apply_feedback(phase_error, counts, cfg.fb, rng, &lost);
            if (lost) ++out.lock_loss_events;
            d3_expected = 0.0;
        }
    }
    if (gates_into_second > 0 && trace_clicks > 0) {
        const double e = static_cast<double>(trace_errors) / trace_clicks;
        out.qber_trace.push_back(std::min(e, 1.0 - e));
    }
    out.sift = acc.finish();
    if (!out.qber_trace.empty()) {
        double s = 0.0;
        for (double q : out.qber_trace) s += q;
        out.mean_trace_qber = s / out.qber_trace.size();
    }
    return out;
}

// --- aggregated trace engine ---------------------------------------------------------------

struct TraceResult {
    std::vector<double> qber_per_second;  // bit-flip folded
    double mean_qber = 0.0;
    double min_qber = 1.0;
    double max_qber = 0.0;
    std::uint64_t lock_loss_events = 0;
};

/// Simulates `duration_s` of matched signal transmission at full clock rate by
/// drawing binomial click/error counts per drift sub-step instead of per gate.
inline TraceResult run_trace_session(const SessionConfig& cfg, double duration_s,
                                     int substeps_per_window = 10) {
    cfg.validate();
    if (duration_s <= 0.0) throw std::domain_error("run_trace_session: duration <= 0");
    if (substeps_per_window < 1)
        throw std::domain_error("run_trace_session: substeps < 1");
    Rng rng(cfg.rng_seed);
    TraceResult out;

    const double eta_c = cfg.channel.charlie_efficiency;
    const double mu = cfg.protocol.intensities.u;
    const double fa = mu * cfg.channel.arm_transmittance(User::Alice);
    const double fbx = mu * cfg.channel.arm_transmittance(User::Bob);
    const double pdc = cfg.det.dark_prob_per_gate();
    // OPLL jitter washes out a little fringe contrast on top of the static
    // visibility.
    const double vis = cfg.det.visibility * std::exp(-cfg.fb.opll_phase_variance_rad2 / 2.0);
    const double d3_c0 = eta_c * (fa + fbx) / 2.0 + pdc;
    const double d3_c1 = eta_c * vis * std::sqrt(fa * fbx);
    const double ref_rate = cfg.fb.reference_rate_hz(cfg.det);

    const double window =
        cfg.fb.enabled ? cfg.fb.correction_interval_s : duration_s;
    const double dt = window / substeps_per_window;
    const auto gates_per_step = static_cast<std::uint64_t>(cfg.det.clock_rate_hz * dt);

    double phase_error = cfg.fb.enabled ? 0.0 : rng.uniform() * 2.0 * kPi;
    double t = 0.0, t_second = 0.0, t_window = 0.0, d3_expected = 0.0;
    std::uint64_t clicks = 0, errors = 0;

    while (t < duration_s) {
        phase_error = step_drift(phase_error, dt, cfg.fb, rng);
        if (phase_error > kPi) phase_error -= 2.0 * kPi;

        const double i_ok = d1_intensity(fa, fbx, vis, eta_c, phase_error);
        const double i_err = d1_intensity(fa, fbx, vis, eta_c, phase_error + kPi);
        const double p_ok = 1.0 - (1.0 - pdc) * std::exp(-i_ok);
        const double p_err = 1.0 - (1.0 - pdc) * std::exp(-i_err);
        // Half of the matched pairs encode equal bits (fringe at delta), half
        // opposite (delta + pi); D1 clicks on the latter are errors.
        const std::uint64_t n_half = gates_per_step / 2;
        const std::uint64_t c_ok = rng.binomial(n_half, p_ok);
        const std::uint64_t c_err = rng.binomial(n_half, p_err);
        clicks += c_ok + c_err;
        errors += c_err;

        d3_expected += d3_counts(kPi / 2.0 + phase_error, d3_c0, d3_c1) * ref_rate * dt;
        t += dt;
        t_second += dt;
        t_window += dt;

        if (cfg.fb.enabled && t_window >= window - 1e-12) {
            const auto counts = static_cast<double>(rng.poisson(d3_expected));
            bool lost = false;
            phase_error = apply_feedback(phase_error, counts, cfg.fb, rng, &lost);
            if (lost) ++out.lock_loss_events;
            d3_expected = 0.0;
            t_window = 0.0;
        }
        if (t_second >= 1.0 - 1e-12) {
            double e = clicks ? static_cast<double>(errors) / clicks : 0.0;
            e = std::min(e, 1.0 - e);
            out.qber_per_second.push_back(e);
            out.min_qber = std::min(out.min_qber, e);
            out.max_qber = std::max(out.max_qber, e);
            clicks = errors = 0;
            t_second = 0.0;
        }
    }
    if (!out.qber_per_second.empty()) {
        double s = 0.0;
        for (double q : out.qber_per_second) s += q;
        out.mean_qber = s / out.qber_per_second.size();
    }
    return out;
}

}  // namespace tfqkd
