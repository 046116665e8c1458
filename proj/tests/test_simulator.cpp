#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tfqkd/linkmodel.hpp"
#include "tfqkd/reference.hpp"
#include "tfqkd/simulator.hpp"

using namespace tfqkd;
using Catch::Approx;

namespace {
SessionConfig base_session(double loss_db, Variant v = Variant::Original) {
    SessionConfig cfg;
    cfg.protocol = reference::protocol(v);
    cfg.channel = reference::channel(loss_db);
    cfg.det = reference::detector();
    cfg.fb = reference::feedback();
    cfg.rng_seed = 777;
    return cfg;
}
}  // namespace

TEST_CASE("encoded phase composition") {
    PulseState p;
    p.bit = 1;
    p.basis = Basis::Z;
    p.global_phase = 0.0;
    CHECK(p.encoded_phase() == Approx(kPi));
    p.basis = Basis::X;
    CHECK(p.encoded_phase() == Approx(3.0 * kPi / 2.0));
    p.global_phase = kPi;  // wraps modulo 2*pi
    CHECK(p.encoded_phase() == Approx(kPi / 2.0));
}

TEST_CASE("send-not-send with epsilon one always emits the signal") {
    SessionConfig cfg = base_session(30.0, Variant::SendNotSend);
    cfg.protocol.epsilon = 1.0;
    cfg.protocol.basis_prob_z = 1.0;
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const PulseState p = prepare_pulse(User::Alice, cfg, rng);
        REQUIRE(p.basis == Basis::Z);
        CHECK(p.intensity == IntensityLabel::u);
    }
}

TEST_CASE("curty randomises the phase only in the test basis") {
    SessionConfig cfg = base_session(30.0, Variant::Curty);
    cfg.protocol.basis_prob_z = 0.5;
    Rng rng(4);
    int x_nonzero = 0, x_count = 0;
    for (int i = 0; i < 2000; ++i) {
        const PulseState p = prepare_pulse(User::Alice, cfg, rng);
        if (p.basis == Basis::Z) {
            CHECK(p.global_phase == 0.0);
        } else {
            ++x_count;
            x_nonzero += p.global_phase != 0.0 ? 1 : 0;
        }
    }
    CHECK(x_count > 0);
    CHECK(x_nonzero > x_count / 2);
    // and the Curty announcement never discloses global phases
    CHECK_FALSE(global_phase_announced(Variant::Curty, Basis::Z));
    CHECK_FALSE(global_phase_announced(Variant::Curty, Basis::X));
    CHECK(global_phase_announced(Variant::SendNotSend, Basis::X));
    CHECK_FALSE(global_phase_announced(Variant::SendNotSend, Basis::Z));
    CHECK(global_phase_announced(Variant::Original, Basis::Z));
}

TEST_CASE("discrete phase levels are sampled uniformly") {
    SessionConfig cfg = base_session(30.0);
    cfg.protocol.basis_prob_z = 1.0;
    Rng rng(5);
    const int n = 1 << 20;
    std::vector<int> hist(32, 0);
    for (int i = 0; i < n; ++i) {
        const PulseState p = prepare_pulse(User::Alice, cfg, rng);
        const int level =
            static_cast<int>(std::lround(p.global_phase / (2.0 * kPi / 32.0))) % 32;
        ++hist[level];
    }
    const double expect = n / 32.0;
    const double sigma = std::sqrt(expect * (1.0 - 1.0 / 32.0));
    for (int level = 0; level < 32; ++level)
        CHECK(std::abs(hist[level] - expect) < 5.0 * sigma);
}

TEST_CASE("drift step statistics", "[slow]") {
    FeedbackParams fb;
    fb.drift_rate_rad_per_s = 0.7;
    Rng rng(6);
    // zero rate leaves the phase untouched
    FeedbackParams still = fb;
    still.drift_rate_rad_per_s = 0.0;
    CHECK(step_drift(1.234, 1.0, still, rng) == Approx(1.234));

    // increment std at dt = 1 s equals the drift rate (5% at 1e4 samples)
    const int n = 10000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = step_drift(0.0, 1.0, fb, rng);
        if (d > kPi) d -= 2.0 * kPi;
        acc += d * d;
    }
    CHECK(std::sqrt(acc / n) == Approx(0.7).epsilon(0.05));
}

TEST_CASE("same seed reproduces the same trajectory") {
    FeedbackParams fb;
    Rng a(99), b(99);
    double pa = 0.1, pb = 0.1;
    for (int i = 0; i < 100; ++i) {
        pa = step_drift(pa, 0.01, fb, a);
        pb = step_drift(pb, 0.01, fb, b);
    }
    CHECK(pa == pb);
}

TEST_CASE("feedback correction statistics") {
    FeedbackParams fb;
    Rng rng(7);
    bool lost = false;
    // zero counts: lock loss, drift passes through
    CHECK(apply_feedback(0.42, 0.0, fb, rng, &lost) == Approx(0.42));
    CHECK(lost);
    // disabled feedback returns the drift unchanged
    FeedbackParams off = fb;
    off.enabled = false;
    CHECK(apply_feedback(1.0, 1e6, off, rng, &lost) == Approx(1.0));

    // residual std ~ 2/sqrt(C) = 0.1 at 400 counts
    const int n = 20000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = apply_feedback(0.3, 400.0, fb, rng);
        acc += r * r;
    }
    CHECK(std::sqrt(acc / n) == Approx(0.1).epsilon(0.05));
}

TEST_CASE("interference fringe drives the detector choice") {
    ChannelParams ch = reference::channel(6.0);
    ch.charlie_efficiency = 1.0;
    DetectorParams det = reference::detector();
    det.dark_count_rate_hz = 0.0;
    det.visibility = 1.0;
    Rng rng(8);
    PulseState a, b;
    a.mean_photons = b.mean_photons = 0.5;

    int d1 = 0, d2 = 0;
    for (int i = 0; i < 20000; ++i) {
        const DetectionEvent ev = interfere_and_detect(a, b, 0.0, ch, det, rng);
        d1 += ev.detector == Detector::D1;
        d2 += ev.detector == Detector::D2;
    }
    CHECK(d1 > 1000);
    CHECK(d2 == 0);  // perfect visibility: the destructive port stays dark

    // a pi phase difference swaps the roles
    b.bit = 1;
    d1 = d2 = 0;
    for (int i = 0; i < 20000; ++i) {
        const DetectionEvent ev = interfere_and_detect(a, b, 0.0, ch, det, rng);
        d1 += ev.detector == Detector::D1;
        d2 += ev.detector == Detector::D2;
    }
    CHECK(d2 > 1000);
    CHECK(d1 == 0);
}

TEST_CASE("monte carlo gain matches the analytic model", "[slow]") {
    const DetectorParams det = reference::detector();
    for (double L : {20.0, 40.0}) {
        const ChannelParams ch = reference::channel(L);
        Rng rng(1000 + static_cast<std::uint64_t>(L));
        PulseState a, b;
        a.mean_photons = b.mean_photons = 0.2;
        const std::uint64_t n = 4'000'000;
        std::uint64_t clicks = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            a.global_phase = rng.uniform() * 2.0 * kPi;
            b.global_phase = rng.uniform() * 2.0 * kPi;
            clicks += interfere_and_detect(a, b, 0.0, ch, det, rng).detector ==
                      Detector::D1;
        }
        const double expect = expected_gain(0.2, 0.2, ch, det, GainMode::Double);
        const double sigma = std::sqrt(expect * (1.0 - expect) / n);
        CHECK(std::abs(static_cast<double>(clicks) / n - expect) < 4.0 * sigma);
    }
}

TEST_CASE("sift keeps pi twins with a bit flip") {
    ProtocolConfig cfg = reference::protocol(Variant::Original);
    cfg.tolerance_delta = 0.0;
    std::vector<DetectionEvent> events;

    DetectionEvent ev;
    ev.detector = Detector::D1;
    ev.alice.basis = ev.bob.basis = Basis::Z;
    ev.alice.intensity = ev.bob.intensity = IntensityLabel::u;
    ev.alice.bit = 0;
    ev.bob.bit = 1;
    ev.alice.global_phase = kPi;  // exactly pi apart: kept, Bob flips
    ev.bob.global_phase = 0.0;
    events.push_back(ev);
    ev.alice.global_phase = 0.7;  // not twins: dropped
    events.push_back(ev);

    const SiftResult res = sift(events, cfg);
    CHECK(res.kept_key_bits == 1);
    CHECK(res.key_errors == 0);  // 0 vs flipped(1) agree
}

TEST_CASE("sift on an empty session yields empty tallies") {
    const SiftResult res = sift({}, reference::protocol(Variant::Original));
    CHECK(res.kept_key_bits == 0);
    CHECK(res.tallies.all_gains().empty());
}

TEST_CASE("raw keys agree exactly under zero noise and zero tolerance") {
    ProtocolConfig cfg = reference::protocol(Variant::Original);
    cfg.tolerance_delta = 0.0;
    ChannelParams ch = reference::channel(3.0);
    ch.charlie_efficiency = 1.0;
    DetectorParams det = reference::detector();
    det.dark_count_rate_hz = 0.0;
    det.visibility = 1.0;
    Rng rng(11);

    std::vector<DetectionEvent> events;
    for (int i = 0; i < 40000; ++i) {
        PulseState a, b;
        a.basis = b.basis = Basis::Z;
        a.intensity = b.intensity = IntensityLabel::u;
        a.mean_photons = b.mean_photons = 0.2;
        a.bit = rng.bernoulli(0.5);
        b.bit = rng.bernoulli(0.5);
        const double phi = rng.uniform_int(16) * 2.0 * kPi / 16.0;
        a.global_phase = b.global_phase = phi;  // identical announced phases
        events.push_back(interfere_and_detect(a, b, 0.0, ch, det, rng));
    }
    const SiftResult res = sift(events, cfg);
    REQUIRE(res.kept_key_bits > 1000);
    CHECK(res.key_errors == 0);
}

TEST_CASE("session runs are reproducible and empty sessions are valid") {
    SessionConfig cfg = base_session(25.0);
    cfg.n_gates = 0;
    const SessionResult empty = run_session(cfg);
    CHECK(empty.encoded_gates == 0);
    CHECK(empty.qber_trace.empty());

    cfg.n_gates = 200000;
    cfg.det.clock_rate_hz = 1e5;  // several trace seconds at desk scale
    const SessionResult r1 = run_session(cfg);
    const SessionResult r2 = run_session(cfg);
    CHECK(r1.sift.kept_key_bits == r2.sift.kept_key_bits);
    CHECK(r1.sift.key_errors == r2.sift.key_errors);
    CHECK(r1.qber_trace == r2.qber_trace);
    using L = IntensityLabel;
    const auto g1 = r1.sift.tallies.gain({L::u, L::u, Basis::Z});
    const auto g2 = r2.sift.tallies.gain({L::u, L::u, Basis::Z});
    REQUIRE(g1.has_value());
    CHECK(*g1 == *g2);
}

TEST_CASE("session tallies agree with the link model at 30 dB", "[slow]") {
    SessionConfig cfg = base_session(30.0);
    cfg.protocol.basis_prob_z = 0.0;     // X only
    cfg.x_intensity_probs = {1.0, 0.0, 0.0};
    cfg.continuous_phase = true;
    cfg.fb.drift_rate_rad_per_s = 0.0;   // static link for a clean comparison
    cfg.fb.enabled = false;
    cfg.fb.opll_phase_variance_rad2 = 0.0;
    cfg.n_gates = 8'000'000;
    const SessionResult res = run_session(cfg);
    const auto q = res.sift.tallies.gain({IntensityLabel::u, IntensityLabel::u, Basis::X});
    REQUIRE(q.has_value());
    const double expect =
        expected_gain(0.2, 0.2, cfg.channel, cfg.det, GainMode::Double);
    const double sigma = std::sqrt(expect / cfg.n_gates);
    CHECK(std::abs(*q - expect) < 5.0 * sigma);
}

TEST_CASE("trace engine produces sane traces") {
    SessionConfig cfg = base_session(30.0);
    cfg.fb.correction_interval_s = 0.01;
    cfg.rng_seed = 21;
    const TraceResult on = run_trace_session(cfg, 10.0, 10);
    REQUIRE(on.qber_per_second.size() == 10);
    CHECK(on.mean_qber > 0.005);
    CHECK(on.mean_qber < 0.05);

    SessionConfig off = cfg;
    off.fb.enabled = false;
    const TraceResult free_running = run_trace_session(off, 60.0, 20);
    CHECK(free_running.max_qber > on.mean_qber);
}
