#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <random>

#include "tfqkd/keyrates.hpp"
#include "tfqkd/reference.hpp"

using namespace tfqkd;
using Catch::Approx;

namespace {
RateParams params() {
    RateParams p;
    p.clock_rate_hz = 1e9;
    return p;
}

DecoyInputs inputs_305() {
    DecoyInputs d;
    d.u = 0.4;
    d.v = 0.16;
    d.w = 1e-5;
    d.q_u = 1984.0e-6;
    d.q_v = 765.7e-6;
    d.q_w = 25.9e-9;
    d.e_u = 0.0179;
    d.e_v = 0.0196;
    d.e_w = 0.5;
    return d;
}
}  // namespace

TEST_CASE("slice misalignment matches the M = 16 constant") {
    CHECK(slice_misalignment(16) == Approx(0.012752320797783677).epsilon(1e-12));
    CHECK(slice_misalignment(32) < slice_misalignment(16));
}

TEST_CASE("slice misalignment equals the fringe-error average over one slice") {
    // numeric integration of sin^2(d/2) over a slice of width 2*pi/M
    for (int m : {8, 16, 32}) {
        const double s = 2.0 * kPi / m;
        const int n = 200000;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = s * (i + 0.5) / n;
            acc += std::sin(d / 2.0) * std::sin(d / 2.0);
        }
        acc /= n;
        CHECK(slice_misalignment(m) == Approx(acc).epsilon(1e-4));
    }
}

TEST_CASE("ideal repeaterless bound anchors") {
    CHECK(skc0_ideal(transmittance_to_db(0.5), 1.0) == Approx(1.0).epsilon(1e-9));
    CHECK(skc0_ideal(71.1, 1e9) == Approx(111.98879091).epsilon(1e-8));
    CHECK(skc0_ideal(71.1, 1e9) == Approx(112.0).epsilon(0.01));
    CHECK(skc0_ideal(21.5, 1e9) == Approx(10249823.28).epsilon(1e-6));
    // monotone in loss
    double prev = skc0_ideal(10.0, 1e9);
    for (double L = 15.0; L <= 90.0; L += 5.0) {
        const double cur = skc0_ideal(L, 1e9);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("realistic bound sits strictly below the ideal one") {
    const double eta_eff = 0.35 * db_to_transmittance(3.0);
    CHECK(skc0_realistic(0.0, 1.0) ==
          Approx(-std::log2(1.0 - eta_eff)).epsilon(1e-12));
    for (double L = 5.0; L <= 90.0; L += 8.5)
        CHECK(skc0_realistic(L, 1e9) < skc0_ideal(L, 1e9));
}

TEST_CASE("original rate: no detections, no key") {
    DecoyInputs d = inputs_305();
    d.q_u = d.q_v = d.q_w = 0.0;
    const KeyRateReport r = skr_original(d, params(), 30.5);
    CHECK(r.skr_bits_per_second == 0.0);
    CHECK(r.failure_reason.has_value());
}

TEST_CASE("original rate responds to the table row") {
    const KeyRateReport r = skr_original(inputs_305(), params(), 30.5, true);
    CHECK(r.skr_bits_per_second > 0.0);
    CHECK(r.y1_lower == Approx(4.4271e-3).epsilon(1e-3));
    CHECK(r.skc0_ideal_bps == Approx(skc0_ideal(30.5, 1e9)));
    // monotone non-increasing in the signal QBER
    DecoyInputs worse = inputs_305();
    worse.e_u += 0.01;
    CHECK(skr_original(worse, params(), 30.5, true).skr_bits_per_second <
          r.skr_bits_per_second);
    // and in the decoy QBER feeding e1
    worse = inputs_305();
    worse.e_v += 0.01;
    CHECK(skr_original(worse, params(), 30.5, true).skr_bits_per_second <
          r.skr_bits_per_second);
}

TEST_CASE("send-not-send rate at the degenerate never-send point") {
    using L = IntensityLabel;
    MeasurementTallies t;
    t.set_gain({L::u, L::u, Basis::X}, 1984.0e-6);
    t.set_gain({L::v, L::v, Basis::X}, 765.7e-6);
    t.set_qber({L::u, L::u, Basis::X}, 0.0179);
    t.set_qber({L::v, L::v, Basis::X}, 0.0196);
    t.set_single_arm_gain(User::Alice, L::u, 993.4e-6);
    t.set_single_arm_gain(User::Bob, L::u, 985.8e-6);
    t.set_vacuum_gain(25.9e-9);

    RateParams p = params();
    p.epsilon = 0.0;  // never send: Qz collapses to the vacuum gain, Ez to 1
    const KeyRateReport r = skr_send_not_send(t, reference::main_intensities(), p, 30.5);
    CHECK(r.skr_bits_per_second == 0.0);

    p.epsilon = 0.078;
    const KeyRateReport ok = skr_send_not_send(t, reference::main_intensities(), p, 30.5);
    CHECK(ok.skr_bits_per_second > 0.0);

    MeasurementTallies missing;
    missing.set_gain({L::u, L::u, Basis::X}, 1984.0e-6);
    missing.set_gain({L::v, L::v, Basis::X}, 765.7e-6);
    missing.set_qber({L::v, L::v, Basis::X}, 0.0196);
    CHECK_THROWS_AS(skr_send_not_send(missing, reference::main_intensities(), p, 30.5),
                    std::invalid_argument);
}

TEST_CASE("curty rate clamps when the phase error saturates") {
    const PhaseErrorResult half{0.5, true};
    const KeyRateReport r = skr_curty(1.79e-6, 0.0265, half, params(), 71.1);
    CHECK(r.skr_bits_per_second == 0.0);
    CHECK(r.rate_clamped_to_zero);

    const PhaseErrorResult good{0.16, false};
    const KeyRateReport ok = skr_curty(1.79e-6, 0.0265, good, params(), 71.1);
    CHECK(ok.skr_bits_per_second > 0.0);
    CHECK(ok.e1x_upper.has_value());
}

TEST_CASE("rates stay within [0, 1] bits per gate under random inputs") {
    std::mt19937_64 eng(55);
    auto rnd = [&] { return (eng() >> 11) * 0x1.0p-53; };
    for (int t = 0; t < 50; ++t) {
        DecoyInputs d = inputs_305();
        d.q_u = rnd() * 0.01;
        d.q_v = rnd() * 0.005;
        d.e_u = rnd() * 0.2;
        d.e_v = rnd() * 0.2;
        const KeyRateReport r = skr_original(d, params(), 40.0);
        CHECK(r.skr_bits_per_gate >= 0.0);
        CHECK(r.skr_bits_per_gate <= 1.0);
    }
}

TEST_CASE("supremacy report flags only positive beating rates") {
    KeyRateReport zero;
    zero.skc0_ideal_bps = 100.0;
    zero.skc0_realistic_bps = 10.0;
    zero.finalize(1e9, -1.0);
    const auto rows = supremacy_report({{70.0, zero}});
    CHECK_FALSE(rows[0].beats_ideal);
    CHECK_FALSE(rows[0].beats_realistic);

    KeyRateReport beat;
    beat.skc0_ideal_bps = 100.0;
    beat.skc0_realistic_bps = 10.0;
    beat.finalize(1e9, 250.0 / 1e9);
    const auto rows2 = supremacy_report({{70.0, beat}});
    CHECK(rows2[0].beats_ideal);
    CHECK(rows2[0].ratio_ideal == Approx(2.5));
    CHECK(rows2[0].beats_realistic);
}
