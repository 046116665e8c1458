#include <catch2/catch_amalgamated.hpp>

#include "tfqkd/core.hpp"

using namespace tfqkd;
using Catch::Approx;

TEST_CASE("db_to_transmittance basics") {
    CHECK(db_to_transmittance(0.0) == Approx(1.0));
    CHECK(db_to_transmittance(10.0) == Approx(0.1));
    // high-precision reference: 10^(-7.11)
    CHECK(db_to_transmittance(71.1) == Approx(7.7624711662869173e-8).epsilon(1e-12));
    CHECK_THROWS_AS(db_to_transmittance(-0.1), std::domain_error);
}

TEST_CASE("db_to_transmittance is multiplicative over addition") {
    for (double a : {0.0, 3.0, 10.7, 45.4})
        for (double b : {0.5, 21.5, 35.6}) {
            const double lhs = db_to_transmittance(a + b);
            const double rhs = db_to_transmittance(a) * db_to_transmittance(b);
            CHECK(lhs == Approx(rhs).epsilon(1e-14));
        }
}

TEST_CASE("binary entropy values and limits") {
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.5) == Approx(1.0).epsilon(1e-15));
    // high-precision reference at the 71.1 dB signal QBER
    CHECK(binary_entropy(0.0186) == Approx(0.13350610493748176).epsilon(1e-12));
    CHECK_THROWS_AS(binary_entropy(-0.01), std::domain_error);
    CHECK_THROWS_AS(binary_entropy(1.01), std::domain_error);
}

TEST_CASE("binary entropy symmetry and concavity") {
    for (double x = 0.01; x < 1.0; x += 0.037)
        CHECK(binary_entropy(x) == Approx(binary_entropy(1.0 - x)).epsilon(1e-12));
    for (double x = 0.05; x < 0.9; x += 0.11)
        for (double y = x + 0.02; y < 0.95; y += 0.13) {
            const double mid = binary_entropy((x + y) / 2.0);
            const double avg = (binary_entropy(x) + binary_entropy(y)) / 2.0;
            CHECK(mid >= avg - 1e-12);
        }
}

TEST_CASE("channel params split and validation") {
    ChannelParams ch;
    ch.total_loss_db = 30.0;
    ch.asymmetry_db = 4.0;
    ch.validate();
    CHECK(ch.arm_loss_db(User::Alice) == Approx(17.0));
    CHECK(ch.arm_loss_db(User::Bob) == Approx(13.0));

    ch.asymmetry_db = 40.0;
    CHECK_THROWS_AS(ch.validate(), std::domain_error);
    ch = ChannelParams{};
    ch.charlie_efficiency = 1.2;
    CHECK_THROWS_AS(ch.validate(), std::domain_error);
}

TEST_CASE("detector params dark probability") {
    DetectorParams det;
    det.dark_count_rate_hz = 22.0;
    det.gate_width_s = 0.5e-9;
    CHECK(det.dark_prob_per_gate() == Approx(1.1e-8));
    det.validate();
    det.gate_width_s = 1.0;  // p_dc per gate would be 22
    CHECK_THROWS_AS(det.validate(), std::domain_error);
}

TEST_CASE("intensity triple orderings") {
    IntensityTriple ok{0.2, 0.08, 5e-6};
    ok.validate();
    IntensityTriple curty{0.02, 0.2, 5e-6};  // decoy above signal is allowed
    curty.validate();
    IntensityTriple equal{0.2, 0.2, 5e-6};
    CHECK_THROWS_AS(equal.validate(), std::domain_error);
    IntensityTriple big_w{0.2, 0.08, 0.1};
    CHECK_THROWS_AS(big_w.validate(), std::domain_error);
    CHECK(ok.total(IntensityLabel::u) == Approx(0.4));
}

TEST_CASE("protocol config invariants") {
    ProtocolConfig p;
    p.validate();
    p.phase_slices_m = 15;
    CHECK_THROWS_AS(p.validate(), std::domain_error);
    p = ProtocolConfig{};
    p.y_cut = 20;
    p.n_cut = 20;
    CHECK_THROWS_AS(p.validate(), std::domain_error);
    p = ProtocolConfig{};
    p.f_ec = 0.9;
    CHECK_THROWS_AS(p.validate(), std::domain_error);
}

TEST_CASE("tallies reject out-of-range values and normalise QBERs") {
    MeasurementTallies t;
    const GainKey k{IntensityLabel::u, IntensityLabel::u, Basis::X};
    CHECK_THROWS_AS(t.set_gain(k, 1.5), std::domain_error);
    CHECK_THROWS_AS(t.set_gain(k, -0.1), std::domain_error);
    CHECK_THROWS_AS(t.set_qber(k, 1.2), std::domain_error);

    t.set_qber(k, 0.93);  // stored after the bit-flip fold
    CHECK(*t.qber(k) == Approx(0.07));
    CHECK(*t.raw_qber(k) == Approx(0.93));
    CHECK_FALSE(t.gain(k).has_value());
}

TEST_CASE("key rate report clamps and converts") {
    KeyRateReport r;
    r.finalize(1e9, -1e-6);
    CHECK(r.skr_bits_per_gate == 0.0);
    CHECK(r.rate_clamped_to_zero);

    KeyRateReport r2;
    r2.finalize(1e9, 3.0);  // cannot exceed one bit per gate
    CHECK(r2.skr_bits_per_gate == 1.0);
    CHECK(r2.skr_bits_per_second == Approx(1e9));

    KeyRateReport r3;
    r3.skc0_ideal_bps = 200.0;
    r3.finalize(1e9, 4e-7);
    CHECK(r3.skr_bits_per_second == Approx(400.0));
    CHECK(r3.supremacy_ratio == Approx(2.0));
}
