#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tfqkd/linkmodel.hpp"
#include "tfqkd/reference.hpp"

using namespace tfqkd;
using Catch::Approx;

namespace {
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log10(x[i]), ly = std::log10(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace

TEST_CASE("vacuum input gives only dark counts") {
    const DetectorParams det = reference::detector();
    const double q = expected_gain(0.0, 0.0, reference::channel(40.0), det,
                                   GainMode::Double);
    CHECK(q == Approx(det.dark_prob_per_gate()).epsilon(1e-6));
}

TEST_CASE("double-path gain lands near the measured 21.5 dB point") {
    // 20% model-vs-measurement tolerance
    const double q = expected_gain(0.2, 0.2, reference::channel(21.5),
                                   reference::detector(), GainMode::Double);
    CHECK(q == Approx(5562.8e-6).epsilon(0.20));
}

TEST_CASE("single-arm gain lands near the measured 10.7 dB point") {
    const double q = expected_gain(0.2, 0.0, reference::channel(10.7),
                                   reference::detector(), GainMode::SingleArmA);
    CHECK(q == Approx(3000.8e-6).epsilon(0.20));
}

TEST_CASE("scaling exponents: sqrt for double path, linear for single") {
    DetectorParams det = reference::detector();
    det.dark_count_rate_hz = 0.0;
    std::vector<double> eta, gd, gs;
    for (double L : {20.0, 30.0, 40.0, 50.0, 60.0}) {
        eta.push_back(db_to_transmittance(L));
        gd.push_back(expected_gain(0.2, 0.2, reference::channel(L), det, GainMode::Double));
        gs.push_back(expected_gain(0.4, 0.0, reference::channel(L), det,
                                   GainMode::SingleArmA));
    }
    CHECK(loglog_slope(eta, gd) == Approx(0.5).margin(0.005));
    CHECK(loglog_slope(eta, gs) == Approx(1.0).margin(0.005));
}

TEST_CASE("double path at 2L matches single path at L with matched total flux") {
    DetectorParams det = reference::detector();
    det.dark_count_rate_hz = 0.0;
    for (double arm = 10.0; arm <= 60.0; arm += 12.5) {
        const double qd = expected_gain(0.2, 0.2, reference::channel(2.0 * arm), det,
                                        GainMode::Double);
        const double qs =
            expected_gain(0.4, 0.0, reference::channel(arm), det, GainMode::SingleArmA);
        CHECK(qd == Approx(qs).epsilon(0.05));
    }
}

TEST_CASE("d3 counts fringe") {
    CHECK(d3_counts(0.0, 120.0, 100.0) == Approx(120.0));
    CHECK(d3_counts(kPi / 2.0, 100.0, 100.0) == Approx(200.0));
    CHECK(d3_counts(kPi, 100.0, 100.0) == Approx(300.0));
    CHECK(d3_counts(2.0 * kPi, 100.0, 100.0) == Approx(100.0).margin(1e-9));
    CHECK_THROWS_AS(d3_counts(0.0, -1.0, 1.0), std::domain_error);
}

TEST_CASE("feedback phase estimation error") {
    CHECK(feedback_phase_error(4.0) == Approx(1.0));
    CHECK(feedback_phase_error(400.0) == Approx(0.1));
    CHECK_THROWS_AS(feedback_phase_error(0.0), std::domain_error);
}

TEST_CASE("qber model error-free limit") {
    ChannelParams ch = reference::channel(30.0);
    DetectorParams det = reference::detector();
    det.visibility = 1.0;
    det.dark_count_rate_hz = 0.0;
    FeedbackParams fb = reference::feedback();
    fb.misalignment_coefficient = 0.0;  // ideal correction
    const QberBreakdown q = expected_qber(0.4, ch, det, fb);
    CHECK(q.total == Approx(0.0).margin(1e-12));
    const QberBreakdown q2 = expected_qber(0.4, ch, det, fb, 0.004);
    CHECK(q2.total == Approx(0.004).epsilon(1e-9));
}

TEST_CASE("qber model components and monotonicity in loss") {
    const DetectorParams det = reference::detector();
    const FeedbackParams fb = reference::feedback();
    double prev = 0.0;
    for (double L = 20.0; L <= 95.0; L += 5.0) {
        const QberBreakdown q = expected_qber(0.4, reference::channel(L), det, fb);
        CHECK(q.optical >= 0.0);
        CHECK(q.dark >= 0.0);
        CHECK(q.feedback >= 0.0);
        CHECK(q.total == Approx(q.optical + q.dark + q.feedback).margin(1e-6));
        CHECK(q.total >= prev - 1e-12);
        prev = q.total;
    }
}

TEST_CASE("misalignment coefficient fit reproduces its anchor") {
    const DetectorParams det = reference::detector();
    FeedbackParams fb = reference::feedback();
    const double k =
        fit_misalignment_coefficient(0.4, reference::channel(90.8), det, fb, 0.0265);
    fb.misalignment_coefficient = k;
    CHECK(expected_qber(0.4, reference::channel(90.8), det, fb).total ==
          Approx(0.0265).epsilon(1e-6));
}

TEST_CASE("loss sweep structure") {
    const ProtocolConfig cfg = reference::protocol(Variant::Original);
    const DetectorParams det = reference::detector();
    const FeedbackParams fb = reference::feedback();

    CHECK_THROWS_AS(sweep_loss(cfg, {}, det, fb), std::domain_error);
    CHECK_THROWS_AS(sweep_loss(cfg, {30.0, 20.0}, det, fb), std::domain_error);

    const auto pts = sweep_loss(cfg, {20.0, 40.0, 60.0}, det, fb);
    REQUIRE(pts.size() == 3);
    using LP = std::pair<IntensityLabel, IntensityLabel>;
    const LP uu{IntensityLabel::u, IntensityLabel::u};
    CHECK(pts[0].gains.at(uu) > pts[1].gains.at(uu));
    CHECK(pts[1].gains.at(uu) > pts[2].gains.at(uu));

    // two-point slope: 20 dB of extra loss costs one decade of double-path gain
    DetectorParams nodark = det;
    nodark.dark_count_rate_hz = 0.0;
    const auto two = sweep_loss(cfg, {20.0, 40.0}, nodark, fb);
    const double drop =
        std::log10(two[1].gains.at(uu)) - std::log10(two[0].gains.at(uu));
    CHECK(drop == Approx(-1.0).margin(0.01));

    // the 71.1 dB point sits within 20% of the measured two-user signal gain
    const auto at71 = sweep_loss(cfg, {71.1}, det, fb);
    CHECK(at71[0].gains.at(uu) == Approx(18.2e-6).epsilon(0.20));
    CHECK(at71[0].qber_signal.total == Approx(0.0186).margin(0.005));
}

TEST_CASE("curty sweep carries all six pairings") {
    const ProtocolConfig cfg = reference::protocol(Variant::Curty);
    const auto pts =
        sweep_loss(cfg, {50.0}, reference::detector(), reference::feedback());
    CHECK(pts[0].gains.size() == 6);
}
