#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "tfqkd/io.hpp"

using namespace tfqkd;
using Catch::Approx;

namespace {
const std::string kDataDir = TFQKD_DATA_DIR;

std::string temp_file(const std::string& name) {
    return std::string("/tmp/tfqkd_test_") + name;
}
}  // namespace

TEST_CASE("bundled main table parses with the known shape") {
    const auto rows = io::ingest_table1(kDataDir + "/table1.csv", true);
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].total_loss_db == Approx(21.5));
    CHECK(rows[0].q_uu == Approx(5562.8e-6));
    CHECK(rows[7].q0 == Approx(25.9e-9));
    CHECK_FALSE(rows[7].published_skr_sns_bps.has_value());  // the "-" entry
    CHECK(rows[7].published_skr_original_bps == Approx(45.0));

    // only the 61.7 dB row is flagged: its arms sum to 59.9 dB
    int flagged = 0;
    for (const auto& r : rows) flagged += r.attenuation_inconsistent;
    CHECK(flagged == 1);
    CHECK(rows[4].attenuation_inconsistent);
    CHECK(rows[4].arm_sum_db() == Approx(59.9));
}

TEST_CASE("bundled curty table parses with six pairings") {
    const auto t = io::ingest_table2(kDataDir + "/table2.csv", true);
    CHECK(t.randomised.size() == 6);
    CHECK(t.q_z == Approx(1.79e-6));
    CHECK(t.e_z == Approx(0.0265));
    CHECK(t.total_loss_db == Approx(71.1));
    CHECK(t.randomised.at({IntensityLabel::w, IntensityLabel::w}) == Approx(0.026e-6));
}

TEST_CASE("range violations name the offending field") {
    const std::string path = temp_file("bad_qber.csv");
    {
        std::ofstream out(path);
        out << "att_a_db,q_ua,q_va,att_b_db,q_ub,q_vb,total_db,q_uu,e_u,q_vv,e_v,q0,"
               "skr_original_bps,skr_sns_bps,skc0_bps\n";
        out << "10,1e-6,1e-6,10,1e-6,1e-6,20,1e-6,1.2,1e-6,0.02,2e-8,-,-,-\n";
    }
    try {
        io::ingest_table1(path, false);
        FAIL("expected parse_error");
    } catch (const io::parse_error& e) {
        CHECK(std::string(e.what()).find("qber") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("empty and header-only tables") {
    const std::string path = temp_file("empty.csv");
    {
        std::ofstream out(path);
        out << "";
    }
    CHECK_THROWS_AS(io::ingest_table1(path, false), io::parse_error);  // no header
    {
        std::ofstream out(path);
        out << "att_a_db,q_ua,q_va,att_b_db,q_ub,q_vb,total_db,q_uu,e_u,q_vv,e_v,q0,"
               "skr_original_bps,skr_sns_bps,skc0_bps\n";
    }
    CHECK(io::ingest_table1(path, false).empty());           // lenient: empty list
    CHECK_THROWS_AS(io::ingest_table1(path, true), io::parse_error);  // strict
    std::remove(path.c_str());
}

TEST_CASE("table emission round-trips exactly") {
    const auto rows = io::ingest_table1(kDataDir + "/table1.csv", true);
    const std::string path = temp_file("roundtrip1.csv");
    io::emit_table1(path, rows, {"roundtrip check"});
    const auto again = io::ingest_table1(path, true);
    REQUIRE(again.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(again[i].q_uu == rows[i].q_uu);
        CHECK(again[i].e_v == rows[i].e_v);
        CHECK(again[i].attenuation_a_db == rows[i].attenuation_a_db);
        CHECK(again[i].published_skr_sns_bps == rows[i].published_skr_sns_bps);
    }
    std::remove(path.c_str());

    const auto curty = io::ingest_table2(kDataDir + "/table2.csv", true);
    const std::string path2 = temp_file("roundtrip2.csv");
    io::emit_table2(path2, curty);
    const auto curty2 = io::ingest_table2(path2, true);
    CHECK(curty2.randomised == curty.randomised);
    CHECK(curty2.q_z == curty.q_z);
    CHECK(curty2.e_z == curty.e_z);
    std::remove(path2.c_str());
}

TEST_CASE("csv quoting survives commas and quotes") {
    CHECK(io::csv_escape("plain") == "plain");
    CHECK(io::csv_escape("a,b") == "\"a,b\"");
    const auto fields = io::split_csv_line("\"a,b\",\"say \"\"hi\"\"\",3", 1);
    REQUIRE(fields.size() == 3);
    CHECK(fields[0] == "a,b");
    CHECK(fields[1] == "say \"hi\"");
}

TEST_CASE("config hash is stable and sensitive") {
    SessionConfig cfg;
    cfg.rng_seed = 5;
    const io::json j1 = cfg;
    const io::json j2 = cfg;
    CHECK(io::config_hash(j1) == io::config_hash(j2));
    cfg.rng_seed = 6;
    const io::json j3 = cfg;
    CHECK(io::config_hash(j1) != io::config_hash(j3));
}

TEST_CASE("session config json round trip") {
    SessionConfig cfg;
    cfg.protocol.variant = Variant::Curty;
    cfg.protocol.intensities = {0.02, 0.2, 5e-6};
    cfg.protocol.lp_slack = 0.043;
    cfg.channel.total_loss_db = 71.1;
    cfg.n_gates = 12345;
    cfg.continuous_phase = true;

    const io::json j = cfg;
    SessionConfig back;
    j.get_to(back);
    CHECK(back.protocol.variant == Variant::Curty);
    CHECK(back.protocol.intensities.v == Approx(0.2));
    CHECK(back.protocol.lp_slack == Approx(0.043));
    CHECK(back.channel.total_loss_db == Approx(71.1));
    CHECK(back.n_gates == 12345);
    CHECK(back.continuous_phase);
}

TEST_CASE("schema names parse") {
    CHECK(io::schema_from_string("table1") == io::Schema::TableI);
    CHECK(io::schema_from_string("table2") == io::Schema::TableII);
    CHECK(io::schema_from_string("session") == io::Schema::SessionJson);
    CHECK_THROWS_AS(io::schema_from_string("nope"), io::parse_error);
}
