// tfqkd - command line front end: ingest reference tables, evaluate key rates,
// sweep the analytic model over loss, run Monte Carlo sessions, and validate
// the build against the bundled reference data.
//
// Exit codes: 0 success, 2 input error, 3 validation failure.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfqkd/core.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/io.hpp"
#include "tfqkd/keyrates.hpp"
#include "tfqkd/linkmodel.hpp"
#include "tfqkd/reference.hpp"
#include "tfqkd/simulator.hpp"
#include "tfqkd/validate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitValidation = 3;

namespace fs = std::filesystem;
using tfqkd::io::json;

std::string default_data_dir() {
#ifdef TFQKD_DATA_DIR
    return TFQKD_DATA_DIR;
#else
    return "data";
#endif
}

void ensure_out_dir(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

int cmd_ingest(const std::string& path, const std::string& schema, bool strict) {
    const auto kind = tfqkd::io::schema_from_string(schema);
    if (kind == tfqkd::io::Schema::TableI) {
        const auto rows = tfqkd::io::ingest_table1(path, strict);
        std::cout << "parsed " << rows.size() << " rows\n";
        for (const auto& r : rows)
            if (r.attenuation_inconsistent)
                std::cout << "  warning: row at " << r.total_loss_db
                          << " dB: arm attenuations sum to " << r.arm_sum_db()
                          << " dB (flagged, kept as published)\n";
    } else if (kind == tfqkd::io::Schema::TableII) {
        const auto t = tfqkd::io::ingest_table2(path, strict);
        std::cout << "parsed " << t.randomised.size()
                  << " randomised pairings + encoded row at " << t.total_loss_db
                  << " dB\n";
    } else {
        const json j = tfqkd::io::load_json(path);
        std::cout << "session json with " << j.value("encoded_gates", 0ull)
                  << " encoded gates\n";
    }
    return kExitOk;
}

tfqkd::RateParams rate_params_from(const tfqkd::ProtocolConfig& pc, double clock) {
    tfqkd::RateParams p;
    p.f_ec = pc.f_ec;
    p.m_slices = pc.phase_slices_m;
    p.e_m = tfqkd::slice_misalignment(pc.phase_slices_m);
    p.epsilon = pc.epsilon;
    p.clock_rate_hz = clock;
    return p;
}

int cmd_keyrate(const std::string& table_path, const std::string& protocol,
                const std::string& out_dir, double lp_slack, bool strict) {
    using namespace tfqkd;
    const Variant variant = io::variant_from_string(protocol);
    ProtocolConfig pc = reference::protocol(variant);
    if (lp_slack >= 0.0) pc.lp_slack = lp_slack;
    const RateParams params = rate_params_from(pc, reference::kClockHz);

    json out_json = json::array();
    std::vector<std::vector<std::string>> csv_rows;
    int clamped = 0;

    if (variant == Variant::Curty) {
        const auto t = io::ingest_table2(table_path, strict);
        const auto bounds = yield_matrix_upper_bounds(t.randomised, pc.intensities,
                                                      pc.n_cut, pc.y_cut, pc.lp_slack);
        const auto e1x =
            phase_error_curty(bounds, pc.intensities.u, t.q_z, pc.y_cut, pc.n_cut);
        const KeyRateReport rep =
            skr_curty(t.q_z, t.e_z, e1x, params, t.total_loss_db);
        std::cout << "curty @ " << t.total_loss_db << " dB: "
                  << rep.skr_bits_per_second << " bit/s (e1x = " << e1x.value
                  << ")\n";
        json j = rep;
        j["loss_db"] = t.total_loss_db;
        out_json.push_back(j);
        csv_rows.push_back({io::fmt(t.total_loss_db), io::fmt(rep.skr_bits_per_second),
                            io::fmt(rep.skc0_ideal_bps), io::fmt(rep.skc0_realistic_bps)});
        if (rep.rate_clamped_to_zero) ++clamped;
    } else {
        const auto rows = io::ingest_table1(table_path, strict);
        std::cout << std::left << std::setw(10) << "loss_dB" << std::setw(16)
                  << "skr_bit/s" << std::setw(16) << "skc0_bit/s" << "flags\n";
        for (const auto& row : rows) {
            const double loss = row.arm_sum_db();
            KeyRateReport rep;
            if (variant == Variant::Original) {
                DecoyInputs d;
                const IntensityTriple per_user = reference::main_intensities();
                d.u = per_user.total(IntensityLabel::u);
                d.v = per_user.total(IntensityLabel::v);
                d.w = per_user.total(IntensityLabel::w);
                d.q_u = row.q_uu;
                d.q_v = row.q_vv;
                d.q_w = row.q0;
                d.e_u = row.e_u;
                d.e_v = row.e_v;
                d.e_w = 0.5;
                rep = skr_original(d, params, loss, true);
            } else {
                MeasurementTallies t;
                using L = IntensityLabel;
                t.set_gain({L::u, L::u, Basis::X}, row.q_uu);
                t.set_gain({L::v, L::v, Basis::X}, row.q_vv);
                t.set_qber({L::u, L::u, Basis::X}, row.e_u);
                t.set_qber({L::v, L::v, Basis::X}, row.e_v);
                t.set_single_arm_gain(User::Alice, L::u, row.q_ua);
                t.set_single_arm_gain(User::Bob, L::u, row.q_ub);
                t.set_vacuum_gain(row.q0);
                rep = skr_send_not_send(t, reference::main_intensities(), params, loss);
            }
            std::cout << std::left << std::setw(10) << row.total_loss_db << std::setw(16)
                      << rep.skr_bits_per_second << std::setw(16) << rep.skc0_ideal_bps
                      << (rep.rate_clamped_to_zero ? "clamped-zero" : "") << "\n";
            json j = rep;
            j["loss_db"] = loss;
            out_json.push_back(j);
            csv_rows.push_back({io::fmt(loss), io::fmt(rep.skr_bits_per_second),
                                io::fmt(rep.skc0_ideal_bps),
                                io::fmt(rep.skc0_realistic_bps)});
            if (rep.rate_clamped_to_zero) ++clamped;
        }
    }
    if (clamped) std::cout << clamped << " row(s) clamped to zero rate\n";

    if (!out_dir.empty()) {
        ensure_out_dir(out_dir);
        json cfg = pc;
        const std::string hash = io::config_hash(cfg);
        json report;
        report["config"] = cfg;
        report["config_hash"] = hash;
        report["rows"] = out_json;
        io::save_json(out_dir + "/keyrate.json", report);
        io::write_csv(out_dir + "/keyrate.csv",
                      {"loss_db", "skr_bps", "skc0_ideal_bps", "skc0_realistic_bps"},
                      csv_rows, {"config_hash=" + hash});
        std::cout << "wrote " << out_dir << "/keyrate.{json,csv}\n";
    }
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& protocol,
              const std::string& out_dir) {
    using namespace tfqkd;
    SessionConfig base;
    base.protocol = reference::protocol(io::variant_from_string(protocol));
    base.det = reference::detector();
    base.fb = reference::feedback();
    double start = 10.0, stop = 100.0, step = 1.0;
    if (!config_path.empty()) {
        const json j = io::load_json(config_path);
        if (j.contains("session")) j.at("session").get_to(base);
        start = j.value("grid_start_db", start);
        stop = j.value("grid_stop_db", stop);
        step = j.value("grid_step_db", step);
    }
    if (step <= 0.0 || stop < start) {
        std::cerr << "invalid grid\n";
        return kExitInput;
    }
    const RateParams params = rate_params_from(base.protocol, base.det.clock_rate_hz);

    std::vector<std::vector<std::string>> rows;
    json jrows = json::array();
    for (double loss = start; loss <= stop + 1e-9; loss += step) {
        const ChannelParams ch = reference::channel(loss);
        const IntensityTriple per_user = base.protocol.intensities;
        using L = IntensityLabel;
        KeyRateReport rep;
        if (base.protocol.variant == Variant::SendNotSend) {
            MeasurementTallies t;
            t.set_gain({L::u, L::u, Basis::X},
                       expected_gain(per_user.u, per_user.u, ch, base.det, GainMode::Double));
            t.set_gain({L::v, L::v, Basis::X},
                       expected_gain(per_user.v, per_user.v, ch, base.det, GainMode::Double));
            t.set_qber({L::u, L::u, Basis::X},
                       expected_qber(per_user.total(L::u), ch, base.det, base.fb).total);
            t.set_qber({L::v, L::v, Basis::X},
                       expected_qber(per_user.total(L::v), ch, base.det, base.fb).total);
            ChannelParams arm = ch;
            arm.total_loss_db = loss / 2.0;
            const double qs = expected_gain(per_user.u, 0.0, arm, base.det,
                                            GainMode::SingleArmA);
            t.set_single_arm_gain(User::Alice, L::u, qs);
            t.set_single_arm_gain(User::Bob, L::u, qs);
            t.set_vacuum_gain(
                expected_gain(per_user.w, per_user.w, ch, base.det, GainMode::Double));
            rep = skr_send_not_send(t, per_user, params, loss);
        } else if (base.protocol.variant == Variant::Original) {
            DecoyInputs d;
            d.u = per_user.total(L::u);
            d.v = per_user.total(L::v);
            d.w = per_user.total(L::w);
            d.q_u = expected_gain(per_user.u, per_user.u, ch, base.det, GainMode::Double);
            d.q_v = expected_gain(per_user.v, per_user.v, ch, base.det, GainMode::Double);
            d.q_w = expected_gain(per_user.w, per_user.w, ch, base.det, GainMode::Double);
            d.e_u = expected_qber(d.u, ch, base.det, base.fb).total;
            d.e_v = expected_qber(d.v, ch, base.det, base.fb).total;
            d.e_w = 0.5;
            rep = skr_original(d, params, loss, true);
        } else {
            GainTable sim;
            for (auto a : {L::u, L::v, L::w})
                for (auto b : {L::u, L::v, L::w}) {
                    if (sim.count({b, a})) continue;
                    sim[{a, b}] = expected_gain(per_user.per_user(a), per_user.per_user(b),
                                                ch, base.det, GainMode::Double);
                }
            const auto bounds = yield_matrix_upper_bounds(
                sim, per_user, base.protocol.n_cut, base.protocol.y_cut,
                base.protocol.lp_slack);
            const double fa = per_user.u * ch.arm_transmittance(User::Alice);
            const double fbb = per_user.u * ch.arm_transmittance(User::Bob);
            const double pdc = base.det.dark_prob_per_gate();
            const double i0 =
                d1_intensity(fa, fbb, base.det.visibility, ch.charlie_efficiency, 0.0);
            const double ipi =
                d1_intensity(fa, fbb, base.det.visibility, ch.charlie_efficiency, kPi);
            const double qz = 1.0 - (1.0 - pdc) * (std::exp(-i0) + std::exp(-ipi)) / 2.0;
            const double ez = expected_qber(per_user.total(L::u), ch, base.det, base.fb).total;
            const auto e1x = phase_error_curty(bounds, per_user.u, qz,
                                               base.protocol.y_cut, base.protocol.n_cut);
            rep = skr_curty(qz, ez, e1x, params, loss);
        }
        const auto sup = supremacy_report({{loss, rep}}).front();
        rows.push_back({io::fmt(loss), io::fmt(rep.skr_bits_per_second),
                        io::fmt(rep.skc0_ideal_bps), io::fmt(rep.skc0_realistic_bps),
                        sup.beats_ideal ? "1" : "0", sup.beats_realistic ? "1" : "0"});
        json j = rep;
        j["loss_db"] = loss;
        j["beats_ideal"] = sup.beats_ideal;
        j["beats_realistic"] = sup.beats_realistic;
        jrows.push_back(j);
    }

    json cfg = base;
    cfg["grid_start_db"] = start;
    cfg["grid_stop_db"] = stop;
    cfg["grid_step_db"] = step;
    const std::string hash = io::config_hash(cfg);
    const std::string dir = out_dir.empty() ? "." : out_dir;
    ensure_out_dir(dir);
    io::write_csv(dir + "/sweep.csv",
                  {"loss_db", "skr_bps", "skc0_ideal_bps", "skc0_realistic_bps",
                   "beats_ideal", "beats_realistic"},
                  rows, {"config_hash=" + hash});
    json report;
    report["config"] = cfg;
    report["config_hash"] = hash;
    report["rows"] = jrows;
    io::save_json(dir + "/sweep.json", report);
    std::cout << "wrote " << dir << "/sweep.{csv,json} (" << rows.size()
              << " grid points, config " << hash << ")\n";
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed_override,
                 bool have_seed, const std::string& out_dir) {
    using namespace tfqkd;
    SessionConfig cfg;
    cfg.protocol = reference::protocol(Variant::Original);
    cfg.channel = reference::channel(30.5);
    cfg.det = reference::detector();
    cfg.fb = reference::feedback();
    cfg.n_gates = 1'000'000;
    double trace_duration = 0.0;
    if (!config_path.empty()) {
        const json j = io::load_json(config_path);
        j.get_to(cfg);
        trace_duration = j.value("trace_duration_s", 0.0);
    }
    if (have_seed) cfg.rng_seed = seed_override;
    cfg.validate();

    const json jcfg = cfg;
    const std::string hash = io::config_hash(jcfg);
    const std::string dir = out_dir.empty() ? "." : out_dir;
    ensure_out_dir(dir);

    if (trace_duration > 0.0) {
        const TraceResult tr = run_trace_session(cfg, trace_duration);
        std::cout << "trace: mean QBER " << 100.0 * tr.mean_qber << "%, span ["
                  << 100.0 * tr.min_qber << ", " << 100.0 * tr.max_qber
                  << "]%, lock losses " << tr.lock_loss_events << "\n";
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < tr.qber_per_second.size(); ++i)
            rows.push_back({std::to_string(i), io::fmt(tr.qber_per_second[i])});
        io::write_csv(dir + "/qber_trace.csv", {"second", "qber"}, rows,
                      {"config_hash=" + hash});
        json j;
        j["config"] = jcfg;
        j["config_hash"] = hash;
        j["mean_qber"] = tr.mean_qber;
        j["min_qber"] = tr.min_qber;
        j["max_qber"] = tr.max_qber;
        j["lock_loss_events"] = tr.lock_loss_events;
        io::save_json(dir + "/trace.json", j);
        std::cout << "wrote " << dir << "/qber_trace.csv and trace.json\n";
        return kExitOk;
    }

    const SessionResult res = run_session(cfg);
    std::cout << "session: " << res.encoded_gates << " encoded gates, "
              << res.sift.kept_key_bits << " raw key bits, lock losses "
              << res.lock_loss_events << "\n";
    using L = IntensityLabel;
    if (auto q = res.sift.tallies.gain({L::u, L::u, Basis::X}))
        std::cout << "  Q_uu(X) = " << *q << "\n";
    if (auto e = res.sift.tallies.qber({L::u, L::u, Basis::X}))
        std::cout << "  E_uu(X) = " << 100.0 * *e << "%\n";
    io::save_json(dir + "/session.json",
                  io::session_result_to_json(cfg, res, hash));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < res.qber_trace.size(); ++i)
        rows.push_back({std::to_string(i), io::fmt(res.qber_trace[i])});
    io::write_csv(dir + "/qber_trace.csv", {"second", "qber"}, rows,
                  {"config_hash=" + hash});
    std::cout << "wrote " << dir << "/session.json and qber_trace.csv\n";
    return kExitOk;
}

int cmd_validate(const std::string& data_dir, bool quick, double tolerance_override) {
    if (tolerance_override > 0.0)
        std::cout << "# tolerance override requested: " << tolerance_override
                  << " (informational; criteria use their specified tolerances)\n";
    const auto results = tfqkd::validate::run_all(data_dir, quick);
    bool all = true;
    for (const auto& c : results) {
        std::cout << (c.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name
                  << "  (" << std::fixed << std::setprecision(1) << c.seconds
                  << " s)\n      " << c.detail << "\n";
        all = all && c.pass;
    }
    std::cout << (all ? "all criteria passed\n" : "one or more criteria FAILED\n");
    return all ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"twin-field QKD link simulator and key-rate toolkit"};
    app.require_subcommand(1);

    std::string path, schema = "table1", protocol = "original", out_dir;
    std::string config_path, data_dir = default_data_dir();
    bool strict = false, quick = false;
    double tolerance = -1.0, lp_slack = -1.0;
    std::uint64_t seed = 0;

    auto* ingest = app.add_subcommand("ingest", "parse and check a data table");
    ingest->add_option("path", path, "csv or json file")->required();
    ingest->add_option("--schema", schema, "table1|table2|session");
    ingest->add_flag("--strict", strict, "reject incomplete tables");

    auto* keyrate = app.add_subcommand("keyrate", "key rates from a measured table");
    keyrate->add_option("--table", path, "data table csv")->required();
    keyrate->add_option("--protocol", protocol, "original|sns|curty");
    keyrate->add_option("--out", out_dir, "output directory");
    keyrate->add_option("--slack", lp_slack, "yield-LP consistency window");
    keyrate->add_flag("--strict", strict, "strict ingestion");

    auto* sweep = app.add_subcommand("sweep", "analytic rate-vs-loss curves");
    sweep->add_option("--config", config_path, "sweep config json");
    sweep->add_option("--protocol", protocol, "original|sns|curty");
    sweep->add_option("--out", out_dir, "output directory");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo session");
    simulate->add_option("--config", config_path, "session config json");
    simulate->add_option("--seed", seed, "RNG seed override");
    simulate->add_option("--out", out_dir, "output directory");

    auto* validate = app.add_subcommand("validate", "acceptance checks vs bundled tables");
    validate->add_option("--data", data_dir, "data directory");
    validate->add_option("--tolerance", tolerance, "tolerance override (recorded)");
    validate->add_flag("--quick", quick, "reduced Monte Carlo sample sizes");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(path, schema, strict);
        if (keyrate->parsed()) return cmd_keyrate(path, protocol, out_dir, lp_slack, strict);
        if (sweep->parsed()) return cmd_sweep(config_path, protocol, out_dir);
        if (simulate->parsed())
            return cmd_simulate(config_path, seed, simulate->count("--seed") > 0, out_dir);
        if (validate->parsed()) return cmd_validate(data_dir, quick, tolerance);
    } catch (const tfqkd::io::parse_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const tfqkd::estimation_failure& e) {
        std::cerr << "estimation failure: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
