#pragma once

// File formats: CSV ingestion/emission for the bundled reference tables,
// JSON serialisation of configs and session results, and the config hash
// carried by every output.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfqkd/core.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/linkmodel.hpp"
#include "tfqkd/simulator.hpp"

namespace tfqkd::io {

using nlohmann::json;

class parse_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// --- CSV primitives -----------------------------------------------------------

/// Minimal RFC-4180-style reader: comma separation, double-quote escaping,
/// a mandatory header row. Lines starting with '#' are comments.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;

    int column(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw parse_error("csv: missing column '" + name + "'");
        return static_cast<int>(it - header.begin());
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line, int lineno) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    if (quoted)
        throw parse_error("csv line " + std::to_string(lineno) + ": unterminated quote");
    out.push_back(cur);
    return out;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            if (!line.empty()) t.comments.push_back(line);
            continue;
        }
        auto fields = split_csv_line(line, lineno);
        if (t.header.empty())
            t.header = std::move(fields);
        else
            t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw parse_error("csv '" + path + "': no header row");
    return t;
}

inline double parse_number(const std::string& s, const std::string& field, int row) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw parse_error("row " + std::to_string(row) + ", field '" + field +
                          "': cannot parse number from '" + s + "'");
    }
}

inline std::optional<double> parse_optional(const std::string& s, const std::string& field,
                                            int row) {
    if (s.empty() || s == "-") return std::nullopt;
    return parse_number(s, field, row);
}

// --- reference-table schemas ------------------------------------------------------

enum class Schema { TableI, TableII, SessionJson };

inline Schema schema_from_string(const std::string& s) {
    if (s == "table1" || s == "tableI" || s == "table-i") return Schema::TableI;
    if (s == "table2" || s == "tableII" || s == "table-ii") return Schema::TableII;
    if (s == "session" || s == "session-json") return Schema::SessionJson;
    throw parse_error("unknown schema '" + s + "' (expected table1|table2|session)");
}

/// One attenuation row of the main reference table.
struct DataTableRow {
    double attenuation_a_db = 0.0;
    double attenuation_b_db = 0.0;
    double total_loss_db = 0.0;
    double q_ua = 0.0, q_va = 0.0;   // Alice-only gains (signal / decoy)
    double q_ub = 0.0, q_vb = 0.0;   // Bob-only gains
    double q_uu = 0.0, q_vv = 0.0;   // two-user gains
    double e_u = 0.0, e_v = 0.0;     // QBERs (fractions)
    double q0 = 25.9e-9;             // both users silent
    std::optional<double> published_skr_original_bps;
    std::optional<double> published_skr_sns_bps;
    std::optional<double> published_skc0_bps;
    bool attenuation_inconsistent = false;  // |a+b-total| > 0.2 dB (flagged, kept)

    double arm_sum_db() const { return attenuation_a_db + attenuation_b_db; }
};

/// Curty reference dataset: the six phase-randomised gains plus the encoded
/// gain/QBER at one attenuation.
struct CurtyTable {
    double total_loss_db = 0.0;
    GainTable randomised;  // keyed by per-user intensity labels
    double q_z = 0.0;
    double e_z = 0.0;
    std::optional<double> published_skr_bps;
};

inline void check_range(double v, double lo, double hi, const std::string& field, int row) {
    if (v < lo || v > hi)
        throw parse_error("row " + std::to_string(row) + ": " + field + "=" +
                          std::to_string(v) + " outside [" + std::to_string(lo) + "," +
                          std::to_string(hi) + "]");
}

inline std::vector<DataTableRow> ingest_table1(const std::string& path, bool strict) {
    const CsvTable t = read_csv(path);
    const int ca = t.column("att_a_db"), cb = t.column("att_b_db"),
              ct = t.column("total_db");
    const int cqua = t.column("q_ua"), cqub = t.column("q_ub"), cqva = t.column("q_va"),
              cqvb = t.column("q_vb");
    const int cquu = t.column("q_uu"), cqvv = t.column("q_vv");
    const int ceu = t.column("e_u"), cev = t.column("e_v");
    const int cq0 = t.column("q0");
    const int cso = t.column("skr_original_bps"), css = t.column("skr_sns_bps"),
              csk = t.column("skc0_bps");

    std::vector<DataTableRow> rows;
    int n = 0;
    for (const auto& f : t.rows) {
        ++n;
        DataTableRow r;
        r.attenuation_a_db = parse_number(f[ca], "att_a_db", n);
        r.attenuation_b_db = parse_number(f[cb], "att_b_db", n);
        r.total_loss_db = parse_number(f[ct], "total_db", n);
        r.q_ua = parse_number(f[cqua], "q_ua", n);
        r.q_ub = parse_number(f[cqub], "q_ub", n);
        r.q_va = parse_number(f[cqva], "q_va", n);
        r.q_vb = parse_number(f[cqvb], "q_vb", n);
        r.q_uu = parse_number(f[cquu], "q_uu", n);
        r.q_vv = parse_number(f[cqvv], "q_vv", n);
        r.e_u = parse_number(f[ceu], "e_u", n);
        r.e_v = parse_number(f[cev], "e_v", n);
        r.q0 = parse_number(f[cq0], "q0", n);
        r.published_skr_original_bps = parse_optional(f[cso], "skr_original_bps", n);
        r.published_skr_sns_bps = parse_optional(f[css], "skr_sns_bps", n);
        r.published_skc0_bps = parse_optional(f[csk], "skc0_bps", n);

        const std::pair<double, const char*> gain_checks[] = {
            {r.q_ua, "q_ua"}, {r.q_ub, "q_ub"}, {r.q_va, "q_va"}, {r.q_vb, "q_vb"},
            {r.q_uu, "q_uu"}, {r.q_vv, "q_vv"}, {r.q0, "q0"}};
        for (const auto& [v, name] : gain_checks) check_range(v, 0.0, 1.0, name, n);
        const std::pair<double, const char*> qber_checks[] = {{r.e_u, "qber e_u"},
                                                              {r.e_v, "qber e_v"}};
        for (const auto& [v, name] : qber_checks) check_range(v, 0.0, 1.0, name, n);
        if (r.total_loss_db < 0.0)
            throw parse_error("row " + std::to_string(n) + ": negative total_db");

        r.attenuation_inconsistent = std::abs(r.arm_sum_db() - r.total_loss_db) > 0.2;
        rows.push_back(r);
    }
    if (strict && rows.empty()) throw parse_error("'" + path + "': no data rows");
    return rows;
}

inline CurtyTable ingest_table2(const std::string& path, bool strict) {
    const CsvTable t = read_csv(path);
    const int ck = t.column("kind"), cp = t.column("pair"), cg = t.column("gain"),
              cq = t.column("qber"), cl = t.column("total_db"),
              cs = t.column("skr_bps");
    CurtyTable out;
    bool have_encoded = false;
    int n = 0;
    auto label = [&](char ch, int row) {
        switch (ch) {
            case 'u': return IntensityLabel::u;
            case 'v': return IntensityLabel::v;
            case 'w': return IntensityLabel::w;
        }
        throw parse_error("row " + std::to_string(row) + ": bad intensity label");
    };
    for (const auto& f : t.rows) {
        ++n;
        const double gain = parse_number(f[cg], "gain", n);
        check_range(gain, 0.0, 1.0, "gain", n);
        out.total_loss_db = parse_number(f[cl], "total_db", n);
        if (f[ck] == "randomised") {
            if (f[cp].size() != 2)
                throw parse_error("row " + std::to_string(n) + ": pair must be two labels");
            out.randomised[{label(f[cp][0], n), label(f[cp][1], n)}] = gain;
        } else if (f[ck] == "encoded") {
            out.q_z = gain;
            const auto e = parse_optional(f[cq], "qber", n);
            if (!e) throw parse_error("row " + std::to_string(n) + ": encoded row needs a QBER");
            check_range(*e, 0.0, 1.0, "qber", n);
            out.e_z = *e;
            out.published_skr_bps = parse_optional(f[cs], "skr_bps", n);
            have_encoded = true;
        } else {
            throw parse_error("row " + std::to_string(n) + ": kind must be randomised|encoded");
        }
    }
    if (!have_encoded)
        throw parse_error("'" + path + "': missing encoded row");
    if (strict && out.randomised.size() != 6)
        throw parse_error("'" + path + "': expected all six flux pairings, got " +
                          std::to_string(out.randomised.size()));
    return out;
}

// --- CSV emission ---------------------------------------------------------------

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows,
                      const std::vector<std::string>& comments = {}) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw parse_error("cannot write '" + tmp + "'");
        for (const auto& c : comments) out << "# " << c << "\n";
        for (std::size_t i = 0; i < header.size(); ++i)
            out << (i ? "," : "") << csv_escape(header[i]);
        out << "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i)
                out << (i ? "," : "") << csv_escape(r[i]);
            out << "\n";
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw parse_error("cannot move '" + tmp + "' into place");
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

/// Round-trip-exact double formatting for table emission.
inline std::string fmt_exact(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt_exact(*v) : "-";
}

inline void emit_table1(const std::string& path, const std::vector<DataTableRow>& rows,
                        const std::vector<std::string>& comments = {}) {
    std::vector<std::vector<std::string>> out;
    for (const auto& r : rows)
        out.push_back({fmt_exact(r.attenuation_a_db), fmt_exact(r.q_ua), fmt_exact(r.q_va),
                       fmt_exact(r.attenuation_b_db), fmt_exact(r.q_ub), fmt_exact(r.q_vb),
                       fmt_exact(r.total_loss_db), fmt_exact(r.q_uu), fmt_exact(r.e_u),
                       fmt_exact(r.q_vv), fmt_exact(r.e_v), fmt_exact(r.q0),
                       fmt_opt(r.published_skr_original_bps),
                       fmt_opt(r.published_skr_sns_bps), fmt_opt(r.published_skc0_bps)});
    write_csv(path,
              {"att_a_db", "q_ua", "q_va", "att_b_db", "q_ub", "q_vb", "total_db", "q_uu",
               "e_u", "q_vv", "e_v", "q0", "skr_original_bps", "skr_sns_bps", "skc0_bps"},
              out, comments);
}

inline void emit_table2(const std::string& path, const CurtyTable& t,
                        const std::vector<std::string>& comments = {}) {
    std::vector<std::vector<std::string>> out;
    for (const auto& [key, q] : t.randomised) {
        const std::string pair{to_char(key.first), to_char(key.second)};
        out.push_back({"randomised", pair, fmt_exact(t.total_loss_db), fmt_exact(q), "", ""});
    }
    out.push_back({"encoded", "uu", fmt_exact(t.total_loss_db), fmt_exact(t.q_z),
                   fmt_exact(t.e_z), fmt_opt(t.published_skr_bps)});
    write_csv(path, {"kind", "pair", "total_db", "gain", "qber", "skr_bps"}, out, comments);
}

}  // namespace tfqkd::io

// nlohmann ADL serialisers must live in the types' namespace.
namespace tfqkd {

// --- JSON serialisation -----------------------------------------------------------

inline void to_json(nlohmann::json& j, const ChannelParams& c) {
    j = nlohmann::json{{"total_loss_db", c.total_loss_db},
             {"asymmetry_db", c.asymmetry_db},
             {"fibre_alpha_db_per_km", c.fibre_alpha_db_per_km},
             {"charlie_efficiency", c.charlie_efficiency}};
}
inline void from_json(const nlohmann::json& j, ChannelParams& c) {
    c.total_loss_db = j.value("total_loss_db", c.total_loss_db);
    c.asymmetry_db = j.value("asymmetry_db", c.asymmetry_db);
    c.fibre_alpha_db_per_km = j.value("fibre_alpha_db_per_km", c.fibre_alpha_db_per_km);
    c.charlie_efficiency = j.value("charlie_efficiency", c.charlie_efficiency);
}

inline void to_json(nlohmann::json& j, const DetectorParams& d) {
    j = nlohmann::json{{"dark_count_rate_hz", d.dark_count_rate_hz},
             {"detection_efficiency", d.detection_efficiency},
             {"coupling_efficiency", d.coupling_efficiency},
             {"clock_rate_hz", d.clock_rate_hz},
             {"gate_width_s", d.gate_width_s},
             {"visibility", d.visibility}};
}
inline void from_json(const nlohmann::json& j, DetectorParams& d) {
    d.dark_count_rate_hz = j.value("dark_count_rate_hz", d.dark_count_rate_hz);
    d.detection_efficiency = j.value("detection_efficiency", d.detection_efficiency);
    d.coupling_efficiency = j.value("coupling_efficiency", d.coupling_efficiency);
    d.clock_rate_hz = j.value("clock_rate_hz", d.clock_rate_hz);
    d.gate_width_s = j.value("gate_width_s", d.gate_width_s);
    d.visibility = j.value("visibility", d.visibility);
}

inline void to_json(nlohmann::json& j, const FeedbackParams& f) {
    j = nlohmann::json{{"drift_rate_rad_per_s", f.drift_rate_rad_per_s},
             {"correction_interval_s", f.correction_interval_s},
             {"reference_duty", f.reference_duty},
             {"misalignment_coefficient", f.misalignment_coefficient},
             {"opll_phase_variance_rad2", f.opll_phase_variance_rad2},
             {"enabled", f.enabled}};
}
inline void from_json(const nlohmann::json& j, FeedbackParams& f) {
    f.drift_rate_rad_per_s = j.value("drift_rate_rad_per_s", f.drift_rate_rad_per_s);
    f.correction_interval_s = j.value("correction_interval_s", f.correction_interval_s);
    f.reference_duty = j.value("reference_duty", f.reference_duty);
    f.misalignment_coefficient = j.value("misalignment_coefficient", f.misalignment_coefficient);
    f.opll_phase_variance_rad2 = j.value("opll_phase_variance_rad2", f.opll_phase_variance_rad2);
    f.enabled = j.value("enabled", f.enabled);
}

inline void to_json(nlohmann::json& j, const IntensityTriple& t) {
    j = nlohmann::json{{"u", t.u}, {"v", t.v}, {"w", t.w}};
}
inline void from_json(const nlohmann::json& j, IntensityTriple& t) {
    t.u = j.value("u", t.u);
    t.v = j.value("v", t.v);
    t.w = j.value("w", t.w);
}

inline Variant variant_from_string_adl(const std::string& s) {
    if (s == "original") return Variant::Original;
    if (s == "send-not-send" || s == "sns") return Variant::SendNotSend;
    if (s == "curty") return Variant::Curty;
    throw std::runtime_error("unknown protocol '" + s + "' (original|sns|curty)");
}

inline void to_json(nlohmann::json& j, const ProtocolConfig& p) {
    j = nlohmann::json{{"variant", to_string(p.variant)},
             {"intensities", p.intensities},
             {"phase_slices_m", p.phase_slices_m},
             {"tolerance_delta", p.tolerance_delta},
             {"epsilon", p.epsilon},
             {"y_cut", p.y_cut},
             {"n_cut", p.n_cut},
             {"f_ec", p.f_ec},
             {"basis_prob_z", p.basis_prob_z},
             {"lp_slack", p.lp_slack}};
}
inline void from_json(const nlohmann::json& j, ProtocolConfig& p) {
    if (j.contains("variant")) p.variant = variant_from_string_adl(j.at("variant"));
    if (j.contains("intensities")) j.at("intensities").get_to(p.intensities);
    p.phase_slices_m = j.value("phase_slices_m", p.phase_slices_m);
    p.tolerance_delta = j.value("tolerance_delta", 2.0 * kPi / p.phase_slices_m);
    p.epsilon = j.value("epsilon", p.epsilon);
    p.y_cut = j.value("y_cut", p.y_cut);
    p.n_cut = j.value("n_cut", p.n_cut);
    p.f_ec = j.value("f_ec", p.f_ec);
    p.basis_prob_z = j.value("basis_prob_z", p.basis_prob_z);
    p.lp_slack = j.value("lp_slack", p.lp_slack);
}

inline void to_json(nlohmann::json& j, const SessionConfig& s) {
    j = nlohmann::json{{"protocol", s.protocol},
             {"channel", s.channel},
             {"detector", s.det},
             {"feedback", s.fb},
             {"n_gates", s.n_gates},
             {"rng_seed", s.rng_seed},
             {"continuous_phase", s.continuous_phase},
             {"phase_levels", s.phase_levels},
             {"x_intensity_probs", s.x_intensity_probs},
             {"modulation_floor", s.modulation_floor}};
}
inline void from_json(const nlohmann::json& j, SessionConfig& s) {
    if (j.contains("protocol")) j.at("protocol").get_to(s.protocol);
    if (j.contains("channel")) j.at("channel").get_to(s.channel);
    if (j.contains("detector")) j.at("detector").get_to(s.det);
    if (j.contains("feedback")) j.at("feedback").get_to(s.fb);
    s.n_gates = j.value("n_gates", s.n_gates);
    s.rng_seed = j.value("rng_seed", s.rng_seed);
    s.continuous_phase = j.value("continuous_phase", s.continuous_phase);
    s.phase_levels = j.value("phase_levels", s.phase_levels);
    if (j.contains("x_intensity_probs")) j.at("x_intensity_probs").get_to(s.x_intensity_probs);
    s.modulation_floor = j.value("modulation_floor", s.modulation_floor);
}

inline void to_json(nlohmann::json& j, const KeyRateReport& r) {
    j = nlohmann::json{{"variant", to_string(r.variant)},
             {"skr_bits_per_gate", r.skr_bits_per_gate},
             {"skr_bits_per_second", r.skr_bits_per_second},
             {"y0_lower", r.y0_lower},
             {"y1_lower", r.y1_lower},
             {"e1_upper", r.e1_upper},
             {"skc0_ideal_bps", r.skc0_ideal_bps},
             {"skc0_realistic_bps", r.skc0_realistic_bps},
             {"supremacy_ratio", r.supremacy_ratio},
             {"rate_clamped_to_zero", r.rate_clamped_to_zero},
             {"bounds_clamped", r.bounds_clamped}};
    if (r.e1x_upper) j["e1x_upper"] = *r.e1x_upper;
    if (r.failure_reason) j["failure_reason"] = *r.failure_reason;
}

}  // namespace tfqkd

namespace tfqkd::io {

inline Variant variant_from_string(const std::string& s) {
    try {
        return variant_from_string_adl(s);
    } catch (const std::exception& e) {
        throw parse_error(e.what());
    }
}

inline json tallies_to_json(const MeasurementTallies& t) {
    json gains = json::object();
    for (const auto& [k, v] : t.all_gains()) {
        std::string key{to_char(k.alice), to_char(k.bob), '_', to_char(k.basis)};
        gains[key] = v;
    }
    json qbers = json::object();
    for (const auto& [k, v] : t.all_qbers()) {
        std::string key{to_char(k.alice), to_char(k.bob), '_', to_char(k.basis)};
        qbers[key] = v;
    }
    return json{{"gains", gains}, {"qbers", qbers}, {"vacuum_gain", t.vacuum_gain()}};
}

inline json session_result_to_json(const SessionConfig& cfg, const SessionResult& res,
                                   const std::string& config_hash) {
    json j;
    j["config"] = cfg;
    j["config_hash"] = config_hash;
    j["tallies"] = tallies_to_json(res.sift.tallies);
    j["kept_key_bits"] = res.sift.kept_key_bits;
    j["key_errors"] = res.sift.key_errors;
    j["kept_x_clicks"] = res.sift.kept_x_clicks;
    j["kept_x_errors"] = res.sift.kept_x_errors;
    j["qber_trace"] = res.qber_trace;
    j["mean_trace_qber"] = res.mean_trace_qber;
    j["lock_loss_events"] = res.lock_loss_events;
    j["encoded_gates"] = res.encoded_gates;
    j["rng_seed"] = res.rng_seed;
    return j;
}

// --- config hash ---------------------------------------------------------------------

/// FNV-1a over the canonical (sorted-key) JSON dump.
inline std::string config_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw parse_error("'" + path + "': " + e.what());
    }
    return j;
}

inline void save_json(const std::string& path, const json& j) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw parse_error("cannot write '" + tmp + "'");
        out << j.dump(2) << "\n";
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw parse_error("cannot move '" + tmp + "' into place");
}

}  // namespace tfqkd::io
