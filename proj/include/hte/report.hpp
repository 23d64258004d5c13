#pragma once

// Study reports and raw-record persistence.
//
// CSV output writes every real with the shortest representation that parses
// back to the same double; only the markdown tables round.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hte/config.hpp"
#include "hte/errors.hpp"
#include "hte/simulator.hpp"

namespace hte {

inline constexpr std::string_view kRawCsvHeader = "replication,method,estimate,se,p_value,ci_lower,ci_upper,seed";
inline constexpr std::string_view kSummaryCsvHeader =
    "method,rejection_rate,bias,sd,mad,n_replications,runtime_seconds";

/// Table layout details that are not part of the summary itself.
struct ReportContext {
    StudyKind kind = StudyKind::ZeroCate;
    CateSpec cate = CateSpec::Zero;
    int splits = 100;
    int mining_f = 5;
};

namespace detail {

inline std::string csv_real(double v) {
    if (std::isnan(v)) return "nan";
    return format_real(v);
}

inline double parse_csv_real(const std::string& field) {
    if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size())
        throw ConfigError("csv: expected a real number, got '" + field + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s(buf);
    if (s == "-0.00") s = "0.00";
    return s;
}

inline std::string percent2(double rate) { return fixed2(100.0 * rate) + "%"; }

struct Column {
    std::string group;
    std::string label;
    const MethodSummary* summary;
};

inline std::string markdown_table(const std::vector<Column>& cols,
                                  const std::vector<std::pair<std::string, std::string (*)(const MethodSummary&)>>& rows) {
    std::string out = "|";
    std::string prev;
    for (const auto& c : cols) {
        out += " | " + (c.group != prev ? c.group : std::string());
        prev = c.group;
    }
    out += " |\n|---";
    for (std::size_t i = 0; i < cols.size(); ++i) out += "|---:";
    out += "|\n|";
    for (const auto& c : cols) out += " | " + c.label;
    out += " |\n";
    for (const auto& [name, cell] : rows) {
        out += "| " + name;
        for (const auto& c : cols) out += " | " + cell(*c.summary);
        out += " |\n";
    }
    return out;
}

}  // namespace detail

inline void write_raw_csv(std::ostream& os, const std::vector<RawRecord>& records) {
    os << kRawCsvHeader << '\n';
    for (const auto& r : records) {
        os << r.replication << ',' << r.method << ',' << detail::csv_real(r.estimate) << ','
           << detail::csv_real(r.se) << ',' << detail::csv_real(r.p_value) << ',' << detail::csv_real(r.ci_lower)
           << ',' << detail::csv_real(r.ci_upper) << ',' << r.seed << '\n';
    }
}

inline std::vector<RawRecord> read_raw_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || detail::trim(line) != kRawCsvHeader)
        throw ConfigError("raw csv: header must be '" + std::string(kRawCsvHeader) + "'");
    std::vector<RawRecord> out;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv_line(detail::trim(line));
        if (f.size() != 8)
            throw ConfigError("raw csv line " + std::to_string(line_no) + ": expected 8 fields, got " +
                              std::to_string(f.size()));
        try {
            RawRecord r;
            r.replication = detail::parse_integer<std::uint64_t>("replication", f[0]);
            r.method = f[1];
            r.estimate = detail::parse_csv_real(f[2]);
            r.se = detail::parse_csv_real(f[3]);
            r.p_value = detail::parse_csv_real(f[4]);
            r.ci_lower = detail::parse_csv_real(f[5]);
            r.ci_upper = detail::parse_csv_real(f[6]);
            r.seed = detail::parse_integer<std::uint64_t>("seed", f[7]);
            out.push_back(std::move(r));
        } catch (const ConfigError& e) {
            throw ConfigError("raw csv line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

/// Flat per-method metric table at full precision.
inline std::string summary_csv(const StudySummary& s) {
    std::string out(kSummaryCsvHeader);
    out += '\n';
    for (const auto& m : s.methods) {
        out += m.method + ',' + detail::csv_real(m.rejection_rate) + ',' + detail::csv_real(m.bias) + ',' +
               detail::csv_real(m.sd) + ',' + detail::csv_real(m.mad) + ',' + std::to_string(m.n_replications) +
               ',' + detail::csv_real(m.runtime_seconds) + '\n';
    }
    return out;
}

inline std::vector<MethodSummary> parse_summary_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != kSummaryCsvHeader)
        throw ConfigError("summary csv: unexpected header");
    std::vector<MethodSummary> out;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv_line(detail::trim(line));
        if (f.size() != 7) throw ConfigError("summary csv: expected 7 fields");
        MethodSummary m;
        m.method = f[0];
        m.rejection_rate = detail::parse_csv_real(f[1]);
        m.bias = detail::parse_csv_real(f[2]);
        m.sd = detail::parse_csv_real(f[3]);
        m.mad = detail::parse_csv_real(f[4]);
        m.n_replications = detail::parse_integer<std::size_t>("n_replications", f[5]);
        m.runtime_seconds = detail::parse_csv_real(f[6]);
        out.push_back(std::move(m));
    }
    return out;
}

/// Markdown puts single-split columns first, then the multi-split (or
/// mining) group. Rates print as percentages with two decimals.
inline std::string emit_report(const StudySummary& summary, const ReportContext& ctx, ReportFormat format) {
    if (format == ReportFormat::Csv) return summary_csv(summary);

    std::vector<detail::Column> single, grouped;
    for (const auto& m : summary.methods) {
        if (ctx.kind == StudyKind::ZeroCate) {
            const bool multi = m.method.ends_with("_multisplit");
            const std::string base = multi ? m.method.substr(0, m.method.size() - 11) : m.method;
            (multi ? grouped : single)
                .push_back({multi ? "Multi (" + std::to_string(ctx.splits) + ") Splits" : "Single Split", base, &m});
        } else {
            const bool mined = m.method.ends_with("_mined");
            const std::string base = mined ? m.method.substr(0, m.method.size() - 6) : m.method;
            (mined ? grouped : single)
                .push_back({mined ? "Mining (F=" + std::to_string(ctx.mining_f) + ")" : "", base, &m});
        }
    }
    single.insert(single.end(), grouped.begin(), grouped.end());

    using Cell = std::string (*)(const MethodSummary&);
    std::vector<std::pair<std::string, Cell>> rows;
    if (ctx.kind == StudyKind::ZeroCate) {
        rows.emplace_back(ctx.cate == CateSpec::Zero ? "Size" : "Power",
                          [](const MethodSummary& m) { return detail::percent2(m.rejection_rate); });
    } else {
        rows.emplace_back("Bias", [](const MethodSummary& m) { return detail::fixed2(m.bias); });
        rows.emplace_back("SD", [](const MethodSummary& m) { return detail::fixed2(m.sd); });
        rows.emplace_back("MAD", [](const MethodSummary& m) { return detail::fixed2(m.mad); });
        rows.emplace_back("Size", [](const MethodSummary& m) { return detail::percent2(m.rejection_rate); });
    }
    return detail::markdown_table(single, rows);
}

/// Study kind implied by the method names of a record set.
inline StudyKind infer_study_kind(const std::vector<RawRecord>& records) {
    if (records.empty()) throw MergeError("no records");
    const bool zero = is_zero_cate_method(parse_method(records.front().method));
    for (const auto& r : records)
        if (is_zero_cate_method(parse_method(r.method)) != zero)
            throw MergeError("records mix zero-CATE and GATES methods");
    return zero ? StudyKind::ZeroCate : StudyKind::Gates;
}

}  // namespace hte
