#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gravitykg/core.hpp"
#include "gravitykg/csv.hpp"
#include "gravitykg/errors.hpp"
#include "gravitykg/rng.hpp"

namespace gravitykg::ingest {

enum class Flow { Exports, Imports };

inline std::string to_string(Flow f) { return f == Flow::Exports ? "Exports" : "Imports"; }

inline Flow flow_from_string(const std::string& s) {
    if (s == "Exports") return Flow::Exports;
    if (s == "Imports") return Flow::Imports;
    throw ConfigError("unknown trade flow: " + s);
}

struct DatasetConfig {
    std::string trade_path;
    std::string gravity_path;
    std::vector<int> years;
    Flow flow = Flow::Exports;
    bool log_transform = false;
    std::uint64_t seed = 0;
};

// Desk-scale substitute for the production-scale bilateral datasets.
struct SyntheticSpec {
    std::size_t n_countries = 20;
    std::size_t n_commodities = 50;
    std::size_t months = 48;
    double noise_sigma = 0.5;

    void validate() const {
        if (n_countries < 2) throw ConfigError("n_countries must be >= 2");
        if (n_commodities < 1) throw ConfigError("n_commodities must be >= 1");
        if (months < 1) throw ConfigError("months must be >= 1");
        if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    }
};

// One row of the trade CSV, prior to the covariate join.
struct RawTradeRow {
    int year = 0;
    int month = 0;
    std::string reporter;
    std::string partner;
    std::string commodity;
    Flow flow = Flow::Exports;
    double trade_value = 0.0;
};

// One row of the gravity covariate CSV, keyed by (year, reporter, partner).
struct GravityRow {
    int year = 0;
    std::string reporter;
    std::string partner;
    double gdp_reporter = 0.0;
    double gdp_partner = 0.0;
    double harmonic_distance = 0.0;
};

inline const std::vector<std::string> kTradeHeader = {
    "year", "month", "reporter", "partner", "commodity", "flow", "trade_value"};
inline const std::vector<std::string> kGravityHeader = {
    "year", "reporter", "partner", "gdp_reporter", "gdp_partner", "harmonic_distance"};

struct LoadReport {
    std::vector<RawTradeRow> rows;
    std::size_t rows_read = 0;         // data rows seen in the file
    std::size_t rows_filtered_out = 0; // excluded by the year/flow filter
};

// Parses the trade CSV and keeps rows matching the requested years and flow
// direction. Malformed rows raise RowError with the offending line; filtered
// rows are counted, never silently dropped.
inline LoadReport load_trade_csv(const std::string& path, const std::vector<int>& years, Flow flow) {
    csv::Reader reader(path);
    csv::Row row;
    if (!reader.next(row)) throw SchemaError("empty file, missing header: " + path);
    csv::expect_header(row, kTradeHeader, path);

    const std::set<int> year_set(years.begin(), years.end());
    LoadReport report;
    while (reader.next(row)) {
        if (row.fields.size() == 1 && row.fields[0].empty()) continue; // trailing newline
        if (row.fields.size() != kTradeHeader.size())
            throw RowError(row.line, "expected " + std::to_string(kTradeHeader.size()) + " fields, got " +
                                         std::to_string(row.fields.size()));
        ++report.rows_read;
        RawTradeRow r;
        r.year = static_cast<int>(csv::parse_long(row.fields[0], row.line, "year"));
        r.month = static_cast<int>(csv::parse_long(row.fields[1], row.line, "month"));
        if (r.month < 1 || r.month > 12) throw RowError(row.line, "month out of range: " + row.fields[1]);
        r.reporter = row.fields[2];
        r.partner = row.fields[3];
        if (r.reporter.empty() || r.partner.empty()) throw RowError(row.line, "empty country code");
        if (r.reporter == r.partner) throw RowError(row.line, "reporter equals partner: " + r.reporter);
        r.commodity = row.fields[4];
        if (row.fields[5] == "Exports") {
            r.flow = Flow::Exports;
        } else if (row.fields[5] == "Imports") {
            r.flow = Flow::Imports;
        } else {
            throw RowError(row.line, "unknown flow: " + row.fields[5]);
        }
        r.trade_value = csv::parse_double(row.fields[6], row.line, "trade_value");
        if (r.trade_value < 0.0) throw RowError(row.line, "negative trade_value");

        if ((!year_set.empty() && !year_set.count(r.year)) || r.flow != flow) {
            ++report.rows_filtered_out;
            continue;
        }
        report.rows.push_back(std::move(r));
    }
    return report;
}

inline std::vector<GravityRow> load_gravity_csv(const std::string& path) {
    csv::Reader reader(path);
    csv::Row row;
    if (!reader.next(row)) throw SchemaError("empty file, missing header: " + path);
    csv::expect_header(row, kGravityHeader, path);

    std::vector<GravityRow> rows;
    while (reader.next(row)) {
        if (row.fields.size() == 1 && row.fields[0].empty()) continue;
        if (row.fields.size() != kGravityHeader.size())
            throw RowError(row.line, "expected " + std::to_string(kGravityHeader.size()) + " fields");
        GravityRow g;
        g.year = static_cast<int>(csv::parse_long(row.fields[0], row.line, "year"));
        g.reporter = row.fields[1];
        g.partner = row.fields[2];
        g.gdp_reporter = csv::parse_double(row.fields[3], row.line, "gdp_reporter");
        g.gdp_partner = csv::parse_double(row.fields[4], row.line, "gdp_partner");
        g.harmonic_distance = csv::parse_double(row.fields[5], row.line, "harmonic_distance");
        if (g.gdp_reporter <= 0.0 || g.gdp_partner <= 0.0) throw RowError(row.line, "non-positive GDP");
        if (g.harmonic_distance <= 0.0) throw RowError(row.line, "non-positive harmonic_distance");
        rows.push_back(std::move(g));
    }
    return rows;
}

struct JoinResult {
    std::vector<TradeRecord> records;
    std::size_t unmatched = 0;                 // trade rows without covariates
    std::vector<std::string> unmatched_keys;   // first few, for the report
};

// Inner join of trade rows with gravity covariates on (year, reporter,
// partner). Output order equals trade input order; unmatched rows are
// dropped but counted.
inline JoinResult join_gravity(const std::vector<RawTradeRow>& trade,
                               const std::vector<GravityRow>& gravity,
                               EntityRegistry& registry) {
    std::map<std::tuple<int, std::string, std::string>, const GravityRow*> by_key;
    for (const auto& g : gravity) {
        auto key = std::make_tuple(g.year, g.reporter, g.partner);
        if (!by_key.emplace(key, &g).second)
            throw AmbiguousCovariates("duplicate gravity key: " + std::to_string(g.year) + "," + g.reporter +
                                      "," + g.partner);
    }

    JoinResult result;
    result.records.reserve(trade.size());
    for (const auto& t : trade) {
        auto it = by_key.find(std::make_tuple(t.year, t.reporter, t.partner));
        if (it == by_key.end()) {
            ++result.unmatched;
            if (result.unmatched_keys.size() < 10)
                result.unmatched_keys.push_back(std::to_string(t.year) + "," + t.reporter + "," + t.partner);
            continue;
        }
        const GravityRow& g = *it->second;
        TradeRecord rec;
        rec.year = t.year;
        rec.month = t.month;
        rec.reporter = registry.intern(t.reporter);
        rec.partner = registry.intern(t.partner);
        rec.commodity = t.commodity;
        rec.trade_value = t.trade_value;
        rec.gdp_reporter = g.gdp_reporter;
        rec.gdp_partner = g.gdp_partner;
        rec.harmonic_distance = g.harmonic_distance;
        result.records.push_back(std::move(rec));
    }
    return result;
}

enum class LogField { TradeValue, Gdp, Distance };

// Natural-log transform of the selected fields. trade_value uses log1p so
// zero-valued flows stay finite; GDP and distance must be strictly positive.
inline std::vector<TradeRecord> apply_log(std::vector<TradeRecord> records,
                                          const std::set<LogField>& fields) {
    for (auto& r : records) {
        if (fields.count(LogField::TradeValue)) {
            if (r.trade_value < 0.0) throw DomainError("negative trade_value under log transform");
            r.trade_value = std::log1p(r.trade_value);
        }
        if (fields.count(LogField::Gdp)) {
            if (r.gdp_reporter <= 0.0 || r.gdp_partner <= 0.0)
                throw DomainError("non-positive GDP under log transform");
            r.gdp_reporter = std::log(r.gdp_reporter);
            r.gdp_partner = std::log(r.gdp_partner);
        }
        if (fields.count(LogField::Distance)) {
            if (r.harmonic_distance <= 0.0) throw DomainError("non-positive distance under log transform");
            r.harmonic_distance = std::log(r.harmonic_distance);
        }
    }
    return records;
}

inline void write_trade_csv(const std::string& path, const std::vector<RawTradeRow>& rows) {
    csv::Writer w(path);
    w.write_row(kTradeHeader);
    for (const auto& r : rows) {
        w.write_row({std::to_string(r.year), std::to_string(r.month), r.reporter, r.partner, r.commodity,
                     to_string(r.flow), csv::format_double(r.trade_value)});
    }
}

inline void write_gravity_csv(const std::string& path, const std::vector<GravityRow>& rows) {
    csv::Writer w(path);
    w.write_row(kGravityHeader);
    for (const auto& g : rows) {
        w.write_row({std::to_string(g.year), g.reporter, g.partner, csv::format_double(g.gdp_reporter),
                     csv::format_double(g.gdp_partner), csv::format_double(g.harmonic_distance)});
    }
}

namespace detail {

inline std::vector<std::string> country_labels(std::size_t n) {
    static const std::array<const char*, 60> kIso3 = {
        "DEU", "USA", "FRA", "CHN", "NLD", "GBR", "ITA", "POL", "AUT", "BEL", "ESP", "CHE",
        "CZE", "SWE", "HUN", "DNK", "JPN", "KOR", "RUS", "TUR", "IND", "BRA", "MEX", "CAN",
        "AUS", "NOR", "FIN", "PRT", "GRC", "IRL", "ROU", "SVK", "SVN", "BGR", "HRV", "LTU",
        "LVA", "EST", "LUX", "UKR", "ZAF", "ARG", "CHL", "COL", "PER", "THA", "VNM", "MYS",
        "IDN", "PHL", "SGP", "ISR", "SAU", "ARE", "EGY", "MAR", "NGA", "KEN", "NZL", "ISL"};
    std::vector<std::string> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < kIso3.size()) {
            labels.emplace_back(kIso3[i]);
        } else {
            // beyond the table: synthetic ISO-3-like codes
            std::string code = "X";
            code += static_cast<char>('A' + (i / 26) % 26);
            code += static_cast<char>('A' + i % 26);
            labels.push_back(std::move(code));
        }
    }
    return labels;
}

inline std::vector<std::string> commodity_codes(std::size_t n, Rng& rng) {
    std::set<std::string> seen;
    std::vector<std::string> codes;
    while (codes.size() < n) {
        // 6-digit HS-like code with a plausible chapter prefix
        const unsigned chapter = 1 + static_cast<unsigned>(rng.uniform_index(96));
        unsigned rest = static_cast<unsigned>(rng.uniform_index(10000));
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%02u%04u", chapter, rest);
        if (seen.insert(buf).second) codes.emplace_back(buf);
    }
    return codes;
}

} // namespace detail

struct SyntheticData {
    std::vector<RawTradeRow> trade_rows;
    std::vector<GravityRow> gravity_rows;
    std::size_t candidate_rows = 0; // ordered pairs x commodities x months
};

// Generates a dataset with a planted gravity signal: masses and distances are
// log-uniform, trade values follow G*M_i*M_j/D_ij with a per-commodity
// log-normal scale and per-row log-normal noise (both collapse to 1 when
// noise_sigma is 0, so the noiseless generator reproduces the gravity product
// exactly). Pair activity follows a logistic curve in log gravity, which
// thins the candidate grid and leaves link structure correlated with the
// planted signal.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    const std::size_t n = spec.n_countries;
    const int base_year = 2015;
    const std::size_t n_years = (spec.months + 11) / 12;

    const auto labels = detail::country_labels(n);
    std::vector<double> mass(n), growth(n);
    for (std::size_t i = 0; i < n; ++i) mass[i] = rng.log_uniform(50.0, 5000.0);
    for (std::size_t i = 0; i < n; ++i) growth[i] = rng.uniform(-0.02, 0.06);

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = rng.log_uniform(300.0, 19000.0);

    const auto commodities = detail::commodity_codes(spec.n_commodities, rng);
    std::vector<double> commodity_scale(spec.n_commodities);
    for (std::size_t c = 0; c < spec.n_commodities; ++c)
        commodity_scale[c] = std::exp(spec.noise_sigma * rng.normal());

    // Pair activity: logistic in log gravity around the median, slope ~ one
    // log-unit, so roughly half the pairs trade and high-gravity pairs trade
    // almost surely.
    std::vector<double> log_g;
    log_g.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) log_g.push_back(std::log(mass[i] * mass[j] / dist[i][j]));
    std::vector<double> sorted_log_g = log_g;
    std::sort(sorted_log_g.begin(), sorted_log_g.end());
    const double median_log_g = sorted_log_g[sorted_log_g.size() / 2];

    std::vector<std::vector<bool>> active(n, std::vector<bool>(n, false));
    {
        std::size_t pair_idx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j, ++pair_idx) {
                const double p = 1.0 / (1.0 + std::exp(-(log_g[pair_idx] - median_log_g) / 1.5));
                active[i][j] = active[j][i] = rng.uniform() < p;
            }
        }
    }
    // No isolated countries: force-activate the highest-gravity pair of any
    // country that ended up with no partners.
    for (std::size_t i = 0; i < n; ++i) {
        bool any = false;
        for (std::size_t j = 0; j < n && !any; ++j) any = (j != i && active[i][j]);
        if (any) continue;
        std::size_t best = (i == 0) ? 1 : 0;
        double best_g = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double g = mass[i] * mass[j] / dist[i][j];
            if (g > best_g) {
                best_g = g;
                best = j;
            }
        }
        active[i][best] = active[best][i] = true;
    }

    // Commodity menu per directed pair.
    constexpr double kCommodityKeepProb = 0.08;
    SyntheticData out;
    out.candidate_rows = n * (n - 1) * spec.n_commodities * spec.months;

    auto gdp_at = [&](std::size_t i, int year) {
        return mass[i] * std::pow(1.0 + growth[i], year - base_year);
    };

    for (std::size_t rep = 0; rep < n; ++rep) {
        for (std::size_t par = 0; par < n; ++par) {
            if (rep == par || !active[rep][par]) continue;
            for (std::size_t c = 0; c < spec.n_commodities; ++c) {
                if (rng.uniform() >= kCommodityKeepProb) continue;
                for (std::size_t m = 0; m < spec.months; ++m) {
                    const int year = base_year + static_cast<int>(m / 12);
                    RawTradeRow row;
                    row.year = year;
                    row.month = 1 + static_cast<int>(m % 12);
                    row.reporter = labels[rep];
                    row.partner = labels[par];
                    row.commodity = commodities[c];
                    row.flow = Flow::Exports;
                    const double gravity = gdp_at(rep, year) * gdp_at(par, year) / dist[rep][par];
                    const double noise =
                        spec.noise_sigma > 0.0 ? std::exp(spec.noise_sigma * rng.normal()) : 1.0;
                    row.trade_value = gravity * commodity_scale[c] * noise;
                    out.trade_rows.push_back(std::move(row));
                }
            }
        }
    }

    // Covariates for every ordered pair and year, traded or not.
    for (std::size_t y = 0; y < n_years; ++y) {
        const int year = base_year + static_cast<int>(y);
        for (std::size_t rep = 0; rep < n; ++rep) {
            for (std::size_t par = 0; par < n; ++par) {
                if (rep == par) continue;
                GravityRow g;
                g.year = year;
                g.reporter = labels[rep];
                g.partner = labels[par];
                g.gdp_reporter = gdp_at(rep, year);
                g.gdp_partner = gdp_at(par, year);
                g.harmonic_distance = dist[rep][par];
                out.gravity_rows.push_back(std::move(g));
            }
        }
    }
    return out;
}

} // namespace gravitykg::ingest
