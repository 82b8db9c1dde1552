#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gravitykg/core.hpp"
#include "gravitykg/csv.hpp"
#include "gravitykg/errors.hpp"

namespace gravitykg {

struct GravityParams {
    double constant_G = 1.0;
    // Distance enters unsquared by default; the exponent is exposed for the
    // classical inverse-square variant.
    double distance_exponent = 1.0;

    void validate() const {
        if (constant_G <= 0.0) throw ConfigError("constant_G must be > 0");
        if (distance_exponent <= 0.0) throw ConfigError("distance_exponent must be > 0");
    }
};

// Attraction force between two masses: G * m_i * m_j / d_ij.
inline double gravity_score(double m_i, double m_j, double d_ij, double G) {
    if (m_i <= 0.0 || m_j <= 0.0) throw DomainError("masses must be positive");
    if (G <= 0.0) throw DomainError("gravitational constant must be positive");
    if (d_ij == 0.0) throw SingularDistance("zero distance between entities");
    if (d_ij < 0.0) throw DomainError("distance must be positive");
    // grouping m_i * m_j first keeps the score bit-exactly symmetric
    return G * (m_i * m_j) / d_ij;
}

struct PairScoreReport {
    std::vector<GravityScore> scores;
    std::size_t skipped_pairs = 0; // pairs with no usable observations
};

// One score per unordered country pair per year. Masses are the year-mean
// GDP of each country over all records it appears in; the distance is the
// pair's mean harmonic distance. Output is sorted by (year, pair).
inline PairScoreReport score_all_pairs(const std::vector<TradeRecord>& records, const GravityParams& params) {
    params.validate();
    if (records.empty()) throw EmptyData("score_all_pairs: no records");

    struct Acc {
        double sum = 0.0;
        std::size_t count = 0;
        void add(double v) {
            sum += v;
            ++count;
        }
        double mean() const { return sum / static_cast<double>(count); }
    };

    std::map<std::pair<int, std::string>, Acc> gdp_by_country_year;
    std::map<std::tuple<int, std::string, std::string>, Acc> dist_by_pair_year;
    std::map<std::pair<std::string, std::string>, EntityId> entity_of;

    for (const auto& r : records) {
        gdp_by_country_year[{r.year, r.reporter.label}].add(r.gdp_reporter);
        gdp_by_country_year[{r.year, r.partner.label}].add(r.gdp_partner);
        const auto& a = r.reporter.label < r.partner.label ? r.reporter : r.partner;
        const auto& b = r.reporter.label < r.partner.label ? r.partner : r.reporter;
        dist_by_pair_year[{r.year, a.label, b.label}].add(r.harmonic_distance);
        entity_of[{a.label, b.label}] = a;
        entity_of[{b.label, a.label}] = b;
    }

    PairScoreReport report;
    for (const auto& [key, dist_acc] : dist_by_pair_year) {
        const auto& [year, label_a, label_b] = key;
        const auto gdp_a = gdp_by_country_year.find({year, label_a});
        const auto gdp_b = gdp_by_country_year.find({year, label_b});
        if (gdp_a == gdp_by_country_year.end() || gdp_b == gdp_by_country_year.end() ||
            dist_acc.count == 0) {
            ++report.skipped_pairs;
            continue;
        }
        const double d = dist_acc.mean();
        const double d_effective =
            params.distance_exponent == 1.0 ? d : std::pow(d, params.distance_exponent);
        GravityScore score;
        score.year = year;
        score.pair = {entity_of.at({label_a, label_b}), entity_of.at({label_b, label_a})};
        score.constant_G = params.constant_G;
        score.score = gravity_score(gdp_a->second.mean(), gdp_b->second.mean(), d_effective, params.constant_G);
        report.scores.push_back(std::move(score));
    }
    // std::map iteration already yields (year, pair) order
    return report;
}

inline void write_scores_csv(const std::string& path, const std::vector<GravityScore>& scores) {
    csv::Writer w(path);
    w.write_row({"year", "country_a", "country_b", "score"});
    for (const auto& s : scores)
        w.write_row({std::to_string(s.year), s.pair.first.label, s.pair.second.label,
                     csv::format_double(s.score)});
}

struct ScoreRow {
    int year = 0;
    std::string country_a;
    std::string country_b;
    double score = 0.0;
};

inline std::vector<ScoreRow> load_scores_csv(const std::string& path) {
    csv::Reader reader(path);
    csv::Row row;
    if (!reader.next(row)) throw SchemaError("empty file, missing header: " + path);
    csv::expect_header(row, {"year", "country_a", "country_b", "score"}, path);
    std::vector<ScoreRow> rows;
    while (reader.next(row)) {
        if (row.fields.size() == 1 && row.fields[0].empty()) continue;
        if (row.fields.size() != 4) throw RowError(row.line, "expected 4 fields");
        ScoreRow s;
        s.year = static_cast<int>(csv::parse_long(row.fields[0], row.line, "year"));
        s.country_a = row.fields[1];
        s.country_b = row.fields[2];
        s.score = csv::parse_double(row.fields[3], row.line, "score");
        rows.push_back(std::move(s));
    }
    return rows;
}

} // namespace gravitykg
