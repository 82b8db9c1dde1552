#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <map>

#include "gravitykg/ingestion.hpp"
#include "support/fixtures.hpp"

using namespace gravitykg;
using namespace gravitykg::ingest;
using Catch::Approx;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("load_trade_csv filtering and errors") {
    fixtures::TempDir dir("trade");
    const std::string path = dir.str() + "/trade.csv";

    SECTION("year filter keeps the matching rows") {
        write_file(path,
                   "year,month,reporter,partner,commodity,flow,trade_value\n"
                   "2019,1,DEU,FRA,010121,Exports,10.5\n"
                   "2018,2,DEU,FRA,010121,Exports,9.5\n"
                   "2019,3,FRA,DEU,020230,Exports,1.25\n");
        const auto report = load_trade_csv(path, {2019}, Flow::Exports);
        CHECK(report.rows.size() == 2);
        CHECK(report.rows_read == 3);
        CHECK(report.rows_filtered_out == 1);
    }

    SECTION("empty file with valid header gives an empty list") {
        write_file(path, "year,month,reporter,partner,commodity,flow,trade_value\n");
        const auto report = load_trade_csv(path, {2019}, Flow::Exports);
        CHECK(report.rows.empty());
    }

    SECTION("month out of range is a RowError with the line number") {
        write_file(path,
                   "year,month,reporter,partner,commodity,flow,trade_value\n"
                   "2019,13,DEU,FRA,010121,Exports,10.5\n");
        CHECK_THROWS_AS(load_trade_csv(path, {2019}, Flow::Exports), RowError);
    }

    SECTION("non-numeric trade value is a RowError") {
        write_file(path,
                   "year,month,reporter,partner,commodity,flow,trade_value\n"
                   "2019,1,DEU,FRA,010121,Exports,abc\n");
        CHECK_THROWS_AS(load_trade_csv(path, {2019}, Flow::Exports), RowError);
    }

    SECTION("header mismatch is a SchemaError") {
        write_file(path, "yr,month,reporter,partner,commodity,flow,trade_value\n");
        CHECK_THROWS_AS(load_trade_csv(path, {2019}, Flow::Exports), SchemaError);
    }

    SECTION("missing file is an IoError") {
        CHECK_THROWS_AS(load_trade_csv(dir.str() + "/nope.csv", {2019}, Flow::Exports), IoError);
    }

    SECTION("flow filter") {
        write_file(path,
                   "year,month,reporter,partner,commodity,flow,trade_value\n"
                   "2019,1,DEU,FRA,010121,Imports,10.5\n");
        CHECK(load_trade_csv(path, {2019}, Flow::Exports).rows.empty());
        CHECK(load_trade_csv(path, {2019}, Flow::Imports).rows.size() == 1);
    }
}

TEST_CASE("join_gravity") {
    RawTradeRow t;
    t.year = 2019;
    t.month = 1;
    t.reporter = "DEU";
    t.partner = "FRA";
    t.commodity = "010121";
    t.flow = Flow::Exports;
    t.trade_value = 10.0;

    GravityRow g;
    g.year = 2019;
    g.reporter = "DEU";
    g.partner = "FRA";
    g.gdp_reporter = 4.0;
    g.gdp_partner = 9.0;
    g.harmonic_distance = 6.0;

    SECTION("matching covariates join") {
        EntityRegistry registry;
        const auto result = join_gravity({t}, {g}, registry);
        REQUIRE(result.records.size() == 1);
        CHECK(result.records[0].gdp_reporter == 4.0);
        CHECK(result.records[0].gdp_partner == 9.0);
        CHECK(result.records[0].harmonic_distance == 6.0);
        CHECK(result.unmatched == 0);
    }

    SECTION("unmatched rows are dropped but reported") {
        GravityRow other = g;
        other.partner = "ITA";
        EntityRegistry registry;
        const auto result = join_gravity({t}, {other}, registry);
        CHECK(result.records.empty());
        CHECK(result.unmatched == 1);
    }

    SECTION("duplicate gravity key is ambiguous") {
        EntityRegistry registry;
        CHECK_THROWS_AS(join_gravity({t}, {g, g}, registry), AmbiguousCovariates);
    }

    SECTION("join is order independent") {
        std::vector<RawTradeRow> trade;
        std::vector<GravityRow> gravity;
        Rng rng(5);
        for (int i = 0; i < 30; ++i) {
            RawTradeRow row = t;
            row.month = 1 + static_cast<int>(rng.uniform_index(12));
            row.reporter = "C" + std::to_string(rng.uniform_index(5));
            row.partner = "D" + std::to_string(rng.uniform_index(5));
            row.trade_value = rng.uniform(0.0, 100.0);
            trade.push_back(row);
        }
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                GravityRow row = g;
                row.reporter = "C" + std::to_string(i);
                row.partner = "D" + std::to_string(j);
                row.gdp_reporter = 1.0 + i;
                row.gdp_partner = 1.0 + j;
                gravity.push_back(row);
            }

        auto serialize = [](const std::vector<TradeRecord>& records) {
            std::multiset<std::string> out;
            for (const auto& r : records)
                out.insert(r.reporter.label + "|" + r.partner.label + "|" + std::to_string(r.month) + "|" +
                           std::to_string(r.trade_value) + "|" + std::to_string(r.gdp_reporter));
            return out;
        };

        EntityRegistry reg_a, reg_b;
        const auto result_a = join_gravity(trade, gravity, reg_a);
        std::vector<RawTradeRow> shuffled = trade;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
        const auto result_b = join_gravity(shuffled, gravity, reg_b);
        CHECK(serialize(result_a.records) == serialize(result_b.records));
    }
}

TEST_CASE("apply_log") {
    TradeRecord r;
    r.trade_value = std::exp(1.0) - 1.0;
    r.gdp_reporter = 10.0;
    r.gdp_partner = 20.0;
    r.harmonic_distance = 1.0;

    SECTION("log1p on trade value, log elsewhere") {
        const auto out = apply_log({r}, {LogField::TradeValue, LogField::Gdp, LogField::Distance});
        CHECK(out[0].trade_value == Approx(1.0).epsilon(1e-12));
        CHECK(out[0].harmonic_distance == 0.0);
        CHECK(out[0].gdp_reporter == Approx(std::log(10.0)));
    }

    SECTION("negative inputs raise DomainError") {
        TradeRecord bad = r;
        bad.gdp_reporter = -5.0;
        CHECK_THROWS_AS(apply_log({bad}, {LogField::Gdp}), DomainError);
        TradeRecord bad2 = r;
        bad2.trade_value = -1.0;
        CHECK_THROWS_AS(apply_log({bad2}, {LogField::TradeValue}), DomainError);
    }

    SECTION("log then exp round trip") {
        Rng rng(3);
        for (int i = 0; i < 100; ++i) {
            TradeRecord rec = r;
            rec.gdp_reporter = rng.log_uniform(1e-3, 1e9);
            rec.harmonic_distance = rng.log_uniform(1e-3, 1e5);
            const auto out = apply_log({rec}, {LogField::Gdp, LogField::Distance});
            CHECK(std::exp(out[0].gdp_reporter) == Approx(rec.gdp_reporter).epsilon(1e-12));
            CHECK(std::exp(out[0].harmonic_distance) == Approx(rec.harmonic_distance).epsilon(1e-12));
        }
    }
}

TEST_CASE("generate_synthetic") {
    SyntheticSpec small;
    small.n_countries = 6;
    small.n_commodities = 5;
    small.months = 24;
    small.noise_sigma = 0.4;

    SECTION("same seed twice is byte identical") {
        fixtures::TempDir dir("synth");
        const auto a = generate_synthetic(small, 99);
        const auto b = generate_synthetic(small, 99);
        write_trade_csv(dir.str() + "/a.csv", a.trade_rows);
        write_trade_csv(dir.str() + "/b.csv", b.trade_rows);
        CHECK(slurp(dir.str() + "/a.csv") == slurp(dir.str() + "/b.csv"));
        write_gravity_csv(dir.str() + "/ga.csv", a.gravity_rows);
        write_gravity_csv(dir.str() + "/gb.csv", b.gravity_rows);
        CHECK(slurp(dir.str() + "/ga.csv") == slurp(dir.str() + "/gb.csv"));
    }

    SECTION("different seeds differ") {
        const auto a = generate_synthetic(small, 99);
        const auto b = generate_synthetic(small, 100);
        bool same = a.trade_rows.size() == b.trade_rows.size();
        if (same && !a.trade_rows.empty()) same = a.trade_rows[0].trade_value == b.trade_rows[0].trade_value;
        CHECK_FALSE(same);
    }

    SECTION("noiseless generator reproduces the gravity product exactly") {
        SyntheticSpec noiseless = small;
        noiseless.noise_sigma = 0.0;
        const auto data = generate_synthetic(noiseless, 44);
        REQUIRE_FALSE(data.trade_rows.empty());
        std::map<std::tuple<int, std::string, std::string>, const GravityRow*> covariates;
        for (const auto& g : data.gravity_rows) covariates[{g.year, g.reporter, g.partner}] = &g;
        for (const auto& row : data.trade_rows) {
            const auto* g = covariates.at({row.year, row.reporter, row.partner});
            CHECK(row.trade_value == g->gdp_reporter * g->gdp_partner / g->harmonic_distance);
        }
    }

    SECTION("candidate row count follows the grid") {
        SyntheticSpec spec;
        spec.n_countries = 20;
        spec.n_commodities = 50;
        spec.months = 48;
        const auto data = generate_synthetic(spec, 7);
        CHECK(data.candidate_rows == 20u * 19u * 50u * 48u);
        CHECK(data.trade_rows.size() < data.candidate_rows); // sparsity thinning
        CHECK(data.trade_rows.size() > 0);
        // covariates exist for every ordered pair and year
        CHECK(data.gravity_rows.size() == 20u * 19u * 4u);
    }

    SECTION("every country trades somewhere") {
        const auto data = generate_synthetic(small, 5);
        std::set<std::string> active;
        for (const auto& row : data.trade_rows) {
            active.insert(row.reporter);
            active.insert(row.partner);
        }
        CHECK(active.size() == small.n_countries);
    }

    SECTION("invalid specs are rejected") {
        SyntheticSpec bad = small;
        bad.n_countries = 1;
        CHECK_THROWS_AS(generate_synthetic(bad, 1), ConfigError);
    }
}

TEST_CASE("trade csv round trip") {
    SyntheticSpec small;
    small.n_countries = 5;
    small.n_commodities = 3;
    small.months = 6;
    const auto data = generate_synthetic(small, 17);

    fixtures::TempDir dir("roundtrip");
    const std::string path = dir.str() + "/trade.csv";
    write_trade_csv(path, data.trade_rows);
    const auto loaded = load_trade_csv(path, {}, Flow::Exports);
    REQUIRE(loaded.rows.size() == data.trade_rows.size());
    for (std::size_t i = 0; i < loaded.rows.size(); ++i) {
        CHECK(loaded.rows[i].year == data.trade_rows[i].year);
        CHECK(loaded.rows[i].month == data.trade_rows[i].month);
        CHECK(loaded.rows[i].reporter == data.trade_rows[i].reporter);
        CHECK(loaded.rows[i].partner == data.trade_rows[i].partner);
        CHECK(loaded.rows[i].commodity == data.trade_rows[i].commodity);
        CHECK(loaded.rows[i].trade_value == data.trade_rows[i].trade_value); // exact round trip
    }
}

TEST_CASE("csv reader handles RFC 4180 quoting") {
    fixtures::TempDir dir("csv");
    const std::string path = dir.str() + "/q.csv";
    write_file(path, "a,b\n\"x,\"\"y\"\"\",2\n");
    csv::Reader reader(path);
    csv::Row row;
    REQUIRE(reader.next(row));
    REQUIRE(reader.next(row));
    CHECK(row.fields[0] == "x,\"y\"");
    CHECK(row.fields[1] == "2");
}
