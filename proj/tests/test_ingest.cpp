#include <catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "dhflex/ingest.hpp"
#include "support/builders.hpp"

using namespace dhflex;

namespace {

const std::string kMeta =
    "meter_id,q_max_kw,q_mean_kw,t_rl_mean_c,t_rl_max_c,t_rl_limit_c,consumer_type\n"
    "1,1000,100,55,80,65,residential\n"
    "2,500,50,55,80,65,commercial\n";

/// One full day for meter 1 with constant values, as CSV rows.
std::string full_day(int meter_id, double flow, double ts, double tr, double heat) {
  std::string out{kMeterCsvHeader};
  out += '\n';
  for (int t = 0; t < 24; ++t)
    out += std::to_string(meter_id) + "," + std::to_string(t) + "," +
           std::to_string(flow) + "," + std::to_string(ts) + "," + std::to_string(tr) +
           "," + std::to_string(heat) + "\n";
  return out;
}

}  // namespace

TEST_CASE("parse a complete file") {
  Dataset ds = parse_dataset(full_day(1, 2.0, 70, 50, 46.4), kMeta);
  REQUIRE(ds.meters.size() == 1);
  REQUIRE(ds.metas.size() == 2);  // metadata may cover absent meters
  CHECK(ds.hours == 24);
  CHECK(ds.meters[0].flow[13] == 2.0);
  CHECK(ds.meters[0].heat[0] == 46.4);
}

TEST_CASE("header and shape errors") {
  CHECK_THROWS_AS(parse_dataset("bogus\n", kMeta), ParseError);
  CHECK_THROWS_AS(parse_dataset(full_day(1, 2, 70, 50, 46.4), "bogus\n"), ParseError);
  CHECK_THROWS_AS(parse_dataset(std::string{kMeterCsvHeader} + "\n1,0,1,70,50\n", kMeta),
                  ParseError);  // 5 columns
  CHECK_THROWS_AS(
      parse_dataset(std::string{kMeterCsvHeader} + "\n1,-1,1,70,50,23.2\n", kMeta),
      ParseError);  // negative hour
  CHECK_THROWS_AS(parse_dataset("", kMeta), ParseError);
  CHECK_THROWS_AS(
      parse_dataset(full_day(1, 2, 70, 50, 46.4),
                    std::string{kMetaCsvHeader} + "\n1,1000,100,55,80,65,castle\n"),
      ParseError);  // unknown consumer type
}

TEST_CASE("duplicate and unknown meters") {
  std::string dup = full_day(1, 2.0, 70, 50, 46.4) + "1,5,2,70,50,46.4\n";
  CHECK_THROWS_AS(parse_dataset(dup, kMeta), DuplicateRow);

  // a duplicate of an hour whose value cells are all empty still counts
  std::string dup_empty = full_day(1, 2.0, 70, 50, 46.4);
  dup_empty = dup_empty + "2,0,,,,\n";
  for (int t = 1; t < 24; ++t) dup_empty += "2," + std::to_string(t) + ",1,70,50,23.2\n";
  dup_empty += "2,0,,,,\n";
  CHECK_THROWS_AS(parse_dataset(dup_empty, kMeta), DuplicateRow);

  CHECK_THROWS_AS(parse_dataset(full_day(9, 2.0, 70, 50, 46.4), kMeta), MissingMeta);

  std::string dup_meta = kMeta + "1,1000,100,55,80,65,residential\n";
  CHECK_THROWS_AS(parse_dataset(full_day(1, 2, 70, 50, 46.4), dup_meta), DuplicateRow);
}

TEST_CASE("horizon must be a positive multiple of 24") {
  std::string extra = full_day(1, 2.0, 70, 50, 46.4) + "1,24,2,70,50,46.4\n";
  CHECK_THROWS_AS(parse_dataset(extra, kMeta), BadHorizon);
}

TEST_CASE("gaps interpolate linearly and edges extend") {
  std::string csv{kMeterCsvHeader};
  csv += '\n';
  // hour 0 missing entirely, hour 2 flow empty: 4,gap,8 -> 4,6,8 after fill
  csv += "1,1,4,70,50,92.8\n";
  csv += "1,2,,70,50,\n";
  csv += "1,3,8,70,50,185.6\n";
  for (int t = 4; t < 24; ++t) csv += "1," + std::to_string(t) + ",8,70,50,185.6\n";

  Dataset raw = parse_dataset(csv, kMeta);
  auto [ds, report] = fill_gaps(raw, dhtest::round_constants());
  const MeterSeries& s = ds.meters[0];
  CHECK(s.flow[0] == 4.0);   // leading edge copies the first known value
  CHECK(s.flow[1] == 4.0);
  CHECK(s.flow[2] == 6.0);   // interpolated
  CHECK(s.flow[3] == 8.0);
  // heat at the repaired hour follows the identity
  CHECK(s.heat[2] == Catch::Approx(6.0 * 20.0 * 1.16).margin(1e-12));
  CHECK(report.total_gaps() > 0);
  CHECK(validate(ds, dhtest::round_constants()).pass);
}

TEST_CASE("a series with no values at all cannot be repaired") {
  std::string csv{kMeterCsvHeader};
  csv += '\n';
  for (int t = 0; t < 24; ++t) csv += "1," + std::to_string(t) + ",,,,\n";
  Dataset raw = parse_dataset(csv, kMeta);
  CHECK_THROWS_AS(fill_gaps(raw, dhtest::round_constants()), UnfillableSeries);
}

TEST_CASE("single missing cell repairs keep the heat identity") {
  Constants c = dhtest::round_constants();
  std::string csv{kMeterCsvHeader};
  csv += '\n';
  for (int t = 0; t < 24; ++t) {
    if (t == 5) {
      csv += "1,5,,70,50,100\n";  // flow missing, stale heat kept on file
    } else if (t == 6) {
      csv += "1,6,4,70,50,\n";    // heat missing
    } else {
      csv += "1," + std::to_string(t) + ",4,70,50,92.8\n";
    }
  }
  auto [ds, report] = fill_gaps(parse_dataset(csv, kMeta), c);
  const MeterSeries& s = ds.meters[0];
  // hour 5: flow interpolates to 4 and the heat cell is re-derived, so the
  // stale 100 kW reading is replaced by the identity value
  CHECK(s.flow[5] == Catch::Approx(4.0));
  CHECK(s.heat[5] == Catch::Approx(92.8).margin(1e-12));
  CHECK(s.heat[6] == Catch::Approx(92.8).margin(1e-12));
  CHECK(validate(ds, c).pass);
}

TEST_CASE("fill_gaps is idempotent") {
  std::string csv{kMeterCsvHeader};
  csv += '\n';
  csv += "1,0,4,70,50,92.8\n";
  csv += "1,3,8,,50,\n";
  for (int t = 4; t < 24; ++t) csv += "1," + std::to_string(t) + ",8,70,50,185.6\n";
  auto [once, r1] = fill_gaps(parse_dataset(csv, kMeta), dhtest::round_constants());
  auto [twice, r2] = fill_gaps(once, dhtest::round_constants());
  CHECK(r2.total_gaps() == 0);
  for (std::size_t t = 0; t < once.hours; ++t) {
    CHECK(once.meters[0].flow[t] == twice.meters[0].flow[t]);
    CHECK(once.meters[0].heat[t] == twice.meters[0].heat[t]);
  }
}

TEST_CASE("serialization round-trips byte for byte") {
  Constants c = dhtest::round_constants();
  Dataset ds = dhtest::make_dataset({
      dhtest::make_series(1, {1.25, 2.5, 3.125, 0.1}, 83.7, 51.3, c),
      dhtest::make_series(2, {0.7, 0.7, 0.7}, 75.0, 60.0, c),
  });
  std::string meter_csv = serialize_meter_csv(ds);
  std::string meta_csv = serialize_meta_csv(ds);
  Dataset back = parse_dataset(meter_csv, meta_csv);
  CHECK(serialize_meter_csv(back) == meter_csv);
  CHECK(serialize_meta_csv(back) == meta_csv);
}

TEST_CASE("absent hours survive a round-trip as gaps") {
  Constants c = dhtest::round_constants();
  Dataset ds = dhtest::make_dataset({dhtest::make_series(1, {1, 2, 3}, 70, 50, c)});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ds.meters[0].flow[7] = nan;
  ds.meters[0].t_supply[7] = nan;
  ds.meters[0].t_return[7] = nan;
  ds.meters[0].heat[7] = nan;
  Dataset back = parse_dataset(serialize_meter_csv(ds), serialize_meta_csv(ds));
  CHECK(std::isnan(back.meters[0].flow[7]));
  CHECK(std::isnan(back.meters[0].heat[7]));
  CHECK(back.meters[0].flow[6] == ds.meters[0].flow[6]);
}

TEST_CASE("validate flags identity violations") {
  Constants c = dhtest::round_constants();
  Dataset ds = dhtest::make_dataset({dhtest::make_series(1, {4, 4, 4, 4}, 70, 50, c)});
  CHECK(validate(ds, c).pass);

  SECTION("heat off by ten percent") {
    ds.meters[0].heat[1] *= 1.10;
    ValidationReport r = validate(ds, c);
    CHECK_FALSE(r.pass);
    CHECK(r.total_violations() == 1);
    CHECK(r.meters[0].max_rel_error > 0.05);
  }
  SECTION("negative flow") {
    ds.meters[0].flow[2] = -1.0;
    ds.meters[0].heat[2] = heat_from_flow(-1.0, 20.0, c);
    CHECK_FALSE(validate(ds, c).pass);
  }
  SECTION("positive heat at non-positive spread") {
    ds.meters[0].t_return[3] = 70.0;  // dT = 0
    CHECK_FALSE(validate(ds, c).pass);
  }
  SECTION("unfilled gap") {
    ds.meters[0].heat[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(validate(ds, c).pass);
  }
  SECTION("small metering noise stays within tolerance") {
    ds.meters[0].heat[1] *= 1.01;  // 1 % < the 2 % default
    CHECK(validate(ds, c).pass);
  }
}
