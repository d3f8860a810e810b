#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dhflex/cli.hpp"
#include "support/builders.hpp"

namespace fs = std::filesystem;
using namespace dhflex;
using namespace dhflex::cli;

namespace {

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"dhflex"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return main_impl(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(out);
  out << text;
}

}  // namespace

// ---------------------------------------------------------------------------
// parsers
// ---------------------------------------------------------------------------

TEST_CASE("scenario tokens parse into stage chains") {
  ToolOptions o;
  std::vector<int> inc{1, 2};

  CHECK(parse_scenario("original", inc, o).empty());

  auto tl = parse_scenario("tl", inc, o);
  REQUIRE(tl.size() == 1);
  CHECK(tl[0].kind == StrategyKind::ReturnTempLimit);
  CHECK(tl[0].included == inc);

  auto ls = parse_scenario("ls15", inc, o);
  CHECK(ls[0].kind == StrategyKind::LoadShift);
  CHECK(ls[0].alpha == Catch::Approx(0.15));

  auto chain = parse_scenario("tl+ls20", inc, o);
  REQUIRE(chain.size() == 2);
  CHECK(chain[0].kind == StrategyKind::ReturnTempLimit);
  CHECK(chain[1].alpha == Catch::Approx(0.20));

  o.alpha = 0.33;
  o.beta = 0.11;
  CHECK(parse_scenario("ls", inc, o)[0].alpha == 0.33);  // bare token: flag value
  CHECK(parse_scenario("fl", inc, o)[0].beta == 0.11);

  CHECK_THROWS_AS(parse_scenario("original+tl", inc, o), UsageError);
  CHECK_THROWS_AS(parse_scenario("ls120", inc, o), UsageError);
  CHECK_THROWS_AS(parse_scenario("xy10", inc, o), UsageError);
  CHECK_THROWS_AS(parse_scenario("", inc, o), UsageError);
}

TEST_CASE("grids parse as inclusive ranges") {
  CHECK(parse_grid("0:0.5:0.05").size() == 11);
  CHECK(parse_grid("0:0.2:0.1") == std::vector<double>{0.0, 0.1, 0.2});
  CHECK(parse_grid("0.3") == std::vector<double>{0.3});
  CHECK_THROWS_AS(parse_grid("0:0.5"), UsageError);
  CHECK_THROWS_AS(parse_grid("0:0.5:-0.1"), UsageError);
  CHECK_THROWS_AS(parse_grid("a:b:c"), UsageError);
}

TEST_CASE("id lists parse with an explicit empty meaning none") {
  CHECK(parse_id_list("3,7,12") == std::vector<int>{3, 7, 12});
  CHECK(parse_id_list(" 3 , 7 ") == std::vector<int>{3, 7});
  CHECK(parse_id_list("").empty());
  CHECK_THROWS_AS(parse_id_list("3,x"), UsageError);
}

TEST_CASE("config files parse key = value lines") {
  auto dir = dhtest::scratch_dir("cfg_parse");
  spit(dir / "a.conf",
       "# a comment\n"
       "days = 2\n"
       "strategy = tl   # trailing comment\n"
       "strategy = ls10\n"
       "\n"
       "include = 1,2\n");
  auto kvs = parse_config_file((dir / "a.conf").string());
  REQUIRE(kvs.size() == 4);
  CHECK(kvs[0] == std::pair<std::string, std::string>{"days", "2"});
  CHECK(kvs[1].second == "tl");
  CHECK(kvs[2].second == "ls10");
  CHECK(kvs[3].first == "include");

  spit(dir / "bad.conf", "days\n");
  CHECK_THROWS_AS(parse_config_file((dir / "bad.conf").string()), UsageError);
}

// ---------------------------------------------------------------------------
// subcommands end to end
// ---------------------------------------------------------------------------

TEST_CASE("synth writes a deterministic dataset") {
  auto dir = dhtest::scratch_dir("cli_synth");
  auto a = (dir / "a").string(), b = (dir / "b").string(), c = (dir / "c").string();
  REQUIRE(run_cli({"synth", "--days", "2", "--seed", "9", "--out", a}) == 0);
  REQUIRE(run_cli({"synth", "--days", "2", "--seed", "9", "--out", b}) == 0);
  REQUIRE(run_cli({"synth", "--days", "2", "--seed", "10", "--out", c}) == 0);
  CHECK(slurp(fs::path(a) / "meters.csv") == slurp(fs::path(b) / "meters.csv"));
  CHECK(slurp(fs::path(a) / "meta.csv") == slurp(fs::path(b) / "meta.csv"));
  CHECK(slurp(fs::path(a) / "meters.csv") != slurp(fs::path(c) / "meters.csv"));
}

TEST_CASE("validate accepts synthetic data and reports in JSON") {
  auto dir = dhtest::scratch_dir("cli_validate");
  auto out = dir.string();
  REQUIRE(run_cli({"synth", "--days", "2", "--out", out}) == 0);
  auto report = (dir / "report.json").string();
  CHECK(run_cli({"validate", "--meter-csv", out + "/meters.csv", "--meta-csv",
                 out + "/meta.csv", "--report", report}) == 0);
  auto j = nlohmann::json::parse(slurp(report));
  CHECK(j["pass"] == true);
  CHECK(j["violations"] == 0);
  CHECK(j["meters"].size() == 18);
}

TEST_CASE("validate rejects inconsistent data with exit code 2") {
  auto dir = dhtest::scratch_dir("cli_validate_bad");
  std::string meta =
      "meter_id,q_max_kw,q_mean_kw,t_rl_mean_c,t_rl_max_c,t_rl_limit_c,consumer_type\n"
      "1,100,10,55,80,65,residential\n";
  std::string meter{kMeterCsvHeader};
  meter += '\n';
  for (int t = 0; t < 24; ++t)
    meter += "1," + std::to_string(t) + ",2,70,50,999\n";  // heat way off
  spit(dir / "meters.csv", meter);
  spit(dir / "meta.csv", meta);
  CHECK(run_cli({"validate", "--meter-csv", (dir / "meters.csv").string(),
                 "--meta-csv", (dir / "meta.csv").string()}) == 2);
}

TEST_CASE("exit codes: usage 1, bad data 2, io 3") {
  auto dir = dhtest::scratch_dir("cli_exits");
  CHECK(run_cli({}) == 1);                       // missing subcommand
  CHECK(run_cli({"explode"}) == 1);              // unknown subcommand
  CHECK(run_cli({"run"}) == 1);                  // neither files nor --synth
  CHECK(run_cli({"run", "--synth", "--days", "2", "--strategy", "zz",
                 "--out", (dir / "o1").string()}) == 1);  // bad token
  CHECK(run_cli({"--help"}) == 0);

  spit(dir / "garbage.csv", "not,a,header\n");
  spit(dir / "meta.csv", "also garbage\n");
  CHECK(run_cli({"validate", "--meter-csv", (dir / "garbage.csv").string(),
                 "--meta-csv", (dir / "meta.csv").string()}) == 2);

  CHECK(run_cli({"validate", "--meter-csv", (dir / "missing.csv").string(),
                 "--meta-csv", (dir / "meta.csv").string()}) == 3);
}

TEST_CASE("run produces reports for the default scenario set") {
  auto dir = dhtest::scratch_dir("cli_run");
  auto out = (dir / "o").string();
  REQUIRE(run_cli({"run", "--synth", "--days", "2", "--out", out}) == 0);

  auto j = nlohmann::json::parse(slurp(fs::path(out) / "metrics.json"));
  REQUIRE(j["scenarios"].size() == 7);
  CHECK(j["scenarios"][0]["name"] == "original");
  CHECK(j["scenarios"][0]["peak_reduction"] == 0.0);
  CHECK(j["hours"] == 48);
  for (const auto& s : j["scenarios"]) {
    CHECK(s.contains("pumping_energy_ratio"));
    CHECK(s.contains("weighted_return_temperature_c"));
    CHECK(s.contains("heat_deficit"));
  }

  std::string curves = slurp(fs::path(out) / "duration_curves.csv");
  CHECK(curves.rfind("hour,original,fl10,fl20,tl,ls10,ls20,tl+ls20\n", 0) == 0);
  CHECK(std::count(curves.begin(), curves.end(), '\n') == 49);  // header + 48

  for (const char* f : {"altered_fl10.csv", "altered_fl20.csv", "altered_tl.csv",
                        "altered_ls10.csv", "altered_ls20.csv", "altered_tl_ls20.csv"})
    CHECK(fs::exists(fs::path(out) / f));
  CHECK_FALSE(fs::exists(fs::path(out) / "altered_original.csv"));

  // ls20 must not underperform ls10 on the peak
  double r10 = j["scenarios"][4]["peak_reduction"].get<double>();
  double r20 = j["scenarios"][5]["peak_reduction"].get<double>();
  CHECK(r20 >= r10 - 1e-9);
}

TEST_CASE("an explicitly empty include set leaves every scenario at the original") {
  auto dir = dhtest::scratch_dir("cli_run_none");
  auto out = (dir / "o").string();
  REQUIRE(run_cli({"run", "--synth", "--days", "2", "--include", "", "--out", out}) == 0);
  auto j = nlohmann::json::parse(slurp(fs::path(out) / "metrics.json"));
  for (const auto& s : j["scenarios"]) {
    CHECK(s["peak_reduction"].get<double>() == 0.0);
    CHECK(s["included_meters"].empty());
  }
}

TEST_CASE("a restricted include set only alters those meters") {
  auto dir = dhtest::scratch_dir("cli_run_subset");
  auto out = (dir / "o").string();
  REQUIRE(run_cli({"run", "--synth", "--days", "2", "--include", "1,2",
                   "--strategy", "fl10", "--out", out}) == 0);
  auto j = nlohmann::json::parse(slurp(fs::path(out) / "metrics.json"));
  CHECK(j["scenarios"][0]["included_meters"] == nlohmann::json::array({1, 2}));
}

TEST_CASE("repeated runs are byte-identical") {
  auto dir = dhtest::scratch_dir("cli_run_repeat");
  auto a = (dir / "a").string(), b = (dir / "b").string();
  REQUIRE(run_cli({"run", "--synth", "--days", "2", "--out", a}) == 0);
  REQUIRE(run_cli({"run", "--synth", "--days", "2", "--out", b}) == 0);
  CHECK(slurp(fs::path(a) / "metrics.json") == slurp(fs::path(b) / "metrics.json"));
  CHECK(slurp(fs::path(a) / "duration_curves.csv") ==
        slurp(fs::path(b) / "duration_curves.csv"));
  CHECK(slurp(fs::path(a) / "altered_ls20.csv") == slurp(fs::path(b) / "altered_ls20.csv"));
}

TEST_CASE("config files feed options and the command line wins") {
  auto dir = dhtest::scratch_dir("cli_config");
  spit(dir / "run.conf",
       "synth = true\n"
       "days = 2\n"
       "seed = 9\n"
       "strategy = fl10\n"
       "strategy = tl\n");

  auto via_cfg = (dir / "cfg").string();
  REQUIRE(run_cli({"run", "--config", (dir / "run.conf").string(), "--out", via_cfg}) == 0);
  auto via_flags = (dir / "flags").string();
  REQUIRE(run_cli({"run", "--synth", "--days", "2", "--seed", "9", "--strategy", "fl10",
                   "--strategy", "tl", "--out", via_flags}) == 0);
  CHECK(slurp(fs::path(via_cfg) / "metrics.json") ==
        slurp(fs::path(via_flags) / "metrics.json"));

  // a command-line seed overrides the config's
  auto overridden = (dir / "override").string();
  REQUIRE(run_cli({"run", "--config", (dir / "run.conf").string(), "--seed", "10",
                   "--out", overridden}) == 0);
  CHECK(slurp(fs::path(overridden) / "metrics.json") !=
        slurp(fs::path(via_cfg) / "metrics.json"));

  spit(dir / "bad.conf", "dayz = 2\n");
  CHECK(run_cli({"run", "--config", (dir / "bad.conf").string(), "--synth", "--days",
                 "2", "--out", (dir / "x").string()}) == 1);

  // keys belonging to other subcommands are tolerated
  spit(dir / "shared.conf", "synth = true\ndays = 2\ngrid = 0:0.2:0.1\n");
  CHECK(run_cli({"run", "--config", (dir / "shared.conf").string(), "--strategy",
                 "fl10", "--out", (dir / "y").string()}) == 0);
}

TEST_CASE("sweep walks the parameter grid") {
  auto dir = dhtest::scratch_dir("cli_sweep");
  auto out = (dir / "o").string();
  REQUIRE(run_cli({"sweep", "--synth", "--days", "2", "--grid", "0:0.2:0.1", "--out",
                   out}) == 0);
  std::string csv = slurp(fs::path(out) / "sweep.csv");
  CHECK(csv.rfind("strategy,parameter,peak_reduction,heat_deficit\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);  // header + 2 * 3 rows
  CHECK(csv.find("\nls,0.1,") != std::string::npos);
  CHECK(csv.find("\nfl,0.2,") != std::string::npos);
}

TEST_CASE("rank emits the greedy curves per variant") {
  auto dir = dhtest::scratch_dir("cli_rank");
  auto out = (dir / "o").string();
  REQUIRE(run_cli({"rank", "--synth", "--days", "2", "--variant", "tl", "--variant",
                   "fl10", "--out", out}) == 0);
  std::string inc = slurp(fs::path(out) / "included_meters.csv");
  CHECK(inc.rfind("rank,tl_meter_id,tl_peak_reduction,fl10_meter_id,fl10_peak_reduction\n",
                  0) == 0);
  CHECK(std::count(inc.begin(), inc.end(), '\n') == 19);  // header + 18 meters
  std::string ret = slurp(fs::path(out) / "return_temperatures.csv");
  CHECK(ret.rfind("rank,tl_meter_id,tl_weighted_return_c,fl10_meter_id,"
                  "fl10_weighted_return_c\n",
                  0) == 0);

  CHECK(run_cli({"rank", "--synth", "--days", "2", "--variant", "tl+ls10", "--out",
                 out}) == 1);  // chains are not a single strategy
}

// ---------------------------------------------------------------------------
// metrics.json structure matches the published schema
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

// Minimal checker for the draft-07 subset docs/metrics.schema.json uses:
// type, required, properties, additionalProperties:false, items, minItems,
// enum, numeric bounds, minLength, and local $ref. Throws on any mismatch so
// both the conforming and the broken document can be asserted cleanly.
void check_schema(const json& schema, const json& value, const json& root,
                  const std::string& where) {
  auto fail = [&](const std::string& why) {
    throw std::runtime_error(where + ": " + why);
  };
  if (schema.contains("$ref")) {
    std::string ref = schema["$ref"];
    if (ref.rfind("#/", 0) != 0) fail("unsupported $ref " + ref);
    json target = root;
    std::stringstream ss(ref.substr(2));
    for (std::string part; std::getline(ss, part, '/');) target = target.at(part);
    check_schema(target, value, root, where);
    return;
  }
  if (schema.contains("type")) {
    std::string t = schema["type"];
    bool ok = (t == "object" && value.is_object()) ||
              (t == "array" && value.is_array()) ||
              (t == "string" && value.is_string()) ||
              (t == "integer" && value.is_number_integer()) ||
              (t == "number" && value.is_number()) ||
              (t == "boolean" && value.is_boolean());
    if (!ok) fail("expected type " + t + ", got " + std::string(value.type_name()));
  }
  if (schema.contains("enum")) {
    bool hit = false;
    for (const auto& candidate : schema["enum"]) hit = hit || candidate == value;
    if (!hit) fail("value not in enum");
  }
  if (value.is_number()) {
    double x = value.get<double>();
    if (schema.contains("minimum") && !(x >= schema["minimum"].get<double>()))
      fail("below minimum");
    if (schema.contains("maximum") && !(x <= schema["maximum"].get<double>()))
      fail("above maximum");
    if (schema.contains("exclusiveMinimum") &&
        !(x > schema["exclusiveMinimum"].get<double>()))
      fail("at or below exclusiveMinimum");
  }
  if (value.is_string() && schema.contains("minLength") &&
      value.get<std::string>().size() < schema["minLength"].get<std::size_t>())
    fail("shorter than minLength");
  if (value.is_object()) {
    if (schema.contains("required"))
      for (const auto& key : schema["required"])
        if (!value.contains(key.get<std::string>()))
          fail("missing required key " + key.get<std::string>());
    const json props =
        schema.contains("properties") ? schema["properties"] : json::object();
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (props.contains(it.key()))
        check_schema(props[it.key()], it.value(), root, where + "." + it.key());
      else if (schema.contains("additionalProperties") &&
               schema["additionalProperties"] == false)
        fail("unexpected key " + it.key());
    }
  }
  if (value.is_array()) {
    if (schema.contains("minItems") &&
        value.size() < schema["minItems"].get<std::size_t>())
      fail("fewer than minItems entries");
    if (schema.contains("items"))
      for (std::size_t i = 0; i < value.size(); ++i)
        check_schema(schema["items"], value[i], root,
                     where + "[" + std::to_string(i) + "]");
  }
}

}  // namespace

TEST_CASE("run output conforms to the published metrics schema") {
  auto dir = dhtest::scratch_dir("cli_schema");
  auto out = (dir / "o").string();
  REQUIRE(run_cli({"run", "--synth", "--days", "2", "--out", out}) == 0);

  json schema = json::parse(slurp(fs::path(DHFLEX_SOURCE_DIR) / "docs" /
                                  "metrics.schema.json"));
  json metrics = json::parse(slurp(fs::path(out) / "metrics.json"));
  CHECK_NOTHROW(check_schema(schema, metrics, schema, "$"));

  // the checker itself must reject structural damage
  json no_peak = metrics;
  no_peak["scenarios"][0].erase("peak_m3h");
  CHECK_THROWS_AS(check_schema(schema, no_peak, schema, "$"), std::runtime_error);

  json extra = metrics;
  extra["scenarios"][1]["surprise"] = 1;
  CHECK_THROWS_AS(check_schema(schema, extra, schema, "$"), std::runtime_error);

  json bad_kind = metrics;
  bad_kind["scenarios"][1]["stages"][0]["kind"] = "mystery";
  CHECK_THROWS_AS(check_schema(schema, bad_kind, schema, "$"), std::runtime_error);
}
