#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "lfac/case_io.hpp"
#include "lfac/errors.hpp"
#include "support.hpp"

using namespace lfac;
using nlohmann::json;

namespace {

const char* kCases[] = {"two_bus", "overloaded", "three_bus_lfac", "two_bus_cable", "cable_free"};

json minimal_doc() {
  return json::parse(R"({
    "format_version": 1,
    "name": "minimal",
    "base_mva": 100.0,
    "subnetworks": [{"id": "s", "mode": "fixed", "frequency_hz": 60.0, "buses": ["a", "b"]}],
    "buses": [{"id": "a", "base_kv": 138.0, "reference": true}, {"id": "b", "base_kv": 138.0, "pd": 0.5}],
    "branches": [{"id": "C", "from": "a", "to": "b", "type": "cable", "design": "d", "length_km": 22.0}],
    "generators": [{"id": "G", "bus": "a", "pmin": 0.0, "pmax": 1.0,
                    "cost": {"type": "polynomial", "coefficients": [1.0]}}],
    "cable_designs": {"d": {
      "R1": 0.0151, "R2": 0.0381, "R3": 0.0411, "R4": 0.0461, "spacing_d": 0.2, "depth_h": 1.0,
      "conductor": "copper", "sheath": "aluminum", "insulation": "xlpe",
      "soil_resistivity": 100.0, "operating_temp": 90.0,
      "voltage_rating": 170000.0, "thermal_rating": 190000000.0, "length": 22000.0}}
  })");
}

std::string parse_error(const json& doc) {
  try {
    parse_case(doc);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal cable case") {
  const Network net = parse_case(minimal_doc());
  CHECK(net.subnetworks.size() == 1);
  REQUIRE(net.branches.size() == 1);
  CHECK(directed_edges(net).size() == 2);
  const auto* c = std::get_if<CableBranch>(&net.branches[0].kind);
  REQUIRE(c);
  CHECK(c->model.n_samples == 500);
  CHECK(c->length_km == 22.0);
  CHECK(net.buses[1].p_load == 0.5);
  CHECK(net.generators[0].cost.c0 == 1.0);
}

TEST_CASE("shipped cases load and round-trip") {
  for (const char* name : kCases) {
    CAPTURE(name);
    const Network net = load_case(test::data_path(std::string("cases/") + name + ".json"));
    CHECK(net.name == name);
    const Network again = parse_case(case_to_json(net));
    CHECK(again == net);
    const auto tmp = std::filesystem::temp_directory_path() / (std::string("lfac_rt_") + name + ".json");
    save_case(net, tmp);
    CHECK(load_case(tmp) == net);
    std::filesystem::remove(tmp);
  }
}

TEST_CASE("design documents round-trip") {
  const CableDesign d = test::design_230kv();
  CHECK(design_from_json(design_to_json(d)) == d);
  CHECK(d.base_voltage() == 230000.0);
  CableDesign no_nominal = d;
  no_nominal.nominal_voltage = 0.0;
  CHECK(no_nominal.base_voltage() == d.voltage_rating);
}

TEST_CASE("model documents round-trip") {
  PolyCableModel m;
  m.r2 = 1e-5, m.r1 = -3e-3, m.r0 = 2.0, m.x1 = 0.1, m.b1 = 2e-5, m.g0 = 3e-6, m.g4 = 1e-13;
  m.omega_min = 0.001, m.omega_max = 377.0, m.n_samples = 42;
  CHECK(model_from_json(model_to_json(m)) == m);
}

TEST_CASE("schema errors name their location") {
  SUBCASE("unknown field") {
    json doc = minimal_doc();
    doc["buses"][1]["pdd"] = 1.0;
    const std::string msg = parse_error(doc);
    CHECK(msg.find("case.buses[1]") != std::string::npos);
    CHECK(msg.find("pdd") != std::string::npos);
  }
  SUBCASE("missing required field") {
    json doc = minimal_doc();
    doc["buses"][0].erase("base_kv");
    CHECK(parse_error(doc).find("base_kv") != std::string::npos);
  }
  SUBCASE("wrong type") {
    json doc = minimal_doc();
    doc["generators"][0]["pmax"] = "lots";
    CHECK(parse_error(doc).find("case.generators[0].pmax") != std::string::npos);
  }
  SUBCASE("dangling bus reference") {
    json doc = minimal_doc();
    doc["branches"][0]["to"] = "z";
    CHECK(parse_error(doc).find("unknown bus 'z'") != std::string::npos);
  }
  SUBCASE("unknown design") {
    json doc = minimal_doc();
    doc["branches"][0]["design"] = "nope";
    CHECK(parse_error(doc).find("unknown cable design") != std::string::npos);
  }
  SUBCASE("unsupported version") {
    json doc = minimal_doc();
    doc["format_version"] = 7;
    CHECK(parse_error(doc).find("format_version") != std::string::npos);
  }
  SUBCASE("bus in no subnetwork") {
    json doc = minimal_doc();
    doc["subnetworks"][0]["buses"] = {"a"};
    CHECK(parse_error(doc).find("not in any subnetwork") != std::string::npos);
  }
  SUBCASE("bus in two subnetworks") {
    json doc = minimal_doc();
    doc["subnetworks"].push_back({{"id", "t"}, {"mode", "dc"}, {"buses", {"b"}}});
    CHECK(parse_error(doc).find("already belongs") != std::string::npos);
  }
  SUBCASE("converter terminals in one subnetwork") {
    json doc = minimal_doc();
    doc["converters"] = {{{"id", "K"}, {"bus_i", "a"}, {"bus_j", "b"}}};
    const std::string msg = parse_error(doc);
    CHECK(msg.find("converters[0]") != std::string::npos);
    CHECK(msg.find("share a subnetwork") != std::string::npos);
  }
  SUBCASE("transformer in a low-frequency subnetwork") {
    json doc = minimal_doc();
    doc["subnetworks"][0] = {{"id", "s"}, {"mode", "variable"}, {"buses", {"a", "b"}}};
    doc["branches"][0] = {{"id", "T"}, {"from", "a"}, {"to", "b"}, {"type", "transformer"}, {"r", 0.0}, {"x", 0.1}};
    const std::string msg = parse_error(doc);
    CHECK(msg.find("branches[0]") != std::string::npos);
    CHECK(msg.find("standard-frequency") != std::string::npos);
  }
  SUBCASE("malformed file") {
    const auto tmp = std::filesystem::temp_directory_path() / "lfac_bad.json";
    {
      std::ofstream(tmp) << "{ not json";
    }
    CHECK_THROWS_AS(load_case(tmp), ParseError);
    std::filesystem::remove(tmp);
    CHECK_THROWS_AS(load_case("/nonexistent/case.json"), ParseError);
  }
}

TEST_CASE("branch parameter table") {
  const Network net = load_case(test::data_path("cases/two_bus.json"));
  std::ostringstream os;
  write_branch_parameters_csv(os, net);
  std::istringstream is(os.str());
  std::string header, fwd, rev, tail;
  std::getline(is, header);
  std::getline(is, fwd);
  std::getline(is, rev);
  CHECK(header == "branch,origin,target,subnetwork,frequency_hz,G,B,G_sh,B_sh");
  CHECK(fwd.rfind("L12,1,2,main,60,", 0) == 0);
  CHECK(rev.rfind("L12,2,1,main,60,", 0) == 0);
  CHECK_FALSE(std::getline(is, tail));
}
