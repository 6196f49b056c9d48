#include "lfac/case_io.hpp"

#include <fstream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "lfac/errors.hpp"
#include "lfac/format.hpp"

namespace lfac {
namespace {

using nlohmann::json;

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kDefaultAngleLimitDeg = 40.0;

// Strict reader over one JSON object: typed access with the document
// location in every error, and rejection of keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string location) : j_(j), loc_(std::move(location)) {
    if (!j_.is_object()) throw ParseError(loc_ + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  double number(const char* key) {
    mark(key);
    if (!j_.contains(key)) throw ParseError(loc_ + ": missing required field '" + key + "'");
    const json& v = j_.at(key);
    if (!v.is_number()) throw ParseError(loc_ + "." + key + ": expected a number");
    return v.get<double>();
  }
  double number(const char* key, double fallback) { return has(key) ? number(key) : (mark(key), fallback); }

  int integer(const char* key) {
    mark(key);
    if (!j_.contains(key)) throw ParseError(loc_ + ": missing required field '" + key + "'");
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ParseError(loc_ + "." + key + ": expected an integer");
    return v.get<int>();
  }

  std::string string(const char* key) {
    mark(key);
    if (!j_.contains(key)) throw ParseError(loc_ + ": missing required field '" + key + "'");
    const json& v = j_.at(key);
    if (!v.is_string()) throw ParseError(loc_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }
  std::string string(const char* key, const std::string& fallback) {
    return has(key) ? string(key) : (mark(key), fallback);
  }

  bool boolean(const char* key, bool fallback) {
    mark(key);
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ParseError(loc_ + "." + key + ": expected true or false");
    return v.get<bool>();
  }

  const json& child(const char* key) {
    mark(key);
    if (!j_.contains(key)) throw ParseError(loc_ + ": missing required field '" + key + "'");
    return j_.at(key);
  }
  const json* optional_child(const char* key) {
    mark(key);
    return has(key) ? &j_.at(key) : nullptr;
  }

  void touch(const char* key) { mark(key); }
  std::string at(const char* key) const { return loc_ + "." + key; }
  const std::string& location() const { return loc_; }

  void finish() const {
    for (const auto& item : j_.items())
      if (!used_.count(item.key())) throw ParseError(loc_ + ": unknown field '" + item.key() + "'");
  }

 private:
  void mark(const char* key) { used_.insert(key); }

  const json& j_;
  std::string loc_;
  std::set<std::string> used_;
};

const json& expect_array(const json& j, const std::string& loc) {
  if (!j.is_array()) throw ParseError(loc + ": expected an array");
  return j;
}

std::string indexed(const std::string& loc, std::size_t i) { return loc + "[" + std::to_string(i) + "]"; }

MaterialProperties material_from_json(const json& j, const std::string& loc) {
  if (j.is_string()) {
    auto m = find_material(j.get<std::string>());
    if (!m) throw ParseError(loc + ": unknown material '" + j.get<std::string>() + "'");
    return *m;
  }
  Reader r(j, loc);
  MaterialProperties m;
  m.name = r.string("name", "custom");
  m.resistivity_20C = r.number("resistivity_20C");
  m.temp_coefficient = r.number("temp_coefficient", 0.0);
  m.permeability = r.number("permeability", kMu0);
  m.permittivity_rel = r.number("permittivity_rel", 1.0);
  r.finish();
  return m;
}

json material_to_json(const MaterialProperties& m) {
  if (auto builtin = find_material(m.name); builtin && *builtin == m) return m.name;
  return {{"name", m.name},
          {"resistivity_20C", m.resistivity_20C},
          {"temp_coefficient", m.temp_coefficient},
          {"permeability", m.permeability},
          {"permittivity_rel", m.permittivity_rel}};
}

// Infinite limits are written as absent fields.
void put_limit(json& j, const char* key, double v) {
  if (std::isfinite(v)) j[key] = v;
}

FrequencyMode parse_mode(const std::string& s, const std::string& loc) {
  if (s == "fixed") return FrequencyMode::Fixed;
  if (s == "variable") return FrequencyMode::Variable;
  if (s == "dc") return FrequencyMode::Dc;
  throw ParseError(loc + ": mode must be 'fixed', 'variable' or 'dc'");
}

double angle_field(Reader& r, const char* deg_key, const char* rad_key, double fallback_rad) {
  r.touch(deg_key);
  r.touch(rad_key);
  if (r.has(deg_key) && r.has(rad_key))
    throw ParseError(r.location() + ": give only one of '" + deg_key + "' and '" + rad_key + "'");
  if (r.has(rad_key)) return r.number(rad_key);
  if (r.has(deg_key)) return r.number(deg_key) * kDegToRad;
  return fallback_rad;
}

GeneratorCost cost_from_json(const json& j, const std::string& loc) {
  Reader r(j, loc);
  GeneratorCost c;
  const std::string type = r.string("type");
  if (type == "polynomial") {
    c.kind = GeneratorCost::Kind::Polynomial;
    const json& co = expect_array(r.child("coefficients"), r.at("coefficients"));
    if (co.empty() || co.size() > 3)
      throw ParseError(r.at("coefficients") + ": expected 1 to 3 coefficients, highest degree first");
    std::vector<double> v;
    for (std::size_t k = 0; k < co.size(); ++k) {
      if (!co[k].is_number()) throw ParseError(indexed(r.at("coefficients"), k) + ": expected a number");
      v.push_back(co[k].get<double>());
    }
    while (v.size() < 3) v.insert(v.begin(), 0.0);
    c.c2 = v[0], c.c1 = v[1], c.c0 = v[2];
  } else if (type == "piecewise_linear") {
    c.kind = GeneratorCost::Kind::PiecewiseLinear;
    const json& pts = expect_array(r.child("points"), r.at("points"));
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const json& p = pts[k];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw ParseError(indexed(r.at("points"), k) + ": expected [p, cost]");
      c.points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
  } else {
    throw ParseError(r.at("type") + ": must be 'polynomial' or 'piecewise_linear'");
  }
  r.finish();
  return c;
}

json cost_to_json(const GeneratorCost& c) {
  if (c.kind == GeneratorCost::Kind::Polynomial) return {{"type", "polynomial"}, {"coefficients", {c.c2, c.c1, c.c0}}};
  json pts = json::array();
  for (const auto& [p, f] : c.points) pts.push_back({p, f});
  return {{"type", "piecewise_linear"}, {"points", pts}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

CableDesign design_from_json(const json& j, const std::string& location) {
  Reader r(j, location);
  CableDesign d;
  d.name = r.string("name", "");
  d.R1 = r.number("R1");
  d.R2 = r.number("R2");
  d.R3 = r.number("R3");
  d.R4 = r.number("R4");
  d.spacing_d = r.number("spacing_d");
  d.depth_h = r.number("depth_h");
  d.conductor = material_from_json(r.child("conductor"), r.at("conductor"));
  d.sheath = material_from_json(r.child("sheath"), r.at("sheath"));
  d.insulation = material_from_json(r.child("insulation"), r.at("insulation"));
  d.soil_resistivity = r.number("soil_resistivity", 100.0);
  d.operating_temp = r.number("operating_temp", 20.0);
  d.voltage_rating = r.number("voltage_rating", 0.0);
  d.nominal_voltage = r.number("nominal_voltage", 0.0);
  d.thermal_rating = r.number("thermal_rating", 0.0);
  d.length = r.number("length", 0.0);
  r.finish();
  return d;
}

json design_to_json(const CableDesign& d) {
  json j{{"name", d.name},
         {"R1", d.R1},
         {"R2", d.R2},
         {"R3", d.R3},
         {"R4", d.R4},
         {"spacing_d", d.spacing_d},
         {"depth_h", d.depth_h},
         {"conductor", material_to_json(d.conductor)},
         {"sheath", material_to_json(d.sheath)},
         {"insulation", material_to_json(d.insulation)},
         {"soil_resistivity", d.soil_resistivity},
         {"operating_temp", d.operating_temp},
         {"voltage_rating", d.voltage_rating},
         {"nominal_voltage", d.nominal_voltage},
         {"thermal_rating", d.thermal_rating},
         {"length", d.length}};
  return j;
}

CableDesign load_design(const std::filesystem::path& path) {
  CableDesign d = design_from_json(read_json_file(path), path.string());
  try {
    d.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return d;
}

json model_to_json(const PolyCableModel& m) {
  return {{"r2", m.r2}, {"r1", m.r1}, {"r0", m.r0}, {"x2", m.x2}, {"x1", m.x1},
          {"b2", m.b2}, {"b1", m.b1}, {"g4", m.g4}, {"g3", m.g3}, {"g2", m.g2},
          {"g1", m.g1}, {"g0", m.g0}, {"omega_min", m.omega_min}, {"omega_max", m.omega_max},
          {"n_samples", m.n_samples}};
}

PolyCableModel model_from_json(const json& j, const std::string& location) {
  Reader r(j, location);
  PolyCableModel m;
  m.r2 = r.number("r2"), m.r1 = r.number("r1"), m.r0 = r.number("r0");
  m.x2 = r.number("x2"), m.x1 = r.number("x1");
  m.b2 = r.number("b2"), m.b1 = r.number("b1");
  m.g4 = r.number("g4"), m.g3 = r.number("g3"), m.g2 = r.number("g2"), m.g1 = r.number("g1"), m.g0 = r.number("g0");
  m.omega_min = r.number("omega_min");
  m.omega_max = r.number("omega_max");
  m.n_samples = r.integer("n_samples");
  r.finish();
  return m;
}

Network parse_case(const json& doc, const FitSettings& fit_settings) {
  Reader top(doc, "case");
  Network net;
  const int version = top.integer("format_version");
  if (version != kCaseFormatVersion)
    throw ParseError("case.format_version: unsupported version " + std::to_string(version));
  net.name = top.string("name", "");
  net.base_mva = top.number("base_mva");
  net.nominal_hz = top.number("nominal_frequency_hz", 60.0);

  if (const json* designs = top.optional_child("cable_designs")) {
    if (!designs->is_object()) throw ParseError("case.cable_designs: expected an object keyed by design name");
    for (const auto& [name, dj] : designs->items()) {
      CableDesign d = design_from_json(dj, "case.cable_designs." + name);
      if (d.name.empty()) d.name = name;
      net.cable_designs.emplace(name, std::move(d));
    }
  }

  // Buses first, so subnetwork membership lists can be resolved.
  std::map<std::string, int> bus_index;
  const json& buses = expect_array(top.child("buses"), "case.buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    Reader r(buses[i], indexed("case.buses", i));
    Bus b;
    b.id = r.string("id");
    b.subnetwork = -1;
    b.base_kv = r.number("base_kv");
    b.v_min = r.number("vmin", 0.95);
    b.v_max = r.number("vmax", 1.05);
    b.p_load = r.number("pd", 0.0);
    b.q_load = r.number("qd", 0.0);
    b.g_shunt = r.number("gs", 0.0);
    b.is_reference = r.boolean("reference", false);
    if (const json* sh = r.optional_child("shunt")) {
      Reader rs(*sh, r.at("shunt"));
      const std::string type = rs.string("type");
      if (type == "capacitor") {
        b.shunt = {ShuntElement::Kind::Capacitor, rs.number("b")};
      } else if (type == "inductor") {
        b.shunt = {ShuntElement::Kind::Inductor, rs.number("x")};
      } else if (type != "none") {
        throw ParseError(rs.at("type") + ": must be 'capacitor', 'inductor' or 'none'");
      }
      rs.finish();
    }
    r.finish();
    if (!bus_index.emplace(b.id, static_cast<int>(i)).second)
      throw ParseError(indexed("case.buses", i) + ": duplicate id '" + b.id + "'");
    net.buses.push_back(std::move(b));
  }
  auto bus_ref = [&](Reader& r, const char* key) {
    const std::string id = r.string(key);
    auto it = bus_index.find(id);
    if (it == bus_index.end()) throw ParseError(r.at(key) + ": unknown bus '" + id + "'");
    return it->second;
  };

  const json& subs = expect_array(top.child("subnetworks"), "case.subnetworks");
  for (std::size_t s = 0; s < subs.size(); ++s) {
    Reader r(subs[s], indexed("case.subnetworks", s));
    Subnetwork sn;
    sn.id = r.string("id");
    sn.mode = parse_mode(r.string("mode"), r.at("mode"));
    if (sn.mode == FrequencyMode::Fixed) {
      sn.frequency_hz = r.number("frequency_hz");
    } else {
      r.number("frequency_hz", 0.0);
      sn.frequency_hz = 0.0;
    }
    if (sn.mode == FrequencyMode::Variable) {
      sn.min_hz = r.number("min_hz", 0.1);
      sn.max_hz = r.number("max_hz", 60.0);
    } else {
      r.number("min_hz", 0.0);
      r.number("max_hz", 0.0);
      sn.min_hz = sn.max_hz = 0.0;
    }
    const json& members = expect_array(r.child("buses"), r.at("buses"));
    for (std::size_t k = 0; k < members.size(); ++k) {
      const std::string loc = indexed(r.at("buses"), k);
      if (!members[k].is_string()) throw ParseError(loc + ": expected a bus id");
      auto it = bus_index.find(members[k].get<std::string>());
      if (it == bus_index.end()) throw ParseError(loc + ": unknown bus '" + members[k].get<std::string>() + "'");
      Bus& b = net.buses[it->second];
      if (b.subnetwork != -1)
        throw ParseError(loc + ": bus '" + b.id + "' already belongs to subnetwork '" +
                         net.subnetworks[b.subnetwork].id + "'");
      b.subnetwork = static_cast<int>(s);
    }
    r.finish();
    net.subnetworks.push_back(std::move(sn));
  }
  for (std::size_t i = 0; i < net.buses.size(); ++i)
    if (net.buses[i].subnetwork == -1)
      throw ParseError(indexed("case.buses", i) + " (id '" + net.buses[i].id + "'): not in any subnetwork");

  std::map<std::pair<std::string, double>, PolyCableModel> fitted;
  const json& branches = expect_array(top.child("branches"), "case.branches");
  for (std::size_t k = 0; k < branches.size(); ++k) {
    Reader r(branches[k], indexed("case.branches", k));
    Branch br;
    br.id = r.string("id");
    br.from = bus_ref(r, "from");
    br.to = bus_ref(r, "to");
    br.thermal_limit = r.number("rate", kUnbounded);
    br.angle_limit = angle_field(r, "angle_limit_deg", "angle_limit_rad", kDefaultAngleLimitDeg * kDegToRad);
    const std::string type = r.string("type");
    if (type == "overhead") {
      OverheadLine l;
      l.r = r.number("r"), l.x = r.number("x"), l.b = r.number("b", 0.0);
      br.kind = l;
    } else if (type == "transformer") {
      Transformer t;
      t.r = r.number("r"), t.x = r.number("x"), t.b = r.number("b", 0.0);
      t.tap = r.number("tap", 1.0);
      t.shift = angle_field(r, "shift_deg", "shift_rad", 0.0);
      br.kind = t;
    } else if (type == "cable") {
      CableBranch c;
      c.design = r.string("design", "");
      c.length_km = r.number("length_km", 0.0);
      if (const json* mj = r.optional_child("model")) {
        c.model = model_from_json(*mj, r.at("model"));
      } else {
        if (c.design.empty()) throw ParseError(r.location() + ": cable needs 'model' or 'design' with 'length_km'");
        auto it = net.cable_designs.find(c.design);
        if (it == net.cable_designs.end())
          throw ParseError(r.at("design") + ": unknown cable design '" + c.design + "'");
        if (!(c.length_km > 0.0)) throw ParseError(r.at("length_km") + ": must be positive");
        const auto key = std::make_pair(c.design, c.length_km);
        auto cached = fitted.find(key);
        if (cached == fitted.end()) {
          CableDesign d = it->second;
          d.length = c.length_km * 1e3;
          try {
            d.validate();
            const auto samples = sample_reference(d, fit_settings.omega_min, fit_settings.omega_max,
                                                  fit_settings.n_samples, fit_settings.workers);
            cached = fitted.emplace(key, fit(samples)).first;
          } catch (const ParseError&) {
            throw;
          } catch (const Error& e) {
            throw ParseError(r.location() + ": fitting design '" + c.design + "' failed: " + e.what());
          }
        }
        c.model = cached->second;
      }
      br.kind = c;
    } else {
      throw ParseError(r.at("type") + ": must be 'overhead', 'cable' or 'transformer'");
    }
    r.finish();
    net.branches.push_back(std::move(br));
  }

  if (const json* gens = top.optional_child("generators")) {
    expect_array(*gens, "case.generators");
    for (std::size_t g = 0; g < gens->size(); ++g) {
      Reader r((*gens)[g], indexed("case.generators", g));
      Generator gen;
      gen.id = r.string("id");
      gen.bus = bus_ref(r, "bus");
      gen.p_min = r.number("pmin");
      gen.p_max = r.number("pmax");
      gen.q_min = r.number("qmin", 0.0);
      gen.q_max = r.number("qmax", 0.0);
      gen.cost = cost_from_json(r.child("cost"), r.at("cost"));
      r.finish();
      net.generators.push_back(std::move(gen));
    }
  }

  if (const json* convs = top.optional_child("converters")) {
    expect_array(*convs, "case.converters");
    for (std::size_t m = 0; m < convs->size(); ++m) {
      Reader r((*convs)[m], indexed("case.converters", m));
      Converter cv;
      cv.id = r.string("id");
      cv.bus_i = bus_ref(r, "bus_i");
      cv.bus_j = bus_ref(r, "bus_j");
      cv.s_max_i = r.number("smax_i", kUnbounded);
      cv.s_max_j = r.number("smax_j", kUnbounded);
      r.finish();
      net.converters.push_back(std::move(cv));
    }
  }
  top.finish();
  net.validate();
  return net;
}

Network load_case(const std::filesystem::path& path, const FitSettings& fit) {
  const json doc = read_json_file(path);
  try {
    return parse_case(doc, fit);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

json case_to_json(const Network& net) {
  json doc;
  doc["format_version"] = kCaseFormatVersion;
  if (!net.name.empty()) doc["name"] = net.name;
  doc["base_mva"] = net.base_mva;
  doc["nominal_frequency_hz"] = net.nominal_hz;

  json subs = json::array();
  for (int s = 0; s < static_cast<int>(net.subnetworks.size()); ++s) {
    const Subnetwork& sn = net.subnetworks[s];
    json j{{"id", sn.id}, {"mode", to_string(sn.mode)}};
    if (sn.mode == FrequencyMode::Fixed) j["frequency_hz"] = sn.frequency_hz;
    if (sn.mode == FrequencyMode::Variable) {
      j["min_hz"] = sn.min_hz;
      j["max_hz"] = sn.max_hz;
    }
    json members = json::array();
    for (int b : net.members(s)) members.push_back(net.buses[b].id);
    j["buses"] = members;
    subs.push_back(j);
  }
  doc["subnetworks"] = subs;

  json buses = json::array();
  for (const Bus& b : net.buses) {
    json j{{"id", b.id}, {"base_kv", b.base_kv}, {"vmin", b.v_min}, {"vmax", b.v_max},
           {"pd", b.p_load}, {"qd", b.q_load}, {"gs", b.g_shunt}};
    if (b.shunt.kind == ShuntElement::Kind::Capacitor) j["shunt"] = {{"type", "capacitor"}, {"b", b.shunt.nominal_value}};
    if (b.shunt.kind == ShuntElement::Kind::Inductor) j["shunt"] = {{"type", "inductor"}, {"x", b.shunt.nominal_value}};
    if (b.is_reference) j["reference"] = true;
    buses.push_back(j);
  }
  doc["buses"] = buses;

  json branches = json::array();
  for (const Branch& br : net.branches) {
    json j{{"id", br.id}, {"from", net.buses[br.from].id}, {"to", net.buses[br.to].id}};
    put_limit(j, "rate", br.thermal_limit);
    j["angle_limit_rad"] = br.angle_limit;
    if (const auto* l = std::get_if<OverheadLine>(&br.kind)) {
      j["type"] = "overhead";
      j["r"] = l->r, j["x"] = l->x, j["b"] = l->b;
    } else if (const auto* t = std::get_if<Transformer>(&br.kind)) {
      j["type"] = "transformer";
      j["r"] = t->r, j["x"] = t->x, j["b"] = t->b, j["tap"] = t->tap, j["shift_rad"] = t->shift;
    } else {
      const auto& c = std::get<CableBranch>(br.kind);
      j["type"] = "cable";
      if (!c.design.empty()) j["design"] = c.design;
      j["length_km"] = c.length_km;
      j["model"] = model_to_json(c.model);
    }
    branches.push_back(j);
  }
  doc["branches"] = branches;

  json gens = json::array();
  for (const Generator& g : net.generators)
    gens.push_back({{"id", g.id}, {"bus", net.buses[g.bus].id}, {"pmin", g.p_min}, {"pmax", g.p_max},
                    {"qmin", g.q_min}, {"qmax", g.q_max}, {"cost", cost_to_json(g.cost)}});
  doc["generators"] = gens;

  json convs = json::array();
  for (const Converter& cv : net.converters) {
    json j{{"id", cv.id}, {"bus_i", net.buses[cv.bus_i].id}, {"bus_j", net.buses[cv.bus_j].id}};
    put_limit(j, "smax_i", cv.s_max_i);
    put_limit(j, "smax_j", cv.s_max_j);
    convs.push_back(j);
  }
  doc["converters"] = convs;

  if (!net.cable_designs.empty()) {
    json designs = json::object();
    for (const auto& [name, d] : net.cable_designs) designs[name] = design_to_json(d);
    doc["cable_designs"] = designs;
  }
  return doc;
}

void save_case(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << case_to_json(net).dump(2) << '\n';
}

void write_branch_parameters_csv(std::ostream& os, const Network& net, const std::map<std::string, double>& hz) {
  os << "branch,origin,target,subnetwork,frequency_hz,G,B,G_sh,B_sh\n";
  for (const DirectedEdge& e : directed_edges(net)) {
    const Branch& br = net.branches[e.branch];
    const Subnetwork& sn = net.subnetwork_of(e.origin);
    const bool dc = sn.mode == FrequencyMode::Dc;
    double f = sn.mode == FrequencyMode::Variable ? sn.max_hz : sn.frequency_hz;
    if (auto it = hz.find(sn.id); it != hz.end()) f = it->second;
    const BranchAdmittance a = branch_admittance(net, br, 2.0 * std::numbers::pi * f, dc || f == 0.0);
    os << br.id << ',' << net.buses[e.origin].id << ',' << net.buses[e.target].id << ',' << sn.id << ','
       << format_double(dc ? 0.0 : f) << ',' << format_double(a.G) << ',' << format_double(a.B) << ','
       << format_double(a.G_sh) << ',' << format_double(a.B_sh) << '\n';
  }
}

}  // namespace lfac
