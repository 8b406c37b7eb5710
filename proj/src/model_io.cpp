#include "csr/powersys.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace csr::powersys {

namespace {

struct Record {
  std::string kind;
  std::vector<std::string> positional;
  std::map<std::string, std::string> keys;
  std::map<std::string, bool> used;
  std::string where;
};

[[noreturn]] void fail(const Record& r, const std::string& msg) {
  throw ModelError(r.where + ": " + r.kind + " record: " + msg);
}

double to_double(const Record& r, const std::string& what, const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    fail(r, "bad number '" + s + "' for " + what);
  }
  if (pos != s.size() || !std::isfinite(v)) fail(r, "bad number '" + s + "' for " + what);
  return v;
}

int to_int(const Record& r, const std::string& what, const std::string& s) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    fail(r, "bad integer '" + s + "' for " + what);
  }
  if (pos != s.size()) fail(r, "bad integer '" + s + "' for " + what);
  return v;
}

std::optional<std::string> take(Record& r, const std::string& key) {
  auto it = r.keys.find(key);
  if (it == r.keys.end()) return std::nullopt;
  r.used[key] = true;
  return it->second;
}

double num(Record& r, const std::string& key, std::optional<double> def = std::nullopt) {
  if (auto s = take(r, key)) return to_double(r, key, *s);
  if (def) return *def;
  fail(r, "missing '" + key + "='");
}

int integer(Record& r, const std::string& key) {
  if (auto s = take(r, key)) return to_int(r, key, *s);
  fail(r, "missing '" + key + "='");
}

void expect_positional(const Record& r, std::size_t n) {
  if (r.positional.size() != n) {
    fail(r, "expected " + std::to_string(n) + " positional field(s), got " + std::to_string(r.positional.size()));
  }
}

void finish(const Record& r) {
  for (const auto& [k, v] : r.keys) {
    if (!r.used.contains(k)) fail(r, "unknown key '" + k + "'");
  }
}

}  // namespace

PowerSystemModel parse_model(std::istream& in, const std::string& source) {
  PowerSystemModel model;
  std::map<std::string, LvrtCurve> curves;
  std::vector<std::pair<std::string, Record>> pv_curve_refs;
  struct PendingInertia {
    std::size_t machine;
    double h;
    std::optional<double> dm;
  };
  std::vector<PendingInertia> pending;  // h= needs the frequency
  bool have_frequency = false;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    Record r;
    if (!(ss >> r.kind)) continue;
    r.where = source + ":" + std::to_string(lineno);
    for (std::string tok; ss >> tok;) {
      if (auto eq = tok.find('='); eq != std::string::npos) {
        const std::string key = tok.substr(0, eq);
        if (key.empty() || r.keys.contains(key)) fail(r, "bad or repeated key in '" + tok + "'");
        r.keys[key] = tok.substr(eq + 1);
      } else {
        r.positional.push_back(tok);
      }
    }

    if (r.kind == "frequency") {
      expect_positional(r, 1);
      model.frequency = to_double(r, "frequency", r.positional[0]);
      if (!(model.frequency > 0.0)) fail(r, "frequency must be positive");
      have_frequency = true;
    } else if (r.kind == "bus") {
      expect_positional(r, 2);
      Bus b;
      b.id = to_int(r, "bus id", r.positional[0]);
      const std::string& t = r.positional[1];
      if (t == "slack") {
        b.type = BusType::Slack;
        b.v_set = num(r, "v");
        b.angle = num(r, "angle", 0.0) * std::numbers::pi / 180.0;
      } else if (t == "pv") {
        b.type = BusType::PV;
        b.v_set = num(r, "v");
        b.p_gen = num(r, "p");
      } else if (t == "pq") {
        b.type = BusType::PQ;
      } else {
        fail(r, "bus type must be slack, pv or pq, got '" + t + "'");
      }
      b.p_load = num(r, "pl", 0.0);
      b.q_load = num(r, "ql", 0.0);
      model.buses.push_back(b);
    } else if (r.kind == "branch") {
      expect_positional(r, 2);
      Branch br;
      br.from = to_int(r, "from bus", r.positional[0]);
      br.to = to_int(r, "to bus", r.positional[1]);
      br.r = num(r, "r", 0.0);
      br.x = num(r, "x");
      br.b = num(r, "b", 0.0);
      model.branches.push_back(br);
    } else if (r.kind == "machine") {
      expect_positional(r, 1);
      Machine m;
      m.id = to_int(r, "machine id", r.positional[0]);
      m.bus = integer(r, "bus");
      m.xd = num(r, "xd");
      const auto h = take(r, "h");
      const auto mm = take(r, "m");
      if (h.has_value() == mm.has_value()) fail(r, "give exactly one of 'h=' or 'm='");
      const auto d = take(r, "d");
      const auto dm = take(r, "dm");
      if (d.has_value() == dm.has_value()) fail(r, "give exactly one of 'd=' or 'dm='");
      double dm_val = 0.0;
      if (dm) {
        dm_val = to_double(r, "dm", *dm);
        if (dm_val < 0.0) fail(r, "dm must be non-negative");
      } else {
        m.d = to_double(r, "d", *d);
      }
      if (mm) {
        m.m = to_double(r, "m", *mm);
        if (dm) m.d = dm_val * m.m;
        model.machines.push_back(m);
      } else {
        const double hv = to_double(r, "h", *h);
        if (!(hv > 0.0)) fail(r, "h must be positive");
        pending.push_back({model.machines.size(), hv, dm ? std::optional<double>(dm_val) : std::nullopt});
        model.machines.push_back(m);
      }
    } else if (r.kind == "pv") {
      expect_positional(r, 1);
      PvUnit pv;
      pv.id = to_int(r, "pv id", r.positional[0]);
      pv.bus = integer(r, "bus");
      pv.p = num(r, "p");
      pv.q = num(r, "q", 0.0);
      auto c = take(r, "lvrt");
      if (!c) fail(r, "missing 'lvrt='");
      model.pv_units.push_back(pv);
      pv_curve_refs.emplace_back(*c, r);
    } else if (r.kind == "lvrt") {
      if (r.positional.size() < 2) fail(r, "expected a name and at least one time:voltage point");
      LvrtCurve c;
      c.name = r.positional[0];
      for (std::size_t i = 1; i < r.positional.size(); ++i) {
        const std::string& p = r.positional[i];
        const auto colon = p.find(':');
        if (colon == std::string::npos) fail(r, "point '" + p + "' is not time:voltage");
        c.points.emplace_back(to_double(r, "time", p.substr(0, colon)), to_double(r, "voltage", p.substr(colon + 1)));
      }
      try {
        c.validate();
      } catch (const ModelError& e) {
        fail(r, e.what());
      }
      if (curves.contains(c.name)) fail(r, "duplicate curve '" + c.name + "'");
      curves[c.name] = c;
    } else if (r.kind == "reference") {
      expect_positional(r, 1);
      model.reference = to_int(r, "reference machine", r.positional[0]);
    } else {
      fail(r, "unknown record type");
    }
    finish(r);
  }
  if (!have_frequency) throw ModelError(source + ": missing 'frequency' record");

  for (const auto& pi : pending) {
    auto& m = model.machines[pi.machine];
    m.m = pi.h / (std::numbers::pi * model.frequency);
    if (pi.dm) m.d = *pi.dm * m.m;
  }
  for (std::size_t i = 0; i < pv_curve_refs.size(); ++i) {
    auto it = curves.find(pv_curve_refs[i].first);
    if (it == curves.end()) fail(pv_curve_refs[i].second, "unknown LVRT curve '" + pv_curve_refs[i].first + "'");
    model.pv_units[i].lvrt = it->second;
  }
  try {
    model.validate();
  } catch (const ModelError& e) {
    throw ModelError(source + ": " + e.what());
  }
  return model;
}

PowerSystemModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  return parse_model(in, path);
}

}  // namespace csr::powersys
