#include "llab/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <toml.hpp>

#include "llab/common.hpp"

namespace fs = std::filesystem;

namespace llab {
namespace {

// ---------------------------------------------------------------- numbers

json num_to_json(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double json_to_num(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw ConfigError("expected a number, got \"" + s + "\"");
  }
  if (!v.is_number()) throw ConfigError("expected a number");
  return v.get<double>();
}

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

// ---------------------------------------------------------------- config validation

[[noreturn]] void fail(const std::string& source, const std::string& path, const std::string& msg) {
  throw ConfigError(source + ": " + path + ": " + msg);
}

std::optional<double> toml_number(const toml::node& n) {
  if (auto v = n.as_integer()) return double(v->get());
  if (auto v = n.as_floating_point()) return v->get();
  if (auto v = n.as_string()) {
    if (v->get() == "inf") return kInf;
  }
  return std::nullopt;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

bool is_pow2(double x) {
  if (!(x >= 4) || x != std::floor(x) || x > 65536) return false;
  const auto n = static_cast<unsigned long>(x);
  return (n & (n - 1)) == 0;
}

struct Checker {
  const std::string& source;
  std::string path;

  double number(const toml::node& n) const {
    const auto v = toml_number(n);
    if (!v || std::isnan(*v)) fail(source, path, "expected a number");
    return *v;
  }
  double finite(const toml::node& n) const {
    const double v = number(n);
    if (!std::isfinite(v)) fail(source, path, "must be finite");
    return v;
  }
  std::int64_t integer(const toml::node& n) const {
    auto v = n.as_integer();
    if (!v) fail(source, path, "expected an integer");
    return v->get();
  }
  json exponent(const toml::node& n, double lo, bool closed) const {
    const double v = number(n);
    const bool ok = closed ? v >= lo : v > lo;
    if (!ok) fail(source, path, std::string("must be in ") + (closed ? "[" : "(") + std::to_string(int(lo)) + ", inf]");
    return num_to_json(v);
  }

  json scalar(const std::string& kind, const toml::node& n) const {
    if (kind == "real") return finite(n);
    if (kind == "positive") {
      const double v = finite(n);
      if (!(v > 0)) fail(source, path, "must be positive");
      return v;
    }
    if (kind == "unit") {
      const double v = finite(n);
      if (!(v > 0 && v < 1)) fail(source, path, "must be in (0, 1)");
      return v;
    }
    if (kind == "int" || kind == "count") {
      const auto v = integer(n);
      if (v < (kind == "count" ? 1 : 0)) fail(source, path, kind == "count" ? "must be at least 1" : "must be >= 0");
      return v;
    }
    if (kind == "pow2") {
      const auto v = integer(n);
      if (!is_pow2(double(v))) fail(source, path, "must be a power of two between 4 and 65536");
      return v;
    }
    if (kind == "bool") {
      auto v = n.as_boolean();
      if (!v) fail(source, path, "expected a boolean");
      return v->get();
    }
    if (kind == "q_open") return exponent(n, 2, false);
    if (kind == "q_closed") return exponent(n, 2, true);
    if (kind == "p") return exponent(n, 1, false);
    if (kind.rfind("choice:", 0) == 0) {
      auto v = n.as_string();
      const auto opts = split(kind.substr(7), '|');
      if (!v || std::find(opts.begin(), opts.end(), v->get()) == opts.end())
        fail(source, path, "expected one of " + kind.substr(7));
      return v->get();
    }
    throw std::logic_error("unknown parameter kind " + kind);
  }

  json value(const std::string& kind, const toml::node& n) const {
    static const std::map<std::string, std::string> elem{{"positives", "positive"}, {"pow2s", "pow2"},
                                                         {"qs_open", "q_open"},    {"qs_closed", "q_closed"}};
    std::string ek;
    if (auto it = elem.find(kind); it != elem.end()) ek = it->second;
    if (kind.rfind("choices:", 0) == 0) ek = "choice:" + kind.substr(8);
    if (ek.empty()) return scalar(kind, n);
    auto arr = n.as_array();
    if (!arr || arr->empty()) fail(source, path, "expected a non-empty array");
    json out = json::array();
    for (std::size_t k = 0; k < arr->size(); ++k) {
      Checker sub{source, path + "[" + std::to_string(k) + "]"};
      out.push_back(sub.scalar(ek, *arr->get(k)));
    }
    return out;
  }
};

const PresetInfo* find_preset(const std::vector<PresetInfo>& all, const std::string& type, const std::string& name) {
  for (const auto& p : all)
    if (p.type == type && p.name == name) return &p;
  return nullptr;
}

bool valid_name(const std::string& s) {
  if (s.empty() || s.size() > 64 || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum((unsigned char)c) || c == '_' || c == '-'; });
}

ScenarioConfig parse_scenario(const toml::table& t, const std::string& path, std::optional<std::uint64_t> top_seed,
                              const std::string& source, const std::vector<PresetInfo>& presets) {
  static const std::set<std::string> allowed{"name", "type", "seed", "h", "recipe", "tolerances"};
  for (const auto& [k, v] : t)
    if (!allowed.count(std::string(k.str()))) fail(source, path + "." + std::string(k.str()), "unknown key");
  ScenarioConfig c;
  auto str = [&](const char* key) {
    auto n = t.get(key);
    if (!n) fail(source, path + "." + key, "missing");
    auto s = n->as_string();
    if (!s) fail(source, path + "." + key, "expected a string");
    return s->get();
  };
  c.name = str("name");
  if (!valid_name(c.name)) fail(source, path + ".name", "use letters, digits, '_' or '-'");
  c.type = str("type");
  const auto types = scenario_types();
  if (std::find(types.begin(), types.end(), c.type) == types.end())
    fail(source, path + ".type", "unknown scenario type '" + c.type + "'");

  if (auto n = t.get("seed")) {
    const auto v = Checker{source, path + ".seed"}.integer(*n);
    if (v < 0) fail(source, path + ".seed", "must be >= 0");
    c.seed = std::uint64_t(v);
  } else if (top_seed) {
    c.seed = *top_seed;
  } else {
    fail(source, path + ".seed", "missing (set it here or at the top level)");
  }

  auto rn = t.get("recipe");
  if (!rn || !rn->as_table()) fail(source, path + ".recipe", "missing table");
  const auto& recipe = *rn->as_table();
  auto pn = recipe.get("preset");
  if (!pn || !pn->as_string()) fail(source, path + ".recipe.preset", "missing");
  c.preset = pn->as_string()->get();
  const PresetInfo* info = find_preset(presets, c.type, c.preset);
  if (!info) fail(source, path + ".recipe.preset", "unknown preset '" + c.preset + "' for type " + c.type);

  for (const auto& [k, v] : recipe) {
    const std::string key(k.str());
    if (key == "preset") continue;
    const auto it = std::find_if(info->params.begin(), info->params.end(), [&](const ParamInfo& p) { return p.key == key; });
    if (it == info->params.end()) fail(source, path + ".recipe." + key, "unknown parameter for preset " + c.preset);
  }
  for (const auto& p : info->params) {
    const std::string fp = path + ".recipe." + p.key;
    if (auto n = recipe.get(p.key)) c.params[p.key] = Checker{source, fp}.value(p.kind, *n);
    else c.params[p.key] = p.default_value;
  }

  if (auto n = t.get("h")) {
    if (info->default_h <= 0) fail(source, path + ".h", "preset " + c.preset + " has no mesh size");
    const double h = Checker{source, path + ".h"}.finite(*n);
    if (!(h > 0 && h < 1)) fail(source, path + ".h", "must be in (0, 1)");
    c.h = h;
  } else {
    c.h = info->default_h;
  }

  for (const auto& [k, v] : info->tolerances) c.tolerances[k] = num_to_json(v);
  if (auto n = t.get("tolerances")) {
    if (!n->as_table()) fail(source, path + ".tolerances", "expected a table");
    for (const auto& [k, v] : *n->as_table()) {
      const std::string key(k.str()), fp = path + ".tolerances." + key;
      if (!info->tolerances.count(key)) fail(source, fp, "unknown tolerance for preset " + c.preset);
      const double x = Checker{source, fp}.finite(v);
      if (!(x > 0)) fail(source, fp, "must be positive");
      c.tolerances[key] = x;
    }
  }
  return c;
}

// ---------------------------------------------------------------- SVG

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : int(it - header.begin());
  }
};

Csv parse_csv(const std::string& text) {
  Csv c;
  std::istringstream is(text);
  std::string line;
  if (std::getline(is, line)) c.header = split(line, ',');
  while (std::getline(is, line))
    if (!line.empty()) c.rows.push_back(split(line, ','));
  return c;
}

double parse_cell(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  return end == s.c_str() ? std::numeric_limits<double>::quiet_NaN() : v;
}

std::string f2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string g3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- config

json ScenarioConfig::echo() const {
  return {{"name", name}, {"type", type}, {"preset", preset}, {"seed", seed},
          {"h", h},       {"params", params}, {"tolerances", tolerances}};
}

ScenarioConfig config_from_echo(const json& e) {
  ScenarioConfig c;
  try {
    c.name = e.at("name").get<std::string>();
    c.type = e.at("type").get<std::string>();
    c.preset = e.at("preset").get<std::string>();
    c.seed = e.at("seed").get<std::uint64_t>();
    c.h = e.at("h").get<double>();
    c.params = e.at("params");
    c.tolerances = e.at("tolerances");
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config echo: ") + ex.what());
  }
  return c;
}

std::vector<ScenarioConfig> parse_config(const std::string& text, std::optional<std::uint64_t> seed_override,
                                         const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, std::string_view(source));
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw ConfigError(os.str());
  }
  for (const auto& [k, v] : root) {
    const std::string key(k.str());
    if (key != "seed" && key != "scenario") fail(source, key, "unknown key");
  }
  std::optional<std::uint64_t> top;
  if (auto n = root.get("seed")) {
    const auto v = Checker{source, "seed"}.integer(*n);
    if (v < 0) fail(source, "seed", "must be >= 0");
    top = std::uint64_t(v);
  }
  if (seed_override) top = seed_override;
  auto sn = root.get("scenario");
  if (!sn) fail(source, "scenario", "no [[scenario]] tables");
  auto arr = sn->as_array();
  if (!arr || arr->empty()) fail(source, "scenario", "expected an array of tables");
  const auto presets = list_presets();
  std::vector<ScenarioConfig> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const std::string path = "scenario[" + std::to_string(i) + "]";
    auto t = arr->get(i)->as_table();
    if (!t) fail(source, path, "expected a table");
    auto c = parse_scenario(*t, path, top, source, presets);
    if (seed_override) c.seed = *seed_override;
    if (!names.insert(c.name).second) fail(source, path + ".name", "duplicate scenario name '" + c.name + "'");
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ScenarioConfig> load_config(const fs::path& file, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), seed_override, file.string());
}

// ---------------------------------------------------------------- report types

bool CheckRecord::operator==(const CheckRecord& o) const {
  return name == o.name && anchor == o.anchor && same(measured, o.measured) && same(bound, o.bound) &&
         relation == o.relation && pass == o.pass && note == o.note;
}

bool PlotSpec::operator==(const PlotSpec& o) const {
  return title == o.title && csv == o.csv && svg == o.svg && x == o.x && y == o.y && series == o.series &&
         y_transform == o.y_transform && logx == o.logx && logy == o.logy && has_fit == o.has_fit &&
         same(fit_slope, o.fit_slope) && same(fit_intercept, o.fit_intercept);
}

bool ScenarioReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
}

bool ScenarioReport::operator==(const ScenarioReport& o) const {
  if (constants.size() != o.constants.size()) return false;
  for (auto a = constants.begin(), b = o.constants.begin(); a != constants.end(); ++a, ++b)
    if (a->first != b->first || !same(a->second, b->second)) return false;
  return config == o.config && checks == o.checks && artifacts == o.artifacts && plots == o.plots;
}

const std::map<std::string, std::string>& anchor_manifest() {
  static const std::map<std::string, std::string> m{
      {"fundSolBds", "two-sided bounds of the fundamental solution and its quasi-balls"},
      {"ZsBounds", "envelope of the quasi-circles"},
      {"drho", "radius of the multiplier domain"},
      {"biForm", "bilinear form of the operator"},
      {"solvableLem", "coercivity and unique solvability of the Dirichlet problem"},
      {"phiLem", "positive multiplier under the smallness hypotheses"},
      {"phiBound", "two-sided bound of the positive multiplier"},
      {"Cacc+", "Caccioppoli inequality for the multiplier problem"},
      {"t0", "integrability exponent of the Caccioppoli inequality"},
      {"grPhiL2", "L2 bound of the log-multiplier gradient"},
      {"grPhiLt0", "higher-integrability bound of the log-multiplier gradient"},
      {"PhiepsBound", "K-growth of the log-multiplier gradient norms"},
      {"DDef", "first-order Beltrami operator"},
      {"etaDef", "Beltrami coefficient eta"},
      {"nuDef", "Beltrami coefficient nu"},
      {"DwDef", "Beltrami operator frozen along a field"},
      {"hatDDef", "constant-coefficient hat operator"},
      {"hatADef", "second-order matrix induced by the hat operator"},
      {"etanuBds", "quasiconformal bound of the Beltrami coefficients"},
      {"rpLem", "integrability of the Beltrami data"},
      {"logLem", "logarithmic estimate for the similarity factor"},
      {"Hadamard", "three-circle inequality on exact circles"},
      {"3circle", "three-quasi-circle inequality"},
      {"TResults", "Cauchy and Beurling transform identities"},
      {"simPrinc", "similarity principle factorization"},
      {"simCor", "bounds of the similarity factor"},
      {"OofV", "vanishing order bound under the full hypotheses"},
      {"localBd", "local normalization of the solution"},
      {"localEst", "local vanishing estimate"},
      {"tildev", "stream function construction"},
      {"streamFunc", "relations between the solution and its stream function"},
      {"tildevBd", "L1 bound of the stream function"},
      {"diffEq", "reduced first-order equation"},
      {"alDef", "coefficient alpha of the reduced equation"},
      {"beDef", "coefficients beta of the reduced equation"},
      {"OofV1", "vanishing order with a divergence-form drift"},
      {"lemma0701", "square-integrable drift estimate"},
      {"OofV2", "vanishing order with a gradient drift"},
      {"decompLem", "second-order decomposition"},
      {"UpsEqn", "drift factor field"},
      {"OofV3", "vanishing order with drifts and a potential"},
      {"phiBd1", "sub/supersolution multiplier"},
      {"adjPDE", "adjoint equation"},
      {"scaling", "rescaling identities for the drift and potential norms"},
      {"uBd", "global growth hypothesis"},
      {"globalEst", "global decay estimate"},
      {"LandisThm", "decay rate at infinity, bounded drifts"},
      {"LandisThm2", "decay rate at infinity, divergence-form drift"},
      {"LandisThm3", "decay rate at infinity, drifts and potential"},
      {"sharpness", "closed-form examples attaining the decay rates"},
      {"maxPrinc", "maximum principle for subsolutions"},
      {"d3.1", "Green function of the operator on a bounded domain"},
      {"t3.2", "existence and estimates of the Green function"},
      {"eqB.14", "representation formula"},
      {"eqB.25", "averaged Green function"},
      {"eqB.60", "symmetry between the Green functions of the operator and its adjoint"},
  };
  return m;
}

json to_json(const ScenarioReport& r) {
  return {{"schema", kReportSchema}, {"hashable", hashable_section(r)}, {"timings", r.timings}};
}

json hashable_section(const ScenarioReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"anchor", c.anchor},
                      {"measured", num_to_json(c.measured)},
                      {"bound", num_to_json(c.bound)},
                      {"relation", c.relation},
                      {"pass", c.pass},
                      {"note", c.note}});
  json constants = json::object();
  for (const auto& [k, v] : r.constants) constants[k] = num_to_json(v);
  json plots = json::array();
  for (const auto& p : r.plots)
    plots.push_back({{"title", p.title},
                     {"csv", p.csv},
                     {"svg", p.svg},
                     {"x", p.x},
                     {"y", p.y},
                     {"series", p.series},
                     {"y_transform", p.y_transform},
                     {"logx", p.logx},
                     {"logy", p.logy},
                     {"has_fit", p.has_fit},
                     {"fit_slope", num_to_json(p.fit_slope)},
                     {"fit_intercept", num_to_json(p.fit_intercept)}});
  return {{"config", r.config},   {"checks", checks}, {"constants", constants},
          {"artifacts", r.artifacts}, {"plots", plots}, {"pass", r.all_pass()}};
}

ScenarioReport report_from_json(const json& j) {
  ScenarioReport r;
  try {
    if (j.at("schema") != kReportSchema) throw ConfigError("report: unsupported schema " + j.at("schema").dump());
    const auto& h = j.at("hashable");
    r.config = h.at("config");
    for (const auto& c : h.at("checks"))
      r.checks.push_back({c.at("name"), c.at("anchor"), json_to_num(c.at("measured")), json_to_num(c.at("bound")),
                          c.at("relation"), c.at("pass"), c.at("note")});
    for (const auto& [k, v] : h.at("constants").items()) r.constants[k] = json_to_num(v);
    r.artifacts = h.at("artifacts").get<std::vector<std::string>>();
    for (const auto& p : h.at("plots")) {
      PlotSpec s;
      s.title = p.at("title");
      s.csv = p.at("csv");
      s.svg = p.at("svg");
      s.x = p.at("x");
      s.y = p.at("y");
      s.series = p.at("series");
      s.y_transform = p.at("y_transform");
      s.logx = p.at("logx");
      s.logy = p.at("logy");
      s.has_fit = p.at("has_fit");
      s.fit_slope = json_to_num(p.at("fit_slope"));
      s.fit_intercept = json_to_num(p.at("fit_intercept"));
      r.plots.push_back(s);
    }
    for (const auto& [k, v] : j.at("timings").items()) r.timings[k] = v.get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------- SVG rendering

std::string render_svg(const PlotSpec& spec, const std::string& csv_text) {
  const Csv csv = parse_csv(csv_text);
  const int cx = csv.column(spec.x), cy = csv.column(spec.y), cs = spec.series.empty() ? -1 : csv.column(spec.series);
  const bool neglog = spec.y_transform == "neglog";
  auto tx = [&](double x) { return spec.logx ? (x > 0 ? std::log10(x) : std::nan("")) : x; };
  auto ty = [&](double y) {
    if (neglog) y = (y > 0 && y < 1) ? -std::log(y) : std::nan("");
    return spec.logy ? (y > 0 ? std::log10(y) : std::nan("")) : y;
  };

  std::map<std::string, std::vector<std::pair<double, double>>> series;
  std::vector<std::string> order;
  if (cx >= 0 && cy >= 0) {
    for (const auto& row : csv.rows) {
      if (int(row.size()) <= std::max({cx, cy, cs})) continue;
      const double X = tx(parse_cell(row[cx])), Y = ty(parse_cell(row[cy]));
      if (!std::isfinite(X) || !std::isfinite(Y)) continue;
      const std::string key = cs >= 0 ? row[cs] : "";
      if (!series.count(key)) order.push_back(key);
      series[key].emplace_back(X, Y);
    }
  }
  double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
  for (const auto& [k, pts] : series)
    for (auto [x, y] : pts) {
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  // fit line in natural logs of the plotted quantities, drawn in the axis units
  std::vector<std::pair<double, double>> fit;
  if (spec.has_fit && std::isfinite(x0)) {
    for (int k = 0; k <= 40; ++k) {
      const double X = x0 + (x1 - x0) * k / 40.0;
      const double xv = spec.logx ? std::pow(10.0, X) : X;
      if (!(xv > 0)) continue;
      const double yv = std::exp(spec.fit_intercept + spec.fit_slope * std::log(xv));
      const double Y = spec.logy ? std::log10(yv) : yv;
      if (!std::isfinite(Y)) continue;
      fit.emplace_back(X, Y);
      y0 = std::min(y0, Y), y1 = std::max(y1, Y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;

  const double W = 640, H = 420, L = 80, R = 130, T = 40, B = 55;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << xml_escape(spec.title) << "</text>\n"
     << "<g stroke=\"black\" fill=\"none\"><rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R
     << "\" height=\"" << H - T - B << "\"/></g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double X = x0 + (x1 - x0) * k / 4, Y = y0 + (y1 - y0) * k / 4;
    const double xl = spec.logx ? std::pow(10.0, X) : X, yl = spec.logy ? std::pow(10.0, Y) : Y;
    os << "<line x1=\"" << f2(px(X)) << "\" y1=\"" << H - B << "\" x2=\"" << f2(px(X)) << "\" y2=\"" << H - B + 5
       << "\" stroke=\"black\"/>"
       << "<text x=\"" << f2(px(X)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << g3(xl) << "</text>\n"
       << "<line x1=\"" << L - 5 << "\" y1=\"" << f2(py(Y)) << "\" x2=\"" << L << "\" y2=\"" << f2(py(Y))
       << "\" stroke=\"black\"/>"
       << "<text x=\"" << L - 8 << "\" y=\"" << f2(py(Y) + 4) << "\" text-anchor=\"end\">" << g3(yl) << "</text>\n";
  }
  const std::string ylabel = (neglog ? "-log " : "") + spec.y + (spec.logy ? " (log)" : "");
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xml_escape(spec.x)
     << (spec.logx ? " (log)" : "") << "</text>\n"
     << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\">" << xml_escape(ylabel) << "</text>\n</g>\n";

  int idx = 0;
  for (const auto& key : order) {
    const char* col = palette[idx % 7];
    auto pts = series[key];
    std::sort(pts.begin(), pts.end());
    os << "<g>\n<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : pts) os << f2(px(x)) << ',' << f2(py(y)) << ' ';
    os << "\"/>\n";
    for (auto [x, y] : pts)
      os << "<circle cx=\"" << f2(px(x)) << "\" cy=\"" << f2(py(y)) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    os << "</g>\n";
    if (!key.empty())
      os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 14 + 16 * idx << "\" font-family=\"sans-serif\" "
         << "font-size=\"11\" fill=\"" << col << "\">" << xml_escape(spec.series + " = " + key) << "</text>\n";
    ++idx;
  }
  if (!fit.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#444444\" stroke-dasharray=\"6 4\" points=\"";
    for (auto [x, y] : fit) os << f2(px(x)) << ',' << f2(py(y)) << ' ';
    os << "\"/>\n<text x=\"" << W - R + 10 << "\" y=\"" << H - B - 8 << "\" font-family=\"sans-serif\" "
       << "font-size=\"11\">fit slope " << g3(spec.fit_slope) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------- emission

namespace {

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ResourceError("cannot write " + p.string());
  out << content;
  out.close();
  if (!out) throw ResourceError("write failed for " + p.string());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ResourceError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ResourceError("cannot create directory " + dir.string());
}

}  // namespace

void emit_outputs(ScenarioReport& report, const fs::path& dir) {
  ensure_dir(dir);
  for (const auto& [file, text] : report.tables) write_file(dir / file, text);
  for (const auto& p : report.plots) {
    const auto it = report.tables.find(p.csv);
    write_file(dir / p.svg, render_svg(p, it == report.tables.end() ? std::string() : it->second));
  }
  write_file(dir / "report.json", to_json(report).dump(2) + "\n");
}

int rerender_reports(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ResourceError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "report.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  int n = 0;
  for (const auto& f : files) {
    json j;
    try {
      j = json::parse(read_file(f));
    } catch (const json::parse_error& e) {
      throw ConfigError(f.string() + ": " + e.what());
    }
    const auto r = report_from_json(j);
    for (const auto& p : r.plots) {
      const auto csv = f.parent_path() / p.csv;
      write_file(f.parent_path() / p.svg, render_svg(p, fs::exists(csv) ? read_file(csv) : std::string()));
      ++n;
    }
  }
  return n;
}

SuiteResult run_suite(const std::vector<ScenarioConfig>& configs, const fs::path& dir, int jobs) {
  ensure_dir(dir);
  SuiteResult out;
  out.reports.resize(configs.size());
  const int workers = std::max(1, std::min<int>(jobs, int(configs.size())));
  const RunContext ctx{workers == 1 ? std::max(1, jobs) : 1};
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i; (i = next++) < configs.size();) {
      try {
        auto r = run_scenario(configs[i], ctx);
        emit_outputs(r, dir / configs[i].name);
        out.reports[i] = std::move(r);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  json index = {{"schema", kReportSchema}, {"scenarios", json::array()}};
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const bool pass = out.reports[i].all_pass();
    out.all_pass = out.all_pass && pass;
    index["scenarios"].push_back(
        {{"name", configs[i].name}, {"report", configs[i].name + "/report.json"}, {"pass", pass}});
  }
  index["pass"] = out.all_pass;
  write_file(dir / "index.json", index.dump(2) + "\n");
  return out;
}

}  // namespace llab
