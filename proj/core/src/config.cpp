#include "nsk/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace nsk {

using nlohmann::json;

namespace {

[[noreturn]] void fail_at(const std::string& src, int line, const std::string& msg) {
  throw ConfigError(src + ":" + std::to_string(line) + ": " + msg);
}

[[noreturn]] void fail_field(const std::string& src, const std::string& field,
                             const std::string& msg) {
  throw ConfigError(src + ": field '" + field + "': " + msg);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool valid_bare_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
      return false;
  return true;
}

json parse_scalar(const std::string& tok, const std::string& src, int line) {
  if (tok.empty()) fail_at(src, line, "empty value");
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"')
      fail_at(src, line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
      if (tok[i] == '\\' && i + 2 < tok.size()) {
        ++i;
        switch (tok[i]) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: fail_at(src, line, "unsupported escape in string");
        }
      } else {
        out += tok[i];
      }
    }
    return json(out);
  }
  if (tok == "true") return json(true);
  if (tok == "false") return json(false);
  const bool looks_float = tok.find_first_of(".eE") != std::string::npos;
  if (!looks_float) {
    std::int64_t iv = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
    if (ec == std::errc() && p == tok.data() + tok.size()) return json(iv);
  }
  double dv = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), dv);
  if (ec == std::errc() && p == tok.data() + tok.size()) return json(dv);
  fail_at(src, line, "cannot parse value '" + tok + "'");
}

json parse_value(const std::string& tok, const std::string& src, int line) {
  if (!tok.empty() && tok.front() == '[') {
    if (tok.back() != ']') fail_at(src, line, "unterminated array");
    json arr = json::array();
    std::string body = tok.substr(1, tok.size() - 2);
    std::string cur;
    bool in_string = false;
    auto flush = [&]() {
      const std::string t = trim(cur);
      if (!t.empty()) arr.push_back(parse_scalar(t, src, line));
      cur.clear();
    };
    for (std::size_t i = 0; i < body.size(); ++i) {
      const char c = body[i];
      if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_string = !in_string;
      if (c == ',' && !in_string) {
        if (trim(cur).empty()) fail_at(src, line, "empty array element");
        flush();
      } else {
        cur += c;
      }
    }
    flush();
    return arr;
  }
  return parse_scalar(tok, src, line);
}

/// Line-oriented TOML subset: [table] and [table.sub] headers, scalar and
/// flat-array values, end-of-line comments. Enough for the study schema;
/// anything fancier is rejected with a line number.
json toml_to_json(const std::string& text, const std::string& src) {
  json root = json::object();
  json* table = &root;
  std::unordered_set<std::string> seen_tables;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail_at(src, line, "malformed table header");
      const std::string path = trim(s.substr(1, s.size() - 2));
      if (path.empty()) fail_at(src, line, "empty table header");
      if (!seen_tables.insert(path).second)
        fail_at(src, line, "duplicate table [" + path + "]");
      table = &root;
      std::size_t pos = 0;
      while (true) {
        const std::size_t dot = path.find('.', pos);
        const std::string part = path.substr(pos, dot - pos);
        if (!valid_bare_key(part)) fail_at(src, line, "invalid table name");
        if (!table->contains(part)) (*table)[part] = json::object();
        table = &(*table)[part];
        if (!table->is_object()) fail_at(src, line, "table name collides with a key");
        if (dot == std::string::npos) break;
        pos = dot + 1;
      }
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) fail_at(src, line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (!valid_bare_key(key))
      fail_at(src, line, "invalid key '" + key + "' (dotted keys unsupported)");
    if (table->contains(key)) fail_at(src, line, "duplicate key '" + key + "'");
    (*table)[key] = parse_value(trim(s.substr(eq + 1)), src, line);
  }
  return root;
}

/// Typed extraction with unknown-key rejection; every error names the field.
struct Reader {
  const std::string& src;

  void check_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) const {
    for (const auto& [k, v] : obj.items()) {
      bool ok = false;
      for (const char* a : allowed)
        if (k == a) ok = true;
      if (!ok) fail_field(src, where.empty() ? k : where + "." + k, "unknown key");
    }
  }

  double num(const json& obj, const char* key, double dflt,
             const std::string& where) const {
    if (!obj.contains(key)) return dflt;
    const json& v = obj[key];
    if (!v.is_number()) fail_field(src, where, "expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const json& obj, const char* key, std::int64_t dflt,
                       const std::string& where) const {
    if (!obj.contains(key)) return dflt;
    const json& v = obj[key];
    if (!v.is_number_integer()) fail_field(src, where, "expected an integer");
    return v.get<std::int64_t>();
  }

  bool boolean(const json& obj, const char* key, bool dflt,
               const std::string& where) const {
    if (!obj.contains(key)) return dflt;
    const json& v = obj[key];
    if (!v.is_boolean()) fail_field(src, where, "expected true/false");
    return v.get<bool>();
  }

  std::string str(const json& obj, const char* key, const std::string& dflt,
                  const std::string& where) const {
    if (!obj.contains(key)) return dflt;
    const json& v = obj[key];
    if (!v.is_string()) fail_field(src, where, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> num_list(const json& obj, const char* key,
                               const std::string& where) const {
    std::vector<double> out;
    if (!obj.contains(key)) return out;
    const json& v = obj[key];
    if (!v.is_array()) fail_field(src, where, "expected an array of numbers");
    for (const json& e : v) {
      if (!e.is_number()) fail_field(src, where, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
};

RunMode parse_mode(const std::string& s, const std::string& src) {
  if (s == "relaxation") return RunMode::Relaxation;
  if (s == "weakstrong") return RunMode::WeakStrong;
  if (s == "checks") return RunMode::Checks;
  if (s == "single_run") return RunMode::SingleRun;
  if (s == "gradient_flow") return RunMode::GradientFlow;
  fail_field(src, "mode", "unknown mode '" + s + "'");
}

StudyConfig from_json(const json& j, const std::string& src) {
  if (!j.is_object()) throw ConfigError(src + ": top level must be a table/object");
  Reader r{src};
  r.check_keys(j, "",
               {"mode", "seed", "grid", "physics", "bump", "time", "init", "sweep",
                "perturbation", "checks", "output"});
  StudyConfig cfg;
  cfg.mode = parse_mode(r.str(j, "mode", "single_run", "mode"), src);
  {
    const std::int64_t s = r.integer(j, "seed", 42, "seed");
    if (s < 0) fail_field(src, "seed", "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    r.check_keys(g, "grid", {"n", "length"});
    cfg.grid_n = static_cast<int>(r.integer(g, "n", cfg.grid_n, "grid.n"));
    cfg.params.domain_length =
        r.num(g, "length", cfg.params.domain_length, "grid.length");
  }
  if (j.contains("physics")) {
    const json& ph = j["physics"];
    r.check_keys(ph, "physics",
                 {"gamma", "s", "epsilon", "nu", "rho_floor", "friction",
                  "s2_scaling", "lame", "lame_alpha"});
    Params& p = cfg.params;
    p.gamma = r.num(ph, "gamma", p.gamma, "physics.gamma");
    p.s = r.num(ph, "s", p.s, "physics.s");
    p.epsilon = r.num(ph, "epsilon", p.epsilon, "physics.epsilon");
    p.nu = r.num(ph, "nu", p.nu, "physics.nu");
    p.rho_floor = r.num(ph, "rho_floor", p.rho_floor, "physics.rho_floor");
    p.friction = r.boolean(ph, "friction", p.friction, "physics.friction");
    const std::string s2 = r.str(ph, "s2_scaling", "inv_epsilon", "physics.s2_scaling");
    if (s2 == "inv_epsilon")
      p.s2_scaling = S2Scaling::InvEpsilon;
    else if (s2 == "unit")
      p.s2_scaling = S2Scaling::Unit;
    else
      fail_field(src, "physics.s2_scaling", "expected inv_epsilon|unit");
    const std::string lk = r.str(ph, "lame", "bd_matched", "physics.lame");
    if (lk == "bd_matched")
      p.lame.kind = LameKind::BdMatched;
    else if (lk == "scaled")
      p.lame.kind = LameKind::Scaled;
    else
      fail_field(src, "physics.lame", "expected bd_matched|scaled");
    p.lame.alpha = r.num(ph, "lame_alpha", p.lame.alpha, "physics.lame_alpha");
  }
  if (j.contains("bump")) {
    const json& b = j["bump"];
    r.check_keys(b, "bump", {"amplitude", "amplitude_rel", "center", "halfwidth"});
    cfg.params.bump.amplitude =
        r.num(b, "amplitude", cfg.params.bump.amplitude, "bump.amplitude");
    cfg.bump_amplitude_rel =
        r.num(b, "amplitude_rel", cfg.bump_amplitude_rel, "bump.amplitude_rel");
    cfg.params.bump.center = r.num(b, "center", cfg.params.bump.center, "bump.center");
    cfg.params.bump.halfwidth =
        r.num(b, "halfwidth", cfg.params.bump.halfwidth, "bump.halfwidth");
  }
  if (j.contains("time")) {
    const json& t = j["time"];
    r.check_keys(t, "time", {"t_end", "sample_every", "cfl_number", "dt", "max_steps"});
    cfg.t_end = r.num(t, "t_end", cfg.t_end, "time.t_end");
    cfg.sample_every = r.num(t, "sample_every", cfg.sample_every, "time.sample_every");
    cfg.cfl_number = r.num(t, "cfl_number", cfg.cfl_number, "time.cfl_number");
    cfg.dt_fixed = r.num(t, "dt", cfg.dt_fixed, "time.dt");
    cfg.max_steps = r.integer(t, "max_steps", cfg.max_steps, "time.max_steps");
  }
  if (j.contains("init")) {
    const json& i = j["init"];
    r.check_keys(i, "init", {"mean", "cos_amps", "sin_amps"});
    cfg.init.mean = r.num(i, "mean", cfg.init.mean, "init.mean");
    cfg.init.cos_amps = r.num_list(i, "cos_amps", "init.cos_amps");
    cfg.init.sin_amps = r.num_list(i, "sin_amps", "init.sin_amps");
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    r.check_keys(s, "sweep", {"epsilon_list", "nu_policy", "nu_value"});
    cfg.epsilon_list = r.num_list(s, "epsilon_list", "sweep.epsilon_list");
    const std::string np = r.str(s, "nu_policy", "zero", "sweep.nu_policy");
    if (np == "zero")
      cfg.nu_policy.kind = NuPolicyKind::Zero;
    else if (np == "fixed")
      cfg.nu_policy.kind = NuPolicyKind::Fixed;
    else if (np == "scaled")
      cfg.nu_policy.kind = NuPolicyKind::Scaled;
    else
      fail_field(src, "sweep.nu_policy", "expected zero|fixed|scaled");
    cfg.nu_policy.value = r.num(s, "nu_value", cfg.nu_policy.value, "sweep.nu_value");
  }
  if (j.contains("perturbation")) {
    const json& pt = j["perturbation"];
    r.check_keys(pt, "perturbation", {"delta", "mode_number"});
    cfg.perturbation.delta =
        r.num(pt, "delta", cfg.perturbation.delta, "perturbation.delta");
    cfg.perturbation.mode_number = static_cast<int>(
        r.integer(pt, "mode_number", cfg.perturbation.mode_number,
                  "perturbation.mode_number"));
  }
  if (j.contains("checks")) {
    const json& c = j["checks"];
    r.check_keys(c, "checks", {"lo", "hi", "grid_n", "n_samples"});
    cfg.checks.lo = r.num(c, "lo", cfg.checks.lo, "checks.lo");
    cfg.checks.hi = r.num(c, "hi", cfg.checks.hi, "checks.hi");
    cfg.checks.grid_n =
        static_cast<int>(r.integer(c, "grid_n", cfg.checks.grid_n, "checks.grid_n"));
    cfg.checks.n_samples =
        r.integer(c, "n_samples", cfg.checks.n_samples, "checks.n_samples");
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    r.check_keys(o, "output", {"directory", "emit_plot_data", "write_fields"});
    cfg.output_dir = r.str(o, "directory", cfg.output_dir, "output.directory");
    cfg.emit_plot_data =
        r.boolean(o, "emit_plot_data", cfg.emit_plot_data, "output.emit_plot_data");
    cfg.write_fields =
        r.boolean(o, "write_fields", cfg.write_fields, "output.write_fields");
  }
  return cfg;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

const char* s2_name(S2Scaling s) {
  return s == S2Scaling::InvEpsilon ? "inv_epsilon" : "unit";
}
const char* lame_name(LameKind k) {
  return k == LameKind::BdMatched ? "bd_matched" : "scaled";
}
const char* nu_policy_name(NuPolicyKind k) {
  switch (k) {
    case NuPolicyKind::Zero: return "zero";
    case NuPolicyKind::Fixed: return "fixed";
    case NuPolicyKind::Scaled: return "scaled";
  }
  return "zero";
}

}  // namespace

const char* mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::Relaxation: return "relaxation";
    case RunMode::WeakStrong: return "weakstrong";
    case RunMode::Checks: return "checks";
    case RunMode::SingleRun: return "single_run";
    case RunMode::GradientFlow: return "gradient_flow";
  }
  return "single_run";
}

void StudyConfig::validate_and_resolve() {
  auto bad = [](const std::string& field, const std::string& msg) {
    throw ConfigError("config: field '" + field + "': " + msg);
  };
  if (!is_power_of_two(grid_n) || grid_n < 16)
    bad("grid.n", "must be a power of two >= 16");
  if (!(t_end > 0.0)) bad("time.t_end", "must be positive");
  if (!(sample_every > 0.0) || sample_every > t_end)
    bad("time.sample_every", "must lie in (0, t_end]");
  {
    const double k = std::round(t_end / sample_every);
    if (k < 1.0 || std::abs(k * sample_every - t_end) > 1e-9 * t_end)
      bad("time.sample_every", "must divide t_end");
  }
  if (!(cfl_number > 0.0) || cfl_number > 1.0)
    bad("time.cfl_number", "must lie in (0, 1]");
  if (dt_fixed < 0.0) bad("time.dt", "must be nonnegative (0 = adaptive)");
  if (max_steps <= 0) bad("time.max_steps", "must be positive");
  if (!(init.mean > 0.0)) bad("init.mean", "must be positive");
  if (bump_amplitude_rel < 0.0) bad("bump.amplitude_rel", "must be nonnegative");
  if (output_dir.empty()) bad("output.directory", "must be nonempty");

  if (bump_amplitude_rel > 0.0) {
    const double thresh = find_bump_threshold(params);
    if (!std::isfinite(thresh))
      bad("bump.amplitude_rel",
          "no finite amplitude makes the pressure non-monotone here");
    params.bump.amplitude = bump_amplitude_rel * thresh;
  }

  try {
    params.validate();
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("config: physics: ") + ex.what());
  }

  if (mode == RunMode::Relaxation) {
    if (epsilon_list.size() < 2)
      bad("sweep.epsilon_list", "need at least two entries for a rate fit");
    for (std::size_t i = 0; i < epsilon_list.size(); ++i) {
      if (!(epsilon_list[i] > 0.0)) bad("sweep.epsilon_list", "entries must be positive");
      if (i > 0 && epsilon_list[i] >= epsilon_list[i - 1])
        bad("sweep.epsilon_list", "must be strictly decreasing");
    }
    try {
      params.validate(StudyMode::Relaxation);
    } catch (const std::exception& ex) {
      throw ConfigError(std::string("config: physics: ") + ex.what());
    }
  }
  if (mode == RunMode::WeakStrong) {
    if (!(perturbation.delta > 0.0)) bad("perturbation.delta", "must be positive");
    if (perturbation.mode_number < 1) bad("perturbation.mode_number", "must be >= 1");
    Params ws = params;
    ws.epsilon = 1.0;
    ws.nu = nu_policy.nu_for(1.0);
    try {
      ws.validate(StudyMode::WeakStrong);
    } catch (const std::exception& ex) {
      throw ConfigError(std::string("config: physics: ") + ex.what());
    }
  }
  if (mode == RunMode::Checks) {
    if (!(checks.lo > 0.0)) bad("checks.lo", "must be positive");
    if (checks.hi < checks.lo) bad("checks.hi", "must be >= checks.lo");
    if (checks.grid_n < 2) bad("checks.grid_n", "must be >= 2");
    if (checks.n_samples < 0) bad("checks.n_samples", "must be nonnegative");
  }
}

StudyConfig parse_config_text(const std::string& text, bool as_json,
                              const std::string& source_name) {
  json j;
  if (as_json) {
    try {
      j = json::parse(text);
    } catch (const json::parse_error& ex) {
      throw ConfigError(source_name + ": " + ex.what());
    }
  } else {
    j = toml_to_json(text, source_name);
  }
  return from_json(j, source_name);
}

StudyConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  bool as_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  if (!as_json) {
    for (char c : text) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      as_json = (c == '{');
      break;
    }
  }
  return parse_config_text(text, as_json, path);
}

std::string resolved_config_json(const StudyConfig& cfg) {
  json j;
  j["mode"] = mode_name(cfg.mode);
  j["seed"] = cfg.seed;
  j["grid"] = {{"n", cfg.grid_n}, {"length", cfg.params.domain_length}};
  j["physics"] = {{"gamma", cfg.params.gamma},
                  {"s", cfg.params.s},
                  {"epsilon", cfg.params.epsilon},
                  {"nu", cfg.params.nu},
                  {"rho_floor", cfg.params.rho_floor},
                  {"friction", cfg.params.friction},
                  {"s2_scaling", s2_name(cfg.params.s2_scaling)},
                  {"lame", lame_name(cfg.params.lame.kind)},
                  {"lame_alpha", cfg.params.lame.alpha}};
  j["bump"] = {{"amplitude", cfg.params.bump.amplitude},
               {"amplitude_rel", cfg.bump_amplitude_rel},
               {"center", cfg.params.bump.center},
               {"halfwidth", cfg.params.bump.halfwidth}};
  j["time"] = {{"t_end", cfg.t_end},
               {"sample_every", cfg.sample_every},
               {"cfl_number", cfg.cfl_number},
               {"dt", cfg.dt_fixed},
               {"max_steps", cfg.max_steps}};
  j["init"] = {{"mean", cfg.init.mean},
               {"cos_amps", cfg.init.cos_amps},
               {"sin_amps", cfg.init.sin_amps}};
  j["sweep"] = {{"epsilon_list", cfg.epsilon_list},
                {"nu_policy", nu_policy_name(cfg.nu_policy.kind)},
                {"nu_value", cfg.nu_policy.value}};
  j["perturbation"] = {{"delta", cfg.perturbation.delta},
                       {"mode_number", cfg.perturbation.mode_number}};
  j["checks"] = {{"lo", cfg.checks.lo},
                 {"hi", cfg.checks.hi},
                 {"grid_n", cfg.checks.grid_n},
                 {"n_samples", cfg.checks.n_samples}};
  j["output"] = {{"directory", cfg.output_dir},
                 {"emit_plot_data", cfg.emit_plot_data},
                 {"write_fields", cfg.write_fields}};
  return j.dump(2);
}

}  // namespace nsk
