#include "nldpe/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nldpe {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config: bad section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.empty())
      throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  auto it = sections_.find(section);
  if (it == sections_.end()) return fallback;
  auto kv = it->second.find(key);
  return kv == it->second.end() ? fallback : kv->second;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  return std::stod(get_string(section, key, ""));
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  return std::stoi(get_string(section, key, ""));
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  return std::stoull(get_string(section, key, ""));
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: bad boolean for " + section + "." + key);
}

QuantSpec quant_from_config(const Config& c, const std::string& section) {
  QuantSpec q;
  q.in_lo = c.get_double(section, "in_lo", q.in_lo);
  q.in_hi = c.get_double(section, "in_hi", q.in_hi);
  q.out_lo = c.get_double(section, "out_lo", q.out_lo);
  q.out_hi = c.get_double(section, "out_hi", q.out_hi);
  q.n_bits = c.get_int(section, "n_bits", q.n_bits);
  q.encoding = encoding_from_string(c.get_string(section, "encoding", "gray"));
  q.validate();
  return q;
}

NoiseSpec noise_from_config(const Config& c, const std::string& section) {
  NoiseSpec n = default_noise_spec();
  n.prog.a = c.get_double(section, "prog_a", n.prog.a);
  n.prog.b = c.get_double(section, "prog_b", n.prog.b);
  n.prog.c = c.get_double(section, "prog_c", n.prog.c);
  n.fluct.a = c.get_double(section, "fluct_a", n.fluct.a);
  n.fluct.b = c.get_double(section, "fluct_b", n.fluct.b);
  n.fluct.c = c.get_double(section, "fluct_c", n.fluct.c);
  n.acam_transfer.a = c.get_double(section, "acam_a", n.acam_transfer.a);
  n.acam_transfer.b = c.get_double(section, "acam_b", n.acam_transfer.b);
  n.acam_transfer.c = c.get_double(section, "acam_c", n.acam_transfer.c);
  n.seed = c.get_u64(section, "seed", n.seed);
  n.scale = c.get_double(section, "scale", n.scale);
  n.validate();
  return n;
}

NafConfig naf_from_config(const Config& c, const std::string& section) {
  NafConfig n;
  n.epochs = c.get_int(section, "epochs", n.epochs);
  n.batch = c.get_int(section, "batch", n.batch);
  n.step_size = c.get_double(section, "step_size", n.step_size);
  n.lambda1 = c.get_double(section, "lambda1", n.lambda1);
  n.lambda2 = c.get_double(section, "lambda2", n.lambda2);
  n.samples_per_dt = c.get_int(section, "samples_per_dt", n.samples_per_dt);
  n.seed = c.get_u64(section, "seed", n.seed);
  n.validate();
  return n;
}

ComponentCosts costs_from_config(const Config& c) {
  ComponentCosts costs = default_component_costs();
  for (auto& comp : costs.components) {
    const std::string section = "costs." + comp.name;
    comp.power_mw = c.get_double(section, "power_mw", comp.power_mw);
    comp.area_mm2 = c.get_double(section, "area_mm2", comp.area_mm2);
    comp.energy_per_event_pj =
        c.get_double(section, "energy_per_event_pj", comp.energy_per_event_pj);
  }
  costs.validate();
  return costs;
}

namespace {
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string quant_to_config(const QuantSpec& q, const std::string& section) {
  std::ostringstream os;
  os << '[' << section << "]\n";
  os << "in_lo = " << num(q.in_lo) << "\nin_hi = " << num(q.in_hi) << '\n';
  os << "out_lo = " << num(q.out_lo) << "\nout_hi = " << num(q.out_hi) << '\n';
  os << "n_bits = " << q.n_bits << "\nencoding = \"" << to_string(q.encoding) << "\"\n";
  return os.str();
}

std::string noise_to_config(const NoiseSpec& n, const std::string& section) {
  std::ostringstream os;
  os << '[' << section << "]\n";
  os << "prog_a = " << num(n.prog.a) << "\nprog_b = " << num(n.prog.b) << "\nprog_c = "
     << num(n.prog.c) << '\n';
  os << "fluct_a = " << num(n.fluct.a) << "\nfluct_b = " << num(n.fluct.b) << "\nfluct_c = "
     << num(n.fluct.c) << '\n';
  os << "acam_a = " << num(n.acam_transfer.a) << "\nacam_b = " << num(n.acam_transfer.b)
     << "\nacam_c = " << num(n.acam_transfer.c) << '\n';
  os << "seed = " << n.seed << "\nscale = " << num(n.scale) << '\n';
  return os.str();
}

}  // namespace nldpe
