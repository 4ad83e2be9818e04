#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "nldpe/codes.hpp"
#include "nldpe/costmodel.hpp"
#include "nldpe/naf.hpp"
#include "nldpe/noise.hpp"

namespace nldpe {

/// TOML-style sectioned key/value config: [section] headers, key = value
/// lines, '#' comments. Values are numbers, booleans or strings.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

QuantSpec quant_from_config(const Config& c, const std::string& section = "quant");
NoiseSpec noise_from_config(const Config& c, const std::string& section = "noise");
NafConfig naf_from_config(const Config& c, const std::string& section = "naf");
ComponentCosts costs_from_config(const Config& c);  // [costs.<name>] sections

std::string quant_to_config(const QuantSpec& q, const std::string& section = "quant");
std::string noise_to_config(const NoiseSpec& n, const std::string& section = "noise");

}  // namespace nldpe
