#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dgm/triangle.hpp"

namespace dgm {

// Flat `key = value` configuration files; '#' starts a comment. CLI flags
// override file values, so every reader takes an already-merged map.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_config(std::istream& in) {
  KeyValues kv;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw input_error("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw input_error("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

inline KeyValues load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open config '" + path + "'");
  return parse_config(in);
}

inline std::string get_string(const KeyValues& kv, const std::string& key,
                              const std::string& fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

inline double get_double(const KeyValues& kv, const std::string& key, double fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : detail::parse_double(it->second, key);
}

inline long get_long(const KeyValues& kv, const std::string& key, long fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : detail::parse_long(it->second, key);
}

inline bool get_bool(const KeyValues& kv, const std::string& key, bool fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  throw input_error("config key '" + key + "': expected a boolean, got '" + it->second + "'");
}

inline std::vector<double> get_double_list(const KeyValues& kv, const std::string& key,
                                           const std::vector<double>& fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(detail::parse_double(detail::trim(tok), key));
  if (out.empty()) throw input_error("config key '" + key + "': empty list");
  return out;
}

inline std::vector<int> get_int_list(const KeyValues& kv, const std::string& key,
                                     const std::vector<int>& fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::vector<int> out;
  std::stringstream ss(it->second);
  std::string tok;
  while (std::getline(ss, tok, ','))
    out.push_back(static_cast<int>(detail::parse_long(detail::trim(tok), key)));
  if (out.empty()) throw input_error("config key '" + key + "': empty list");
  return out;
}

inline ModelSpec model_spec_from(const KeyValues& kv) {
  ModelSpec spec;
  spec.p = static_cast<int>(get_long(kv, "model.p", spec.p));
  spec.a_alpha0 = get_double(kv, "model.a_alpha0", spec.a_alpha0);
  spec.b_alpha0 = get_double(kv, "model.b_alpha0", spec.b_alpha0);
  spec.a_beta0 = get_double(kv, "model.a_beta0", spec.a_beta0);
  spec.b_beta0 = get_double(kv, "model.b_beta0", spec.b_beta0);
  spec.a_gamma0 = get_double(kv, "model.a_gamma0", spec.a_gamma0);
  spec.b_gamma0 = get_double(kv, "model.b_gamma0", spec.b_gamma0);
  spec.zero_floor = get_double(kv, "model.zero_floor", spec.zero_floor);
  spec.transform.enabled = get_bool(kv, "transform.enabled", spec.transform.enabled);
  spec.transform.divisor = get_double(kv, "transform.divisor", spec.transform.divisor);
  spec.transform.power = get_double(kv, "transform.power", spec.transform.power);
  return spec;
}

inline RunConfig run_config_from(const KeyValues& kv) {
  RunConfig run;
  run.chains = static_cast<int>(get_long(kv, "run.chains", run.chains));
  run.burn_in = get_long(kv, "run.burn_in", run.burn_in);
  run.keep = get_long(kv, "run.keep", run.keep);
  run.thin = static_cast<int>(get_long(kv, "run.thin", run.thin));
  run.seed = static_cast<std::uint64_t>(get_long(kv, "run.seed", static_cast<long>(run.seed)));
  run.slice_width = get_double(kv, "run.slice_width", run.slice_width);
  run.tail_tol = get_double(kv, "run.tail_tol", run.tail_tol);
  run.threads = static_cast<int>(get_long(kv, "run.threads", run.threads));
  return run;
}

inline CsvSchema schema_from(const KeyValues& kv) {
  CsvSchema s;
  s.business = get_string(kv, "csv.business", s.business);
  s.origin = get_string(kv, "csv.origin", s.origin);
  s.dev = get_string(kv, "csv.dev", s.dev);
  s.value = get_string(kv, "csv.value", s.value);
  return s;
}

}  // namespace dgm
