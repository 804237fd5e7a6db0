#include <fstream>
#include <iterator>
#include <sstream>

#include "saltrk/tracker.hpp"

namespace saltrk {

void TrackerConfig::validate() const {
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (!(label_threshold > 0.0 && label_threshold < 1.0)) throw ConfigError("label_threshold must be in (0, 1)");
  if (filter_memory < 1) throw ConfigError("filter_memory must be >= 1");
  if (!(svm_C > 0.0)) throw ConfigError("svm_C must be positive");
  if (sv_budget < 1) throw ConfigError("sv_budget must be >= 1");
  if (!(sigma_min > 0.0)) throw ConfigError("sigma_min must be positive");
  if (!(likelihood_floor > 0.0)) throw ConfigError("likelihood_floor must be positive");
  if (sample_std_scale < 0.0) throw ConfigError("sample_std_scale must be >= 0");
}

namespace {

std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  if (!(in >> out) || !(in >> std::ws).eof()) throw ConfigError("config: bad value for " + key + ": '" + value + "'");
  return out;
}

}  // namespace

TrackerConfig parse_config(const std::string& text, TrackerConfig cfg) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "n_samples") cfg.n_samples = parse_value<int>(key, value);
    else if (key == "label_threshold") cfg.label_threshold = parse_value<double>(key, value);
    else if (key == "filter_memory") cfg.filter_memory = parse_value<int>(key, value);
    else if (key == "svm_C") cfg.svm_C = parse_value<double>(key, value);
    else if (key == "sv_budget") cfg.sv_budget = parse_value<std::size_t>(key, value);
    else if (key == "sigma_min") cfg.sigma_min = parse_value<double>(key, value);
    else if (key == "likelihood_floor") cfg.likelihood_floor = parse_value<double>(key, value);
    else if (key == "rng_seed") cfg.rng_seed = parse_value<std::uint64_t>(key, value);
    else if (key == "sample_std_scale") cfg.sample_std_scale = parse_value<double>(key, value);
    else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

TrackerConfig load_config(const std::filesystem::path& path, TrackerConfig base) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config " + path.string());
  return parse_config({std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()}, base);
}

}  // namespace saltrk
