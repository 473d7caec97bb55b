#include "robust_huber/config.hpp"

#include "robust_huber/common.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rh {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

double parse_number(const std::string& text, const std::string& context) {
  std::string t = trim(text);
  if (t.empty()) throw ConfigError(context + ": empty value");
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE) throw ConfigError(context + ": not a number: '" + t + "'");
  return v;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string line, current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) throw ConfigError(where + ": empty section name");
      c.sections_[current];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (c.sections_[current].count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    c.sections_[current][key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

bool Config::has(const std::string& s, const std::string& k) const {
  auto it = sections_.find(s);
  return it != sections_.end() && it->second.count(k);
}

std::string Config::get(const std::string& s, const std::string& k) const {
  if (!has(s, k)) throw ConfigError(origin_ + ": missing [" + s + "] " + k);
  return sections_.at(s).at(k);
}

std::string Config::get(const std::string& s, const std::string& k, const std::string& fallback) const {
  return has(s, k) ? sections_.at(s).at(k) : fallback;
}

double Config::get_double(const std::string& s, const std::string& k) const {
  return parse_number(get(s, k), origin_ + ": [" + s + "] " + k);
}

double Config::get_double(const std::string& s, const std::string& k, double fallback) const {
  return has(s, k) ? get_double(s, k) : fallback;
}

long long Config::get_int(const std::string& s, const std::string& k, long long fallback) const {
  if (!has(s, k)) return fallback;
  double v = get_double(s, k);
  if (v != static_cast<double>(static_cast<long long>(v)))
    throw ConfigError(origin_ + ": [" + s + "] " + k + " must be an integer");
  return static_cast<long long>(v);
}

std::vector<double> Config::get_list(const std::string& s, const std::string& k) const {
  std::vector<double> out;
  std::istringstream in(get(s, k));
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number(item, origin_ + ": [" + s + "] " + k));
  return out;
}

const std::map<std::string, std::string>& Config::section(const std::string& name) const {
  static const std::map<std::string, std::string> empty;
  auto it = sections_.find(name);
  return it == sections_.end() ? empty : it->second;
}

void Config::set(const std::string& s, const std::string& k, const std::string& v) { sections_[s][k] = v; }

}  // namespace rh
