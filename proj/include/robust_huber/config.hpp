#pragma once

#include <map>
#include <string>
#include <vector>

namespace rh {

// Flat "key = value" text with [section] headers; '#' starts a comment.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;

  const std::map<std::string, std::string>& section(const std::string& name) const;
  void set(const std::string& section, const std::string& key, const std::string& value);
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string origin_;
};

double parse_number(const std::string& text, const std::string& context);

}  // namespace rh
