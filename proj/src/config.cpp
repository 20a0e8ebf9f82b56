#include "seqmatch/config.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "seqmatch/errors.hpp"

namespace seqmatch {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KvConfig KvConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), path.string());
}

KvConfig KvConfig::from_text(const std::string& text, const std::string& source) {
  KvConfig cfg;
  cfg.source_ = source;
  cfg.raw_ = text;

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source + " line " + std::to_string(lineno) +
                       ": expected key=value, got '" + stripped + "'");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(source + " line " + std::to_string(lineno) + ": empty key");
    }
    if (!cfg.values_.emplace(key, value).second) {
      throw ParseError(source + " line " + std::to_string(lineno) +
                       ": duplicate key '" + key + "'");
    }
  }
  return cfg;
}

bool KvConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(it->second, &pos);
  } catch (const std::exception&) {
    throw ArgumentError(source_ + ": key '" + key + "' has non-numeric value '" +
                        it->second + "'");
  }
  if (pos != it->second.size()) {
    throw ArgumentError(source_ + ": key '" + key + "' has non-numeric value '" +
                        it->second + "'");
  }
  return v;
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t pos = 0;
  std::uint64_t v;
  try {
    v = std::stoull(it->second, &pos);
  } catch (const std::exception&) {
    throw ArgumentError(source_ + ": key '" + key + "' must be a nonnegative integer, got '" +
                        it->second + "'");
  }
  if (pos != it->second.size()) {
    throw ArgumentError(source_ + ": key '" + key + "' must be a nonnegative integer, got '" +
                        it->second + "'");
  }
  return v;
}

std::size_t KvConfig::get_size(const std::string& key, std::size_t fallback) {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

std::vector<std::size_t> KvConfig::get_size_list(const std::string& key,
                                                 const std::vector<std::size_t>& fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<std::size_t> out;
  std::istringstream ss(it->second);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ArgumentError(source_ + ": key '" + key + "' has a bad list entry '" + tok + "'");
    }
  }
  if (out.empty()) {
    throw ArgumentError(source_ + ": key '" + key + "' must list at least one value");
  }
  return out;
}

void KvConfig::finish() const {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key)) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string joined;
    for (const std::string& k : unknown) {
      if (!joined.empty()) joined += ", ";
      joined += k;
    }
    throw ArgumentError(source_ + ": unknown key(s): " + joined);
  }
}

}  // namespace seqmatch
