#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "foresee/errors.hpp"

namespace foresee {

// Flat key=value text files: one pair per line, '#' comments, blank lines
// ignored. Used for synthetic-scene configs and run manifests.
struct KvFile {
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };
  std::vector<Entry> entries;
  std::string path;

  const Entry* find(const std::string& key) const {
    for (const auto& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }

  bool has(const std::string& key) const { return find(key) != nullptr; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const Entry* e = find(key);
    return e ? e->value : fallback;
  }

  double get_real(const std::string& key, double fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(e->value, &used);
      if (used != e->value.size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const std::exception&) {
      throw FormatError(path + ":" + std::to_string(e->line) + ": '" + e->value +
                        "' is not a number for key '" + key + "'");
    }
  }

  long get_int(const std::string& key, long fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    try {
      std::size_t used = 0;
      const long v = std::stol(e->value, &used);
      if (used != e->value.size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const std::exception&) {
      throw FormatError(path + ":" + std::to_string(e->line) + ": '" + e->value +
                        "' is not an integer for key '" + key + "'");
    }
  }
};

inline KvFile parse_kv_text(const std::string& text, const std::string& path) {
  KvFile out;
  out.path = path;
  std::string line;
  int line_no = 0;
  std::size_t at = 0;
  while (at <= text.size()) {
    const std::size_t nl = text.find('\n', at);
    line = text.substr(at, nl == std::string::npos ? std::string::npos : nl - at);
    at = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    // Trim trailing CR and surrounding whitespace.
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    const std::size_t eq = line.find('=', start);
    if (eq == std::string::npos)
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected key=value, got '" +
                        line + "'");
    std::string key = line.substr(start, eq - start);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::string value = line.substr(eq + 1);
    std::size_t vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? "" : value.substr(vstart);
    if (key.empty())
      throw FormatError(path + ":" + std::to_string(line_no) + ": empty key");
    out.entries.push_back({std::move(key), std::move(value), line_no});
  }
  return out;
}

inline KvFile parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open config file");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_kv_text(text, path);
}

inline std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Run manifest: written with status=running before the work starts and
// rewritten with status=ok once it finishes, so a run directory is
// self-describing and reproducible from the recorded config.
class RunManifest {
 public:
  RunManifest(std::string path, std::string command) : path_(std::move(path)) {
    set("command", std::move(command));
    set("started", iso8601_utc_now());
  }

  void set(const std::string& key, std::string value) {
    for (auto& [k, v] : pairs_)
      if (k == key) {
        v = std::move(value);
        return;
      }
    pairs_.emplace_back(key, std::move(value));
  }

  void set(const std::string& key, long value) { set(key, std::to_string(value)); }
  void set(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    set(key, std::string(buf));
  }

  void write_running() {
    set("status", "running");
    flush();
  }

  void finalize() {
    set("finished", iso8601_utc_now());
    set("status", "ok");
    flush();
  }

 private:
  void flush() {
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw FormatError(path_ + ": cannot write manifest");
    for (const auto& [k, v] : pairs_) out << k << "=" << v << "\n";
  }

  std::string path_;
  std::vector<std::pair<std::string, std::string>> pairs_;
};

}  // namespace foresee
