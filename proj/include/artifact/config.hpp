#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace artifact {

// Command-line / config-file problems; the CLI maps these to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Provenance { Default, File, Flag };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Default: return "default";
    case Provenance::File: return "file";
    default: return "flag";
  }
}

// Flat option registry for one subcommand. Every value is stored as a
// string with its provenance; typed getters parse on access and name the
// field in their error. Precedence: flags over file over defaults.
class Options {
 public:
  // key is the dotted config-file name ("impair.crop_min"); flag is the
  // command-line spelling ("--crop-min"). A switch takes no value.
  void add(const std::string& key, const std::string& flag, const std::string& def,
           const std::string& help, bool is_switch = false, bool required = false) {
    if (by_key_.count(key)) throw std::logic_error("duplicate option key " + key);
    if (by_flag_.count(flag)) throw std::logic_error("duplicate option flag " + flag);
    Opt o;
    o.key = key;
    o.flag = flag;
    o.value = def;
    o.def = def;
    o.help = help;
    o.is_switch = is_switch;
    o.required = required;
    order_.push_back(key);
    by_key_.emplace(key, std::move(o));
    by_flag_.emplace(flag, key);
  }

  void apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#') continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      auto it = by_key_.find(key);
      if (it == by_key_.end())
        throw UsageError(path + ":" + std::to_string(line_no) + ": unknown config key '" + key +
                         "'");
      if (it->second.is_switch && !(value == "0" || value == "1"))
        throw UsageError(path + ":" + std::to_string(line_no) + ": switch '" + key +
                         "' takes 0 or 1");
      it->second.value = value;
      it->second.prov = Provenance::File;
    }
  }

  // args excludes the program and subcommand names. --config is handled
  // here with file-before-flag precedence regardless of its position.
  void parse_args(const std::vector<std::string>& args) {
    std::vector<std::string> files;
    std::vector<std::pair<std::string, std::string>> pending;  // flag, value
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string flag = args[i];
      std::string value;
      bool has_value = false;
      const std::size_t eq = flag.find('=');
      if (flag.rfind("--", 0) != 0) throw UsageError("unexpected argument '" + flag + "'");
      if (eq != std::string::npos) {
        value = flag.substr(eq + 1);
        flag = flag.substr(0, eq);
        has_value = true;
      }
      if (flag == "--config") {
        if (!has_value) {
          if (++i >= args.size()) throw UsageError("--config needs a file path");
          value = args[i];
        }
        files.push_back(value);
        continue;
      }
      const auto it = by_flag_.find(flag);
      if (it == by_flag_.end()) throw UsageError("unknown flag '" + flag + "'");
      Opt& o = by_key_.at(it->second);
      if (o.is_switch) {
        if (has_value) throw UsageError("flag '" + flag + "' takes no value");
        pending.emplace_back(flag, "1");
      } else {
        if (!has_value) {
          if (++i >= args.size()) throw UsageError("flag '" + flag + "' needs a value");
          value = args[i];
        }
        pending.emplace_back(flag, value);
      }
    }
    for (const auto& f : files) apply_file(f);
    for (const auto& [flag, value] : pending) {
      Opt& o = by_key_.at(by_flag_.at(flag));
      o.value = value;
      o.prov = Provenance::Flag;
    }
    for (const auto& key : order_) {
      const Opt& o = by_key_.at(key);
      if (o.required && o.prov == Provenance::Default && o.def.empty())
        throw UsageError("missing required flag '" + o.flag + "'");
    }
  }

  std::string get_str(const std::string& key) const { return opt(key).value; }

  long long get_int(const std::string& key) const {
    const Opt& o = opt(key);
    try {
      std::size_t used = 0;
      const long long v = std::stoll(o.value, &used);
      if (used != o.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw UsageError("field " + key + ": not an integer: '" + o.value + "'");
    }
  }

  std::uint64_t get_u64(const std::string& key) const {
    const Opt& o = opt(key);
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(o.value, &used);
      if (used != o.value.size() || o.value.empty() || o.value[0] == '-')
        throw std::invalid_argument("bad");
      return v;
    } catch (const std::exception&) {
      throw UsageError("field " + key + ": not an unsigned integer: '" + o.value + "'");
    }
  }

  double get_real(const std::string& key) const {
    const Opt& o = opt(key);
    try {
      std::size_t used = 0;
      const double v = std::stod(o.value, &used);
      if (used != o.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw UsageError("field " + key + ": not a number: '" + o.value + "'");
    }
  }

  bool get_switch(const std::string& key) const {
    const Opt& o = opt(key);
    if (o.value == "1") return true;
    if (o.value == "0" || o.value.empty()) return false;
    throw UsageError("field " + key + ": not a 0/1 switch: '" + o.value + "'");
  }

  std::vector<int> get_int_list(const std::string& key) const {
    const Opt& o = opt(key);
    std::vector<int> out;
    std::stringstream ss(o.value);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        out.push_back(std::stoi(trim(tok)));
      } catch (const std::exception&) {
        throw UsageError("field " + key + ": not an integer list: '" + o.value + "'");
      }
    }
    if (out.empty()) throw UsageError("field " + key + ": empty list");
    return out;
  }

  // "num/den" rational, e.g. 5/8
  std::pair<int, int> get_ratio(const std::string& key) const {
    const Opt& o = opt(key);
    const std::size_t slash = o.value.find('/');
    try {
      if (slash == std::string::npos) throw std::invalid_argument("no slash");
      const int num = std::stoi(o.value.substr(0, slash));
      const int den = std::stoi(o.value.substr(slash + 1));
      if (num <= 0 || den <= 0) throw std::invalid_argument("nonpositive");
      return {num, den};
    } catch (const std::exception&) {
      throw UsageError("field " + key + ": not a ratio like 5/8: '" + o.value + "'");
    }
  }

  Provenance provenance(const std::string& key) const { return opt(key).prov; }

  bool was_set(const std::string& key) const { return opt(key).prov != Provenance::Default; }

  // one line per option: key=value (provenance)
  std::vector<std::string> effective_lines() const {
    std::vector<std::string> lines;
    for (const auto& key : order_) {
      const Opt& o = by_key_.at(key);
      lines.push_back(key + "=" + o.value + " (" + to_string(o.prov) + ")");
    }
    return lines;
  }

  std::string help_text() const {
    std::string out;
    for (const auto& key : order_) {
      const Opt& o = by_key_.at(key);
      out += "  " + o.flag;
      if (!o.is_switch) out += " <v>";
      out += "\n        " + o.help;
      if (!o.def.empty()) out += " [default: " + o.def + "]";
      if (o.required) out += " (required)";
      out += "  (config key: " + o.key + ")\n";
    }
    return out;
  }

 private:
  struct Opt {
    std::string key, flag, value, def, help;
    bool is_switch = false;
    bool required = false;
    Provenance prov = Provenance::Default;
  };

  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
    return s.substr(a, b - a);
  }

  const Opt& opt(const std::string& key) const {
    const auto it = by_key_.find(key);
    if (it == by_key_.end()) throw std::logic_error("unregistered option key " + key);
    return it->second;
  }

  std::vector<std::string> order_;
  std::map<std::string, Opt> by_key_;
  std::map<std::string, std::string> by_flag_;
};

}  // namespace artifact
