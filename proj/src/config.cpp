#include "fairaug/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "fairaug/format.hpp"
#include "fairaug/policies.hpp"

namespace fairaug {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Field {
  std::function<bool(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
bool parse_int(const std::string& text, T& out) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_bool(const std::string& text, bool& out) {
  if (text == "true" || text == "1" || text == "yes") return out = true, true;
  if (text == "false" || text == "0" || text == "no") return out = false, true;
  return false;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

Field real(double RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& v) {
            const auto d = parse_double(v);
            if (d) c.*member = *d;
            return d.has_value();
          },
          [member](const RunConfig& c) { return format_double(c.*member); }};
}

template <class Section, class T>
Field nested(Section RunConfig::*section, T Section::*member) {
  return {[section, member](RunConfig& c, const std::string& v) {
            T& slot = c.*section.*member;
            if constexpr (std::is_same_v<T, double>) {
              const auto d = parse_double(v);
              if (d) slot = *d;
              return d.has_value();
            } else if constexpr (std::is_same_v<T, bool>) {
              return parse_bool(v, slot);
            } else {
              return parse_int(v, slot);
            }
          },
          [section, member](const RunConfig& c) {
            const T& slot = c.*section.*member;
            if constexpr (std::is_same_v<T, double>) {
              return format_double(slot);
            } else if constexpr (std::is_same_v<T, bool>) {
              return std::string(slot ? "true" : "false");
            } else {
              return std::to_string(slot);
            }
          }};
}

const std::map<std::string, std::map<std::string, Field>>& schema() {
  static const std::map<std::string, std::map<std::string, Field>> fields = [] {
    std::map<std::string, std::map<std::string, Field>> s;
    auto path_field = [](std::filesystem::path RunConfig::*member) {
      return Field{[member](RunConfig& c, const std::string& v) {
                     c.*member = v;
                     return true;
                   },
                   [member](const RunConfig& c) { return (c.*member).string(); }};
    };
    s["data"]["interactions"] = path_field(&RunConfig::interactions);
    s["data"]["attributes"] = path_field(&RunConfig::attributes);

    s["model"]["dim"] = nested(&RunConfig::model, &TrainConfig::dim);
    s["model"]["layers"] = nested(&RunConfig::model, &TrainConfig::layers);
    s["model"]["learning_rate"] = nested(&RunConfig::model, &TrainConfig::learning_rate);
    s["model"]["epochs"] = nested(&RunConfig::model, &TrainConfig::epochs);
    s["model"]["reg"] = nested(&RunConfig::model, &TrainConfig::reg);
    s["model"]["batch_size"] = nested(&RunConfig::model, &TrainConfig::batch_size);

    s["augment"]["learning_rate"] = nested(&RunConfig::augment, &AugmentConfig::learning_rate);
    s["augment"]["max_epochs"] = nested(&RunConfig::augment, &AugmentConfig::max_epochs);
    s["augment"]["beta"] = nested(&RunConfig::augment, &AugmentConfig::beta);
    s["augment"]["temperature"] = nested(&RunConfig::augment, &AugmentConfig::temperature);
    s["augment"]["soft_cutoff"] = nested(&RunConfig::augment, &AugmentConfig::soft_cutoff);
    s["augment"]["distance_gradient"] = nested(&RunConfig::augment, &AugmentConfig::distance_gradient);
    s["augment"]["advantaged_gradient"] = nested(&RunConfig::augment, &AugmentConfig::advantaged_gradient);
    s["augment"]["fairness_target"] = Field{
        [](RunConfig& c, const std::string& v) {
          if (v == "none") {
            c.augment.fairness_target.reset();
            return true;
          }
          const auto d = parse_double(v);
          if (d) c.augment.fairness_target = *d;
          return d.has_value();
        },
        [](const RunConfig& c) {
          return c.augment.fairness_target ? format_double(*c.augment.fairness_target) : std::string("none");
        }};
    s["augment"]["psi_u"] = real(&RunConfig::psi_u);
    s["augment"]["psi_i"] = real(&RunConfig::psi_i);

    s["run"]["out"] = path_field(&RunConfig::out);
    s["run"]["seed"] = Field{[](RunConfig& c, const std::string& v) { return parse_int(v, c.seed); },
                             [](const RunConfig& c) { return std::to_string(c.seed); }};
    s["run"]["k"] = Field{[](RunConfig& c, const std::string& v) { return parse_int(v, c.k); },
                          [](const RunConfig& c) { return std::to_string(c.k); }};
    s["run"]["jobs"] = Field{[](RunConfig& c, const std::string& v) { return parse_int(v, c.jobs); },
                             [](const RunConfig& c) { return std::to_string(c.jobs); }};
    s["run"]["policy"] = Field{[](RunConfig& c, const std::string& v) {
                                 c.policy = v;
                                 return !v.empty();
                               },
                               [](const RunConfig& c) { return c.policy; }};
    s["run"]["policies"] = Field{[](RunConfig& c, const std::string& v) {
                                   c.policies = split_list(v);
                                   return !c.policies.empty();
                                 },
                                 [](const RunConfig& c) {
                                   std::string out;
                                   for (const auto& p : c.policies) out += (out.empty() ? "" : ",") + p;
                                   return out;
                                 }};
    s["run"]["mode"] = Field{[](RunConfig& c, const std::string& v) {
                               try {
                                 c.mode = parse_evaluation_mode(v);
                                 return true;
                               } catch (const Error&) {
                                 return false;
                               }
                             },
                             [](const RunConfig& c) { return to_string(c.mode); }};
    s["run"]["setting"] = Field{[](RunConfig& c, const std::string& v) {
                                  c.setting = v;
                                  return !v.empty() && v.find_first_of(" \t") == std::string::npos;
                                },
                                [](const RunConfig& c) { return c.setting; }};
    return s;
  }();
  return fields;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source,
                       const std::filesystem::path& base, RunConfig defaults) {
  RunConfig config = std::move(defaults);
  const auto& fields = schema();
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::set<std::string> seen;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#' || body[0] == ';') continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ParseError(source, number, "unterminated section header");
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      if (!fields.contains(section)) throw ParseError(source, number, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(source, number, "expected key = value");
    if (section.empty()) throw ParseError(source, number, "key outside of a section");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto& keys = fields.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ParseError(source, number, "unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(section + "." + key).second) {
      throw ParseError(source, number, "repeated key '" + key + "' in [" + section + "]");
    }
    if (!it->second.set(config, value)) {
      throw ParseError(source, number, "bad value '" + value + "' for " + section + "." + key);
    }
  }
  // Only paths written in this file are relative to it.
  const std::pair<const char*, std::filesystem::path*> paths[] = {
      {"data.interactions", &config.interactions}, {"data.attributes", &config.attributes}, {"run.out", &config.out}};
  for (const auto& [key, p] : paths) {
    if (!base.empty() && seen.contains(key) && !p->empty() && p->is_relative()) *p = base / *p;
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig defaults) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string(), path.parent_path(), std::move(defaults));
}

void resolve(RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(c.k >= 1, "run.k must be >= 1");
  require(c.jobs >= 1, "run.jobs must be >= 1");
  require(!c.out.empty(), "run.out must be set");
  require(c.model.dim >= 1 && c.model.layers >= 0, "model.dim >= 1 and model.layers >= 0");
  require(c.model.learning_rate > 0 && c.model.epochs >= 0 && c.model.reg >= 0 && c.model.batch_size >= 1,
          "model.learning_rate > 0, model.epochs >= 0, model.reg >= 0, model.batch_size >= 1");
  require(c.augment.learning_rate > 0 && c.augment.max_epochs >= 0, "augment.learning_rate > 0, augment.max_epochs >= 0");
  require(c.augment.beta >= 0 && c.augment.temperature > 0, "augment.beta >= 0 and augment.temperature > 0");
  require(!c.augment.fairness_target || *c.augment.fairness_target >= 0, "augment.fairness_target >= 0");
  require(c.psi_u > 0 && c.psi_u <= 1 && c.psi_i > 0 && c.psi_i <= 1, "augment.psi_u and augment.psi_i in (0, 1]");
  auto check_policy = [](const std::string& name) {
    try {
      parse_policy(name);
    } catch (const ContractError& e) {
      throw ConfigError(std::string("invalid config: ") + e.what());
    }
  };
  check_policy(c.policy);
  for (const auto& name : c.policies) check_policy(name);
  c.model.seed = c.seed;
  c.model.k = c.k;
  c.augment.k = c.k;
}

std::string format_config(const RunConfig& config) {
  std::string out;
  bool first = true;
  for (const char* section : {"data", "model", "augment", "run"}) {
    out += first ? "" : "\n";
    first = false;
    out += "[" + std::string(section) + "]\n";
    for (const auto& [key, field] : schema().at(section)) out += key + " = " + field.get(config) + "\n";
  }
  return out;
}

}  // namespace fairaug
