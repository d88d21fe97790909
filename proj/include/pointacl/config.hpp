#ifndef POINTACL_CONFIG_HPP
#define POINTACL_CONFIG_HPP

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pointacl/dataio.hpp"
#include "pointacl/pipeline.hpp"

namespace pointacl {

/// Ordered key/value pairs from a flat "key = value" text file.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Parses "key = value" lines; '#' starts a comment, blank lines are ignored.
inline ConfigEntries parse_config(std::istream& in) {
  ConfigEntries out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string_view key = detail::trim(t.substr(0, eq)), value = detail::trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError("missing key", lineno);
    out.emplace_back(std::string(key), std::string(value));
  }
  return out;
}

inline ConfigEntries parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  double d = 0.0;
  if (!parse_number(v, d) || !std::isfinite(d)) throw ConfigError(key, "expected a number, got '" + v + "'");
  return d;
}

inline std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  std::uint64_t u = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), u);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  return u;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

struct ConfigKey {
  const char* name;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

inline ConfigKey real_key(const char* name, double TrainConfig::*m) {
  return {name, [=](TrainConfig& c, const std::string& v) { c.*m = to_double(name, v); },
          [=](const TrainConfig& c) { return format_double(c.*m); }};
}

template <class Get>
ConfigKey real_key(const char* name, Get get) {
  return {name, [=](TrainConfig& c, const std::string& v) { get(c) = to_double(name, v); },
          [=](const TrainConfig& c) { return format_double(get(c)); }};
}

template <class Get>
ConfigKey count_key(const char* name, Get get) {
  return {name, [=](TrainConfig& c, const std::string& v) { get(c) = static_cast<std::size_t>(to_unsigned(name, v)); },
          [=](const TrainConfig& c) { return std::to_string(get(c)); }};
}

template <class Get>
ConfigKey bool_key(const char* name, Get get) {
  return {name, [=](TrainConfig& c, const std::string& v) { get(c) = to_bool(name, v); },
          [=](const TrainConfig& c) { return std::string(get(c) ? "true" : "false"); }};
}

inline const std::vector<ConfigKey>& config_keys() {
  using C = TrainConfig;
  static const std::vector<ConfigKey> keys = {
      real_key("alpha", &C::alpha),
      real_key("beta", &C::beta),
      real_key("temperature", &C::temperature),
      bool_key("adversarial_view", [](auto& c) -> auto& { return c.adversarial_view; }),
      bool_key("hd_view", [](auto& c) -> auto& { return c.hd_view; }),
      real_key("keep_fraction", &C::keep_fraction),
      real_key("r1", &C::r1),
      real_key("r2", &C::r2),
      count_key("epochs", [](auto& c) -> auto& { return c.epochs; }),
      count_key("batch_size", [](auto& c) -> auto& { return c.batch_size; }),
      real_key("learning_rate", &C::learning_rate),
      real_key("attack.epsilon", [](auto& c) -> auto& { return c.attack.epsilon; }),
      count_key("attack.steps", [](auto& c) -> auto& { return c.attack.steps; }),
      real_key("attack.step_size", [](auto& c) -> auto& { return c.attack.step_size; }),
      real_key("attack.init_scale", [](auto& c) -> auto& { return c.attack.init_scale; }),
      {"attack.representation",
       [](C& c, const std::string& v) {
         if (v == "h" || v == "unprojected") c.attack.representation = Representation::unprojected;
         else if (v == "z" || v == "projected") c.attack.representation = Representation::projected;
         else throw ConfigError("attack.representation", "expected h or z, got '" + v + "'");
       },
       [](const C& c) { return to_string(c.attack.representation); }},
      real_key("eval.epsilon", [](auto& c) -> auto& { return c.eval_attack.epsilon; }),
      count_key("eval.steps", [](auto& c) -> auto& { return c.eval_attack.steps; }),
      real_key("eval.step_size", [](auto& c) -> auto& { return c.eval_attack.step_size; }),
      real_key("eval.init_scale", [](auto& c) -> auto& { return c.eval_attack.init_scale; }),
      real_key("augment.rotation_deg", [](auto& c) -> auto& { return c.augment.rotation_deg; }),
      real_key("augment.translation", [](auto& c) -> auto& { return c.augment.translation; }),
      real_key("augment.scale_min", [](auto& c) -> auto& { return c.augment.scale_min; }),
      real_key("augment.scale_max", [](auto& c) -> auto& { return c.augment.scale_max; }),
      bool_key("augment.crop", [](auto& c) -> auto& { return c.augment.crop; }),
      real_key("augment.crop_volume_min", [](auto& c) -> auto& { return c.augment.crop_volume_min; }),
      real_key("augment.crop_volume_max", [](auto& c) -> auto& { return c.augment.crop_volume_max; }),
      real_key("augment.aspect_min", [](auto& c) -> auto& { return c.augment.aspect_min; }),
      real_key("augment.aspect_max", [](auto& c) -> auto& { return c.augment.aspect_max; }),
      bool_key("augment.cutout", [](auto& c) -> auto& { return c.augment.cutout; }),
      real_key("augment.cutout_min", [](auto& c) -> auto& { return c.augment.cutout_min; }),
      real_key("augment.cutout_max", [](auto& c) -> auto& { return c.augment.cutout_max; }),
      real_key("augment.jitter", [](auto& c) -> auto& { return c.augment.jitter; }),
      real_key("augment.dropout_max", [](auto& c) -> auto& { return c.augment.dropout_max; }),
      count_key("finetune_epochs", [](auto& c) -> auto& { return c.finetune_epochs; }),
      count_key("finetune_batch", [](auto& c) -> auto& { return c.finetune_batch; }),
      real_key("finetune_lr", &C::finetune_lr),
      count_key("aff_epochs", [](auto& c) -> auto& { return c.aff_epochs; }),
      real_key("aff_lr", &C::aff_lr),
      count_key("points", [](auto& c) -> auto& { return c.dims.points; }),
      count_key("hidden1", [](auto& c) -> auto& { return c.dims.hidden1; }),
      count_key("hidden2", [](auto& c) -> auto& { return c.dims.hidden2; }),
      count_key("features", [](auto& c) -> auto& { return c.dims.features; }),
      count_key("proj_hidden", [](auto& c) -> auto& { return c.dims.proj_hidden; }),
      count_key("proj", [](auto& c) -> auto& { return c.dims.proj; }),
      count_key("classes", [](auto& c) -> auto& { return c.dims.classes; }),
      {"seed", [](C& c, const std::string& v) { c.seed = to_unsigned("seed", v); },
       [](const C& c) { return std::to_string(c.seed); }},
  };
  return keys;
}

}  // namespace detail

/// True when `key` names a TrainConfig field.
inline bool is_config_key(std::string_view key) {
  for (const auto& k : detail::config_keys())
    if (key == k.name) return true;
  return false;
}

/// Sets one field; unknown keys and malformed values raise ConfigError naming the key.
inline void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : detail::config_keys())
    if (key == k.name) {
      k.set(cfg, value);
      return;
    }
  throw ConfigError(key, "unknown key");
}

/// Applies entries in order, then validates the result.
inline TrainConfig apply_config(TrainConfig cfg, const ConfigEntries& entries) {
  for (const auto& [k, v] : entries) set_config_value(cfg, k, v);
  cfg.validate();
  return cfg;
}

/// Every field as "key = value" lines; parse_config + apply_config reproduces cfg exactly.
inline std::string config_to_text(const TrainConfig& cfg) {
  std::string out;
  for (const auto& k : detail::config_keys()) out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace pointacl

#endif  // POINTACL_CONFIG_HPP
