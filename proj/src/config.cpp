#include "balent/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "balent/errors.hpp"

namespace balent {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Field {
  std::function<void(ALConfig&, std::string_view, std::string_view, std::size_t)> set;
  std::function<std::string(const ALConfig&)> get;
};

long long to_integer(std::string_view key, std::string_view v, std::size_t line) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("expected an integer, got '" + std::string(v) + "'", std::string(key), line);
  return out;
}

std::uint64_t to_unsigned(std::string_view key, std::string_view v, std::size_t line) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("expected an unsigned integer, got '" + std::string(v) + "'", std::string(key), line);
  return out;
}

double to_real(std::string_view key, std::string_view v, std::size_t line) {
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out)) {
    throw ConfigError("expected a finite number, got '" + s + "'", std::string(key), line);
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v, std::size_t line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + std::string(v) + "'", std::string(key), line);
}

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

#define BALENT_INT(member)                                                                              \
  Field {                                                                                               \
    [](ALConfig& c, std::string_view k, std::string_view v, std::size_t l) { c.member = to_integer(k, v, l); }, \
        [](const ALConfig& c) { return std::to_string(c.member); }                                     \
  }
#define BALENT_REAL(member)                                                                             \
  Field {                                                                                               \
    [](ALConfig& c, std::string_view k, std::string_view v, std::size_t l) { c.member = to_real(k, v, l); }, \
        [](const ALConfig& c) { return real_text(c.member); }                                          \
  }

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"images", BALENT_INT(data.num_images)},
      {"height", BALENT_INT(data.height)},
      {"width", BALENT_INT(data.width)},
      {"classes", BALENT_INT(data.num_classes)},
      {"feature_dim", BALENT_INT(data.feature_dim)},
      {"blob_scale", BALENT_REAL(data.blob_scale)},
      {"noise_sigma", BALENT_REAL(data.noise_sigma)},
      {"class_skew", BALENT_REAL(data.class_skew)},
      {"data_seed",
       {[](ALConfig& c, std::string_view k, std::string_view v, std::size_t l) { c.data.seed = to_unsigned(k, v, l); },
        [](const ALConfig& c) { return std::to_string(c.data.seed); }}},
      {"val_fraction", BALENT_REAL(val_fraction)},
      {"acquisition",
       {[](ALConfig& c, std::string_view k, std::string_view v, std::size_t l) {
          try {
            c.acquisition.kind = parse_acquisition_kind(v);
          } catch (const ValidationError& e) {
            throw ConfigError(e.what(), std::string(k), l);
          }
        },
        [](const ALConfig& c) { return std::string(to_string(c.acquisition.kind)); }}},
      {"n", BALENT_INT(acquisition.n)},
      {"gamma", BALENT_REAL(acquisition.gamma)},
      {"pool_factor", BALENT_INT(acquisition.margin_pool_factor)},
      {"seed",
       {[](ALConfig& c, std::string_view k, std::string_view v, std::size_t l) {
          c.acquisition.seed = to_unsigned(k, v, l);
        },
        [](const ALConfig& c) { return std::to_string(c.acquisition.seed); }}},
      {"eps_zero", BALENT_REAL(acquisition.eps_zero)},
      {"eps_log", BALENT_REAL(acquisition.eps_log)},
      {"m", BALENT_INT(mc_samples)},
      {"dropout", BALENT_REAL(dropout)},
      {"hidden", BALENT_INT(hidden)},
      {"cycles", BALENT_INT(cycles)},
      {"epochs", BALENT_INT(train.epochs)},
      {"learning_rate", BALENT_REAL(train.learning_rate)},
      {"batch_size", BALENT_INT(train.batch_size)},
      {"lr_decay", BALENT_REAL(train.decay)},
      {"eps_mean", BALENT_REAL(uncertainty.fit.eps_mean)},
      {"eps_var", BALENT_REAL(uncertainty.fit.eps_var)},
      {"eps_var_rel", BALENT_REAL(uncertainty.fit.eps_var_rel)},
      {"warm_start",
       {[](ALConfig& c, std::string_view k, std::string_view v, std::size_t l) { c.warm_start = to_bool(k, v, l); },
        [](const ALConfig& c) { return std::string(c.warm_start ? "true" : "false"); }}},
  };
  return table;
}

#undef BALENT_INT
#undef BALENT_REAL

}  // namespace

void apply_config_value(ALConfig& cfg, std::string_view key, std::string_view value, std::size_t line) {
  const auto& table = fields();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key", std::string(key), line);
  it->second.set(cfg, key, value, line);
}

ALConfig parse_config(std::istream& in) {
  ALConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", std::string(text), line);
    const auto key = trim(text.substr(0, eq));
    const auto value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", "", line);
    if (!seen.emplace(key).second) throw ConfigError("duplicate key", std::string(key), line);
    apply_config_value(cfg, key, value, line);
  }
  cfg.validate();
  return cfg;
}

ALConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config", path.string());
  return parse_config(in);
}

std::string render_config(const ALConfig& cfg) {
  std::ostringstream out;
  for (const auto& [key, field] : fields()) out << key << " = " << field.get(cfg) << '\n';
  return out.str();
}

}  // namespace balent
