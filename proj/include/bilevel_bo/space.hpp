// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef BILEVEL_BO_SPACE_HPP
#define BILEVEL_BO_SPACE_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "bilevel_bo/random.hpp"

namespace bbo {

class SpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParamKind { uniform, log_uniform, categorical };
enum class Level { inner, outer };
enum class LevelFilter { inner, outer, all };

/// A parameter value: a real, or a categorical atom (number or string).
using Atom = std::variant<double, std::string>;

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string to_string(const Atom& a) {
  if (const auto* d = std::get_if<double>(&a)) return format_double(*d);
  return std::get<std::string>(a);
}

inline std::string_view to_string(ParamKind k) {
  switch (k) {
    case ParamKind::uniform: return "uniform";
    case ParamKind::log_uniform: return "log-uniform";
    case ParamKind::categorical: return "categorical";
  }
  return "?";
}

inline std::string_view to_string(Level l) { return l == Level::inner ? "inner" : "outer"; }

inline bool matches(Level level, LevelFilter filter) {
  return filter == LevelFilter::all || (filter == LevelFilter::inner) == (level == Level::inner);
}

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::uniform;
  double low = 0.0;
  double high = 1.0;
  std::vector<Atom> choices;
  Level level = Level::outer;

  static ParamSpec uniform(std::string name, double low, double high, Level level) {
    return {std::move(name), ParamKind::uniform, low, high, {}, level};
  }
  static ParamSpec log_uniform(std::string name, double low, double high, Level level) {
    return {std::move(name), ParamKind::log_uniform, low, high, {}, level};
  }
  static ParamSpec categorical(std::string name, std::vector<Atom> choices, Level level) {
    return {std::move(name), ParamKind::categorical, 0.0, 0.0, std::move(choices), level};
  }

  bool is_continuous() const { return kind != ParamKind::categorical; }

  bool contains(const Atom& value) const {
    if (kind == ParamKind::categorical)
      return std::find(choices.begin(), choices.end(), value) != choices.end();
    const auto* d = std::get_if<double>(&value);
    return d != nullptr && *d >= low && *d <= high;
  }

  /// Value -> [0, 1]. Throws SpaceError when the value is outside the domain.
  double encode(const Atom& value) const {
    if (!contains(value)) throw SpaceError("value " + bbo::to_string(value) + " outside domain of '" + name + "'");
    switch (kind) {
      case ParamKind::uniform:
        return std::clamp((std::get<double>(value) - low) / (high - low), 0.0, 1.0);
      case ParamKind::log_uniform: {
        const double ll = std::log(low);
        return std::clamp((std::log(std::get<double>(value)) - ll) / (std::log(high) - ll), 0.0, 1.0);
      }
      case ParamKind::categorical: {
        const auto idx = static_cast<double>(std::find(choices.begin(), choices.end(), value) - choices.begin());
        return (idx + 0.5) / static_cast<double>(choices.size());
      }
    }
    return 0.0;
  }

  Atom decode(double u) const {
    if (!(u >= 0.0 && u <= 1.0))
      throw SpaceError("encoded component " + format_double(u) + " outside [0,1] for '" + name + "'");
    switch (kind) {
      case ParamKind::uniform:
        return std::clamp(low + u * (high - low), low, high);
      case ParamKind::log_uniform: {
        const double ll = std::log(low);
        return std::clamp(std::exp(ll + u * (std::log(high) - ll)), low, high);
      }
      case ParamKind::categorical: {
        const auto k = choices.size();
        const auto idx = std::min(static_cast<std::size_t>(std::floor(u * static_cast<double>(k))), k - 1);
        return choices[idx];
      }
    }
    return 0.0;
  }
};

/// Parameter assignments keyed by name. May cover one level or both.
class Configuration {
 public:
  Configuration() = default;
  Configuration(std::initializer_list<std::pair<const std::string, Atom>> init) : values_(init) {}

  void set(const std::string& name, Atom value) { values_[name] = std::move(value); }
  bool has(const std::string& name) const { return values_.count(name) != 0; }
  const Atom& at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw SpaceError("missing assignment for '" + name + "'");
    return it->second;
  }
  double real(const std::string& name) const {
    const auto& a = at(name);
    if (const auto* d = std::get_if<double>(&a)) return *d;
    throw SpaceError("'" + name + "' is not numeric");
  }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  /// Union; entries of `other` win on collision.
  Configuration merged(const Configuration& other) const {
    Configuration out = *this;
    for (const auto& [k, v] : other.values_) out.values_[k] = v;
    return out;
  }

  const std::map<std::string, Atom>& values() const { return values_; }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::map<std::string, Atom> values_;
};

struct ValidationError {
  std::string param;
  std::string message;
};

/// Ordered list of parameters split into inner and outer levels.
/// Immutable after construction.
class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {}

  const std::vector<ParamSpec>& params() const { return params_; }

  std::vector<const ParamSpec*> filtered(LevelFilter filter) const {
    std::vector<const ParamSpec*> out;
    for (const auto& p : params_)
      if (matches(p.level, filter)) out.push_back(&p);
    return out;
  }

  std::size_t dimension(LevelFilter filter = LevelFilter::all) const { return filtered(filter).size(); }

  bool has_level(Level level) const {
    return std::any_of(params_.begin(), params_.end(), [&](const ParamSpec& p) { return p.level == level; });
  }

  const ParamSpec* find(std::string_view name) const {
    for (const auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

 private:
  std::vector<ParamSpec> params_;
};

inline std::vector<ValidationError> validate(const SearchSpace& space, bool require_both_levels = false) {
  std::vector<ValidationError> errors;
  std::set<std::string> seen;
  for (const auto& p : space.params()) {
    if (p.name.empty()) errors.push_back({p.name, "parameter name must be non-empty"});
    else if (!seen.insert(p.name).second) errors.push_back({p.name, "duplicate parameter name '" + p.name + "'"});
    switch (p.kind) {
      case ParamKind::uniform:
      case ParamKind::log_uniform:
        if (!std::isfinite(p.low) || !std::isfinite(p.high))
          errors.push_back({p.name, "bounds must be finite"});
        else if (!(p.low < p.high))
          errors.push_back({p.name, "lower bound must be below upper bound"});
        if (p.kind == ParamKind::log_uniform && !(p.low > 0.0))
          errors.push_back({p.name, "log-uniform requires positive lower bound"});
        break;
      case ParamKind::categorical: {
        if (p.choices.empty()) errors.push_back({p.name, "categorical requires at least one choice"});
        for (std::size_t i = 0; i < p.choices.size(); ++i)
          for (std::size_t j = i + 1; j < p.choices.size(); ++j)
            if (p.choices[i] == p.choices[j])
              errors.push_back({p.name, "duplicate choice " + to_string(p.choices[i])});
        break;
      }
    }
  }
  if (require_both_levels) {
    if (!space.has_level(Level::inner)) errors.push_back({"", "bilevel mode requires at least one inner parameter"});
    if (!space.has_level(Level::outer)) errors.push_back({"", "bilevel mode requires at least one outer parameter"});
  }
  return errors;
}

inline void require_valid(const SearchSpace& space, bool require_both_levels = false) {
  auto errors = validate(space, require_both_levels);
  if (errors.empty()) return;
  std::string msg;
  for (const auto& e : errors) {
    if (!msg.empty()) msg += "; ";
    msg += e.param.empty() ? e.message : e.param + ": " + e.message;
  }
  throw SpaceError(msg);
}

/// Configuration -> unit vector over the params selected by `filter`, in space order.
inline Eigen::VectorXd encode(const SearchSpace& space, const Configuration& config,
                              LevelFilter filter = LevelFilter::all) {
  const auto params = space.filtered(filter);
  Eigen::VectorXd x(static_cast<Eigen::Index>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    x(static_cast<Eigen::Index>(i)) = params[i]->encode(config.at(params[i]->name));
  return x;
}

inline Configuration decode(const SearchSpace& space, const Eigen::VectorXd& x,
                            LevelFilter filter = LevelFilter::all) {
  const auto params = space.filtered(filter);
  if (static_cast<std::size_t>(x.size()) != params.size())
    throw SpaceError("dimension mismatch: vector has " + std::to_string(x.size()) + " components, level has " +
                     std::to_string(params.size()));
  Configuration config;
  for (std::size_t i = 0; i < params.size(); ++i)
    config.set(params[i]->name, params[i]->decode(x(static_cast<Eigen::Index>(i))));
  return config;
}

/// Uniform draw in the encoded representation, then decoded.
inline Configuration sample(const SearchSpace& space, LevelFilter filter, Rng& rng) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(space.dimension(filter)));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform();
  return decode(space, x, filter);
}

/// Canonical text form in space order, e.g. for hashing.
inline std::string canonical(const SearchSpace& space, const Configuration& config) {
  std::string out;
  for (const auto& p : space.params()) {
    if (!config.has(p.name)) continue;
    out += p.name;
    out += '=';
    out += to_string(config.at(p.name));
    out += ';';
  }
  return out;
}

}  // namespace bbo

#endif  // BILEVEL_BO_SPACE_HPP
