#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "legged_odom/liegroup.hpp"

namespace legged {

/// Variable identifier: a kind tag plus up to two indices (e.g. foot and episode).
struct Key {
  char kind = '?';
  std::uint32_t index = 0;
  std::uint32_t sub = 0;

  auto operator<=>(const Key&) const = default;
  std::string str() const;
};

inline Key nav_key(std::uint32_t event) { return {'x', event, 0}; }
inline Key bias_key(std::uint32_t event) { return {'b', event, 0}; }
inline Key landmark_key(std::uint32_t foot, std::uint32_t episode) { return {'l', foot, episode}; }
inline Key state_key() { return {'s', 0, 0}; }

/// Either a group element (right-perturbation chart) or a vector (additive chart).
using Variable = std::variant<SEK3, Vector>;

int variable_dim(const Variable& v);
Variable retract(const Variable& v, const Eigen::Ref<const Vector>& delta);
/// Chart coordinates of `to` around `from`.
Vector local(const Variable& from, const Variable& to);

class Values {
 public:
  void insert(const Key& key, Variable value);
  void update(const Key& key, Variable value);
  void insert_or_assign(const Key& key, Variable value) { values_[key] = std::move(value); }
  void erase(const Key& key) { values_.erase(key); }
  bool contains(const Key& key) const { return values_.count(key) != 0; }
  std::size_t size() const { return values_.size(); }

  const Variable& at(const Key& key) const;
  const SEK3& group(const Key& key) const;
  const Vector& vector(const Key& key) const;

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

 private:
  std::map<Key, Variable> values_;
};

}  // namespace legged
