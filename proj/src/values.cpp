#include "legged_odom/values.hpp"

#include "legged_odom/errors.hpp"

namespace legged {

std::string Key::str() const {
  std::string s(1, kind);
  s += std::to_string(index);
  if (kind == 'l') s += "." + std::to_string(sub);
  return s;
}

int variable_dim(const Variable& v) {
  if (const auto* g = std::get_if<SEK3>(&v)) return g->dim();
  return static_cast<int>(std::get<Vector>(v).size());
}

Variable retract(const Variable& v, const Eigen::Ref<const Vector>& delta) {
  if (const auto* g = std::get_if<SEK3>(&v)) return g->retract(delta);
  const Vector& x = std::get<Vector>(v);
  if (x.size() != delta.size()) throw DimensionError("retract: vector size mismatch");
  return Vector(x + delta);
}

Vector local(const Variable& from, const Variable& to) {
  if (from.index() != to.index()) throw DimensionError("local: variable kinds differ");
  if (const auto* g = std::get_if<SEK3>(&from)) return g->local(std::get<SEK3>(to));
  return std::get<Vector>(to) - std::get<Vector>(from);
}

void Values::insert(const Key& key, Variable value) {
  if (!values_.emplace(key, std::move(value)).second) {
    throw StructureError("Values::insert: duplicate key " + key.str());
  }
}

void Values::update(const Key& key, Variable value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw StructureError("Values::update: missing key " + key.str());
  it->second = std::move(value);
}

const Variable& Values::at(const Key& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw StructureError("Values: missing key " + key.str());
  return it->second;
}

const SEK3& Values::group(const Key& key) const {
  const auto* g = std::get_if<SEK3>(&at(key));
  if (!g) throw StructureError("Values: key " + key.str() + " is not a group variable");
  return *g;
}

const Vector& Values::vector(const Key& key) const {
  const auto* v = std::get_if<Vector>(&at(key));
  if (!v) throw StructureError("Values: key " + key.str() + " is not a vector variable");
  return *v;
}

}  // namespace legged
