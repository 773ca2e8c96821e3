#pragma once

#include <cstddef>
#include <cstdint>

namespace ter {

// Dense internal identifiers. External string ids map bijectively onto these
// in load order; all per-type / per-entity state lives in flat vectors.
enum class TypeId : std::uint32_t {};
enum class EntityId : std::uint32_t {};

constexpr std::size_t idx(TypeId t) { return static_cast<std::size_t>(t); }
constexpr std::size_t idx(EntityId e) { return static_cast<std::size_t>(e); }

constexpr TypeId type_id(std::size_t i) { return static_cast<TypeId>(i); }
constexpr EntityId entity_id(std::size_t i) { return static_cast<EntityId>(i); }

}  // namespace ter
