#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ter/bitset.hpp"
#include "ter/ids.hpp"

namespace ter {

// A short descriptive phrase naming a type (or an entity's own name phrase).
struct Lemma {
    std::vector<std::string> tokens;  // lowercase, tokenizer-normalized

    std::string text() const;
    bool operator==(const Lemma&) const = default;
};

// Type DAG plus entity memberships. Immutable after load; membership tests
// run against per-entity ancestor bitsets computed up front, since they sit
// inside every inference inner loop.
class Catalog {
public:
    std::size_t type_count() const { return type_names_.size(); }
    std::size_t entity_count() const { return entity_names_.size(); }
    TypeId root() const { return root_; }

    std::optional<TypeId> find_type(std::string_view name) const;
    std::optional<EntityId> find_entity(std::string_view name) const;
    const std::string& type_name(TypeId t) const { return type_names_[idx(t)]; }
    const std::string& entity_name(EntityId e) const { return entity_names_[idx(e)]; }

    const std::vector<TypeId>& parents(TypeId t) const { return parents_[idx(t)]; }
    const std::vector<TypeId>& direct_types(EntityId e) const { return direct_types_[idx(e)]; }

    const std::vector<Lemma>& lemmas(TypeId t) const { return lemmas_[idx(t)]; }
    // Entity's own description phrase: its external id, tokenized.
    const Lemma& name_phrase(EntityId e) const { return name_phrases_[idx(e)]; }

    // e in+ t (membership through the subtype closure, reflexive).
    bool has_type(EntityId e, TypeId t) const;
    // All types of e, ascending internal id. Always contains the root.
    std::vector<TypeId> types_of(EntityId e) const;
    const DynamicBitset& ancestor_mask(EntityId e) const;

    // |{e : e in+ t}| / |E|
    double type_generality(TypeId t) const;
    std::size_t type_extent(TypeId t) const;

    // Fraction of types with w appearing in at least one of their lemmas.
    double lemma_background(const std::string& w) const;
    // Union of words over this type's lemmas, sorted unique.
    const std::vector<std::string>& lemma_vocabulary(TypeId t) const;

    // Entities of t in ascending id order (materialized on demand from masks).
    std::vector<EntityId> entities_of(TypeId t) const;

    // Stable fingerprint over names and edges; stored in the index image so a
    // mismatched catalog/index pair is rejected.
    std::uint64_t fingerprint() const { return fingerprint_; }

private:
    friend Catalog load_catalog(const std::filesystem::path&,
                                const std::filesystem::path&,
                                const std::filesystem::path&);

    void check_type(TypeId t) const;
    void check_entity(EntityId e) const;

    std::vector<std::string> type_names_;
    std::vector<std::string> entity_names_;
    std::unordered_map<std::string, TypeId> type_by_name_;
    std::unordered_map<std::string, EntityId> entity_by_name_;

    std::vector<std::vector<TypeId>> parents_;       // child -> parents
    std::vector<std::vector<TypeId>> direct_types_;  // entity -> most-specific types
    std::vector<std::vector<Lemma>> lemmas_;
    std::vector<Lemma> name_phrases_;

    std::vector<DynamicBitset> type_ancestors_;    // type -> ancestor-or-self mask
    std::vector<DynamicBitset> entity_ancestors_;  // entity -> membership mask
    std::vector<std::size_t> type_extent_;         // |{e : e in+ t}|
    std::vector<std::vector<std::string>> type_vocab_;
    std::unordered_map<std::string, std::uint32_t> lemma_word_types_;

    TypeId root_{};
    std::uint64_t fingerprint_ = 0;
};

// Loads the three TSV files:
//   types.tsv:    type_id <TAB> parent_type_id   (empty parent declares the root)
//   entities.tsv: entity_id <TAB> type_id
//   lemmas.tsv:   type_id <TAB> lemma phrase
// Parentless non-root types attach to the root. Duplicate edges and duplicate
// lemmas are dropped. The root always carries the lemma "entity".
Catalog load_catalog(const std::filesystem::path& types_file,
                     const std::filesystem::path& entities_file,
                     const std::filesystem::path& lemmas_file);

// Hit counts over gold types of training queries, Laplace-style smoothing.
class TypePriorTable {
public:
    TypePriorTable(const Catalog& catalog, double gamma);

    void add_hit(TypeId t);
    std::uint64_t hits(TypeId t) const { return hits_[idx(t)]; }
    void set_hits(TypeId t, std::uint64_t n) { hits_[idx(t)] = n; }
    double gamma() const { return gamma_; }

    // (N_t + gamma) / sum_{t': e in+ t'} (N_t' + gamma), zero when e not in+ t.
    double prior(const Catalog& catalog, TypeId t, EntityId e) const;

private:
    double gamma_;
    std::vector<std::uint64_t> hits_;
};

}  // namespace ter
