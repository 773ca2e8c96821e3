#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ter/catalog.hpp"
#include "ter/ids.hpp"

namespace ter {

// Queries longer than this are rejected: exhaustive partition enumeration is
// 2^|q| and telegraphic queries are short.
inline constexpr std::size_t kMaxQueryWords = 12;

struct Query {
    std::string qid;
    std::string raw;
    std::vector<std::string> words;  // lowercase tokens, 1..kMaxQueryWords
};

// Relevance judgments attached to a training/evaluation query.
struct Gold {
    std::optional<TypeId> gold_type;
    std::vector<EntityId> relevant;
    std::vector<EntityId> irrelevant;
};

struct JudgedQuery {
    Query query;
    Gold gold;
};

// Tokenizes exactly like the corpus. Throws `empty-query` / `query-too-long`.
Query parse_query(std::string_view text, std::string qid = "q");

// Per-position hint/selector assignment, packed as a bitmask (bit j set means
// position j is a hint).
class SwitchVector {
public:
    SwitchVector() = default;
    SwitchVector(std::uint32_t hint_mask, std::size_t size)
        : mask_(hint_mask), size_(static_cast<std::uint8_t>(size)) {}

    std::size_t size() const { return size_; }
    bool is_hint(std::size_t j) const { return (mask_ >> j) & 1; }
    std::uint32_t mask() const { return mask_; }
    unsigned hint_count() const { return static_cast<unsigned>(__builtin_popcount(mask_)); }
    unsigned selector_count() const { return static_cast<unsigned>(size_) - hint_count(); }
    bool all_selector() const { return mask_ == 0; }

    std::string to_string() const;  // e.g. "shh" (position 0 first)

    bool operator==(const SwitchVector&) const = default;

private:
    std::uint32_t mask_ = 0;
    std::uint8_t size_ = 0;
};

enum class PartitionMode { exhaustive, contiguous };

PartitionMode parse_partition_mode(std::string_view name);
const char* partition_mode_name(PartitionMode mode);

// Exhaustive: all 2^|q| switch vectors. Contiguous: the all-selector vector
// plus every contiguous hint run of length 1..3. Both orderings are ascending
// by hint mask, so argmax tie-breaking is reproducible.
std::vector<SwitchVector> enumerate_partitions(std::size_t query_len, PartitionMode mode);

// Word sets (sorted, deduplicated). Their union is always set(q).
std::vector<std::string> hint_words(const std::vector<std::string>& words, SwitchVector z);
std::vector<std::string> selector_words(const std::vector<std::string>& words, SwitchVector z);
// Hint positions in query order, duplicates kept (for exact lemma matching).
std::vector<std::string> hint_sequence(const std::vector<std::string>& words, SwitchVector z);

// queries.jsonl: {"qid": str, "text": str, "gold_type": str|null,
//                 "relevant": [entity_id...], "irrelevant": [entity_id...]}
std::vector<JudgedQuery> load_queries(const std::filesystem::path& path, const Catalog& catalog);

}  // namespace ter
