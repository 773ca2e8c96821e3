#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ter/catalog.hpp"
#include "ter/ids.hpp"

namespace ter {

inline constexpr std::uint32_t kDefaultWindowWidth = 20;
inline constexpr double kDefaultWandTheta = 0.5;

using WordId = std::uint32_t;
inline constexpr WordId kNoWord = 0xffffffffu;

// A context window around one entity mention: identified by (doc, span);
// window word sets are materialized on demand.
struct Snippet {
    EntityId entity;
    std::uint32_t doc;
    std::uint32_t begin;  // mention span [begin, end)
    std::uint32_t end;

    auto operator<=>(const Snippet&) const = default;
};

// One term of a WAND query: a single word or a quoted phrase. A phrase's IDF
// is the sum of its constituent word IDFs.
struct WandTerm {
    std::vector<std::string> words;
};

struct WandQuery {
    TypeId target_type;
    std::vector<WandTerm> terms;
    double theta = kDefaultWandTheta;                 // fraction of total query IDF
    std::uint32_t window_width = kDefaultWindowWidth; // tokens each side of the span
};

// Splits `words and "quoted phrases"` into WAND terms.
std::vector<WandTerm> parse_wand_terms(std::string_view text);

// Snippet word sets and mention statistics for one entity.
struct EntitySnippets {
    bool known = false;  // entity had at least one indexed mention
    std::uint32_t mention_count = 0;
    // One sorted unique word set per snippet; reduced to the restriction set
    // when one is given.
    std::vector<std::vector<std::string>> snippets;
};

// In-memory inverted index over the annotated corpus: word postings with
// positions, entity mention postings, document frequencies and per-entity
// window co-occurrence counts. Immutable after build; retrieval state lives
// in local cursors, so concurrent readers are safe.
class SnippetIndex {
public:
    std::size_t doc_count() const { return docs_.size(); }
    std::uint32_t window_width() const { return window_width_; }
    std::uint64_t catalog_fingerprint() const { return catalog_fingerprint_; }

    const std::string& doc_name(std::uint32_t doc) const { return docs_[doc].id; }
    const std::vector<WordId>& doc_tokens(std::uint32_t doc) const { return docs_[doc].tokens; }
    const std::string& word(WordId w) const { return words_[w]; }
    std::optional<WordId> word_id(std::string_view w) const;

    std::uint32_t doc_freq(std::string_view w) const;
    // log(|C| / df) with df clamped to >= 1; unseen words get log(|C|).
    double idf(std::string_view w) const;
    double idf(WordId w) const;
    double term_idf(const WandTerm& term) const;
    // df(w) / |C|
    double background_word_prob(std::string_view w) const;
    double background_word_prob(WordId w) const;

    // corpusCount(e): number of mentions of e.
    std::uint32_t mention_count(EntityId e) const;
    std::uint64_t total_mentions() const { return total_mentions_; }
    // corpusCount(e, w): mentions of e with w inside the indexing window.
    std::uint32_t cooccur_count(EntityId e, std::string_view w) const;
    std::uint32_t cooccur_count(EntityId e, WordId w) const;

    const std::vector<Snippet>& mentions_of(EntityId e) const;

    // Window token range for a snippet, clamped to the document.
    std::pair<std::uint32_t, std::uint32_t> window_range(const Snippet& s,
                                                         std::uint32_t width) const;
    // Sorted unique window words at the index's own window width.
    std::vector<std::string> window_words(const Snippet& s) const;

    // S_e with optional reduction to a query word set.
    EntitySnippets snippets_of(EntityId e,
                               const std::vector<std::string>* restriction = nullptr) const;

    // Type-constrained IDF-WAND retrieval, document-at-a-time. Returns every
    // window around a mention of some entity in+ target_type whose matched
    // term IDF reaches theta * IDF(all terms) with at least one term present.
    // Ordered by (doc, span begin, span end, entity); one row per mention.
    std::vector<Snippet> retrieve(const Catalog& catalog, const WandQuery& q) const;

    // Entities with at least one retrieved snippet, ascending id.
    std::vector<EntityId> candidate_pool(const Catalog& catalog, const WandQuery& q) const;

private:
    friend SnippetIndex build_index(const std::filesystem::path&, const Catalog&, std::uint32_t);
    friend void save_index(const SnippetIndex&, const std::filesystem::path&);
    friend SnippetIndex load_index(const std::filesystem::path&, const Catalog&);

    struct DocRecord {
        std::string id;
        std::vector<WordId> tokens;
        std::vector<Snippet> mentions;  // ordered by (begin, end)
    };
    struct DocPosting {
        std::uint32_t doc;
        std::vector<std::uint32_t> positions;
    };

    void build_derived();
    bool window_matches(const DocRecord& doc, std::uint32_t lo, std::uint32_t hi,
                        const std::vector<std::vector<WordId>>& term_ids,
                        std::size_t term_index) const;

    std::vector<std::string> words_;
    std::unordered_map<std::string, WordId> word_ids_;
    std::vector<DocRecord> docs_;
    std::uint32_t window_width_ = kDefaultWindowWidth;
    std::uint64_t catalog_fingerprint_ = 0;

    std::vector<std::uint32_t> doc_freq_;                       // per word
    std::vector<std::vector<DocPosting>> postings_;             // per word
    std::vector<std::vector<Snippet>> entity_mentions_;         // per entity
    std::vector<std::uint32_t> mention_counts_;                 // per entity
    std::vector<std::vector<std::pair<WordId, std::uint32_t>>> cooccur_;  // per entity, sorted
    std::uint64_t total_mentions_ = 0;
};

// corpus.jsonl: one document per line,
//   {"doc_id": str, "tokens": [str...], "mentions": [[start, end, "entity_id"]...]}
// Mention spans must be in bounds and non-overlapping; entities must exist in
// the catalog. Construction is deterministic given input order.
SnippetIndex build_index(const std::filesystem::path& corpus_file, const Catalog& catalog,
                         std::uint32_t window_width = kDefaultWindowWidth);

// Versioned little-endian image. Loading rejects version or catalog
// mismatches; derived postings are rebuilt from the stored documents.
void save_index(const SnippetIndex& index, const std::filesystem::path& path);
SnippetIndex load_index(const std::filesystem::path& path, const Catalog& catalog);

}  // namespace ter
