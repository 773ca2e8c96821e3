#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ter/catalog.hpp"
#include "ter/corpus_index.hpp"
#include "ter/query.hpp"

namespace ter {

// Fixed, versioned feature layout. All features are constructed nonnegative;
// the model learns signs.
enum FeatureIndex : std::size_t {
    kPhi1Support = 0,   // IDF-weighted snippet support, normalized
    kPhi1SelfMention,   // 1 if the entity's own name phrase is contained in q
    kPhi2Prior,         // Pr(t|e) from gold-type hit counts
    kPhi2Generality,    // |{e : e in+ t}| / |E|
    kPhi3Lm,            // Pr(h(q,z) | t), best lemma
    kPhi3Exact,         // 1 if some lemma equals the hint subsequence exactly
    kPhi3LenLt1,        // 1 if |h| < 1
    kPhi3LenLt2,        // 1 if |h| < 2
    kPhi3LenLt3,        // 1 if |h| < 3
    kPhi4Cover,         // IDF(s) * |{c >= s}|, normalized
    kPhi4Subset,        // sum_{c < s} IDF(c), normalized
    kPhi4ExactFull,     // |{c : c = q}| / |S_e|
    kFeatureCount
};

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "phi1_support", "phi1_self_mention", "phi2_prior",  "phi2_generality",
    "phi3_lm",      "phi3_exact",        "phi3_len_lt_1", "phi3_len_lt_2",
    "phi3_len_lt_3", "phi4_cover",       "phi4_subset",  "phi4_exact_full",
};

inline constexpr const char* kFeatureLayoutVersion = "phi-v1";

using FeatureVector = std::array<double, kFeatureCount>;

// One latent interpretation (type, switch vector). z_index points into the
// enumeration the pair was built from.
struct LatentPair {
    TypeId t;
    SwitchVector z;
    std::size_t z_index;
};

// Candidate latent set for an entity: every (t, z) with e in+ t, except that
// all-selector partitions pair only with the root type (phi3 carries no
// signal there). Types ascend, partitions follow enumeration order.
std::vector<LatentPair> latent_pairs(const Catalog& catalog, EntityId e,
                                     const std::vector<SwitchVector>& partitions);

// Per-query state shared by every candidate: unique words, their IDFs, the
// partition list and per-partition word masks. Immutable once built, so
// candidates may be processed in parallel against one context.
class QueryFeatureContext {
public:
    QueryFeatureContext(const Query& q, const Catalog& catalog, const SnippetIndex& index,
                        const TypePriorTable& priors, double beta, PartitionMode mode);

    const Query& query() const { return *query_; }
    const Catalog& catalog() const { return *catalog_; }
    const SnippetIndex& index() const { return *index_; }
    const TypePriorTable& priors() const { return *priors_; }
    double beta() const { return beta_; }

    const std::vector<SwitchVector>& partitions() const { return partitions_; }
    const std::vector<std::string>& unique_words() const { return unique_words_; }
    double total_idf() const { return total_idf_; }
    // 2^|q| * IDF(q); zero for degenerate queries (every feature using it is 0).
    double support_norm() const { return support_norm_; }

    std::uint32_t full_mask() const { return full_mask_; }
    std::uint32_t hint_mask_of(std::size_t z_index) const { return hint_masks_[z_index]; }
    std::uint32_t selector_mask_of(std::size_t z_index) const { return selector_masks_[z_index]; }
    unsigned hint_set_size(std::size_t z_index) const { return hint_set_sizes_[z_index]; }
    const std::vector<std::string>& hint_seq(std::size_t z_index) const {
        return hint_seqs_[z_index];
    }
    double mask_idf(std::uint32_t mask) const;
    std::uint32_t word_mask_of(WordId w) const;  // 0 when w is not a query word

private:
    const Query* query_;
    const Catalog* catalog_;
    const SnippetIndex* index_;
    const TypePriorTable* priors_;
    double beta_;

    std::vector<SwitchVector> partitions_;
    std::vector<std::string> unique_words_;  // sorted
    std::vector<WordId> unique_ids_;
    std::vector<double> unique_idfs_;
    double total_idf_ = 0.0;
    double support_norm_ = 0.0;
    std::uint32_t full_mask_ = 0;

    std::vector<std::uint32_t> hint_masks_;      // per partition, over unique words
    std::vector<std::uint32_t> selector_masks_;  // complement within full_mask_
    std::vector<unsigned> hint_set_sizes_;
    std::vector<std::vector<std::string>> hint_seqs_;
};

// Per-(query, entity) extractor. Snippet word sets are reduced to bitmasks
// over the query's unique words once; phi values then come from counting
// distinct masks. Not thread-safe; use one per candidate.
class EntityFeatureExtractor {
public:
    EntityFeatureExtractor(const QueryFeatureContext& ctx, EntityId e);

    EntityId entity() const { return entity_; }
    double support() const { return phi1_support_; }
    bool self_mention() const { return self_mention_; }

    FeatureVector extract(TypeId t, std::size_t z_index);

private:
    struct Phi4 {
        double cover, subset, exact_full;
    };
    Phi4 phi4_for(std::size_t z_index);

    const QueryFeatureContext* ctx_;
    EntityId entity_;
    double phi1_support_ = 0.0;
    bool self_mention_ = false;
    std::size_t snippet_count_ = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> mask_counts_;  // distinct mask -> count

    std::map<TypeId, std::pair<double, double>> phi2_cache_;
    std::map<std::pair<TypeId, std::uint32_t>, double> lm_cache_;
    std::vector<char> phi4_ready_;
    std::vector<Phi4> phi4_cache_;
};

// Single-call forms of the feature blocks (contract surface; the extractor is
// the batch path).
std::array<double, 2> phi1(const Query& q, EntityId e, const SnippetIndex& index,
                           const Catalog& catalog);
std::array<double, 2> phi2(TypeId t, EntityId e, const TypePriorTable& priors,
                           const Catalog& catalog);
std::array<double, 5> phi3(const Query& q, SwitchVector z, TypeId t, const Catalog& catalog,
                           double beta);
std::array<double, 3> phi4(const Query& q, SwitchVector z, EntityId e,
                           const SnippetIndex& index);
FeatureVector phi(const Query& q, EntityId e, TypeId t, SwitchVector z, const Catalog& catalog,
                  const SnippetIndex& index, const TypePriorTable& priors, double beta);

}  // namespace ter
