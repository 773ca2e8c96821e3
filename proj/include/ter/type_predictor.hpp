#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ter/discriminative.hpp"

namespace ter {

struct TypePrediction {
    // Ascending by rank-sum score; smaller aggregate is better. Ties resolve
    // by type name.
    std::vector<std::pair<TypeId, double>> ranked;
    int k = 1;
    // Per consulted entity: its own type ranking, best first (kept for audit).
    std::vector<std::pair<EntityId, std::vector<TypeId>>> entity_rankings;
};

// Aggregates per-entity type rankings over the top-k entities of the
// discriminative ranking by sum of ranks; a type foreign to an entity is
// ranked behind all of its own (|own types| + number of candidate types).
TypePrediction predict_type(const Query& q, const std::vector<EntityId>& candidates,
                            const Model& model, const Catalog& catalog,
                            const SnippetIndex& index, const TypePriorTable& priors, int k,
                            Execution exec = Execution::parallel);

// Smoothed unigram description models for the entity-centric baseline.
class DescriptionStore {
public:
    // descriptions.jsonl: {"entity_id": str, "text": str}
    static DescriptionStore load(const std::filesystem::path& path, const Catalog& catalog);

    bool has(EntityId e) const;
    std::size_t described_count() const { return described_; }

    // p(w | theta_e): (1-mu) * tf(w,e)/len(e) + mu * df(w)/N over description
    // documents. Entities without a description fall back to the background
    // term alone.
    double word_prob(const std::string& w, EntityId e, double mu) const;

private:
    struct EntityModel {
        std::vector<std::pair<std::string, std::uint32_t>> counts;  // sorted by word
        std::uint64_t length = 0;
    };
    std::vector<EntityModel> models_;
    std::vector<char> described_flags_;
    std::unordered_map<std::string, std::uint32_t> doc_freq_;
    std::size_t described_ = 0;
};

// Pr(q|t) = (1/|{e in+ t}|) * sum_{e in+ t} prod_{w in q} p(w|theta_e).
// Descending score; ties by type name. Types without entities score 0.
std::vector<std::pair<TypeId, double>> bn_type_scores(const Query& q,
                                                      const DescriptionStore& descriptions,
                                                      const Catalog& catalog, double mu);

}  // namespace ter
