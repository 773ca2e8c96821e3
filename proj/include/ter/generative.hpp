#pragma once

#include <vector>

#include "ter/catalog.hpp"
#include "ter/corpus_index.hpp"
#include "ter/log_space.hpp"
#include "ter/parallel.hpp"
#include "ter/query.hpp"

namespace ter {

struct GenHyperParams {
    double alpha = 0.1;  // snippet LM smoothing
    double beta = 0.1;   // type LM smoothing
    double gamma = 0.1;  // type prior smoothing
    double delta = 0.3;  // hint Bernoulli

    void validate() const;
};

// Joint mass of one entity with its best interpretation. All products run in
// log space with exact -inf zeros; probabilities of multiplied factors span
// wildly different scales.
struct GenScore {
    EntityId entity{};
    double log_joint = kNegInf;
    double joint_mass = 0.0;  // Pr(e, q)
    TypeId best_type{};
    SwitchVector best_z;
    bool background_fallback = false;  // entity had no mentions; selector LM fell back

    struct Cell {
        TypeId t;
        SwitchVector z;
        double log_mass;  // includes the Pr(e) factor
    };
    std::vector<Cell> table;  // filled only when requested
};

// p(w|lemma) = (1-beta) * [w in lemma] + beta * (fraction of types with w in
// some lemma).
double type_lm_word_prob(const std::string& w, const Lemma& lemma, const Catalog& catalog,
                         double beta);

// Probability of generating exactly `hints` from the best lemma of t. The
// complement factors range over the type's lemma vocabulary plus the query
// words; factors for words outside that set are constant across candidates of
// the same type and are dropped.
double hint_given_type(const std::vector<std::string>& hints,
                       const std::vector<std::string>& query_words, TypeId t,
                       const Catalog& catalog, double beta);

// p(w|e) = (1-alpha) * corpusCount(e,w)/corpusCount(e) + alpha * background.
// Entities without mentions fall back to the background term alone.
double snippet_word_prob(const std::string& w, EntityId e, const SnippetIndex& index,
                         double alpha, bool* background_fallback = nullptr);

// Probability of generating exactly `selectors`; complement factors range
// over all query words.
double selector_given_entity(const std::vector<std::string>& selectors,
                             const std::vector<std::string>& query_words, EntityId e,
                             const SnippetIndex& index, double alpha,
                             bool* background_fallback = nullptr);

// delta^#hints * (1-delta)^#selectors over positions.
double switch_prior(SwitchVector z, double delta);

// |S_e| / sum_e' |S_e'|; zero-mention entities get 0.
double entity_prior(EntityId e, const SnippetIndex& index);

// Pr(e, q) = Pr(e) * sum_{t: e in+ t} sum_z Pr(t|e) Pr(z) Pr(h|t) Pr(s|e).
// Types ascend by id, partitions in enumeration order; best pair is the first
// maximal summand.
GenScore score_entity(const Query& q, EntityId e, const Catalog& catalog,
                      const SnippetIndex& index, const TypePriorTable& priors,
                      const GenHyperParams& hp, PartitionMode mode, bool keep_table = false);

// Descending joint mass; ties by entity name. Candidates score independently,
// so the parallel path is bit-identical to the serial one.
std::vector<GenScore> rank_generative(const Query& q, const std::vector<EntityId>& candidates,
                                      const Catalog& catalog, const SnippetIndex& index,
                                      const TypePriorTable& priors, const GenHyperParams& hp,
                                      PartitionMode mode,
                                      Execution exec = Execution::parallel);

struct GenExplanation {
    TypeId best_type{};
    SwitchVector best_z;
    std::vector<std::pair<TypeId, double>> type_marginals;  // Pr(t|e,q), ascending type id
    std::vector<double> hint_marginals;                     // Pr(z_j = hint | e, q) per position
};

// Argmax interpretation and marginals from a score with the table retained.
GenExplanation explain_generative(const GenScore& score, std::size_t query_len);

}  // namespace ter
