#include "ter/generative.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ter/error.hpp"

namespace ter {

void GenHyperParams::validate() const {
    auto in01 = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in01(alpha) || !in01(beta) || !in01(gamma) || !in01(delta))
        throw Error("bad-hyperparam", "generative hyperparameters must lie in (0,1)");
}

double type_lm_word_prob(const std::string& w, const Lemma& lemma, const Catalog& catalog,
                         double beta) {
    bool in_lemma = std::find(lemma.tokens.begin(), lemma.tokens.end(), w) != lemma.tokens.end();
    return (1.0 - beta) * (in_lemma ? 1.0 : 0.0) + beta * catalog.lemma_background(w);
}

double hint_given_type(const std::vector<std::string>& hints,
                       const std::vector<std::string>& query_words, TypeId t,
                       const Catalog& catalog, double beta) {
    // Type-description vocabulary: this type's lemma words plus the query's.
    std::set<std::string> vocab(catalog.lemma_vocabulary(t).begin(),
                                catalog.lemma_vocabulary(t).end());
    vocab.insert(query_words.begin(), query_words.end());
    std::set<std::string> hint_set(hints.begin(), hints.end());

    double best = 0.0;
    for (const Lemma& lemma : catalog.lemmas(t)) {
        double prod = 1.0;
        for (const auto& w : vocab) {
            double p = type_lm_word_prob(w, lemma, catalog, beta);
            prod *= hint_set.count(w) ? p : 1.0 - p;
            if (prod == 0.0) break;
        }
        best = std::max(best, prod);
    }
    return best;
}

double snippet_word_prob(const std::string& w, EntityId e, const SnippetIndex& index,
                         double alpha, bool* background_fallback) {
    double bg = index.background_word_prob(w);
    std::uint32_t total = index.mention_count(e);
    if (total == 0) {
        if (background_fallback) *background_fallback = true;
        return bg;
    }
    double ratio = static_cast<double>(index.cooccur_count(e, w)) / static_cast<double>(total);
    return (1.0 - alpha) * ratio + alpha * bg;
}

double selector_given_entity(const std::vector<std::string>& selectors,
                             const std::vector<std::string>& query_words, EntityId e,
                             const SnippetIndex& index, double alpha,
                             bool* background_fallback) {
    std::set<std::string> selector_set(selectors.begin(), selectors.end());
    std::set<std::string> uniq(query_words.begin(), query_words.end());
    double prod = 1.0;
    for (const auto& w : uniq) {
        double p = snippet_word_prob(w, e, index, alpha, background_fallback);
        prod *= selector_set.count(w) ? p : 1.0 - p;
    }
    return prod;
}

double switch_prior(SwitchVector z, double delta) {
    return std::pow(delta, z.hint_count()) * std::pow(1.0 - delta, z.selector_count());
}

double entity_prior(EntityId e, const SnippetIndex& index) {
    std::uint64_t total = index.total_mentions();
    if (total == 0) return 0.0;
    return static_cast<double>(index.mention_count(e)) / static_cast<double>(total);
}

GenScore score_entity(const Query& q, EntityId e, const Catalog& catalog,
                      const SnippetIndex& index, const TypePriorTable& priors,
                      const GenHyperParams& hp, PartitionMode mode, bool keep_table) {
    hp.validate();
    GenScore score;
    score.entity = e;

    auto partitions = enumerate_partitions(q.words.size(), mode);
    auto types = catalog.types_of(e);
    if (types.empty()) throw Error("unknown-entity", "entity has no types");

    const double log_pe = safe_log(entity_prior(e, index));

    // Per-partition pieces shared across types.
    std::vector<double> log_pz(partitions.size());
    std::vector<double> log_sel(partitions.size());
    std::vector<std::vector<std::string>> hint_sets(partitions.size());
    for (std::size_t zi = 0; zi < partitions.size(); ++zi) {
        log_pz[zi] = safe_log(switch_prior(partitions[zi], hp.delta));
        hint_sets[zi] = hint_words(q.words, partitions[zi]);
        log_sel[zi] = safe_log(selector_given_entity(selector_words(q.words, partitions[zi]),
                                                     q.words, e, index, hp.alpha,
                                                     &score.background_fallback));
    }

    std::vector<double> summands;
    summands.reserve(types.size() * partitions.size());
    double best = kNegInf;
    score.best_type = types.front();
    score.best_z = partitions.front();
    if (keep_table) score.table.reserve(types.size() * partitions.size());

    for (TypeId t : types) {
        double log_pt = safe_log(priors.prior(catalog, t, e));
        for (std::size_t zi = 0; zi < partitions.size(); ++zi) {
            double log_hint = safe_log(hint_given_type(hint_sets[zi], q.words, t, catalog,
                                                       hp.beta));
            double s = log_pt + log_pz[zi] + log_hint + log_sel[zi];
            summands.push_back(s);
            if (s > best) {
                best = s;
                score.best_type = t;
                score.best_z = partitions[zi];
            }
            if (keep_table) score.table.push_back({t, partitions[zi], log_pe + s});
        }
    }

    score.log_joint = log_pe + log_sum_exp(summands);
    score.joint_mass = std::exp(score.log_joint);
    return score;
}

std::vector<GenScore> rank_generative(const Query& q, const std::vector<EntityId>& candidates,
                                      const Catalog& catalog, const SnippetIndex& index,
                                      const TypePriorTable& priors, const GenHyperParams& hp,
                                      PartitionMode mode, Execution exec) {
    std::vector<GenScore> scores(candidates.size());
    parallel_for(candidates.size(), exec, [&](std::size_t i) {
        scores[i] = score_entity(q, candidates[i], catalog, index, priors, hp, mode);
    });
    std::sort(scores.begin(), scores.end(), [&](const GenScore& a, const GenScore& b) {
        if (a.log_joint != b.log_joint) return a.log_joint > b.log_joint;
        return catalog.entity_name(a.entity) < catalog.entity_name(b.entity);
    });
    return scores;
}

GenExplanation explain_generative(const GenScore& score, std::size_t query_len) {
    if (score.table.empty())
        throw Error("no-table", "score was computed without the per-(t,z) table");
    GenExplanation ex;
    ex.best_type = score.best_type;
    ex.best_z = score.best_z;

    std::vector<double> logs;
    logs.reserve(score.table.size());
    for (const auto& cell : score.table) logs.push_back(cell.log_mass);
    double log_total = log_sum_exp(logs);

    std::map<TypeId, double> per_type;
    ex.hint_marginals.assign(query_len, 0.0);
    for (const auto& cell : score.table) {
        double w = log_total == kNegInf ? 0.0 : std::exp(cell.log_mass - log_total);
        per_type[cell.t] += w;
        for (std::size_t j = 0; j < query_len; ++j)
            if (cell.z.is_hint(j)) ex.hint_marginals[j] += w;
    }
    ex.type_marginals.assign(per_type.begin(), per_type.end());
    return ex;
}

}  // namespace ter
