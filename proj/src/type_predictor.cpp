#include "ter/type_predictor.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "ter/error.hpp"
#include "ter/text.hpp"

namespace ter {

TypePrediction predict_type(const Query& q, const std::vector<EntityId>& candidates,
                            const Model& model, const Catalog& catalog,
                            const SnippetIndex& index, const TypePriorTable& priors, int k,
                            Execution exec) {
    if (k < 1) throw Error("bad-config", "predict-type k must be >= 1");
    if (candidates.empty()) throw Error("empty-candidates", "no candidate entities to rank");

    auto ranked = rank_discriminative(q, candidates, model, catalog, index, priors, exec);
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());

    TypePrediction out;
    out.k = k;

    QueryFeatureContext ctx(q, catalog, index, priors, model.hp.beta, model.hp.partition_mode);
    std::set<TypeId> candidate_types;
    for (std::size_t i = 0; i < take; ++i) {
        EntityFeatureExtractor ex(ctx, ranked[i].entity);
        auto scores = score_types(ctx, ex, model.lambda);
        // Rank this entity's own types: best score first, ties by type name.
        std::stable_sort(scores.begin(), scores.end(), [&](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return catalog.type_name(a.first) < catalog.type_name(b.first);
        });
        std::vector<TypeId> order;
        order.reserve(scores.size());
        for (const auto& [t, s] : scores) {
            order.push_back(t);
            candidate_types.insert(t);
        }
        out.entity_rankings.emplace_back(ranked[i].entity, std::move(order));
    }

    const double penalty = static_cast<double>(candidate_types.size());
    std::map<TypeId, double> rank_sums;
    for (const auto& [e, order] : out.entity_rankings) {
        for (TypeId t : candidate_types) {
            auto it = std::find(order.begin(), order.end(), t);
            double rank = it != order.end()
                              ? static_cast<double>(it - order.begin() + 1)
                              : static_cast<double>(order.size()) + penalty;
            rank_sums[t] += rank;
        }
    }

    out.ranked.assign(rank_sums.begin(), rank_sums.end());
    std::sort(out.ranked.begin(), out.ranked.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return catalog.type_name(a.first) < catalog.type_name(b.first);
    });
    return out;
}

DescriptionStore DescriptionStore::load(const std::filesystem::path& path,
                                        const Catalog& catalog) {
    std::ifstream in(path);
    if (!in) throw Error("file-missing", "cannot open " + path.string());
    DescriptionStore store;
    store.models_.resize(catalog.entity_count());
    store.described_flags_.assign(catalog.entity_count(), 0);

    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error("bad-record", path.filename().string() + " line " +
                                          std::to_string(number) + ": " + e.what());
        }
        if (!rec.contains("entity_id") || !rec.contains("text"))
            throw Error("bad-record", path.filename().string() + " line " +
                                          std::to_string(number) + ": missing fields");
        auto name = rec.at("entity_id").get<std::string>();
        auto e = catalog.find_entity(name);
        if (!e)
            throw Error("dangling-reference", path.filename().string() + " line " +
                                                  std::to_string(number) +
                                                  ": unknown entity " + name);
        auto tokens = tokenize(rec.at("text").get<std::string>());
        std::map<std::string, std::uint32_t> counts;
        for (const auto& w : tokens) ++counts[w];
        EntityModel& m = store.models_[idx(*e)];
        m.counts.assign(counts.begin(), counts.end());
        m.length = tokens.size();
        if (!store.described_flags_[idx(*e)]) {
            store.described_flags_[idx(*e)] = 1;
            ++store.described_;
            for (const auto& [w, c] : counts) ++store.doc_freq_[w];
        }
    }
    return store;
}

bool DescriptionStore::has(EntityId e) const {
    return idx(e) < described_flags_.size() && described_flags_[idx(e)];
}

double DescriptionStore::word_prob(const std::string& w, EntityId e, double mu) const {
    double bg = 0.0;
    if (described_ > 0) {
        auto it = doc_freq_.find(w);
        if (it != doc_freq_.end())
            bg = static_cast<double>(it->second) / static_cast<double>(described_);
    }
    if (!has(e)) return bg;  // background-only model for undescribed entities
    const EntityModel& m = models_[idx(e)];
    double tf = 0.0;
    if (m.length > 0) {
        auto it = std::lower_bound(m.counts.begin(), m.counts.end(), w,
                                   [](const auto& p, const std::string& key) {
                                       return p.first < key;
                                   });
        if (it != m.counts.end() && it->first == w)
            tf = static_cast<double>(it->second) / static_cast<double>(m.length);
    }
    return (1.0 - mu) * tf + mu * bg;
}

std::vector<std::pair<TypeId, double>> bn_type_scores(const Query& q,
                                                      const DescriptionStore& descriptions,
                                                      const Catalog& catalog, double mu) {
    // Query likelihood per entity, then a uniform-weight average per type.
    std::vector<double> likelihood(catalog.entity_count());
    for (std::size_t e = 0; e < catalog.entity_count(); ++e) {
        double prod = 1.0;
        for (const auto& w : q.words) prod *= descriptions.word_prob(w, entity_id(e), mu);
        likelihood[e] = prod;
    }

    std::vector<std::pair<TypeId, double>> scores;
    scores.reserve(catalog.type_count());
    for (std::size_t t = 0; t < catalog.type_count(); ++t) {
        auto members = catalog.entities_of(type_id(t));
        double total = 0.0;
        for (EntityId e : members) total += likelihood[idx(e)];
        double score = members.empty() ? 0.0 : total / static_cast<double>(members.size());
        scores.emplace_back(type_id(t), score);
    }
    std::sort(scores.begin(), scores.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return catalog.type_name(a.first) < catalog.type_name(b.first);
    });
    return scores;
}

}  // namespace ter
