#include "ter/features.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include "ter/error.hpp"
#include "ter/generative.hpp"

namespace ter {

std::vector<LatentPair> latent_pairs(const Catalog& catalog, EntityId e,
                                     const std::vector<SwitchVector>& partitions) {
    std::vector<LatentPair> out;
    auto types = catalog.types_of(e);
    out.reserve(types.size() * partitions.size());
    for (TypeId t : types) {
        for (std::size_t zi = 0; zi < partitions.size(); ++zi) {
            if (partitions[zi].all_selector() && t != catalog.root()) continue;
            out.push_back({t, partitions[zi], zi});
        }
    }
    return out;
}

QueryFeatureContext::QueryFeatureContext(const Query& q, const Catalog& catalog,
                                         const SnippetIndex& index,
                                         const TypePriorTable& priors, double beta,
                                         PartitionMode mode)
    : query_(&q), catalog_(&catalog), index_(&index), priors_(&priors), beta_(beta) {
    partitions_ = enumerate_partitions(q.words.size(), mode);

    unique_words_ = q.words;
    std::sort(unique_words_.begin(), unique_words_.end());
    unique_words_.erase(std::unique(unique_words_.begin(), unique_words_.end()),
                        unique_words_.end());
    for (const auto& w : unique_words_) {
        auto id = index.word_id(w);
        unique_ids_.push_back(id ? *id : kNoWord);
        unique_idfs_.push_back(index.idf(w));
        total_idf_ += unique_idfs_.back();
    }
    full_mask_ = unique_words_.size() >= 32
                     ? 0xffffffffu
                     : (std::uint32_t{1} << unique_words_.size()) - 1;
    support_norm_ = std::ldexp(total_idf_, static_cast<int>(q.words.size()));  // 2^|q| IDF(q)

    auto word_bit = [&](const std::string& w) {
        auto it = std::lower_bound(unique_words_.begin(), unique_words_.end(), w);
        return std::uint32_t{1} << (it - unique_words_.begin());
    };
    hint_masks_.resize(partitions_.size());
    selector_masks_.resize(partitions_.size());
    hint_set_sizes_.resize(partitions_.size());
    hint_seqs_.resize(partitions_.size());
    for (std::size_t zi = 0; zi < partitions_.size(); ++zi) {
        std::uint32_t h = 0, s = 0;
        for (std::size_t j = 0; j < q.words.size(); ++j) {
            if (partitions_[zi].is_hint(j))
                h |= word_bit(q.words[j]);
            else
                s |= word_bit(q.words[j]);
        }
        hint_masks_[zi] = h;
        selector_masks_[zi] = s;
        hint_set_sizes_[zi] = static_cast<unsigned>(std::popcount(h));
        hint_seqs_[zi] = hint_sequence(q.words, partitions_[zi]);
    }
}

double QueryFeatureContext::mask_idf(std::uint32_t mask) const {
    double total = 0.0;
    while (mask) {
        unsigned b = static_cast<unsigned>(std::countr_zero(mask));
        total += unique_idfs_[b];
        mask &= mask - 1;
    }
    return total;
}

std::uint32_t QueryFeatureContext::word_mask_of(WordId w) const {
    if (w == kNoWord) return 0;
    for (std::size_t i = 0; i < unique_ids_.size(); ++i)
        if (unique_ids_[i] == w) return std::uint32_t{1} << i;
    return 0;
}

EntityFeatureExtractor::EntityFeatureExtractor(const QueryFeatureContext& ctx, EntityId e)
    : ctx_(&ctx), entity_(e) {
    const SnippetIndex& index = ctx.index();
    const auto& mentions = index.mentions_of(e);
    snippet_count_ = mentions.size();

    std::map<std::uint32_t, std::uint32_t> counts;
    for (const Snippet& s : mentions) {
        auto [lo, hi] = index.window_range(s, index.window_width());
        std::uint32_t mask = 0;
        const auto& tokens = index.doc_tokens(s.doc);
        for (std::uint32_t i = lo; i < hi; ++i) mask |= ctx.word_mask_of(tokens[i]);
        ++counts[mask];
    }
    mask_counts_.assign(counts.begin(), counts.end());

    if (ctx.support_norm() > 0.0) {
        double sum = 0.0;
        for (const auto& [mask, count] : mask_counts_) sum += ctx.mask_idf(mask) * count;
        phi1_support_ = sum / ctx.support_norm();
    }

    const Lemma& name = ctx.catalog().name_phrase(e);
    if (!name.tokens.empty()) {
        const auto& uniq = ctx.unique_words();
        self_mention_ = std::all_of(name.tokens.begin(), name.tokens.end(), [&](const auto& w) {
            return std::binary_search(uniq.begin(), uniq.end(), w);
        });
    }

    phi4_ready_.assign(ctx.partitions().size(), 0);
    phi4_cache_.resize(ctx.partitions().size());
}

EntityFeatureExtractor::Phi4 EntityFeatureExtractor::phi4_for(std::size_t z_index) {
    if (phi4_ready_[z_index]) return phi4_cache_[z_index];
    Phi4 out{0.0, 0.0, 0.0};
    const std::uint32_t s = ctx_->selector_mask_of(z_index);
    const double norm = ctx_->support_norm();
    if (snippet_count_ > 0) {
        std::uint32_t covering = 0, exact_full = 0;
        double subset_idf = 0.0;
        for (const auto& [c, count] : mask_counts_) {
            if ((c & s) == s) covering += count;
            if (c != s && (c & s) == c) subset_idf += ctx_->mask_idf(c) * count;
            if (c == ctx_->full_mask()) exact_full += count;
        }
        if (norm > 0.0) {
            out.cover = ctx_->mask_idf(s) * covering / norm;
            out.subset = subset_idf / norm;
        }
        out.exact_full = static_cast<double>(exact_full) / static_cast<double>(snippet_count_);
    }
    phi4_cache_[z_index] = out;
    phi4_ready_[z_index] = 1;
    return out;
}

FeatureVector EntityFeatureExtractor::extract(TypeId t, std::size_t z_index) {
    FeatureVector v{};
    v[kPhi1Support] = phi1_support_;
    v[kPhi1SelfMention] = self_mention_ ? 1.0 : 0.0;

    auto p2 = phi2_cache_.find(t);
    if (p2 == phi2_cache_.end()) {
        double prior = ctx_->priors().prior(ctx_->catalog(), t, entity_);
        double generality = ctx_->catalog().type_generality(t);
        p2 = phi2_cache_.emplace(t, std::make_pair(prior, generality)).first;
    }
    v[kPhi2Prior] = p2->second.first;
    v[kPhi2Generality] = p2->second.second;

    const std::uint32_t hint_mask = ctx_->hint_mask_of(z_index);
    auto lm = lm_cache_.find({t, hint_mask});
    if (lm == lm_cache_.end()) {
        std::vector<std::string> hints;
        std::uint32_t m = hint_mask;
        while (m) {
            unsigned b = static_cast<unsigned>(std::countr_zero(m));
            hints.push_back(ctx_->unique_words()[b]);
            m &= m - 1;
        }
        double value = hint_given_type(hints, ctx_->query().words, t, ctx_->catalog(),
                                       ctx_->beta());
        lm = lm_cache_.emplace(std::make_pair(t, hint_mask), value).first;
    }
    v[kPhi3Lm] = lm->second;

    const auto& seq = ctx_->hint_seq(z_index);
    bool exact = false;
    if (!seq.empty()) {
        for (const Lemma& l : ctx_->catalog().lemmas(t)) {
            if (l.tokens == seq) {
                exact = true;
                break;
            }
        }
    }
    v[kPhi3Exact] = exact ? 1.0 : 0.0;

    unsigned h = ctx_->hint_set_size(z_index);
    v[kPhi3LenLt1] = h < 1 ? 1.0 : 0.0;
    v[kPhi3LenLt2] = h < 2 ? 1.0 : 0.0;
    v[kPhi3LenLt3] = h < 3 ? 1.0 : 0.0;

    Phi4 p4 = phi4_for(z_index);
    v[kPhi4Cover] = p4.cover;
    v[kPhi4Subset] = p4.subset;
    v[kPhi4ExactFull] = p4.exact_full;
    return v;
}

namespace {

// A degenerate prior table for the single-call forms that do not take one.
std::size_t find_z_index(const QueryFeatureContext& ctx, SwitchVector z) {
    for (std::size_t zi = 0; zi < ctx.partitions().size(); ++zi)
        if (ctx.partitions()[zi] == z) return zi;
    throw Error("switch-length-mismatch", "switch vector not in partition enumeration");
}

}  // namespace

std::array<double, 2> phi1(const Query& q, EntityId e, const SnippetIndex& index,
                           const Catalog& catalog) {
    TypePriorTable priors(catalog, 0.5);
    QueryFeatureContext ctx(q, catalog, index, priors, 0.5, PartitionMode::exhaustive);
    EntityFeatureExtractor ex(ctx, e);
    return {ex.support(), ex.self_mention() ? 1.0 : 0.0};
}

std::array<double, 2> phi2(TypeId t, EntityId e, const TypePriorTable& priors,
                           const Catalog& catalog) {
    return {priors.prior(catalog, t, e), catalog.type_generality(t)};
}

std::array<double, 5> phi3(const Query& q, SwitchVector z, TypeId t, const Catalog& catalog,
                           double beta) {
    auto hints = hint_words(q.words, z);
    auto seq = hint_sequence(q.words, z);
    double lm = hint_given_type(hints, q.words, t, catalog, beta);
    bool exact = false;
    if (!seq.empty())
        for (const Lemma& l : catalog.lemmas(t))
            if (l.tokens == seq) exact = true;
    unsigned h = static_cast<unsigned>(hints.size());
    return {lm, exact ? 1.0 : 0.0, h < 1 ? 1.0 : 0.0, h < 2 ? 1.0 : 0.0, h < 3 ? 1.0 : 0.0};
}

std::array<double, 3> phi4(const Query& q, SwitchVector z, EntityId e,
                           const SnippetIndex& index) {
    // phi4 does not depend on the catalog, so build the word masks directly.
    std::vector<std::string> uniq = q.words;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    double total_idf = 0.0;
    std::vector<double> idfs;
    for (const auto& w : uniq) {
        idfs.push_back(index.idf(w));
        total_idf += idfs.back();
    }
    double norm = std::ldexp(total_idf, static_cast<int>(q.words.size()));
    std::uint32_t full = (std::uint32_t{1} << uniq.size()) - 1;

    auto set_mask = [&](const std::vector<std::string>& words) {
        std::uint32_t m = 0;
        for (const auto& w : words) {
            auto it = std::lower_bound(uniq.begin(), uniq.end(), w);
            if (it != uniq.end() && *it == w) m |= std::uint32_t{1} << (it - uniq.begin());
        }
        return m;
    };
    auto mask_idf = [&](std::uint32_t m) {
        double t = 0.0;
        while (m) {
            unsigned b = static_cast<unsigned>(std::countr_zero(m));
            t += idfs[b];
            m &= m - 1;
        }
        return t;
    };

    const std::uint32_t s = set_mask(selector_words(q.words, z));
    auto snippets = index.snippets_of(e);
    if (!snippets.known) return {0.0, 0.0, 0.0};
    std::uint32_t covering = 0, exact_full = 0;
    double subset_idf = 0.0;
    for (const auto& words : snippets.snippets) {
        std::uint32_t c = set_mask(words);
        if ((c & s) == s) ++covering;
        if (c != s && (c & s) == c) subset_idf += mask_idf(c);
        if (c == full) ++exact_full;
    }
    double cover = norm > 0.0 ? mask_idf(s) * covering / norm : 0.0;
    double subset = norm > 0.0 ? subset_idf / norm : 0.0;
    double exact = static_cast<double>(exact_full) / static_cast<double>(snippets.snippets.size());
    return {cover, subset, exact};
}

FeatureVector phi(const Query& q, EntityId e, TypeId t, SwitchVector z, const Catalog& catalog,
                  const SnippetIndex& index, const TypePriorTable& priors, double beta) {
    QueryFeatureContext ctx(q, catalog, index, priors, beta, PartitionMode::exhaustive);
    EntityFeatureExtractor ex(ctx, e);
    return ex.extract(t, find_z_index(ctx, z));
}

}  // namespace ter
