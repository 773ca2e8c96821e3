#include "ter/corpus_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ter/error.hpp"
#include "ter/text.hpp"

namespace ter {

std::vector<WandTerm> parse_wand_terms(std::string_view text) {
    std::vector<WandTerm> terms;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '"') {
            auto close = text.find('"', i + 1);
            if (close == std::string_view::npos)
                throw Error("bad-query", "unterminated phrase quote");
            auto words = tokenize(text.substr(i + 1, close - i - 1));
            if (!words.empty()) terms.push_back({std::move(words)});
            i = close + 1;
        } else {
            auto next = text.find('"', i);
            if (next == std::string_view::npos) next = text.size();
            for (auto& w : tokenize(text.substr(i, next - i))) terms.push_back({{std::move(w)}});
            i = next;
        }
    }
    return terms;
}

std::optional<WordId> SnippetIndex::word_id(std::string_view w) const {
    auto it = word_ids_.find(std::string(w));
    if (it == word_ids_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t SnippetIndex::doc_freq(std::string_view w) const {
    auto id = word_id(w);
    return id ? doc_freq_[*id] : 0;
}

double SnippetIndex::idf(WordId w) const {
    if (docs_.empty()) return 0.0;
    double df = w == kNoWord ? 1.0 : std::max<std::uint32_t>(doc_freq_[w], 1);
    return std::log(static_cast<double>(docs_.size()) / df);
}

double SnippetIndex::idf(std::string_view w) const {
    auto id = word_id(w);
    return idf(id ? *id : kNoWord);
}

double SnippetIndex::term_idf(const WandTerm& term) const {
    double total = 0.0;
    for (const auto& w : term.words) total += idf(w);
    return total;
}

double SnippetIndex::background_word_prob(WordId w) const {
    if (docs_.empty()) return 0.0;
    if (w == kNoWord) return 0.0;
    return static_cast<double>(doc_freq_[w]) / static_cast<double>(docs_.size());
}

double SnippetIndex::background_word_prob(std::string_view w) const {
    auto id = word_id(w);
    return id ? background_word_prob(*id) : 0.0;
}

std::uint32_t SnippetIndex::mention_count(EntityId e) const {
    return idx(e) < mention_counts_.size() ? mention_counts_[idx(e)] : 0;
}

std::uint32_t SnippetIndex::cooccur_count(EntityId e, WordId w) const {
    if (idx(e) >= cooccur_.size() || w == kNoWord) return 0;
    const auto& row = cooccur_[idx(e)];
    auto it = std::lower_bound(row.begin(), row.end(), w,
                               [](const auto& p, WordId key) { return p.first < key; });
    return (it != row.end() && it->first == w) ? it->second : 0;
}

std::uint32_t SnippetIndex::cooccur_count(EntityId e, std::string_view w) const {
    auto id = word_id(w);
    return id ? cooccur_count(e, *id) : 0;
}

const std::vector<Snippet>& SnippetIndex::mentions_of(EntityId e) const {
    static const std::vector<Snippet> empty;
    return idx(e) < entity_mentions_.size() ? entity_mentions_[idx(e)] : empty;
}

std::pair<std::uint32_t, std::uint32_t> SnippetIndex::window_range(const Snippet& s,
                                                                   std::uint32_t width) const {
    const auto& tokens = docs_[s.doc].tokens;
    std::uint32_t lo = s.begin > width ? s.begin - width : 0;
    std::uint32_t hi = std::min<std::uint32_t>(static_cast<std::uint32_t>(tokens.size()),
                                               s.end + width);
    return {lo, hi};
}

std::vector<std::string> SnippetIndex::window_words(const Snippet& s) const {
    auto [lo, hi] = window_range(s, window_width_);
    std::set<std::string> uniq;
    for (std::uint32_t i = lo; i < hi; ++i) uniq.insert(words_[docs_[s.doc].tokens[i]]);
    return {uniq.begin(), uniq.end()};
}

EntitySnippets SnippetIndex::snippets_of(EntityId e,
                                         const std::vector<std::string>* restriction) const {
    EntitySnippets out;
    if (idx(e) >= entity_mentions_.size() || entity_mentions_[idx(e)].empty()) return out;
    out.known = true;
    out.mention_count = mention_counts_[idx(e)];
    std::vector<std::string> sorted_restriction;
    if (restriction) {
        sorted_restriction = *restriction;
        std::sort(sorted_restriction.begin(), sorted_restriction.end());
        sorted_restriction.erase(
            std::unique(sorted_restriction.begin(), sorted_restriction.end()),
            sorted_restriction.end());
    }
    for (const Snippet& s : entity_mentions_[idx(e)]) {
        auto window = window_words(s);
        if (restriction) {
            std::vector<std::string> reduced;
            std::set_intersection(window.begin(), window.end(), sorted_restriction.begin(),
                                  sorted_restriction.end(), std::back_inserter(reduced));
            out.snippets.push_back(std::move(reduced));
        } else {
            out.snippets.push_back(std::move(window));
        }
    }
    return out;
}

bool SnippetIndex::window_matches(const DocRecord& doc, std::uint32_t lo, std::uint32_t hi,
                                  const std::vector<std::vector<WordId>>& term_ids,
                                  std::size_t term_index) const {
    const auto& ids = term_ids[term_index];
    if (ids.size() == 1) {
        if (ids[0] == kNoWord) return false;
        for (std::uint32_t i = lo; i < hi; ++i)
            if (doc.tokens[i] == ids[0]) return true;
        return false;
    }
    if (hi - lo < ids.size()) return false;
    for (const WordId w : ids)
        if (w == kNoWord) return false;
    for (std::uint32_t start = lo; start + ids.size() <= hi; ++start) {
        bool all = true;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (doc.tokens[start + k] != ids[k]) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

std::vector<Snippet> SnippetIndex::retrieve(const Catalog& catalog, const WandQuery& q) const {
    if (idx(q.target_type) >= catalog.type_count())
        throw Error("unknown-type", "retrieval target type out of range");
    if (q.terms.empty()) throw Error("bad-query", "WAND query has no terms");

    // Term IDs and IDFs; phrase IDF adds constituent word IDFs.
    std::vector<std::vector<WordId>> term_ids(q.terms.size());
    std::vector<double> term_idfs(q.terms.size());
    double total_idf = 0.0;
    for (std::size_t t = 0; t < q.terms.size(); ++t) {
        for (const auto& w : q.terms[t].words) {
            auto id = word_id(w);
            term_ids[t].push_back(id ? *id : kNoWord);
        }
        term_idfs[t] = term_idf(q.terms[t]);
        total_idf += term_idfs[t];
    }
    const double threshold = q.theta * total_idf;

    // Document-at-a-time over the union of term posting lists. A document is
    // fully evaluated only when the IDF mass of terms it contains can reach
    // the threshold (weak-AND skip); a phrase can only match where all its
    // words appear.
    struct Cursor {
        const std::vector<DocPosting>* list;
        std::size_t pos = 0;
    };
    // One cursor per (term, word); a term is "present" in a doc when all its
    // word cursors sit on that doc.
    std::vector<std::vector<Cursor>> cursors(q.terms.size());
    for (std::size_t t = 0; t < q.terms.size(); ++t) {
        for (WordId w : term_ids[t]) {
            Cursor c;
            static const std::vector<DocPosting> empty;
            c.list = (w == kNoWord) ? &empty : &postings_[w];
            cursors[t].push_back(c);
        }
    }

    std::vector<Snippet> out;
    const std::uint32_t n_docs = static_cast<std::uint32_t>(docs_.size());
    for (;;) {
        // Next candidate document: smallest doc any term could fully match.
        std::uint32_t candidate = n_docs;
        for (std::size_t t = 0; t < q.terms.size(); ++t) {
            // Advance within the term: all word cursors to a common doc.
            std::uint32_t doc = 0;
            bool alive = true;
            for (;;) {
                std::uint32_t high = doc;
                for (auto& c : cursors[t]) {
                    while (c.pos < c.list->size() && (*c.list)[c.pos].doc < high) ++c.pos;
                    if (c.pos >= c.list->size()) {
                        alive = false;
                        break;
                    }
                    high = std::max(high, (*c.list)[c.pos].doc);
                }
                if (!alive) break;
                bool aligned = true;
                for (auto& c : cursors[t])
                    if ((*c.list)[c.pos].doc != high) aligned = false;
                doc = high;
                if (aligned) break;
            }
            if (alive) candidate = std::min(candidate, doc);
        }
        if (candidate >= n_docs) break;

        // Upper bound for this doc: IDF of terms present in it.
        double ub = 0.0;
        std::vector<bool> term_in_doc(q.terms.size(), false);
        for (std::size_t t = 0; t < q.terms.size(); ++t) {
            bool present = !cursors[t].empty();
            for (auto& c : cursors[t])
                if (c.pos >= c.list->size() || (*c.list)[c.pos].doc != candidate) present = false;
            if (present) {
                term_in_doc[t] = true;
                ub += term_idfs[t];
            }
        }

        if (ub >= threshold) {
            const DocRecord& doc = docs_[candidate];
            for (const Snippet& m : doc.mentions) {
                if (!catalog.has_type(m.entity, q.target_type)) continue;
                auto [lo, hi] = window_range(m, q.window_width);
                double matched = 0.0;
                bool any = false;
                for (std::size_t t = 0; t < q.terms.size(); ++t) {
                    if (!term_in_doc[t]) continue;
                    if (window_matches(doc, lo, hi, term_ids, t)) {
                        matched += term_idfs[t];
                        any = true;
                    }
                }
                if (any && matched >= threshold) out.push_back(m);
            }
        }

        // Step every cursor sitting on the candidate past it.
        for (auto& term : cursors)
            for (auto& c : term)
                while (c.pos < c.list->size() && (*c.list)[c.pos].doc <= candidate) ++c.pos;
    }
    return out;
}

std::vector<EntityId> SnippetIndex::candidate_pool(const Catalog& catalog,
                                                   const WandQuery& q) const {
    DynamicBitset seen(catalog.entity_count());
    for (const Snippet& s : retrieve(catalog, q)) seen.set(idx(s.entity));
    std::vector<EntityId> pool;
    seen.for_each([&](std::size_t e) { pool.push_back(entity_id(e)); });
    return pool;
}

void SnippetIndex::build_derived() {
    const std::size_t n_words = words_.size();
    doc_freq_.assign(n_words, 0);
    postings_.assign(n_words, {});

    std::vector<WordId> seen;
    for (std::uint32_t d = 0; d < docs_.size(); ++d) {
        const auto& tokens = docs_[d].tokens;
        seen.clear();
        for (std::uint32_t p = 0; p < tokens.size(); ++p) {
            WordId w = tokens[p];
            auto& plist = postings_[w];
            if (plist.empty() || plist.back().doc != d) {
                plist.push_back({d, {}});
                seen.push_back(w);
            }
            plist.back().positions.push_back(p);
        }
        for (WordId w : seen) ++doc_freq_[w];
    }

    const std::size_t n_entities = entity_mentions_.size();
    mention_counts_.assign(n_entities, 0);
    cooccur_.assign(n_entities, {});
    total_mentions_ = 0;
    std::vector<std::unordered_map<WordId, std::uint32_t>> cooccur_maps(n_entities);
    for (std::size_t e = 0; e < n_entities; ++e) {
        mention_counts_[e] = static_cast<std::uint32_t>(entity_mentions_[e].size());
        total_mentions_ += mention_counts_[e];
        for (const Snippet& s : entity_mentions_[e]) {
            auto [lo, hi] = window_range(s, window_width_);
            std::set<WordId> uniq(docs_[s.doc].tokens.begin() + lo,
                                  docs_[s.doc].tokens.begin() + hi);
            for (WordId w : uniq) ++cooccur_maps[e][w];
        }
        auto& row = cooccur_[e];
        row.assign(cooccur_maps[e].begin(), cooccur_maps[e].end());
        std::sort(row.begin(), row.end());
    }
}

SnippetIndex build_index(const std::filesystem::path& corpus_file, const Catalog& catalog,
                         std::uint32_t window_width) {
    std::ifstream in(corpus_file);
    if (!in) throw Error("file-missing", "cannot open " + corpus_file.string());

    SnippetIndex index;
    index.window_width_ = window_width;
    index.catalog_fingerprint_ = catalog.fingerprint();
    index.entity_mentions_.assign(catalog.entity_count(), {});

    auto intern_word = [&](const std::string& w) {
        auto it = index.word_ids_.find(w);
        if (it != index.word_ids_.end()) return it->second;
        WordId id = static_cast<WordId>(index.words_.size());
        index.words_.push_back(w);
        index.word_ids_.emplace(w, id);
        return id;
    };

    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        auto fail = [&](const std::string& what) {
            return Error("bad-record", corpus_file.filename().string() + " line " +
                                           std::to_string(number) + ": " + what);
        };
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw fail(e.what());
        }
        if (!rec.contains("doc_id") || !rec.contains("tokens")) throw fail("missing doc fields");

        SnippetIndex::DocRecord doc;
        doc.id = rec.at("doc_id").get<std::string>();
        for (const auto& tok : rec.at("tokens"))
            doc.tokens.push_back(intern_word(lowercase(tok.get<std::string>())));

        std::uint32_t doc_index = static_cast<std::uint32_t>(index.docs_.size());
        if (rec.contains("mentions")) {
            for (const auto& m : rec.at("mentions")) {
                if (!m.is_array() || m.size() != 3) throw fail("malformed mention");
                std::int64_t begin = m.at(0).get<std::int64_t>();
                std::int64_t end = m.at(1).get<std::int64_t>();
                std::string entity_name = m.at(2).get<std::string>();
                if (begin < 0 || end <= begin ||
                    end > static_cast<std::int64_t>(doc.tokens.size()))
                    throw fail("mention span out of bounds");
                auto e = catalog.find_entity(entity_name);
                if (!e)
                    throw Error("unknown-entity", corpus_file.filename().string() + " line " +
                                                      std::to_string(number) +
                                                      ": unknown entity " + entity_name);
                doc.mentions.push_back({*e, doc_index, static_cast<std::uint32_t>(begin),
                                        static_cast<std::uint32_t>(end)});
            }
            std::sort(doc.mentions.begin(), doc.mentions.end(),
                      [](const Snippet& a, const Snippet& b) {
                          return std::tie(a.begin, a.end, a.entity) <
                                 std::tie(b.begin, b.end, b.entity);
                      });
            for (std::size_t i = 1; i < doc.mentions.size(); ++i)
                if (doc.mentions[i].begin < doc.mentions[i - 1].end)
                    throw fail("overlapping mention spans");
        }
        for (const Snippet& m : doc.mentions) index.entity_mentions_[idx(m.entity)].push_back(m);
        index.docs_.push_back(std::move(doc));
    }

    index.build_derived();
    return index;
}

}  // namespace ter
