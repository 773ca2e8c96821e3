#include "ter/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <vector>

#include <json.hpp>

#include "ter/error.hpp"
#include "ter/rng.hpp"

namespace ter {

namespace {

const char* kAdjectives[] = {
    "french",   "german",  "italian",  "spanish",  "dutch",    "russian",
    "polish",   "swedish", "norwegian", "danish",  "turkish",  "persian",
    "ancient",  "medieval", "modern",  "famous",   "northern", "southern",
    "eastern",  "western", "coastal",  "alpine",   "tropical", "nordic",
};
const char* kNouns[] = {"painters", "rivers", "teams", "languages", "mountains"};
constexpr int kDomains = 5;
constexpr int kMaxLeaves = 24;

const char* kSyllables[] = {"ba", "ne", "ari", "ko", "lu", "mir", "ta", "ves",
                            "or", "pel", "su", "dra", "fi", "gon", "hy", "zel"};

std::string pseudoword(Rng& rng) {
    std::string w;
    int n = 3 + static_cast<int>(rng.uniform_below(2));
    for (int i = 0; i < n; ++i) w += kSyllables[rng.uniform_below(std::size(kSyllables))];
    return w;
}

std::vector<std::string> pseudoword_pool(Rng& rng, std::size_t count) {
    std::set<std::string> seen;
    std::vector<std::string> pool;
    while (pool.size() < count) {
        std::string w = pseudoword(rng);
        if (seen.insert(w).second) pool.push_back(std::move(w));
    }
    return pool;
}

struct Doc {
    std::string id;
    std::vector<std::string> tokens;
    std::size_t mention_begin = 0;
    std::string entity;
};

}  // namespace

SynthPaths write_benchmark(const std::filesystem::path& dir, const SynthParams& p) {
    if (p.n_types < 7 || p.n_types > 6 + kMaxLeaves)
        throw Error("bad-config", "n_types must lie in [7, 30]");
    const int n_leaves = p.n_types - 1 - kDomains;
    if (p.n_entities < n_leaves) throw Error("bad-config", "need at least one entity per leaf");
    if (p.n_queries < 1) throw Error("bad-config", "need at least one query");

    std::filesystem::create_directories(dir);
    Rng rng(p.seed);

    // -- type system
    struct Leaf {
        std::string name;   // french_painters
        std::string lemma;  // "french painters"
        int domain;
        std::string adjective;
    };
    std::vector<Leaf> leaves(n_leaves);
    for (int i = 0; i < n_leaves; ++i) {
        int d = i % kDomains;
        leaves[i] = {std::string(kAdjectives[i]) + "_" + kNouns[d],
                     std::string(kAdjectives[i]) + " " + kNouns[d], d, kAdjectives[i]};
    }

    // -- entities
    struct Ent {
        std::string name;
        int leaf;
    };
    auto name_pool = pseudoword_pool(rng, static_cast<std::size_t>(p.n_entities));
    std::vector<Ent> entities(p.n_entities);
    std::vector<std::vector<int>> leaf_members(n_leaves);
    for (int j = 0; j < p.n_entities; ++j) {
        int leaf = j % n_leaves;
        entities[j] = {name_pool[j] + std::to_string(j), leaf};
        leaf_members[leaf].push_back(j);
    }

    // -- vocabulary
    auto content_pool = pseudoword_pool(rng, static_cast<std::size_t>(3 * p.n_queries) + 8);
    for (auto& w : content_pool) w += "w";  // keep disjoint from entity names
    auto noise_pool = pseudoword_pool(rng, 150);
    for (auto& w : noise_pool) w += "x";
    auto hint_vocab_word = [&]() -> std::string {
        std::size_t i = rng.uniform_below(std::size_t(n_leaves) + kDomains);
        if (i < static_cast<std::size_t>(n_leaves)) return leaves[i].adjective;
        return kNouns[i - n_leaves];
    };

    std::vector<Doc> docs;
    auto make_doc = [&](int entity, const std::vector<std::string>& extra) {
        Doc doc;
        std::size_t n_noise = 8 + rng.uniform_below(6);
        for (std::size_t i = 0; i < n_noise; ++i)
            doc.tokens.push_back(noise_pool[rng.uniform_below(noise_pool.size())]);
        if (rng.uniform01() < 0.15) doc.tokens.push_back(hint_vocab_word());
        for (const auto& w : extra) doc.tokens.push_back(w);
        // Shuffle token order, then place the mention.
        for (std::size_t i = doc.tokens.size(); i > 1; --i)
            std::swap(doc.tokens[i - 1], doc.tokens[rng.uniform_below(i)]);
        std::size_t at = rng.uniform_below(doc.tokens.size() + 1);
        doc.tokens.insert(doc.tokens.begin() + at, entities[entity].name);
        doc.mention_begin = at;
        doc.entity = entities[entity].name;
        docs.push_back(std::move(doc));
    };

    // -- queries with planted evidence
    struct Q {
        std::string qid;
        std::string text;
        std::string gold;
        std::vector<std::string> relevant;
        std::vector<std::string> irrelevant;
    };
    std::vector<Q> queries;
    std::vector<std::vector<std::string>> entity_theme(p.n_entities);

    auto sample_members = [&](int leaf, std::size_t k, const std::set<int>& exclude) {
        std::vector<int> avail;
        for (int j : leaf_members[leaf])
            if (!exclude.count(j)) avail.push_back(j);
        std::vector<int> out;
        for (std::size_t i = 0; i < k && !avail.empty(); ++i) {
            std::size_t pick = rng.uniform_below(avail.size());
            out.push_back(avail[pick]);
            avail.erase(avail.begin() + pick);
        }
        return out;
    };

    for (int qi = 0; qi < p.n_queries; ++qi) {
        Q q;
        char qid[16];
        std::snprintf(qid, sizeof(qid), "q%03d", qi);
        q.qid = qid;

        const int leaf = qi % n_leaves;
        const Leaf& lf = leaves[leaf];
        double kind = rng.uniform01();  // <0.60 full hint, <0.85 domain hint, else none
        const std::string s1 = content_pool[2 * qi];
        const std::string s2 = content_pool[2 * qi + 1];

        std::vector<std::string> hint;
        if (kind < 0.60) {
            hint = {lf.adjective, kNouns[lf.domain]};
            q.gold = lf.name;
        } else if (kind < 0.85) {
            hint = {kNouns[lf.domain]};
            q.gold = kNouns[lf.domain];
        } else {
            q.gold = lf.name;
        }
        if (!hint.empty() && rng.uniform01() < 0.5) {
            q.text = s1 + " " + s2;
            for (const auto& h : hint) q.text += " " + h;
        } else {
            for (const auto& h : hint) q.text += h + " ";
            q.text += s1 + " " + s2;
        }

        auto relevant = sample_members(leaf, 3, {});
        std::set<int> used(relevant.begin(), relevant.end());
        for (int j : relevant) {
            q.relevant.push_back(entities[j].name);
            if (entity_theme[j].empty()) entity_theme[j] = {s1, s2};
            int full = 3;
            for (int d = 0; d < full; ++d) make_doc(j, {s1, s2});
            make_doc(j, {s1});
        }

        // Cross-domain distractors: equally strong selector matches.
        for (int n = 0; n < 3; ++n) {
            int other;
            do {
                other = static_cast<int>(rng.uniform_below(p.n_entities));
            } while (leaves[entities[other].leaf].domain == lf.domain || used.count(other));
            used.insert(other);
            q.irrelevant.push_back(entities[other].name);
            int full = 3 + static_cast<int>(rng.uniform_below(2));
            for (int d = 0; d < full; ++d) make_doc(other, {s1, s2});
        }
        // Same-domain, different leaf: weak matches.
        {
            std::vector<int> pool;
            for (int l = 0; l < n_leaves; ++l)
                if (l != leaf && leaves[l].domain == lf.domain)
                    for (int j : leaf_members[l])
                        if (!used.count(j)) pool.push_back(j);
            for (int n = 0; n < 2 && !pool.empty(); ++n) {
                std::size_t pick = rng.uniform_below(pool.size());
                int j = pool[pick];
                pool.erase(pool.begin() + pick);
                used.insert(j);
                q.irrelevant.push_back(entities[j].name);
                make_doc(j, {s1});
            }
        }
        // Same leaf but not relevant: one weak matcher.
        for (int j : sample_members(leaf, 1, used)) {
            used.insert(j);
            q.irrelevant.push_back(entities[j].name);
            make_doc(j, {s1});
        }

        queries.push_back(std::move(q));
    }

    if (docs.size() > static_cast<std::size_t>(p.n_docs))
        throw Error("bad-config", "planted documents (" + std::to_string(docs.size()) +
                                      ") exceed n_docs");

    // Background documents: cover every entity, then random fill.
    std::size_t background = static_cast<std::size_t>(p.n_docs) - docs.size();
    for (std::size_t b = 0; b < background; ++b) {
        int entity = b < static_cast<std::size_t>(p.n_entities)
                         ? static_cast<int>(b)
                         : static_cast<int>(rng.uniform_below(p.n_entities));
        std::vector<std::string> extra;
        if (rng.uniform01() < 0.20) extra.push_back(hint_vocab_word());
        if (rng.uniform01() < 0.10)
            extra.push_back(content_pool[rng.uniform_below(content_pool.size())]);
        make_doc(entity, extra);
    }
    for (std::size_t d = 0; d < docs.size(); ++d) {
        char id[16];
        std::snprintf(id, sizeof(id), "d%05zu", d);
        docs[d].id = id;
    }

    // -- write files
    SynthPaths paths{dir / "types.tsv",   dir / "entities.tsv",
                     dir / "lemmas.tsv",  dir / "corpus.jsonl",
                     dir / "queries.jsonl", dir / "descriptions.jsonl",
                     dir / "config.toml"};
    auto open = [&](const std::filesystem::path& path) {
        std::ofstream out(path);
        if (!out) throw Error("file-write", "cannot write " + path.string());
        return out;
    };

    {
        auto out = open(paths.types);
        out << "Entity\t\n";
        for (int d = 0; d < kDomains; ++d) out << kNouns[d] << "\tEntity\n";
        for (const Leaf& lf : leaves) out << lf.name << "\t" << kNouns[lf.domain] << "\n";
    }
    {
        auto out = open(paths.entities);
        for (const Ent& e : entities) out << e.name << "\t" << leaves[e.leaf].name << "\n";
    }
    {
        auto out = open(paths.lemmas);
        out << "Entity\tentity\n";
        for (int d = 0; d < kDomains; ++d) out << kNouns[d] << "\t" << kNouns[d] << "\n";
        for (const Leaf& lf : leaves) out << lf.name << "\t" << lf.lemma << "\n";
    }
    {
        auto out = open(paths.corpus);
        for (const Doc& d : docs) {
            nlohmann::json rec;
            rec["doc_id"] = d.id;
            rec["tokens"] = d.tokens;
            rec["mentions"] = nlohmann::json::array(
                {nlohmann::json::array({d.mention_begin, d.mention_begin + 1, d.entity})});
            out << rec.dump() << "\n";
        }
    }
    {
        auto out = open(paths.queries);
        for (const Q& q : queries) {
            nlohmann::json rec;
            rec["qid"] = q.qid;
            rec["text"] = q.text;
            rec["gold_type"] = q.gold;
            rec["relevant"] = q.relevant;
            rec["irrelevant"] = q.irrelevant;
            out << rec.dump() << "\n";
        }
    }
    {
        auto out = open(paths.descriptions);
        for (int j = 0; j < p.n_entities; ++j) {
            const Leaf& lf = leaves[entities[j].leaf];
            std::string text = lf.adjective + " " + kNouns[lf.domain];
            if (!entity_theme[j].empty())
                for (const auto& w : entity_theme[j]) text += " " + w;
            nlohmann::json rec;
            rec["entity_id"] = entities[j].name;
            rec["text"] = text;
            out << rec.dump() << "\n";
        }
    }
    {
        auto out = open(paths.config);
        out << "types-file = \"" << paths.types.string() << "\"\n";
        out << "entities-file = \"" << paths.entities.string() << "\"\n";
        out << "lemmas-file = \"" << paths.lemmas.string() << "\"\n";
        out << "corpus-file = \"" << paths.corpus.string() << "\"\n";
        out << "queries-file = \"" << paths.queries.string() << "\"\n";
        out << "descriptions-file = \"" << paths.descriptions.string() << "\"\n";
        out << "index-file = \"" << (dir / "index.bin").string() << "\"\n";
        out << "model-file = \"" << (dir / "model.txt").string() << "\"\n";
        out << "theta = " << p.theta << "\n";
        out << "window = " << p.window << "\n";
        out << "seed = " << p.seed << "\n";
    }
    return paths;
}

}  // namespace ter
