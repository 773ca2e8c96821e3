#include "ter/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ter/error.hpp"
#include "ter/rng.hpp"
#include "ter/text.hpp"

namespace ter {

std::string Lemma::text() const { return join(tokens); }

namespace {

struct TsvLine {
    std::string first;
    std::string second;
    std::size_t number;
};

// Reads `first<TAB>second` records; blank lines skipped, CR stripped.
std::vector<TsvLine> read_tsv(const std::filesystem::path& path, bool second_may_be_empty,
                              const char* error_code) {
    std::ifstream in(path);
    if (!in) throw Error("file-missing", "cannot open " + path.string());
    std::vector<TsvLine> lines;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            if (!second_may_be_empty)
                throw Error(error_code, path.filename().string() + " line " +
                                            std::to_string(number) + ": expected two fields");
            lines.push_back({line, "", number});
            continue;
        }
        lines.push_back({line.substr(0, tab), line.substr(tab + 1), number});
    }
    return lines;
}

std::string line_ref(const std::filesystem::path& path, std::size_t number) {
    return path.filename().string() + " line " + std::to_string(number);
}

}  // namespace

std::optional<TypeId> Catalog::find_type(std::string_view name) const {
    auto it = type_by_name_.find(std::string(name));
    if (it == type_by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<EntityId> Catalog::find_entity(std::string_view name) const {
    auto it = entity_by_name_.find(std::string(name));
    if (it == entity_by_name_.end()) return std::nullopt;
    return it->second;
}

void Catalog::check_type(TypeId t) const {
    if (idx(t) >= type_count()) throw Error("unknown-type", "type id out of range");
}

void Catalog::check_entity(EntityId e) const {
    if (idx(e) >= entity_count()) throw Error("unknown-entity", "entity id out of range");
}

bool Catalog::has_type(EntityId e, TypeId t) const {
    check_entity(e);
    check_type(t);
    return entity_ancestors_[idx(e)].test(idx(t));
}

std::vector<TypeId> Catalog::types_of(EntityId e) const {
    check_entity(e);
    std::vector<TypeId> out;
    entity_ancestors_[idx(e)].for_each([&](std::size_t t) { out.push_back(type_id(t)); });
    return out;
}

const DynamicBitset& Catalog::ancestor_mask(EntityId e) const {
    check_entity(e);
    return entity_ancestors_[idx(e)];
}

double Catalog::type_generality(TypeId t) const {
    check_type(t);
    if (entity_count() == 0) return 0.0;
    return static_cast<double>(type_extent_[idx(t)]) / static_cast<double>(entity_count());
}

std::size_t Catalog::type_extent(TypeId t) const {
    check_type(t);
    return type_extent_[idx(t)];
}

double Catalog::lemma_background(const std::string& w) const {
    auto it = lemma_word_types_.find(w);
    if (it == lemma_word_types_.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(type_count());
}

const std::vector<std::string>& Catalog::lemma_vocabulary(TypeId t) const {
    check_type(t);
    return type_vocab_[idx(t)];
}

std::vector<EntityId> Catalog::entities_of(TypeId t) const {
    check_type(t);
    std::vector<EntityId> out;
    for (std::size_t e = 0; e < entity_count(); ++e)
        if (entity_ancestors_[e].test(idx(t))) out.push_back(entity_id(e));
    return out;
}

Catalog load_catalog(const std::filesystem::path& types_file,
                     const std::filesystem::path& entities_file,
                     const std::filesystem::path& lemmas_file) {
    Catalog cat;

    auto intern_type = [&](const std::string& name) {
        auto it = cat.type_by_name_.find(name);
        if (it != cat.type_by_name_.end()) return it->second;
        TypeId t = type_id(cat.type_names_.size());
        cat.type_names_.push_back(name);
        cat.type_by_name_.emplace(name, t);
        return t;
    };

    // -- types.tsv
    auto type_lines = read_tsv(types_file, /*second_may_be_empty=*/true, "bad-record");
    std::optional<TypeId> root;
    struct Edge {
        TypeId child, parent;
        std::size_t line;
    };
    std::vector<Edge> edges;
    for (const auto& l : type_lines) {
        if (l.first.empty())
            throw Error("bad-record", line_ref(types_file, l.number) + ": empty type id");
        TypeId child = intern_type(l.first);
        if (l.second.empty()) {
            if (root && *root != child)
                throw Error("catalog-multiple-roots",
                            line_ref(types_file, l.number) + ": second root " + l.first);
            root = child;
        } else {
            TypeId parent = intern_type(l.second);
            edges.push_back({child, parent, l.number});
        }
    }
    if (!root) throw Error("catalog-no-root", types_file.string() + ": no root type declared");
    cat.root_ = *root;

    const std::size_t n_types = cat.type_names_.size();
    cat.parents_.assign(n_types, {});
    for (const auto& e : edges) {
        auto& ps = cat.parents_[idx(e.child)];
        if (std::find(ps.begin(), ps.end(), e.parent) == ps.end()) ps.push_back(e.parent);
    }
    // Parentless types (other than the root) attach to the root.
    for (std::size_t t = 0; t < n_types; ++t) {
        if (t != idx(cat.root_) && cat.parents_[t].empty())
            cat.parents_[t].push_back(cat.root_);
    }
    if (!cat.parents_[idx(cat.root_)].empty())
        throw Error("catalog-cycle", types_file.string() + ": root " +
                                         cat.type_name(cat.root_) + " has a parent");

    // Cycle check, iterative DFS with colors.
    {
        std::vector<int> color(n_types, 0);  // 0 new, 1 on stack, 2 done
        std::vector<std::pair<std::size_t, std::size_t>> stack;
        for (std::size_t start = 0; start < n_types; ++start) {
            if (color[start] != 0) continue;
            stack.push_back({start, 0});
            color[start] = 1;
            while (!stack.empty()) {
                auto& [node, next] = stack.back();
                if (next < cat.parents_[node].size()) {
                    std::size_t parent = idx(cat.parents_[node][next++]);
                    if (color[parent] == 1) {
                        // Find the edge's declared line for the message.
                        std::size_t at = 0;
                        for (const auto& e : edges)
                            if (idx(e.child) == node && idx(e.parent) == parent) at = e.line;
                        throw Error("catalog-cycle",
                                    line_ref(types_file, at) + ": subtype cycle through " +
                                        cat.type_names_[node] + " and " + cat.type_names_[parent]);
                    }
                    if (color[parent] == 0) {
                        color[parent] = 1;
                        stack.push_back({parent, 0});
                    }
                } else {
                    color[node] = 2;
                    stack.pop_back();
                }
            }
        }
    }

    // -- entities.tsv
    auto entity_lines = read_tsv(entities_file, /*second_may_be_empty=*/true, "bad-record");
    auto intern_entity = [&](const std::string& name) {
        auto it = cat.entity_by_name_.find(name);
        if (it != cat.entity_by_name_.end()) return it->second;
        EntityId e = entity_id(cat.entity_names_.size());
        cat.entity_names_.push_back(name);
        cat.entity_by_name_.emplace(name, e);
        cat.direct_types_.emplace_back();
        return e;
    };
    for (const auto& l : entity_lines) {
        if (l.first.empty())
            throw Error("bad-record", line_ref(entities_file, l.number) + ": empty entity id");
        if (l.second.empty())
            throw Error("entity-no-type",
                        line_ref(entities_file, l.number) + ": entity " + l.first + " has no type");
        auto t = cat.find_type(l.second);
        if (!t)
            throw Error("dangling-reference", line_ref(entities_file, l.number) +
                                                  ": unknown type " + l.second);
        EntityId e = intern_entity(l.first);
        auto& ts = cat.direct_types_[idx(e)];
        if (std::find(ts.begin(), ts.end(), *t) == ts.end()) ts.push_back(*t);
    }

    // -- lemmas.tsv
    cat.lemmas_.assign(n_types, {});
    auto lemma_lines = read_tsv(lemmas_file, /*second_may_be_empty=*/true, "bad-record");
    for (const auto& l : lemma_lines) {
        auto t = cat.find_type(l.first);
        if (!t)
            throw Error("dangling-reference",
                        line_ref(lemmas_file, l.number) + ": unknown type " + l.first);
        Lemma lemma{tokenize(l.second)};
        if (lemma.tokens.empty())
            throw Error("bad-record", line_ref(lemmas_file, l.number) + ": empty lemma");
        auto& ls = cat.lemmas_[idx(*t)];
        if (std::find(ls.begin(), ls.end(), lemma) == ls.end()) ls.push_back(std::move(lemma));
    }
    {
        Lemma root_lemma{{"entity"}};
        auto& ls = cat.lemmas_[idx(cat.root_)];
        if (std::find(ls.begin(), ls.end(), root_lemma) == ls.end())
            ls.push_back(std::move(root_lemma));
    }
    for (std::size_t t = 0; t < n_types; ++t) {
        if (cat.lemmas_[t].empty())
            throw Error("type-no-lemma", lemmas_file.filename().string() + ": type " +
                                             cat.type_names_[t] + " has no lemma");
    }

    // -- closures
    cat.type_ancestors_.assign(n_types, DynamicBitset(n_types));
    {
        // Process in topological order (parents before children).
        std::vector<int> state(n_types, 0);
        std::vector<std::pair<std::size_t, std::size_t>> stack;
        for (std::size_t start = 0; start < n_types; ++start) {
            if (state[start] == 2) continue;
            stack.push_back({start, 0});
            state[start] = 1;
            while (!stack.empty()) {
                auto& [node, next] = stack.back();
                if (next < cat.parents_[node].size()) {
                    std::size_t parent = idx(cat.parents_[node][next++]);
                    if (state[parent] != 2) {
                        state[parent] = 1;
                        stack.push_back({parent, 0});
                    }
                } else {
                    cat.type_ancestors_[node].set(node);
                    for (TypeId p : cat.parents_[node])
                        cat.type_ancestors_[node] |= cat.type_ancestors_[idx(p)];
                    state[node] = 2;
                    stack.pop_back();
                }
            }
        }
    }

    const std::size_t n_entities = cat.entity_names_.size();
    cat.entity_ancestors_.assign(n_entities, DynamicBitset(n_types));
    cat.type_extent_.assign(n_types, 0);
    for (std::size_t e = 0; e < n_entities; ++e) {
        for (TypeId t : cat.direct_types_[e]) cat.entity_ancestors_[e] |= cat.type_ancestors_[idx(t)];
        cat.entity_ancestors_[e].for_each([&](std::size_t t) { ++cat.type_extent_[t]; });
    }

    // -- lemma vocabulary and background counts
    cat.type_vocab_.assign(n_types, {});
    for (std::size_t t = 0; t < n_types; ++t) {
        std::set<std::string> vocab;
        for (const Lemma& l : cat.lemmas_[t]) vocab.insert(l.tokens.begin(), l.tokens.end());
        cat.type_vocab_[t].assign(vocab.begin(), vocab.end());
        for (const auto& w : vocab) ++cat.lemma_word_types_[w];
    }

    cat.name_phrases_.reserve(n_entities);
    for (const auto& name : cat.entity_names_) cat.name_phrases_.push_back(Lemma{tokenize(name)});

    std::uint64_t fp = hash_bytes("ter-catalog");
    for (const auto& n : cat.type_names_) fp = hash_bytes(n, fp ^ 0x74);
    for (const auto& n : cat.entity_names_) fp = hash_bytes(n, fp ^ 0x65);
    for (std::size_t t = 0; t < n_types; ++t)
        for (TypeId p : cat.parents_[t]) fp = splitmix64(fp ^ (t * 0x1f1f1f1fULL) ^ idx(p));
    for (std::size_t e = 0; e < n_entities; ++e)
        for (TypeId t : cat.direct_types_[e]) fp = splitmix64(fp ^ (e * 0x2e2e2e2eULL) ^ idx(t));
    cat.fingerprint_ = fp;

    return cat;
}

TypePriorTable::TypePriorTable(const Catalog& catalog, double gamma)
    : gamma_(gamma), hits_(catalog.type_count(), 0) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw Error("bad-hyperparam", "type prior gamma must lie in (0,1)");
}

void TypePriorTable::add_hit(TypeId t) { ++hits_[idx(t)]; }

double TypePriorTable::prior(const Catalog& catalog, TypeId t, EntityId e) const {
    if (!catalog.has_type(e, t)) return 0.0;
    double denom = 0.0;
    catalog.ancestor_mask(e).for_each(
        [&](std::size_t u) { denom += static_cast<double>(hits_[u]) + gamma_; });
    return (static_cast<double>(hits_[idx(t)]) + gamma_) / denom;
}

}  // namespace ter
