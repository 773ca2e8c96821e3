#include "ter/query.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "ter/error.hpp"
#include "ter/text.hpp"

namespace ter {

Query parse_query(std::string_view text, std::string qid) {
    Query q;
    q.qid = std::move(qid);
    q.raw = std::string(text);
    q.words = tokenize(text);
    if (q.words.empty()) throw Error("empty-query", "no tokens in query text");
    if (q.words.size() > kMaxQueryWords)
        throw Error("query-too-long", "query has " + std::to_string(q.words.size()) +
                                          " tokens, cap is " + std::to_string(kMaxQueryWords));
    return q;
}

std::string SwitchVector::to_string() const {
    std::string s(size_, 's');
    for (std::size_t j = 0; j < size_; ++j)
        if (is_hint(j)) s[j] = 'h';
    return s;
}

PartitionMode parse_partition_mode(std::string_view name) {
    if (name == "exhaustive") return PartitionMode::exhaustive;
    if (name == "contiguous") return PartitionMode::contiguous;
    throw Error("bad-config", "unknown partition mode: " + std::string(name));
}

const char* partition_mode_name(PartitionMode mode) {
    return mode == PartitionMode::exhaustive ? "exhaustive" : "contiguous";
}

std::vector<SwitchVector> enumerate_partitions(std::size_t query_len, PartitionMode mode) {
    std::vector<SwitchVector> out;
    if (query_len == 0 || query_len > kMaxQueryWords) return out;
    if (mode == PartitionMode::exhaustive) {
        std::uint32_t total = std::uint32_t{1} << query_len;
        out.reserve(total);
        for (std::uint32_t mask = 0; mask < total; ++mask) out.emplace_back(mask, query_len);
        return out;
    }
    std::vector<std::uint32_t> masks{0};
    for (std::size_t run = 1; run <= 3 && run <= query_len; ++run) {
        std::uint32_t base = (std::uint32_t{1} << run) - 1;
        for (std::size_t start = 0; start + run <= query_len; ++start)
            masks.push_back(base << start);
    }
    std::sort(masks.begin(), masks.end());
    out.reserve(masks.size());
    for (std::uint32_t m : masks) out.emplace_back(m, query_len);
    return out;
}

namespace {

std::vector<std::string> side_words(const std::vector<std::string>& words, SwitchVector z,
                                    bool hints) {
    if (z.size() != words.size())
        throw Error("switch-length-mismatch",
                    "switch vector length " + std::to_string(z.size()) + " vs " +
                        std::to_string(words.size()) + " query words");
    std::vector<std::string> out;
    for (std::size_t j = 0; j < words.size(); ++j)
        if (z.is_hint(j) == hints) out.push_back(words[j]);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

std::vector<std::string> hint_words(const std::vector<std::string>& words, SwitchVector z) {
    return side_words(words, z, true);
}

std::vector<std::string> selector_words(const std::vector<std::string>& words, SwitchVector z) {
    return side_words(words, z, false);
}

std::vector<std::string> hint_sequence(const std::vector<std::string>& words, SwitchVector z) {
    if (z.size() != words.size())
        throw Error("switch-length-mismatch", "switch vector does not match query length");
    std::vector<std::string> out;
    for (std::size_t j = 0; j < words.size(); ++j)
        if (z.is_hint(j)) out.push_back(words[j]);
    return out;
}

std::vector<JudgedQuery> load_queries(const std::filesystem::path& path, const Catalog& catalog) {
    std::ifstream in(path);
    if (!in) throw Error("file-missing", "cannot open " + path.string());
    std::vector<JudgedQuery> out;
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
        auto at = [&](const char* key) -> const nlohmann::json& {
            if (!rec.contains(key))
                throw Error("bad-record", path.filename().string() + " line " +
                                              std::to_string(number) + ": missing field " + key);
            return rec.at(key);
        };
        JudgedQuery jq;
        jq.query = parse_query(at("text").get<std::string>(), at("qid").get<std::string>());
        auto resolve_entity = [&](const std::string& name) {
            auto e = catalog.find_entity(name);
            if (!e)
                throw Error("dangling-reference", path.filename().string() + " line " +
                                                      std::to_string(number) +
                                                      ": unknown entity " + name);
            return *e;
        };
        if (rec.contains("gold_type") && !rec.at("gold_type").is_null()) {
            auto name = rec.at("gold_type").get<std::string>();
            auto t = catalog.find_type(name);
            if (!t)
                throw Error("dangling-reference", path.filename().string() + " line " +
                                                      std::to_string(number) +
                                                      ": unknown type " + name);
            jq.gold.gold_type = *t;
        }
        if (rec.contains("relevant"))
            for (const auto& name : rec.at("relevant"))
                jq.gold.relevant.push_back(resolve_entity(name.get<std::string>()));
        if (rec.contains("irrelevant"))
            for (const auto& name : rec.at("irrelevant"))
                jq.gold.irrelevant.push_back(resolve_entity(name.get<std::string>()));
        out.push_back(std::move(jq));
    }
    return out;
}

}  // namespace ter
