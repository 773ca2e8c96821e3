#include <cstring>
#include <fstream>

#include "ter/corpus_index.hpp"
#include "ter/error.hpp"

// Serialized index image. Little-endian, explicit byte order, versioned
// header; load rejects version and catalog mismatches. Stored sections:
// dictionary, documents with mentions, window width and the per-entity
// statistics; posting lists are rebuilt deterministically on load.

namespace ter {

namespace {

constexpr char kMagic[8] = {'T', 'E', 'R', 'I', 'D', 'X', '0', '\0'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    write_u32(out, static_cast<std::uint32_t>(v));
    write_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void write_str(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw Error("index-corrupt", "truncated index image");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t lo = read_u32(in);
    std::uint64_t hi = read_u32(in);
    return lo | (hi << 32);
}

std::string read_str(std::istream& in) {
    std::uint32_t n = read_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw Error("index-corrupt", "truncated index image");
    return s;
}

}  // namespace

void save_index(const SnippetIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("file-write", "cannot write " + path.string());

    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u64(out, index.catalog_fingerprint_);
    write_u32(out, index.window_width_);

    write_u64(out, index.words_.size());
    for (const auto& w : index.words_) write_str(out, w);

    write_u64(out, index.docs_.size());
    for (const auto& doc : index.docs_) {
        write_str(out, doc.id);
        write_u64(out, doc.tokens.size());
        for (WordId w : doc.tokens) write_u32(out, w);
        write_u64(out, doc.mentions.size());
        for (const Snippet& m : doc.mentions) {
            write_u32(out, m.begin);
            write_u32(out, m.end);
            write_u32(out, static_cast<std::uint32_t>(idx(m.entity)));
        }
    }

    write_u64(out, index.mention_counts_.size());
    for (std::uint32_t c : index.mention_counts_) write_u32(out, c);
    write_u64(out, index.doc_freq_.size());
    for (std::uint32_t c : index.doc_freq_) write_u32(out, c);
    for (const auto& row : index.cooccur_) {
        write_u64(out, row.size());
        for (const auto& [w, c] : row) {
            write_u32(out, w);
            write_u32(out, c);
        }
    }
    if (!out) throw Error("file-write", "failed writing " + path.string());
}

SnippetIndex load_index(const std::filesystem::path& path, const Catalog& catalog) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("file-missing", "cannot open " + path.string());

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("index-version", path.string() + " is not an index image");
    std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw Error("index-version", "index image version " + std::to_string(version) +
                                         ", expected " + std::to_string(kVersion));

    SnippetIndex index;
    index.catalog_fingerprint_ = read_u64(in);
    if (index.catalog_fingerprint_ != catalog.fingerprint())
        throw Error("index-mismatch", "index image was built against a different catalog");
    index.window_width_ = read_u32(in);

    std::uint64_t n_words = read_u64(in);
    index.words_.reserve(n_words);
    for (std::uint64_t i = 0; i < n_words; ++i) {
        index.words_.push_back(read_str(in));
        index.word_ids_.emplace(index.words_.back(), static_cast<WordId>(i));
    }

    std::uint64_t n_docs = read_u64(in);
    index.entity_mentions_.assign(catalog.entity_count(), {});
    for (std::uint64_t d = 0; d < n_docs; ++d) {
        SnippetIndex::DocRecord doc;
        doc.id = read_str(in);
        std::uint64_t n_tokens = read_u64(in);
        doc.tokens.reserve(n_tokens);
        for (std::uint64_t i = 0; i < n_tokens; ++i) {
            WordId w = read_u32(in);
            if (w >= index.words_.size()) throw Error("index-corrupt", "token out of range");
            doc.tokens.push_back(w);
        }
        std::uint64_t n_mentions = read_u64(in);
        for (std::uint64_t i = 0; i < n_mentions; ++i) {
            Snippet m;
            m.doc = static_cast<std::uint32_t>(d);
            m.begin = read_u32(in);
            m.end = read_u32(in);
            std::uint32_t e = read_u32(in);
            if (e >= catalog.entity_count())
                throw Error("index-corrupt", "mention entity out of range");
            m.entity = entity_id(e);
            doc.mentions.push_back(m);
            index.entity_mentions_[e].push_back(m);
        }
        index.docs_.push_back(std::move(doc));
    }

    // Stored statistics; must agree with what build_derived reconstructs.
    std::vector<std::uint32_t> stored_mentions(read_u64(in));
    for (auto& c : stored_mentions) c = read_u32(in);
    std::vector<std::uint32_t> stored_df(read_u64(in));
    for (auto& c : stored_df) c = read_u32(in);
    std::vector<std::vector<std::pair<WordId, std::uint32_t>>> stored_cooccur(
        catalog.entity_count());
    for (auto& row : stored_cooccur) {
        std::uint64_t n = read_u64(in);
        row.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            WordId w = read_u32(in);
            std::uint32_t c = read_u32(in);
            row.emplace_back(w, c);
        }
    }

    index.build_derived();
    if (stored_mentions != index.mention_counts_ || stored_df != index.doc_freq_ ||
        stored_cooccur != index.cooccur_)
        throw Error("index-corrupt", "stored statistics disagree with documents");
    return index;
}

}  // namespace ter
