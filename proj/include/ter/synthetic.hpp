#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace ter {

// Synthetic benchmark: a three-level type tree (root, domains, leaf types),
// entities with planted evidence snippets, and judged queries built so that
// type knowledge separates relevant entities from equally well-matching
// distractors in other domains:
//   - most queries hint their leaf type with its full lemma,
//   - some hint only the domain word (the leaf stays ambiguous),
//   - some carry no hint at all (selectors only).
// Cross-domain distractors match the selector words as strongly as the
// relevant entities do, so an untyped ranking confuses them, while any
// type-restricted ranking does not.
struct SynthParams {
    int n_queries = 50;
    int n_entities = 200;
    int n_types = 30;  // 1 root + 5 domains + leaves
    int n_docs = 2000;
    std::uint64_t seed = 7;
    double theta = 0.25;       // recorded in the emitted config
    std::uint32_t window = 20;
};

struct SynthPaths {
    std::filesystem::path types;
    std::filesystem::path entities;
    std::filesystem::path lemmas;
    std::filesystem::path corpus;
    std::filesystem::path queries;
    std::filesystem::path descriptions;
    std::filesystem::path config;
};

// Writes the benchmark files into `dir` (created if missing), deterministic
// for a given parameter set.
SynthPaths write_benchmark(const std::filesystem::path& dir, const SynthParams& params);

}  // namespace ter
