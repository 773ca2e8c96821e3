#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ter/discriminative.hpp"
#include "ter/generative.hpp"
#include "ter/type_predictor.hpp"

namespace ter {

// -- metrics -----------------------------------------------------------

// Mean over the relevant set of precision at each relevant hit; relevant
// entities missing from the ranking contribute zero. Throws on an empty
// relevant set (such queries are excluded from aggregates upstream).
double average_precision(const std::vector<EntityId>& ranked,
                         const std::vector<EntityId>& relevant);
// 1 / rank of the first relevant entity, 0 if none retrieved. Untruncated.
double reciprocal_rank(const std::vector<EntityId>& ranked,
                       const std::vector<EntityId>& relevant);
// Binary gains, 1/log2(1+rank) discounts, ideal normalization.
double ndcg_at(const std::vector<EntityId>& ranked, const std::vector<EntityId>& relevant,
               std::size_t k);

struct PerQueryMetrics {
    std::string qid;
    double ap = 0.0;
    double rr = 0.0;
    double ndcg1 = 0.0;
    double ndcg5 = 0.0;
    double ndcg10 = 0.0;
};

struct MetricReport {
    std::vector<PerQueryMetrics> rows;  // queries included in the aggregates
    std::vector<std::string> excluded;  // no judged-relevant entity in the pool
    double map = 0.0;
    double mrr = 0.0;
    double ndcg1 = 0.0;
    double ndcg5 = 0.0;
    double ndcg10 = 0.0;
};

// -- runs ---------------------------------------------------------------

struct RunRow {
    EntityId entity;
    double score;
    TypeId best_type;
    std::string hint_mask;  // 'h'/'s' per query position
};

struct QueryRun {
    std::string qid;
    std::vector<RunRow> rows;  // best first
};

struct Run {
    std::string ranker;
    std::vector<QueryRun> queries;
};

// Entities with at least one retrieved snippet under the type restriction;
// every query word is one WAND term.
std::vector<EntityId> retrieval_pool(const Query& q, TypeId restriction, const Catalog& catalog,
                                     const SnippetIndex& index, double theta,
                                     std::uint32_t window);

// Baselines rank the pool by IDF-weighted snippet support (all words treated
// as selectors, no type knowledge beyond the pool restriction).
QueryRun run_generic(const Query& q, const Catalog& catalog, const SnippetIndex& index,
                     double theta, std::uint32_t window);
QueryRun run_perfect(const Query& q, TypeId gold_type, const Catalog& catalog,
                     const SnippetIndex& index, double theta, std::uint32_t window);

QueryRun run_generative(const Query& q, const Catalog& catalog, const SnippetIndex& index,
                        const TypePriorTable& priors, const GenHyperParams& hp,
                        PartitionMode mode, double theta, std::uint32_t window,
                        Execution exec = Execution::parallel);

QueryRun run_discriminative(const Query& q, const Catalog& catalog, const SnippetIndex& index,
                            const TypePriorTable& priors, const Model& model, double theta,
                            std::uint32_t window, Execution exec = Execution::parallel);

// Predict one type over the generic pool, then launch the type-restricted
// query as if that prediction were the gold type.
QueryRun run_two_stage(const Query& q, const Catalog& catalog, const SnippetIndex& index,
                       const TypePriorTable& priors, const Model& model, int k, double theta,
                       std::uint32_t window, Execution exec = Execution::parallel);

// -- evaluation ---------------------------------------------------------

// Queries with an empty judged relevant set, or whose relevant entities are
// all absent from the run's pool, are excluded from aggregates and listed.
MetricReport evaluate_run(const Run& run, const std::vector<JudgedQuery>& queries,
                          Execution exec = Execution::parallel);

struct PairedDelta {
    std::string qid;
    double ap_run = 0.0;
    double ap_baseline = 0.0;
};

struct PairedComparison {
    std::vector<PairedDelta> rows;  // intersection of included queries
    double p_value = 1.0;
};

// Two-sided sign-flip randomization test on per-query AP deltas, seeded.
double permutation_p_value(const std::vector<double>& deltas, int n_permutations,
                           std::uint64_t seed);

PairedComparison compare_runs(const MetricReport& run, const MetricReport& baseline,
                              int n_permutations = 10000, std::uint64_t seed = 1);

// -- hyperparameter selection --------------------------------------------

// Balanced fold split: queries ordered by seeded hash of qid, assigned round
// robin. Disjoint, exhaustive, sizes differ by at most one.
std::vector<int> fold_assignment(const std::vector<std::string>& qids, int folds,
                                 std::uint64_t seed);

// Returns validation MAP for a (train, validate) split at one grid point.
using CvScoreFn =
    std::function<double(const std::vector<JudgedQuery>& train,
                         const std::vector<JudgedQuery>& validate, double C)>;
using GenScoreFn =
    std::function<double(const std::vector<JudgedQuery>& train,
                         const std::vector<JudgedQuery>& validate, const GenHyperParams& hp)>;

// Maximizes mean validation MAP over folds; ties pick the smaller C.
double cross_validate_C(const std::vector<JudgedQuery>& queries,
                        const std::vector<double>& c_grid, int folds, std::uint64_t seed,
                        const CvScoreFn& score);

// Grid is the cross product of the four axes; ties pick the larger
// (alpha, beta, gamma, delta) tuple (more smoothing).
struct GenGrid {
    std::vector<double> alpha{0.1};
    std::vector<double> beta{0.1};
    std::vector<double> gamma{0.1};
    std::vector<double> delta{0.3};
};

GenHyperParams sweep_generative(const std::vector<JudgedQuery>& queries, const GenGrid& grid,
                                int folds, std::uint64_t seed, const GenScoreFn& score);

// -- files ----------------------------------------------------------------

// runs.tsv: qid <TAB> rank <TAB> entity_id <TAB> score <TAB> best_type <TAB> hint_mask
void write_run(const Run& run, const Catalog& catalog, const std::filesystem::path& path);
Run load_run(const std::filesystem::path& path, const Catalog& catalog);

// report.tsv: per-query rows, EXCLUDED rows, ALL aggregate row; paired
// comparison appends per-query deltas and a P_VALUE row.
void write_report(const MetricReport& report, const std::optional<PairedComparison>& paired,
                  const std::filesystem::path& path);

}  // namespace ter
