#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ter/features.hpp"
#include "ter/parallel.hpp"
#include "ter/query.hpp"

namespace ter {

enum class TrainingMode { itemwise, pairwise };

TrainingMode parse_training_mode(std::string_view name);
const char* training_mode_name(TrainingMode mode);

struct AnnealSchedule {
    double d0 = 1.0;     // initial temperature
    double decay = 0.1;  // geometric factor per outer iteration
    int outer_iters = 6;
};

struct TrainHyperParams {
    double C = 1.0;
    TrainingMode mode = TrainingMode::itemwise;
    AnnealSchedule schedule;
    int neg_cap = 50;          // negatives sampled per query
    std::uint64_t seed = 42;
    double beta = 0.1;         // phi3 LM smoothing
    double gamma = 0.1;        // type prior smoothing
    PartitionMode partition_mode = PartitionMode::exhaustive;
    int lambda_iters = 4000;   // subgradient iterations per lambda step
    double lambda_eta0 = 0.5;  // step size eta_t = eta0 / sqrt(t)
    bool anneal = true;        // false runs the collapse variant (D = 0 throughout)

    void validate() const;
};

struct Model {
    std::array<double, kFeatureCount> lambda{};
    std::string layout = kFeatureLayoutVersion;
    TrainHyperParams hp;
    // Gold-type hit counts baked in at training time so inference rebuilds
    // the same prior table; keyed by external type name.
    std::vector<std::pair<std::string, std::uint64_t>> type_hits;
    std::uint64_t data_fingerprint = 0;
};

// Feature tables for one (query, entity): its latent pairs and their vectors.
struct LatentBlock {
    EntityId entity;
    std::vector<LatentPair> pairs;
    std::vector<FeatureVector> phis;
};

struct QueryConstraints {
    std::string qid;
    std::vector<LatentBlock> positives;
    std::vector<LatentBlock> negatives;
};

// Materialized training constraints. Itemwise: one u-weighted constraint per
// positive block, one linear constraint per negative latent row. Pairwise:
// one constraint per (positive, negative latent row).
struct ConstraintSystem {
    TrainingMode mode = TrainingMode::itemwise;
    std::vector<QueryConstraints> queries;
    std::vector<std::string> skipped;  // qids without positives

    std::size_t positive_blocks() const;
    std::size_t linear_constraints() const;
};

// One simplex-distributed weight vector per positive block, in query order.
using LatentAssignment = std::vector<std::vector<double>>;

std::uint64_t fingerprint_training_data(const std::vector<JudgedQuery>& queries);

TypePriorTable build_prior_table(const std::vector<JudgedQuery>& queries,
                                 const Catalog& catalog, double gamma);

// Extracts feature tables for every judged query. Negatives are sampled down
// to hp.neg_cap per query with a fixed seed; queries without positives are
// recorded in `skipped`.
ConstraintSystem build_constraints(const std::vector<JudgedQuery>& queries,
                                   const Catalog& catalog, const SnippetIndex& index,
                                   const TypePriorTable& priors, const TrainHyperParams& hp,
                                   Execution exec = Execution::parallel);

struct InferResult {
    double score = 0.0;
    TypeId t{};
    SwitchVector z;
};

// max over {(t,z) : e in+ t} of lambda . phi, all-selector z restricted to the
// root type; first maximal pair in enumeration order wins.
InferResult infer(const Query& q, EntityId e, const Model& model, const Catalog& catalog,
                  const SnippetIndex& index, const TypePriorTable& priors);
InferResult infer_with(const QueryFeatureContext& ctx, EntityFeatureExtractor& ex,
                       const std::array<double, kFeatureCount>& lambda);

struct DiscScored {
    EntityId entity;
    InferResult inferred;
};

std::vector<DiscScored> rank_discriminative(const Query& q,
                                            const std::vector<EntityId>& candidates,
                                            const Model& model, const Catalog& catalog,
                                            const SnippetIndex& index,
                                            const TypePriorTable& priors,
                                            Execution exec = Execution::parallel);

inline InferResult explain_discriminative(const Query& q, EntityId e, const Model& model,
                                          const Catalog& catalog, const SnippetIndex& index,
                                          const TypePriorTable& priors) {
    return infer(q, e, model, catalog, index, priors);
}

struct ObjectiveValue {
    double total = 0.0;      // 0.5 ||lambda||^2 + C * loss
    double loss = 0.0;       // per-query-normalized slack average
    double regularizer = 0.0;
};

ObjectiveValue objective(const ConstraintSystem& system, const LatentAssignment& u,
                         const std::array<double, kFeatureCount>& lambda, double C);

// Entropy-regularized assignment step: u proportional to exp(score / D) per
// positive block; D = 0 collapses to the argmax indicator (first maximum).
LatentAssignment u_step(const ConstraintSystem& system,
                        const std::array<double, kFeatureCount>& lambda, double D);

struct LambdaStepResult {
    std::array<double, kFeatureCount> lambda{};
    ObjectiveValue before;  // at the starting lambda, same u
    ObjectiveValue after;   // at the returned lambda
};

// Subgradient descent on the u-fixed objective with eta_t = eta0/sqrt(t) and
// averaged iterates; returns the best evaluated candidate, which includes the
// starting point, so the objective never increases across a step.
LambdaStepResult lambda_step(const ConstraintSystem& system, const LatentAssignment& u,
                             double C, const std::array<double, kFeatureCount>& start,
                             int iterations, double eta0,
                             Execution exec = Execution::parallel);

struct TrainLogRow {
    int iter;
    double D;          // temperature at the start of the iteration
    double objective;  // after the lambda step, under that iteration's u
    double hinge_loss;
    double entropy;    // sum of per-block entropies of u
};

struct TrainResult {
    Model model;
    std::vector<TrainLogRow> log;
    // Objective before/after each lambda step (monotonicity audit).
    std::vector<std::pair<double, double>> step_objectives;
    LatentAssignment final_u;
};

// Alternating optimization: random simplex u, then per outer iteration
// solve lambda, decay D geometrically, re-solve u. Stops early when both
// lambda and u move less than 1e-6 (max norm).
TrainResult train(const ConstraintSystem& system, const TrainHyperParams& hp,
                  Execution exec = Execution::parallel);

double entropy_of(const LatentAssignment& u);

// score(t|e) = max_z lambda . phi for one type; ascending type id order.
std::vector<std::pair<TypeId, double>> score_types(const QueryFeatureContext& ctx,
                                                   EntityFeatureExtractor& ex,
                                                   const std::array<double, kFeatureCount>& lambda);

// Versioned text model file.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);
void write_training_log(const std::vector<TrainLogRow>& rows, const std::filesystem::path& path);

TypePriorTable prior_table_from_model(const Model& model, const Catalog& catalog);

}  // namespace ter
