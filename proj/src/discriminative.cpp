#include "ter/discriminative.hpp"

#include <algorithm>
#include <cmath>

#include "ter/error.hpp"
#include "ter/log_space.hpp"
#include "ter/rng.hpp"

namespace ter {

TrainingMode parse_training_mode(std::string_view name) {
    if (name == "itemwise") return TrainingMode::itemwise;
    if (name == "pairwise") return TrainingMode::pairwise;
    throw Error("bad-config", "unknown training mode: " + std::string(name));
}

const char* training_mode_name(TrainingMode mode) {
    return mode == TrainingMode::itemwise ? "itemwise" : "pairwise";
}

void TrainHyperParams::validate() const {
    if (!(C > 0.0)) throw Error("bad-hyperparam", "C must be positive");
    if (!(schedule.d0 > 0.0)) throw Error("bad-hyperparam", "d0 must be positive");
    if (!(schedule.decay > 0.0 && schedule.decay < 1.0))
        throw Error("bad-hyperparam", "decay must lie in (0,1)");
    if (schedule.outer_iters < 1) throw Error("bad-hyperparam", "outer_iters must be >= 1");
    if (neg_cap < 1) throw Error("bad-hyperparam", "neg_cap must be >= 1");
    if (!(beta > 0.0 && beta < 1.0)) throw Error("bad-hyperparam", "beta must lie in (0,1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error("bad-hyperparam", "gamma must lie in (0,1)");
    if (lambda_iters < 1) throw Error("bad-hyperparam", "lambda_iters must be >= 1");
    if (!(lambda_eta0 > 0.0)) throw Error("bad-hyperparam", "lambda_eta0 must be positive");
}

std::size_t ConstraintSystem::positive_blocks() const {
    std::size_t n = 0;
    for (const auto& q : queries) n += q.positives.size();
    return n;
}

std::size_t ConstraintSystem::linear_constraints() const {
    std::size_t n = 0;
    for (const auto& q : queries)
        for (const auto& b : q.negatives) n += b.pairs.size();
    return n;
}

std::uint64_t fingerprint_training_data(const std::vector<JudgedQuery>& queries) {
    std::uint64_t fp = hash_bytes("ter-training");
    for (const auto& jq : queries) {
        fp = hash_bytes(jq.query.qid, fp);
        fp = hash_bytes(jq.query.raw, fp);
        if (jq.gold.gold_type) fp = splitmix64(fp ^ (idx(*jq.gold.gold_type) + 1));
        for (EntityId e : jq.gold.relevant) fp = splitmix64(fp ^ (idx(e) * 2 + 1));
        for (EntityId e : jq.gold.irrelevant) fp = splitmix64(fp ^ (idx(e) * 2));
    }
    return fp;
}

TypePriorTable build_prior_table(const std::vector<JudgedQuery>& queries,
                                 const Catalog& catalog, double gamma) {
    TypePriorTable table(catalog, gamma);
    for (const auto& jq : queries)
        if (jq.gold.gold_type) table.add_hit(*jq.gold.gold_type);
    return table;
}

ConstraintSystem build_constraints(const std::vector<JudgedQuery>& queries,
                                   const Catalog& catalog, const SnippetIndex& index,
                                   const TypePriorTable& priors, const TrainHyperParams& hp,
                                   Execution exec) {
    hp.validate();
    ConstraintSystem system;
    system.mode = hp.mode;

    struct Job {
        const JudgedQuery* jq;
        std::vector<EntityId> negatives;
    };
    std::vector<Job> jobs;
    for (const auto& jq : queries) {
        if (jq.gold.relevant.empty()) {
            system.skipped.push_back(jq.query.qid);
            continue;
        }
        Job job{&jq, jq.gold.irrelevant};
        if (job.negatives.size() > static_cast<std::size_t>(hp.neg_cap)) {
            Rng rng(hp.seed ^ hash_bytes(jq.query.qid));
            auto picks = rng.sample_without_replacement(job.negatives.size(),
                                                        static_cast<std::size_t>(hp.neg_cap));
            std::sort(picks.begin(), picks.end());
            std::vector<EntityId> sampled;
            sampled.reserve(picks.size());
            for (std::size_t i : picks) sampled.push_back(job.negatives[i]);
            job.negatives = std::move(sampled);
        }
        jobs.push_back(std::move(job));
    }

    system.queries.resize(jobs.size());
    parallel_for(jobs.size(), exec, [&](std::size_t qi) {
        const JudgedQuery& jq = *jobs[qi].jq;
        QueryFeatureContext ctx(jq.query, catalog, index, priors, hp.beta, hp.partition_mode);
        auto fill = [&](EntityId e) {
            LatentBlock block;
            block.entity = e;
            block.pairs = latent_pairs(catalog, e, ctx.partitions());
            EntityFeatureExtractor ex(ctx, e);
            block.phis.reserve(block.pairs.size());
            for (const auto& p : block.pairs) block.phis.push_back(ex.extract(p.t, p.z_index));
            return block;
        };
        QueryConstraints qc;
        qc.qid = jq.query.qid;
        for (EntityId e : jq.gold.relevant) qc.positives.push_back(fill(e));
        for (EntityId e : jobs[qi].negatives) qc.negatives.push_back(fill(e));
        system.queries[qi] = std::move(qc);
    });
    return system;
}

namespace {

double dot(const std::array<double, kFeatureCount>& a, const FeatureVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) s += a[i] * b[i];
    return s;
}

// Sum of u-weighted feature vectors of one positive block.
FeatureVector expected_phi(const LatentBlock& block, const std::vector<double>& u) {
    FeatureVector v{};
    for (std::size_t i = 0; i < block.phis.size(); ++i)
        for (std::size_t f = 0; f < kFeatureCount; ++f) v[f] += u[i] * block.phis[i][f];
    return v;
}

std::size_t argmax_row(const LatentBlock& block,
                       const std::array<double, kFeatureCount>& lambda, double* best_score) {
    std::size_t best = 0;
    double score = kNegInf;
    for (std::size_t i = 0; i < block.phis.size(); ++i) {
        double s = dot(lambda, block.phis[i]);
        if (s > score) {
            score = s;
            best = i;
        }
    }
    *best_score = score;
    return best;
}

}  // namespace

InferResult infer_with(const QueryFeatureContext& ctx, EntityFeatureExtractor& ex,
                       const std::array<double, kFeatureCount>& lambda) {
    auto pairs = latent_pairs(ctx.catalog(), ex.entity(), ctx.partitions());
    if (pairs.empty()) throw Error("unknown-entity", "entity has no latent pairs");
    InferResult best;
    best.score = kNegInf;
    for (const auto& p : pairs) {
        double s = dot(lambda, ex.extract(p.t, p.z_index));
        if (s > best.score) {
            best.score = s;
            best.t = p.t;
            best.z = p.z;
        }
    }
    return best;
}

InferResult infer(const Query& q, EntityId e, const Model& model, const Catalog& catalog,
                  const SnippetIndex& index, const TypePriorTable& priors) {
    if (model.layout != kFeatureLayoutVersion)
        throw Error("model-layout", "model layout " + model.layout + " does not match " +
                                        kFeatureLayoutVersion);
    QueryFeatureContext ctx(q, catalog, index, priors, model.hp.beta, model.hp.partition_mode);
    EntityFeatureExtractor ex(ctx, e);
    return infer_with(ctx, ex, model.lambda);
}

std::vector<DiscScored> rank_discriminative(const Query& q,
                                            const std::vector<EntityId>& candidates,
                                            const Model& model, const Catalog& catalog,
                                            const SnippetIndex& index,
                                            const TypePriorTable& priors, Execution exec) {
    if (model.layout != kFeatureLayoutVersion)
        throw Error("model-layout", "model layout does not match this build");
    QueryFeatureContext ctx(q, catalog, index, priors, model.hp.beta, model.hp.partition_mode);
    std::vector<DiscScored> scored(candidates.size());
    parallel_for(candidates.size(), exec, [&](std::size_t i) {
        EntityFeatureExtractor ex(ctx, candidates[i]);
        scored[i] = {candidates[i], infer_with(ctx, ex, model.lambda)};
    });
    std::sort(scored.begin(), scored.end(), [&](const DiscScored& a, const DiscScored& b) {
        if (a.inferred.score != b.inferred.score) return a.inferred.score > b.inferred.score;
        return catalog.entity_name(a.entity) < catalog.entity_name(b.entity);
    });
    return scored;
}

std::vector<std::pair<TypeId, double>> score_types(
    const QueryFeatureContext& ctx, EntityFeatureExtractor& ex,
    const std::array<double, kFeatureCount>& lambda) {
    auto pairs = latent_pairs(ctx.catalog(), ex.entity(), ctx.partitions());
    std::vector<std::pair<TypeId, double>> out;
    for (const auto& p : pairs) {
        double s = dot(lambda, ex.extract(p.t, p.z_index));
        if (out.empty() || out.back().first != p.t)
            out.emplace_back(p.t, s);
        else
            out.back().second = std::max(out.back().second, s);
    }
    return out;
}

ObjectiveValue objective(const ConstraintSystem& system, const LatentAssignment& u,
                         const std::array<double, kFeatureCount>& lambda, double C) {
    ObjectiveValue v;
    for (double w : lambda) v.regularizer += 0.5 * w * w;
    if (system.queries.empty()) {
        v.total = v.regularizer;
        return v;
    }
    std::size_t block = 0;
    double loss = 0.0;
    for (const auto& q : system.queries) {
        double qsum = 0.0;
        for (const auto& pos : q.positives) {
            double score = dot(lambda, expected_phi(pos, u[block++]));
            if (system.mode == TrainingMode::itemwise) {
                qsum += std::max(0.0, 1.0 - score);
            } else {
                for (const auto& neg : q.negatives) {
                    double m;
                    argmax_row(neg, lambda, &m);
                    qsum += std::max(0.0, 1.0 - score + m);
                }
            }
        }
        double denom;
        if (system.mode == TrainingMode::itemwise) {
            for (const auto& neg : q.negatives) {
                double m;
                argmax_row(neg, lambda, &m);
                qsum += std::max(0.0, m - 1.0);
            }
            denom = static_cast<double>(q.positives.size() + q.negatives.size());
        } else {
            denom = static_cast<double>(q.positives.size()) *
                    static_cast<double>(std::max<std::size_t>(q.negatives.size(), 1));
        }
        loss += qsum / denom;
    }
    v.loss = loss / static_cast<double>(system.queries.size());
    v.total = v.regularizer + C * v.loss;
    return v;
}

LatentAssignment u_step(const ConstraintSystem& system,
                        const std::array<double, kFeatureCount>& lambda, double D) {
    LatentAssignment u;
    u.reserve(system.positive_blocks());
    for (const auto& q : system.queries) {
        for (const auto& pos : q.positives) {
            std::vector<double> scores(pos.phis.size());
            for (std::size_t i = 0; i < pos.phis.size(); ++i) scores[i] = dot(lambda, pos.phis[i]);
            std::vector<double> w(scores.size(), 0.0);
            if (D > 0.0) {
                double m = *std::max_element(scores.begin(), scores.end());
                double total = 0.0;
                for (std::size_t i = 0; i < scores.size(); ++i) {
                    w[i] = std::exp((scores[i] - m) / D);
                    total += w[i];
                }
                for (auto& x : w) x /= total;
            } else {
                std::size_t best = 0;
                for (std::size_t i = 1; i < scores.size(); ++i)
                    if (scores[i] > scores[best]) best = i;
                w[best] = 1.0;
            }
            u.push_back(std::move(w));
        }
    }
    return u;
}

double entropy_of(const LatentAssignment& u) {
    double h = 0.0;
    for (const auto& block : u)
        for (double x : block)
            if (x > 0.0) h -= x * std::log(x);
    return h;
}

namespace {

struct QueryGradient {
    std::array<double, kFeatureCount> g{};
};

// Per-query subgradient of the loss term at `lambda` (u fixed, expected
// positive features precomputed). Written into `out` so the parallel path
// reduces serially in query order afterwards.
void query_subgradient(const QueryConstraints& q, TrainingMode mode,
                       const std::vector<FeatureVector>& expected, std::size_t first_block,
                       const std::array<double, kFeatureCount>& lambda, QueryGradient& out) {
    out.g.fill(0.0);
    double denom = mode == TrainingMode::itemwise
                       ? static_cast<double>(q.positives.size() + q.negatives.size())
                       : static_cast<double>(q.positives.size()) *
                             static_cast<double>(std::max<std::size_t>(q.negatives.size(), 1));
    double w = 1.0 / denom;

    if (mode == TrainingMode::itemwise) {
        for (std::size_t p = 0; p < q.positives.size(); ++p) {
            const FeatureVector& v = expected[first_block + p];
            if (1.0 - dot(lambda, v) > 0.0)
                for (std::size_t f = 0; f < kFeatureCount; ++f) out.g[f] -= w * v[f];
        }
        for (const auto& neg : q.negatives) {
            double m;
            std::size_t row = argmax_row(neg, lambda, &m);
            if (m - 1.0 > 0.0)
                for (std::size_t f = 0; f < kFeatureCount; ++f)
                    out.g[f] += w * neg.phis[row][f];
        }
        return;
    }

    // Pairwise: precompute negative maxima once per query.
    std::vector<std::pair<double, std::size_t>> neg_max(q.negatives.size());
    for (std::size_t n = 0; n < q.negatives.size(); ++n) {
        double m;
        std::size_t row = argmax_row(q.negatives[n], lambda, &m);
        neg_max[n] = {m, row};
    }
    for (std::size_t p = 0; p < q.positives.size(); ++p) {
        const FeatureVector& v = expected[first_block + p];
        double pos_score = dot(lambda, v);
        for (std::size_t n = 0; n < q.negatives.size(); ++n) {
            if (1.0 - pos_score + neg_max[n].first > 0.0) {
                const FeatureVector& nphi = q.negatives[n].phis[neg_max[n].second];
                for (std::size_t f = 0; f < kFeatureCount; ++f)
                    out.g[f] += w * (nphi[f] - v[f]);
            }
        }
    }
}

}  // namespace

LambdaStepResult lambda_step(const ConstraintSystem& system, const LatentAssignment& u,
                             double C, const std::array<double, kFeatureCount>& start,
                             int iterations, double eta0, Execution exec) {
    LambdaStepResult result;
    result.before = objective(system, u, start, C);

    const std::size_t n_queries = system.queries.size();
    if (n_queries == 0) {
        result.lambda.fill(0.0);
        result.after = objective(system, u, result.lambda, C);
        return result;
    }

    // u is fixed for the whole step: expected positive features are constants.
    std::vector<FeatureVector> expected;
    std::vector<std::size_t> first_block(n_queries);
    {
        std::size_t block = 0;
        for (std::size_t qi = 0; qi < n_queries; ++qi) {
            first_block[qi] = expected.size();
            for (const auto& pos : system.queries[qi].positives)
                expected.push_back(expected_phi(pos, u[block++]));
        }
    }

    std::array<double, kFeatureCount> lambda = start;
    std::array<double, kFeatureCount> averaged = start;
    std::array<double, kFeatureCount> best = start;
    double best_obj = result.before.total;
    const double scale = C / static_cast<double>(n_queries);

    std::vector<QueryGradient> partials(n_queries);
    const int check_every = std::max(iterations / 64, 25);

    for (int t = 1; t <= iterations; ++t) {
        parallel_for(n_queries, exec, [&](std::size_t qi) {
            query_subgradient(system.queries[qi], system.mode, expected, first_block[qi],
                              lambda, partials[qi]);
        });
        std::array<double, kFeatureCount> g = lambda;  // d/dl of 0.5||l||^2
        for (std::size_t qi = 0; qi < n_queries; ++qi)
            for (std::size_t f = 0; f < kFeatureCount; ++f)
                g[f] += scale * partials[qi].g[f];

        double eta = eta0 / std::sqrt(static_cast<double>(t));
        for (std::size_t f = 0; f < kFeatureCount; ++f) lambda[f] -= eta * g[f];

        for (std::size_t f = 0; f < kFeatureCount; ++f)
            averaged[f] += (lambda[f] - averaged[f]) / static_cast<double>(t);

        if (t % check_every == 0 || t == iterations) {
            for (const auto& cand : {averaged, lambda}) {
                double obj = objective(system, u, cand, C).total;
                if (obj < best_obj) {
                    best_obj = obj;
                    best = cand;
                }
            }
        }
    }

    result.lambda = best;
    result.after = objective(system, u, best, C);
    return result;
}

TrainResult train(const ConstraintSystem& system, const TrainHyperParams& hp, Execution exec) {
    hp.validate();
    TrainResult result;
    result.model.hp = hp;
    result.model.lambda.fill(0.0);

    // Uniform Dirichlet initialization per positive block, fixed seed.
    Rng rng(hp.seed);
    LatentAssignment u;
    u.reserve(system.positive_blocks());
    for (const auto& q : system.queries)
        for (const auto& pos : q.positives) u.push_back(rng.uniform_simplex(pos.phis.size()));

    double D = hp.schedule.d0;
    std::array<double, kFeatureCount> lambda{};
    lambda.fill(0.0);

    for (int iter = 1; iter <= hp.schedule.outer_iters; ++iter) {
        double d_logged = hp.anneal ? D : 0.0;
        auto step = lambda_step(system, u, hp.C, lambda, hp.lambda_iters, hp.lambda_eta0, exec);
        result.step_objectives.emplace_back(step.before.total, step.after.total);

        result.log.push_back({iter, d_logged, step.after.total, step.after.loss,
                              entropy_of(u)});

        D *= hp.schedule.decay;
        LatentAssignment next_u = u_step(system, step.lambda, hp.anneal ? D : 0.0);

        double lambda_delta = 0.0;
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            lambda_delta = std::max(lambda_delta, std::abs(step.lambda[f] - lambda[f]));
        double u_delta = 0.0;
        for (std::size_t b = 0; b < u.size(); ++b)
            for (std::size_t i = 0; i < u[b].size(); ++i)
                u_delta = std::max(u_delta, std::abs(next_u[b][i] - u[b][i]));

        lambda = step.lambda;
        u = std::move(next_u);
        if (lambda_delta < 1e-6 && u_delta < 1e-6) break;
    }

    result.model.lambda = lambda;
    result.final_u = std::move(u);
    return result;
}

}  // namespace ter
