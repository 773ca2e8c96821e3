#include "ter/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ter/error.hpp"
#include "ter/rng.hpp"

namespace ter {

namespace {

std::set<EntityId> to_set(const std::vector<EntityId>& xs) { return {xs.begin(), xs.end()}; }

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double average_precision(const std::vector<EntityId>& ranked,
                         const std::vector<EntityId>& relevant) {
    if (relevant.empty()) throw Error("empty-relevant", "average precision needs judgments");
    auto rel = to_set(relevant);
    double hits = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (rel.count(ranked[i])) {
            hits += 1.0;
            sum += hits / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(rel.size());
}

double reciprocal_rank(const std::vector<EntityId>& ranked,
                       const std::vector<EntityId>& relevant) {
    auto rel = to_set(relevant);
    for (std::size_t i = 0; i < ranked.size(); ++i)
        if (rel.count(ranked[i])) return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

double ndcg_at(const std::vector<EntityId>& ranked, const std::vector<EntityId>& relevant,
               std::size_t k) {
    auto rel = to_set(relevant);
    if (rel.empty()) return 0.0;
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i)
        if (rel.count(ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
    double idcg = 0.0;
    for (std::size_t i = 0; i < rel.size() && i < k; ++i)
        idcg += 1.0 / std::log2(static_cast<double>(i + 2));
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

std::vector<EntityId> retrieval_pool(const Query& q, TypeId restriction, const Catalog& catalog,
                                     const SnippetIndex& index, double theta,
                                     std::uint32_t window) {
    WandQuery wq;
    wq.target_type = restriction;
    for (const auto& w : q.words) wq.terms.push_back({{w}});
    wq.theta = theta;
    wq.window_width = window;
    return index.candidate_pool(catalog, wq);
}

namespace {

// Baseline score: IDF-weighted snippet support over all of S_e.
QueryRun support_run(const Query& q, TypeId restriction, const Catalog& catalog,
                     const SnippetIndex& index, double theta, std::uint32_t window) {
    auto pool = retrieval_pool(q, restriction, catalog, index, theta, window);
    TypePriorTable dummy(catalog, 0.5);
    QueryFeatureContext ctx(q, catalog, index, dummy, 0.5, PartitionMode::contiguous);

    std::vector<std::pair<EntityId, double>> scored(pool.size());
    parallel_for(pool.size(), Execution::parallel, [&](std::size_t i) {
        EntityFeatureExtractor ex(ctx, pool[i]);
        scored[i] = {pool[i], ex.support()};
    });
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return catalog.entity_name(a.first) < catalog.entity_name(b.first);
    });

    QueryRun run;
    run.qid = q.qid;
    std::string all_selector(q.words.size(), 's');
    for (const auto& [e, s] : scored) run.rows.push_back({e, s, restriction, all_selector});
    return run;
}

}  // namespace

QueryRun run_generic(const Query& q, const Catalog& catalog, const SnippetIndex& index,
                     double theta, std::uint32_t window) {
    return support_run(q, catalog.root(), catalog, index, theta, window);
}

QueryRun run_perfect(const Query& q, TypeId gold_type, const Catalog& catalog,
                     const SnippetIndex& index, double theta, std::uint32_t window) {
    return support_run(q, gold_type, catalog, index, theta, window);
}

QueryRun run_generative(const Query& q, const Catalog& catalog, const SnippetIndex& index,
                        const TypePriorTable& priors, const GenHyperParams& hp,
                        PartitionMode mode, double theta, std::uint32_t window,
                        Execution exec) {
    auto pool = retrieval_pool(q, catalog.root(), catalog, index, theta, window);
    auto scores = rank_generative(q, pool, catalog, index, priors, hp, mode, exec);
    QueryRun run;
    run.qid = q.qid;
    for (const auto& s : scores)
        run.rows.push_back({s.entity, s.log_joint, s.best_type, s.best_z.to_string()});
    return run;
}

QueryRun run_discriminative(const Query& q, const Catalog& catalog, const SnippetIndex& index,
                            const TypePriorTable& priors, const Model& model, double theta,
                            std::uint32_t window, Execution exec) {
    auto pool = retrieval_pool(q, catalog.root(), catalog, index, theta, window);
    auto scored = rank_discriminative(q, pool, model, catalog, index, priors, exec);
    QueryRun run;
    run.qid = q.qid;
    for (const auto& s : scored)
        run.rows.push_back(
            {s.entity, s.inferred.score, s.inferred.t, s.inferred.z.to_string()});
    return run;
}

QueryRun run_two_stage(const Query& q, const Catalog& catalog, const SnippetIndex& index,
                       const TypePriorTable& priors, const Model& model, int k, double theta,
                       std::uint32_t window, Execution exec) {
    auto pool = retrieval_pool(q, catalog.root(), catalog, index, theta, window);
    QueryRun run;
    run.qid = q.qid;
    if (pool.empty()) return run;
    auto prediction = predict_type(q, pool, model, catalog, index, priors, k, exec);
    if (prediction.ranked.empty()) return run;
    TypeId predicted = prediction.ranked.front().first;
    return run_perfect(q, predicted, catalog, index, theta, window);
}

MetricReport evaluate_run(const Run& run, const std::vector<JudgedQuery>& queries,
                          Execution exec) {
    std::map<std::string, const Gold*> gold_by_qid;
    for (const auto& jq : queries) gold_by_qid[jq.query.qid] = &jq.gold;

    struct Slot {
        PerQueryMetrics metrics;
        int state = 0;  // 0 excluded-no-judgments, 1 excluded-no-relevant-in-pool, 2 included
    };
    std::vector<Slot> slots(run.queries.size());
    parallel_for(run.queries.size(), exec, [&](std::size_t i) {
        const QueryRun& qr = run.queries[i];
        Slot& slot = slots[i];
        slot.metrics.qid = qr.qid;
        auto it = gold_by_qid.find(qr.qid);
        if (it == gold_by_qid.end() || it->second->relevant.empty()) return;
        const auto& relevant = it->second->relevant;
        std::vector<EntityId> ranked;
        ranked.reserve(qr.rows.size());
        for (const auto& r : qr.rows) ranked.push_back(r.entity);
        auto rel = to_set(relevant);
        bool any = std::any_of(ranked.begin(), ranked.end(),
                               [&](EntityId e) { return rel.count(e) > 0; });
        if (!any) {
            slot.state = 1;
            return;
        }
        slot.state = 2;
        slot.metrics.ap = average_precision(ranked, relevant);
        slot.metrics.rr = reciprocal_rank(ranked, relevant);
        slot.metrics.ndcg1 = ndcg_at(ranked, relevant, 1);
        slot.metrics.ndcg5 = ndcg_at(ranked, relevant, 5);
        slot.metrics.ndcg10 = ndcg_at(ranked, relevant, 10);
    });

    MetricReport report;
    for (const auto& slot : slots) {
        if (slot.state == 2)
            report.rows.push_back(slot.metrics);
        else
            report.excluded.push_back(slot.metrics.qid);
    }
    if (!report.rows.empty()) {
        for (const auto& r : report.rows) {
            report.map += r.ap;
            report.mrr += r.rr;
            report.ndcg1 += r.ndcg1;
            report.ndcg5 += r.ndcg5;
            report.ndcg10 += r.ndcg10;
        }
        double n = static_cast<double>(report.rows.size());
        report.map /= n;
        report.mrr /= n;
        report.ndcg1 /= n;
        report.ndcg5 /= n;
        report.ndcg10 /= n;
    }
    return report;
}

double permutation_p_value(const std::vector<double>& deltas, int n_permutations,
                           std::uint64_t seed) {
    if (deltas.empty()) return 1.0;
    double observed = 0.0;
    for (double d : deltas) observed += d;
    observed = std::abs(observed / static_cast<double>(deltas.size()));

    Rng rng(seed);
    int at_least = 0;
    for (int p = 0; p < n_permutations; ++p) {
        double mean = 0.0;
        for (double d : deltas) mean += rng.next_u64() & 1 ? d : -d;
        mean = std::abs(mean / static_cast<double>(deltas.size()));
        if (mean >= observed - 1e-15) ++at_least;
    }
    return static_cast<double>(at_least + 1) / static_cast<double>(n_permutations + 1);
}

PairedComparison compare_runs(const MetricReport& run, const MetricReport& baseline,
                              int n_permutations, std::uint64_t seed) {
    std::map<std::string, double> base_ap;
    for (const auto& r : baseline.rows) base_ap[r.qid] = r.ap;
    PairedComparison out;
    std::vector<double> deltas;
    for (const auto& r : run.rows) {
        auto it = base_ap.find(r.qid);
        if (it == base_ap.end()) continue;
        out.rows.push_back({r.qid, r.ap, it->second});
        deltas.push_back(r.ap - it->second);
    }
    out.p_value = permutation_p_value(deltas, n_permutations, seed);
    return out;
}

std::vector<int> fold_assignment(const std::vector<std::string>& qids, int folds,
                                 std::uint64_t seed) {
    if (folds < 2) throw Error("bad-config", "cross validation needs >= 2 folds");
    if (qids.size() < static_cast<std::size_t>(folds))
        throw Error("bad-config", "fewer queries than folds");
    std::vector<std::size_t> order(qids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<std::uint64_t> hashes(qids.size());
    for (std::size_t i = 0; i < qids.size(); ++i)
        hashes[i] = splitmix64(hash_bytes(qids[i]) ^ seed);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (hashes[a] != hashes[b]) return hashes[a] < hashes[b];
        return qids[a] < qids[b];
    });
    std::vector<int> fold(qids.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));
    return fold;
}

namespace {

std::pair<std::vector<JudgedQuery>, std::vector<JudgedQuery>> split_fold(
    const std::vector<JudgedQuery>& queries, const std::vector<int>& folds, int hold_out) {
    std::vector<JudgedQuery> train, validate;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (folds[i] == hold_out)
            validate.push_back(queries[i]);
        else
            train.push_back(queries[i]);
    }
    return {std::move(train), std::move(validate)};
}

}  // namespace

double cross_validate_C(const std::vector<JudgedQuery>& queries,
                        const std::vector<double>& c_grid, int folds, std::uint64_t seed,
                        const CvScoreFn& score) {
    if (c_grid.empty()) throw Error("bad-config", "empty C grid");
    std::vector<std::string> qids;
    for (const auto& jq : queries) qids.push_back(jq.query.qid);
    auto fold = fold_assignment(qids, folds, seed);

    double best_c = c_grid.front();
    double best_map = -1.0;
    for (double c : c_grid) {
        double mean = 0.0;
        for (int f = 0; f < folds; ++f) {
            auto [train, validate] = split_fold(queries, fold, f);
            mean += score(train, validate, c);
        }
        mean /= static_cast<double>(folds);
        if (mean > best_map || (mean == best_map && c < best_c)) {
            best_map = mean;
            best_c = c;
        }
    }
    return best_c;
}

GenHyperParams sweep_generative(const std::vector<JudgedQuery>& queries, const GenGrid& grid,
                                int folds, std::uint64_t seed, const GenScoreFn& score) {
    if (grid.alpha.empty() || grid.beta.empty() || grid.gamma.empty() || grid.delta.empty())
        throw Error("bad-config", "empty generative grid");
    std::vector<std::string> qids;
    for (const auto& jq : queries) qids.push_back(jq.query.qid);
    auto fold = fold_assignment(qids, folds, seed);

    GenHyperParams best;
    double best_map = -1.0;
    bool first = true;
    for (double a : grid.alpha)
        for (double b : grid.beta)
            for (double g : grid.gamma)
                for (double d : grid.delta) {
                    GenHyperParams hp{a, b, g, d};
                    double mean = 0.0;
                    for (int f = 0; f < folds; ++f) {
                        auto [train, validate] = split_fold(queries, fold, f);
                        mean += score(train, validate, hp);
                    }
                    mean /= static_cast<double>(folds);
                    auto tuple_of = [](const GenHyperParams& h) {
                        return std::tie(h.alpha, h.beta, h.gamma, h.delta);
                    };
                    if (first || mean > best_map ||
                        (mean == best_map && tuple_of(hp) > tuple_of(best))) {
                        best_map = mean;
                        best = hp;
                        first = false;
                    }
                }
    return best;
}

void write_run(const Run& run, const Catalog& catalog, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("file-write", "cannot write " + path.string());
    for (const auto& qr : run.queries) {
        for (std::size_t rank = 0; rank < qr.rows.size(); ++rank) {
            const RunRow& r = qr.rows[rank];
            out << qr.qid << "\t" << rank + 1 << "\t" << catalog.entity_name(r.entity) << "\t"
                << fmt_double(r.score) << "\t" << catalog.type_name(r.best_type) << "\t"
                << r.hint_mask << "\n";
        }
    }
    if (!out) throw Error("file-write", "failed writing " + path.string());
}

Run load_run(const std::filesystem::path& path, const Catalog& catalog) {
    std::ifstream in(path);
    if (!in) throw Error("file-missing", "cannot open " + path.string());
    Run run;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, rank, entity, score, best_type, hint_mask;
        if (!std::getline(ss, qid, '\t') || !std::getline(ss, rank, '\t') ||
            !std::getline(ss, entity, '\t') || !std::getline(ss, score, '\t') ||
            !std::getline(ss, best_type, '\t') || !std::getline(ss, hint_mask))
            throw Error("bad-record", path.filename().string() + " line " +
                                          std::to_string(number) + ": expected 6 fields");
        auto e = catalog.find_entity(entity);
        auto t = catalog.find_type(best_type);
        if (!e || !t)
            throw Error("dangling-reference", path.filename().string() + " line " +
                                                  std::to_string(number) + ": unknown id");
        if (run.queries.empty() || run.queries.back().qid != qid)
            run.queries.push_back({qid, {}});
        run.queries.back().rows.push_back({*e, std::stod(score), *t, hint_mask});
    }
    return run;
}

void write_report(const MetricReport& report, const std::optional<PairedComparison>& paired,
                  const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("file-write", "cannot write " + path.string());
    out << "qid\tap\trr\tndcg1\tndcg5\tndcg10\tdelta_ap_vs_baseline\n";
    std::map<std::string, double> delta;
    if (paired)
        for (const auto& r : paired->rows) delta[r.qid] = r.ap_run - r.ap_baseline;
    for (const auto& r : report.rows) {
        out << r.qid << "\t" << fmt_double(r.ap) << "\t" << fmt_double(r.rr) << "\t"
            << fmt_double(r.ndcg1) << "\t" << fmt_double(r.ndcg5) << "\t"
            << fmt_double(r.ndcg10) << "\t";
        auto it = delta.find(r.qid);
        out << (it != delta.end() ? fmt_double(it->second) : "-") << "\n";
    }
    for (const auto& qid : report.excluded)
        out << "EXCLUDED\t" << qid << "\t-\t-\t-\t-\t-\n";
    out << "ALL\t" << fmt_double(report.map) << "\t" << fmt_double(report.mrr) << "\t"
        << fmt_double(report.ndcg1) << "\t" << fmt_double(report.ndcg5) << "\t"
        << fmt_double(report.ndcg10) << "\t-\n";
    if (paired) out << "P_VALUE\t" << fmt_double(paired->p_value) << "\t-\t-\t-\t-\t-\n";
    if (!out) throw Error("file-write", "failed writing " + path.string());
}

}  // namespace ter
