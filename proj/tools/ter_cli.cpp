// ter: typed entity search and ranking over an annotated corpus.
//
// Subcommands: build-index, search, train, evaluate, predict-type, explain.
// Options live in a TOML-style config file and/or on the command line; the
// command line wins. --seed falls back to the TER_SEED environment variable.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ter/catalog.hpp"
#include "ter/corpus_index.hpp"
#include "ter/discriminative.hpp"
#include "ter/error.hpp"
#include "ter/evaluation.hpp"
#include "ter/generative.hpp"
#include "ter/parallel.hpp"
#include "ter/type_predictor.hpp"

namespace {

struct Options {
    std::string types_file, entities_file, lemmas_file;
    std::string corpus_file, queries_file, descriptions_file;
    std::string index_file = "index.bin";
    std::string model_file = "model.txt";
    std::string train_log;

    double theta = ter::kDefaultWandTheta;
    std::uint32_t window = ter::kDefaultWindowWidth;
    ter::GenHyperParams gen;
    ter::TrainHyperParams train;
    std::string training_mode = "itemwise";
    std::string partition = "exhaustive";
    bool no_anneal = false;
    std::uint64_t seed = 42;
    int threads = 0;

    // subcommand arguments
    std::string query_text;
    std::string type_name;
    std::string entity_name;
    std::string ranker = "discriminative";
    std::string method = "ours";
    std::string baseline_run;
    std::string report_out = "report.tsv";
    std::string runs_out = "runs.tsv";
    std::string cv_grid;
    int k = 5;
    int top = 10;
    double mu = 0.1;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ter::Catalog load_catalog_checked(const Options& opt) {
    if (opt.types_file.empty() || opt.entities_file.empty() || opt.lemmas_file.empty())
        throw ter::Error("bad-config", "types-file, entities-file and lemmas-file are required");
    return ter::load_catalog(opt.types_file, opt.entities_file, opt.lemmas_file);
}

ter::SnippetIndex open_index(const Options& opt, const ter::Catalog& catalog) {
    return ter::load_index(opt.index_file, catalog);
}

ter::TrainHyperParams train_params(const Options& opt) {
    ter::TrainHyperParams hp = opt.train;
    hp.mode = ter::parse_training_mode(opt.training_mode);
    hp.partition_mode = ter::parse_partition_mode(opt.partition);
    hp.anneal = !opt.no_anneal;
    hp.seed = opt.seed;
    hp.beta = opt.gen.beta;
    hp.gamma = opt.gen.gamma;
    return hp;
}

// Prior table for model-free rankers: gold-type hits from the queries file
// when present, otherwise smoothing only.
ter::TypePriorTable ambient_priors(const Options& opt, const ter::Catalog& catalog) {
    if (!opt.queries_file.empty()) {
        auto queries = ter::load_queries(opt.queries_file, catalog);
        return ter::build_prior_table(queries, catalog, opt.gen.gamma);
    }
    return ter::TypePriorTable(catalog, opt.gen.gamma);
}

ter::QueryRun run_one(const Options& opt, const std::string& ranker,
                      const ter::JudgedQuery& jq, const ter::Catalog& catalog,
                      const ter::SnippetIndex& index, const ter::TypePriorTable& priors,
                      const ter::Model* model) {
    if (ranker == "generic")
        return ter::run_generic(jq.query, catalog, index, opt.theta, opt.window);
    if (ranker == "perfect") {
        if (!jq.gold.gold_type)
            throw ter::Error("missing-type", "perfect ranker needs a gold type (use --type)");
        return ter::run_perfect(jq.query, *jq.gold.gold_type, catalog, index, opt.theta,
                                opt.window);
    }
    if (ranker == "generative")
        return ter::run_generative(jq.query, catalog, index, priors, opt.gen,
                                   ter::parse_partition_mode(opt.partition), opt.theta,
                                   opt.window);
    if (ranker == "discriminative")
        return ter::run_discriminative(jq.query, catalog, index, priors, *model, opt.theta,
                                       opt.window);
    if (ranker == "two-stage")
        return ter::run_two_stage(jq.query, catalog, index, priors, *model, opt.k, opt.theta,
                                  opt.window);
    throw ter::Error("bad-config", "unknown ranker: " + ranker);
}

bool needs_model(const std::string& ranker) {
    return ranker == "discriminative" || ranker == "two-stage";
}

int cmd_build_index(const Options& opt) {
    auto catalog = load_catalog_checked(opt);
    if (opt.corpus_file.empty()) throw ter::Error("bad-config", "corpus-file is required");
    auto index = ter::build_index(opt.corpus_file, catalog, opt.window);
    ter::save_index(index, opt.index_file);
    std::printf("indexed %zu documents, %llu mentions -> %s\n", index.doc_count(),
                static_cast<unsigned long long>(index.total_mentions()),
                opt.index_file.c_str());
    return 0;
}

int cmd_search(const Options& opt) {
    auto catalog = load_catalog_checked(opt);
    auto index = open_index(opt, catalog);
    auto query = ter::parse_query(opt.query_text, "q0");

    ter::JudgedQuery jq;
    jq.query = query;
    if (!opt.type_name.empty()) {
        auto t = catalog.find_type(opt.type_name);
        if (!t) throw ter::Error("unknown-type", "unknown type " + opt.type_name);
        jq.gold.gold_type = *t;
    }

    std::optional<ter::Model> model;
    ter::TypePriorTable priors(catalog, opt.gen.gamma);
    if (needs_model(opt.ranker)) {
        model = ter::load_model(opt.model_file);
        priors = ter::prior_table_from_model(*model, catalog);
    } else {
        priors = ambient_priors(opt, catalog);
    }

    auto run = run_one(opt, opt.ranker, jq, catalog, index, priors,
                       model ? &*model : nullptr);
    std::size_t shown = 0;
    for (const auto& row : run.rows) {
        if (opt.top > 0 && shown == static_cast<std::size_t>(opt.top)) break;
        std::printf("%zu\t%s\t%s\t%s\t%s\n", ++shown,
                    catalog.entity_name(row.entity).c_str(), fmt(row.score).c_str(),
                    catalog.type_name(row.best_type).c_str(), row.hint_mask.c_str());
    }
    return 0;
}

int cmd_train(const Options& opt) {
    auto catalog = load_catalog_checked(opt);
    auto index = open_index(opt, catalog);
    if (opt.queries_file.empty()) throw ter::Error("bad-config", "queries-file is required");
    auto queries = ter::load_queries(opt.queries_file, catalog);

    ter::TrainHyperParams hp = train_params(opt);
    auto priors = ter::build_prior_table(queries, catalog, hp.gamma);

    if (!opt.cv_grid.empty()) {
        std::vector<double> grid;
        std::stringstream ss(opt.cv_grid);
        std::string item;
        while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));
        double chosen = ter::cross_validate_C(
            queries, grid, 5, opt.seed,
            [&](const std::vector<ter::JudgedQuery>& train_q,
                const std::vector<ter::JudgedQuery>& val_q, double c) {
                ter::TrainHyperParams fold_hp = hp;
                fold_hp.C = c;
                auto fold_priors = ter::build_prior_table(train_q, catalog, fold_hp.gamma);
                auto system =
                    ter::build_constraints(train_q, catalog, index, fold_priors, fold_hp);
                auto trained = ter::train(system, fold_hp);
                trained.model.type_hits.clear();
                ter::Run run;
                for (const auto& jq : val_q)
                    run.queries.push_back(ter::run_discriminative(jq.query, catalog, index,
                                                                  fold_priors, trained.model,
                                                                  opt.theta, opt.window));
                return ter::evaluate_run(run, val_q).map;
            });
        hp.C = chosen;
        std::printf("cross-validated C = %s\n", fmt(chosen).c_str());
    }

    auto system = ter::build_constraints(queries, catalog, index, priors, hp);
    for (const auto& qid : system.skipped)
        std::fprintf(stderr, "warning: query %s has no relevant entities, skipped\n",
                     qid.c_str());
    auto result = ter::train(system, hp);

    result.model.data_fingerprint = ter::fingerprint_training_data(queries);
    for (std::size_t t = 0; t < catalog.type_count(); ++t)
        if (auto hits = priors.hits(ter::type_id(t)); hits > 0)
            result.model.type_hits.emplace_back(catalog.type_name(ter::type_id(t)), hits);

    ter::save_model(result.model, opt.model_file);
    std::string log_path = opt.train_log.empty() ? opt.model_file + ".log" : opt.train_log;
    ter::write_training_log(result.log, log_path);
    std::printf("trained %zu queries (%zu skipped), %d outer iterations -> %s\n",
                system.queries.size(), system.skipped.size(),
                static_cast<int>(result.log.size()), opt.model_file.c_str());
    return 0;
}

int cmd_evaluate(const Options& opt) {
    auto catalog = load_catalog_checked(opt);
    auto index = open_index(opt, catalog);
    if (opt.queries_file.empty()) throw ter::Error("bad-config", "queries-file is required");
    auto queries = ter::load_queries(opt.queries_file, catalog);

    std::optional<ter::Model> model;
    ter::TypePriorTable priors(catalog, opt.gen.gamma);
    if (needs_model(opt.ranker)) {
        model = ter::load_model(opt.model_file);
        priors = ter::prior_table_from_model(*model, catalog);
    } else {
        priors = ter::build_prior_table(queries, catalog, opt.gen.gamma);
    }

    ter::Run run;
    run.ranker = opt.ranker;
    for (const auto& jq : queries)
        run.queries.push_back(
            run_one(opt, opt.ranker, jq, catalog, index, priors, model ? &*model : nullptr));

    ter::write_run(run, catalog, opt.runs_out);
    auto report = ter::evaluate_run(run, queries);

    std::optional<ter::PairedComparison> paired;
    if (!opt.baseline_run.empty()) {
        auto baseline = ter::load_run(opt.baseline_run, catalog);
        auto baseline_report = ter::evaluate_run(baseline, queries);
        paired = ter::compare_runs(report, baseline_report, 10000, opt.seed);
    }
    ter::write_report(report, paired, opt.report_out);

    std::printf("%s: MAP %s MRR %s NDCG@10 %s over %zu queries (%zu excluded) -> %s\n",
                opt.ranker.c_str(), fmt(report.map).c_str(), fmt(report.mrr).c_str(),
                fmt(report.ndcg10).c_str(), report.rows.size(), report.excluded.size(),
                opt.report_out.c_str());
    if (paired) std::printf("paired vs %s: p = %s\n", opt.baseline_run.c_str(),
                            fmt(paired->p_value).c_str());
    return 0;
}

int cmd_predict_type(const Options& opt) {
    auto catalog = load_catalog_checked(opt);
    auto query = ter::parse_query(opt.query_text, "q0");

    if (opt.method == "bn") {
        if (opt.descriptions_file.empty())
            throw ter::Error("bad-config", "descriptions-file is required for --method bn");
        auto descriptions = ter::DescriptionStore::load(opt.descriptions_file, catalog);
        auto scores = ter::bn_type_scores(query, descriptions, catalog, opt.mu);
        for (std::size_t i = 0; i < scores.size() && i < static_cast<std::size_t>(opt.top); ++i)
            std::printf("%zu\t%s\t%s\n", i + 1, catalog.type_name(scores[i].first).c_str(),
                        fmt(scores[i].second).c_str());
        return 0;
    }
    if (opt.method != "ours") throw ter::Error("bad-config", "method must be ours or bn");

    auto index = open_index(opt, catalog);
    auto model = ter::load_model(opt.model_file);
    auto priors = ter::prior_table_from_model(model, catalog);
    auto pool = ter::retrieval_pool(query, catalog.root(), catalog, index, opt.theta,
                                    opt.window);
    auto prediction =
        ter::predict_type(query, pool, model, catalog, index, priors, opt.k);
    for (std::size_t i = 0;
         i < prediction.ranked.size() && i < static_cast<std::size_t>(opt.top); ++i)
        std::printf("%zu\t%s\t%s\n", i + 1,
                    catalog.type_name(prediction.ranked[i].first).c_str(),
                    fmt(prediction.ranked[i].second).c_str());
    return 0;
}

int cmd_explain(const Options& opt) {
    auto catalog = load_catalog_checked(opt);
    auto index = open_index(opt, catalog);
    auto query = ter::parse_query(opt.query_text, "q0");
    auto e = catalog.find_entity(opt.entity_name);
    if (!e) throw ter::Error("unknown-entity", "unknown entity " + opt.entity_name);

    if (opt.ranker == "generative") {
        auto priors = ambient_priors(opt, catalog);
        auto score = ter::score_entity(query, *e, catalog, index, priors, opt.gen,
                                       ter::parse_partition_mode(opt.partition), true);
        auto ex = ter::explain_generative(score, query.words.size());
        std::printf("entity\t%s\nlog_mass\t%s\ntype\t%s\nswitch\t%s\n",
                    opt.entity_name.c_str(), fmt(score.log_joint).c_str(),
                    catalog.type_name(ex.best_type).c_str(), ex.best_z.to_string().c_str());
        for (const auto& [t, m] : ex.type_marginals)
            std::printf("type_marginal\t%s\t%s\n", catalog.type_name(t).c_str(),
                        fmt(m).c_str());
        for (std::size_t j = 0; j < ex.hint_marginals.size(); ++j)
            std::printf("hint_marginal\t%s\t%s\n", query.words[j].c_str(),
                        fmt(ex.hint_marginals[j]).c_str());
        return 0;
    }
    if (opt.ranker != "discriminative")
        throw ter::Error("bad-config", "explain supports generative or discriminative");

    auto model = ter::load_model(opt.model_file);
    auto priors = ter::prior_table_from_model(model, catalog);
    auto inferred = ter::explain_discriminative(query, *e, model, catalog, index, priors);
    std::printf("entity\t%s\nscore\t%s\ntype\t%s\nswitch\t%s\n", opt.entity_name.c_str(),
                fmt(inferred.score).c_str(), catalog.type_name(inferred.t).c_str(),
                inferred.z.to_string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ter: typed entity search and ranking"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML-style config file; command-line flags win");
    app.allow_config_extras(false);

    Options opt;
    app.add_option("--types-file", opt.types_file, "catalog types TSV");
    app.add_option("--entities-file", opt.entities_file, "catalog entities TSV");
    app.add_option("--lemmas-file", opt.lemmas_file, "catalog lemmas TSV");
    app.add_option("--corpus-file", opt.corpus_file, "annotated corpus JSONL");
    app.add_option("--queries-file", opt.queries_file, "judged queries JSONL");
    app.add_option("--descriptions-file", opt.descriptions_file, "entity descriptions JSONL");
    app.add_option("--index-file", opt.index_file, "index image path");
    app.add_option("--model-file", opt.model_file, "model file path");
    app.add_option("--train-log", opt.train_log, "training log path (default model + .log)");

    app.add_option("--theta", opt.theta, "WAND threshold fraction")
        ->check(CLI::Range(1e-9, 1.0));
    app.add_option("--window", opt.window, "snippet window width (tokens each side)");
    app.add_option("--alpha", opt.gen.alpha, "snippet LM smoothing")
        ->check(CLI::Range(1e-9, 1.0));
    app.add_option("--beta", opt.gen.beta, "type LM smoothing")->check(CLI::Range(1e-9, 1.0));
    app.add_option("--gamma", opt.gen.gamma, "type prior smoothing")
        ->check(CLI::Range(1e-9, 1.0));
    app.add_option("--delta", opt.gen.delta, "hint Bernoulli")->check(CLI::Range(1e-9, 1.0));

    app.add_option("--c", opt.train.C, "SVM trade-off C")->check(CLI::PositiveNumber);
    app.add_option("--d0", opt.train.schedule.d0, "initial annealing temperature")
        ->check(CLI::PositiveNumber);
    app.add_option("--decay", opt.train.schedule.decay, "temperature decay per iteration")
        ->check(CLI::Range(1e-9, 1.0));
    app.add_option("--outer-iters", opt.train.schedule.outer_iters, "outer iterations")
        ->check(CLI::PositiveNumber);
    app.add_option("--neg-cap", opt.train.neg_cap, "negatives sampled per query")
        ->check(CLI::PositiveNumber);
    app.add_option("--lambda-iters", opt.train.lambda_iters, "subgradient iterations")
        ->check(CLI::PositiveNumber);
    app.add_option("--lambda-eta0", opt.train.lambda_eta0, "subgradient step scale")
        ->check(CLI::PositiveNumber);
    app.add_option("--training-mode", opt.training_mode, "itemwise | pairwise");
    app.add_option("--partition", opt.partition, "exhaustive | contiguous");
    app.add_flag("--no-anneal", opt.no_anneal, "collapse variant: D = 0 throughout");
    app.add_option("--seed", opt.seed, "seed for all randomness")->envname("TER_SEED");
    app.add_option("--threads", opt.threads, "parallelism cap (0 = default)");

    auto* build = app.add_subcommand("build-index", "build and save the snippet index");
    auto* search = app.add_subcommand("search", "rank entities for one query");
    search->add_option("--query", opt.query_text, "query text")->required();
    search->add_option("--type", opt.type_name, "type restriction (perfect ranker)");
    search->add_option("--ranker", opt.ranker,
                       "generic | generative | discriminative | perfect | two-stage");
    search->add_option("--k", opt.k, "two-stage consensus depth");
    search->add_option("--top", opt.top, "rows to print (0 = all)");
    auto* train = app.add_subcommand("train", "train the discriminative model");
    train->add_option("--cv-grid", opt.cv_grid, "comma-separated C grid for 5-fold CV");
    auto* evaluate = app.add_subcommand("evaluate", "rank all queries and report metrics");
    evaluate->add_option("--ranker", opt.ranker,
                         "generic | generative | discriminative | perfect | two-stage");
    evaluate->add_option("--baseline-run", opt.baseline_run, "runs.tsv for paired comparison");
    evaluate->add_option("--report-out", opt.report_out, "report TSV path");
    evaluate->add_option("--runs-out", opt.runs_out, "runs TSV path");
    evaluate->add_option("--k", opt.k, "two-stage consensus depth");
    auto* predict = app.add_subcommand("predict-type", "rank candidate target types");
    predict->add_option("--query", opt.query_text, "query text")->required();
    predict->add_option("--method", opt.method, "ours | bn");
    predict->add_option("--k", opt.k, "consensus depth over top-k entities");
    predict->add_option("--mu", opt.mu, "description LM smoothing (bn)")
        ->check(CLI::Range(1e-9, 1.0));
    predict->add_option("--top", opt.top, "rows to print");
    auto* explain = app.add_subcommand("explain", "best interpretation for one entity");
    explain->add_option("--query", opt.query_text, "query text")->required();
    explain->add_option("--entity", opt.entity_name, "entity id")->required();
    explain->add_option("--ranker", opt.ranker, "generative | discriminative");

    CLI11_PARSE(app, argc, argv);

    ter::set_thread_cap(opt.threads);
    opt.train.seed = opt.seed;

    try {
        if (build->parsed()) return cmd_build_index(opt);
        if (search->parsed()) return cmd_search(opt);
        if (train->parsed()) return cmd_train(opt);
        if (evaluate->parsed()) return cmd_evaluate(opt);
        if (predict->parsed()) return cmd_predict_type(opt);
        if (explain->parsed()) return cmd_explain(opt);
    } catch (const ter::Error& e) {
        std::fprintf(stderr, "error %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
