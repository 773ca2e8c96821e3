// Benchmark of the data-parallel scoring kernels against their serial
// reference paths on a generated workload. Both paths must produce identical
// results; only the wall time differs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "ter/corpus_index.hpp"
#include "ter/discriminative.hpp"
#include "ter/evaluation.hpp"
#include "ter/generative.hpp"
#include "ter/parallel.hpp"
#include "ter/synthetic.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
double time_best_of(int repeats, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        auto start = Clock::now();
        fn();
        best = std::min(best, seconds_since(start));
    }
    return best;
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-28s serial %8.3fs   parallel %8.3fs   speedup %.2fx\n", name, serial,
                parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ter-bench: serial vs OpenMP kernel timings"};
    int threads = 0;
    int repeats = 3;
    std::string work_dir = "bench_workload";
    app.add_option("--threads", threads, "thread cap (0 = OpenMP default)")
        ->capture_default_str();
    app.add_option("--repeats", repeats, "timing repeats, best is kept")
        ->capture_default_str();
    app.add_option("--dir", work_dir, "workload directory")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    ter::set_thread_cap(threads);

    ter::SynthParams params;
    params.n_queries = 24;
    params.n_entities = 160;
    params.n_docs = 1400;
    auto paths = ter::write_benchmark(work_dir, params);

    auto catalog = ter::load_catalog(paths.types, paths.entities, paths.lemmas);
    auto index = ter::build_index(paths.corpus, catalog, params.window);
    auto queries = ter::load_queries(paths.queries, catalog);
    auto priors = ter::build_prior_table(queries, catalog, 0.1);

    std::printf("workload: %d queries, %zu entities, %zu docs\n", params.n_queries,
                catalog.entity_count(), index.doc_count());

    // Generative scoring over every (query, entity) pair.
    {
        ter::GenHyperParams hp;
        std::vector<ter::EntityId> all;
        for (std::size_t e = 0; e < catalog.entity_count(); ++e)
            all.push_back(ter::entity_id(e));
        auto run = [&](ter::Execution exec) {
            double acc = 0.0;
            for (const auto& jq : queries) {
                auto scores = ter::rank_generative(jq.query, all, catalog, index, priors, hp,
                                                   ter::PartitionMode::exhaustive, exec);
                acc += scores.front().log_joint;
            }
            return acc;
        };
        double serial = time_best_of(repeats, [&] { run(ter::Execution::serial); });
        double parallel = time_best_of(repeats, [&] { run(ter::Execution::parallel); });
        report("generative scoring", serial, parallel);
    }

    // Discriminative training: constraint extraction plus lambda steps.
    {
        ter::TrainHyperParams hp;
        hp.lambda_iters = 1500;
        hp.schedule.outer_iters = 3;
        auto run = [&](ter::Execution exec) {
            auto system = ter::build_constraints(queries, catalog, index, priors, hp, exec);
            auto result = ter::train(system, hp, exec);
            return result.log.back().objective;
        };
        double serial = time_best_of(repeats, [&] { run(ter::Execution::serial); });
        double parallel = time_best_of(repeats, [&] { run(ter::Execution::parallel); });
        report("max-margin training", serial, parallel);
    }

    // Per-query evaluation of a support-score run.
    {
        auto make_run = [&] {
            ter::Run run;
            run.ranker = "generic";
            for (const auto& jq : queries)
                run.queries.push_back(
                    ter::run_generic(jq.query, catalog, index, params.theta, params.window));
            return run;
        };
        auto run_obj = make_run();
        double serial = time_best_of(repeats, [&] {
            ter::evaluate_run(run_obj, queries, ter::Execution::serial);
        });
        double parallel = time_best_of(repeats, [&] {
            ter::evaluate_run(run_obj, queries, ter::Execution::parallel);
        });
        report("run evaluation", serial, parallel);
    }

    std::filesystem::remove_all(work_dir);
    return 0;
}
