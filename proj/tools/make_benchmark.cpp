// Generates the synthetic benchmark dataset (catalog, corpus, judged queries,
// descriptions and a ready-to-use config file).

#include <cstdio>

#include <CLI11.hpp>

#include "ter/error.hpp"
#include "ter/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"ter-make-benchmark: write a synthetic evaluation dataset"};
    std::string out_dir = "benchmark";
    ter::SynthParams params;
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--queries", params.n_queries, "number of queries")->capture_default_str();
    app.add_option("--entities", params.n_entities, "number of entities")
        ->capture_default_str();
    app.add_option("--types", params.n_types, "number of types (root + 5 domains + leaves)")
        ->check(CLI::Range(7, 30))
        ->capture_default_str();
    app.add_option("--docs", params.n_docs, "number of documents")->capture_default_str();
    app.add_option("--seed", params.seed, "generator seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        auto paths = ter::write_benchmark(out_dir, params);
        std::printf("wrote %s\n", paths.config.string().c_str());
    } catch (const ter::Error& e) {
        std::fprintf(stderr, "error %s\n", e.what());
        return 1;
    }
    return 0;
}
