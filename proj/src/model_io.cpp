#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ter/discriminative.hpp"
#include "ter/error.hpp"

namespace ter {

namespace {

constexpr int kModelFileVersion = 1;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("file-write", "cannot write " + path.string());
    out << "ter-model " << kModelFileVersion << "\n";
    out << "layout " << model.layout << "\n";
    out << "mode " << training_mode_name(model.hp.mode) << "\n";
    out << "partition " << partition_mode_name(model.hp.partition_mode) << "\n";
    out << "c " << fmt_double(model.hp.C) << "\n";
    out << "d0 " << fmt_double(model.hp.schedule.d0) << "\n";
    out << "decay " << fmt_double(model.hp.schedule.decay) << "\n";
    out << "outer_iters " << model.hp.schedule.outer_iters << "\n";
    out << "neg_cap " << model.hp.neg_cap << "\n";
    out << "seed " << model.hp.seed << "\n";
    out << "beta " << fmt_double(model.hp.beta) << "\n";
    out << "gamma " << fmt_double(model.hp.gamma) << "\n";
    out << "lambda_iters " << model.hp.lambda_iters << "\n";
    out << "lambda_eta0 " << fmt_double(model.hp.lambda_eta0) << "\n";
    out << "anneal " << (model.hp.anneal ? 1 : 0) << "\n";
    char fp[32];
    std::snprintf(fp, sizeof(fp), "%016" PRIx64, model.data_fingerprint);
    out << "fingerprint " << fp << "\n";
    out << "type_hits " << model.type_hits.size() << "\n";
    for (const auto& [name, count] : model.type_hits) out << name << " " << count << "\n";
    out << "weights " << kFeatureCount << "\n";
    for (std::size_t f = 0; f < kFeatureCount; ++f)
        out << kFeatureNames[f] << " " << fmt_double(model.lambda[f]) << "\n";
    if (!out) throw Error("file-write", "failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("file-missing", "cannot open " + path.string());
    Model model;

    auto next = [&](const std::string& expect_key) {
        std::string line;
        if (!std::getline(in, line))
            throw Error("model-corrupt", path.string() + ": missing field " + expect_key);
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key != expect_key)
            throw Error("model-corrupt",
                        path.string() + ": expected " + expect_key + ", found " + key);
        std::string rest;
        ss >> rest;
        return rest;
    };

    if (int version = std::stoi(next("ter-model")); version != kModelFileVersion)
        throw Error("model-version", "model file version " + std::to_string(version) +
                                         ", expected " + std::to_string(kModelFileVersion));
    model.layout = next("layout");
    if (model.layout != kFeatureLayoutVersion)
        throw Error("model-layout", "model layout " + model.layout + " does not match " +
                                        kFeatureLayoutVersion);
    model.hp.mode = parse_training_mode(next("mode"));
    model.hp.partition_mode = parse_partition_mode(next("partition"));
    model.hp.C = std::stod(next("c"));
    model.hp.schedule.d0 = std::stod(next("d0"));
    model.hp.schedule.decay = std::stod(next("decay"));
    model.hp.schedule.outer_iters = std::stoi(next("outer_iters"));
    model.hp.neg_cap = std::stoi(next("neg_cap"));
    model.hp.seed = std::stoull(next("seed"));
    model.hp.beta = std::stod(next("beta"));
    model.hp.gamma = std::stod(next("gamma"));
    model.hp.lambda_iters = std::stoi(next("lambda_iters"));
    model.hp.lambda_eta0 = std::stod(next("lambda_eta0"));
    model.hp.anneal = next("anneal") == "1";
    model.data_fingerprint = std::stoull(next("fingerprint"), nullptr, 16);

    std::size_t n_hits = std::stoul(next("type_hits"));
    for (std::size_t i = 0; i < n_hits; ++i) {
        std::string line;
        if (!std::getline(in, line)) throw Error("model-corrupt", "truncated type_hits");
        std::istringstream ss(line);
        std::string name;
        std::uint64_t count;
        if (!(ss >> name >> count)) throw Error("model-corrupt", "bad type_hits row");
        model.type_hits.emplace_back(name, count);
    }

    std::size_t n_weights = std::stoul(next("weights"));
    if (n_weights != kFeatureCount)
        throw Error("model-layout", "model has " + std::to_string(n_weights) + " weights, " +
                                        "layout needs " + std::to_string(kFeatureCount));
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        std::string line;
        if (!std::getline(in, line)) throw Error("model-corrupt", "truncated weights");
        std::istringstream ss(line);
        std::string name;
        double value;
        if (!(ss >> name >> value) || name != kFeatureNames[f])
            throw Error("model-layout", "unexpected weight row: " + line);
        model.lambda[f] = value;
    }
    return model;
}

void write_training_log(const std::vector<TrainLogRow>& rows,
                        const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("file-write", "cannot write " + path.string());
    out << "iter\tD\tobjective\thinge_loss\tentropy_u\n";
    for (const auto& r : rows)
        out << r.iter << "\t" << fmt_double(r.D) << "\t" << fmt_double(r.objective) << "\t"
            << fmt_double(r.hinge_loss) << "\t" << fmt_double(r.entropy) << "\n";
    if (!out) throw Error("file-write", "failed writing " + path.string());
}

TypePriorTable prior_table_from_model(const Model& model, const Catalog& catalog) {
    TypePriorTable table(catalog, model.hp.gamma);
    for (const auto& [name, count] : model.type_hits) {
        auto t = catalog.find_type(name);
        if (!t) throw Error("dangling-reference", "model type_hits names unknown type " + name);
        table.set_hits(*t, count);
    }
    return table;
}

}  // namespace ter
