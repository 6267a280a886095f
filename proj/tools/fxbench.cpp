// fxbench: run the forecasting benchmark, fit or apply single models, and
// generate synthetic rate files.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "fxhybrid/bench.hpp"
#include "fxhybrid/synth.hpp"

using namespace fxh;

namespace {

int cmd_bench(const std::string& config_path, const std::string& out_override, bool quiet) {
    bench::ExperimentConfig cfg = bench::load_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    const bench::BenchReport rep = bench::run_experiment(cfg);
    const auto files = bench::emit_all(rep, cfg.output_dir);
    if (!quiet) {
        std::cout << bench::emit_table(rep);
        std::cout << "\nwrote " << files.size() << " files to " << cfg.output_dir << '\n';
    }
    return 0;
}

int cmd_fit(const std::string& model_name, const std::string& config_path, std::string currency, std::string out) {
    const bench::ModelKind kind = bench::parse_model(model_name);
    const bench::ExperimentConfig cfg = bench::load_config(config_path);
    const auto series = load_csv(cfg.data_path);
    if (currency.empty()) currency = bench::resolve_currencies(series, cfg).front();
    bench::StoredModel m;
    double test_rmse = 0.0;
    try {
        const bench::PreparedData data = bench::prepare(series, currency, cfg.recipe(kind), cfg);
        m = bench::train_model(kind, currency, data, cfg);
        test_rmse = rmse(m.predict_scaled(data.test), data.test.target);
    } catch (const Error& e) {
        fail("currency " + currency + ", model " + model_name + ": " + e.what());
    }
    if (out.empty()) out = currency + "_" + model_name + ".model";
    std::ofstream f(out);
    if (!f) fail("cannot write model file '" + out + "'");
    m.write(f);
    if (!f) fail("error writing model file '" + out + "'");
    std::cout << currency << ' ' << model_name << " test_rmse " << fmt_fixed(test_rmse, 6) << " -> " << out << '\n';
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& csv_path) {
    const bench::StoredModel m = bench::load_model(model_path);
    const auto series = load_csv(csv_path);
    const Dataset d = build_supervised(series, {m.currency, m.recipe});
    require(d.cols() == Eigen::Index(m.scaler.min.size()),
            "model expects " + std::to_string(m.scaler.min.size()) + " features, data gives " + std::to_string(d.cols()));
    const RateSeries& tgt = find_series(series, m.currency);
    for (Eigen::Index t = 0; t < d.rows(); ++t) {
        const double y = m.predict_raw(Eigen::VectorXd(d.features.row(t).transpose()));
        std::cout << tgt.month_at(size_t(t) + 1).str() << ' ' << fmt_exact(y) << '\n';
    }
    return 0;
}

int cmd_synth(const std::string& recipe, const std::string& out, std::uint64_t seed) {
    const auto set = synth::generate(recipe, seed);
    std::ofstream f(out);
    if (!f) fail("cannot write '" + out + "'");
    write_csv(f, set);
    if (!f) fail("error writing '" + out + "'");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monthly exchange-rate forecasting benchmark"};
    app.require_subcommand(1);

    std::string config, out_dir, model, currency, out_file, model_file, csv, recipe, synth_out;
    bool quiet = false;
    std::uint64_t seed = 1;

    auto* bench_cmd = app.add_subcommand("bench", "train every enabled model on every currency and write the report");
    bench_cmd->add_option("config", config, "experiment config file")->required();
    bench_cmd->add_option("--out", out_dir, "override output.dir");
    bench_cmd->add_flag("-q,--quiet", quiet, "do not print the table");

    auto* fit_cmd = app.add_subcommand("fit", "train one model and save it");
    fit_cmd->add_option("model", model, "mars, cart, hybrid, mlp or anfis")->required();
    fit_cmd->add_option("config", config, "experiment config file")->required();
    fit_cmd->add_option("-c,--currency", currency, "currency code (default: first configured)");
    fit_cmd->add_option("-o,--out", out_file, "model file to write");

    auto* predict_cmd = app.add_subcommand("predict", "one-step-ahead predictions for every month of a rate file");
    predict_cmd->add_option("model-file", model_file)->required();
    predict_cmd->add_option("csv", csv)->required();

    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic rate file");
    synth_cmd->add_option("recipe", recipe, "step7, forex5 or piecewise")->required();
    synth_cmd->add_option("out", synth_out, "output CSV")->required();
    synth_cmd->add_option("--seed", seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*bench_cmd) return cmd_bench(config, out_dir, quiet);
        if (*fit_cmd) return cmd_fit(model, config, currency, out_file);
        if (*predict_cmd) return cmd_predict(model_file, csv);
        if (*synth_cmd) return cmd_synth(recipe, synth_out, seed);
    } catch (const std::exception& e) {
        std::cerr << "fxbench: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
