// digit-triad: trains the three MNIST classifiers and writes the comparison
// report (JSON) plus per-epoch curve and dataset-stat files (CSV).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "digitriad/digitriad.hpp"

namespace fs = std::filesystem;
using namespace digitriad;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 2;
constexpr int kExitOutputError = 3;

struct RunConfig {
    std::string model = "all";
    int epochs = 30;
    int batch_size = 128;
    std::uint64_t seed = 42;
    std::string data_dir;
    std::string report_path;
    std::string curves_dir;
    std::string stats_path;
    std::string save_models_dir;
    int parallel_eval = 1;
};

std::vector<int> eval_predictions(LayerStack<real_t>& stack, const Tensor<real_t>& x, int shards) {
    if (shards > 1) return predict_labels_sharded(stack, x, shards);
    return predict_labels(stack, x);
}

BenchReport run_svm(const LabeledDataset<real_t>& train, const LabeledDataset<real_t>& test, const RunConfig& cfg,
                    const fs::path& models_dir) {
    SvmConfig svm_cfg;
    svm_cfg.seed = cfg.seed;
    std::printf("[svm] training one-vs-rest (lambda %.1e, %d passes)\n", svm_cfg.lambda, svm_cfg.epochs);
    std::fflush(stdout);

    const Tensor<real_t> xtr = flatten_for_mlp(train);
    const Tensor<real_t> xte = flatten_for_mlp(test);
    auto trained = timed([&] { return train_ovr(xtr, train.labels, svm_cfg); });

    BenchReport report;
    report.model = "svm";
    report.train_seconds = trained.seconds;
    report.epochs = svm_cfg.epochs;
    report.batch_size = 1;  // per-sample subgradient steps
    report.seed = cfg.seed;
    report.train_accuracy = accuracy(confusion(train.labels, svm_predict(trained.value, xtr)));
    const std::vector<int> test_pred = svm_predict(trained.value, xte);
    report.test_confusion = confusion(test.labels, test_pred);
    report.test_accuracy = accuracy(report.test_confusion);
    std::printf("[svm] train %.3f%%  test %.3f%%  (%.1fs)\n", 100 * report.train_accuracy, 100 * report.test_accuracy,
                report.train_seconds);
    std::fflush(stdout);

    if (!models_dir.empty()) save_svm(trained.value, models_dir / "svm.dsvm");
    return report;
}

BenchReport run_deep(const std::string& name, const LabeledDataset<real_t>& train, const LabeledDataset<real_t>& test,
                     const RunConfig& cfg, const fs::path& models_dir, const fs::path& curves_dir) {
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch_size;
    tc.seed = cfg.seed;
    if (name == "mlp") {
        tc.learning_rate = 0.01;
    } else {
        tc.learning_rate = 0.05;
        tc.lr_decay = 0.5;
        tc.lr_decay_every = 10;
    }

    Rng rng(cfg.seed);
    LayerStack<real_t> stack = build_architecture<real_t>(name, rng);
    std::printf("[%s] %lld trainable parameters, %d epochs, batch %d, lr %g\n", name.c_str(),
                static_cast<long long>(stack.param_count()), tc.epochs, tc.batch_size, tc.learning_rate);
    std::fflush(stdout);

    const Tensor<real_t> xtr = name == "mlp" ? flatten_for_mlp(train) : train.images;
    const Tensor<real_t> xte = name == "mlp" ? flatten_for_mlp(test) : test.images;

    auto history = timed([&] {
        return fit(stack, xtr, train.one_hot, train.labels, tc, rng, [&](const EpochRecord& r) {
            std::printf("[%s] epoch %d/%d  loss %.4f  acc %.4f  (%.1fs)\n", name.c_str(), r.epoch, tc.epochs, r.loss,
                        r.accuracy, r.seconds);
            std::fflush(stdout);
        });
    });

    BenchReport report;
    report.model = name;
    report.train_seconds = history.seconds;
    report.epochs = tc.epochs;
    report.batch_size = tc.batch_size;
    report.seed = cfg.seed;
    report.history = history.value;
    report.train_accuracy = accuracy(confusion(train.labels, eval_predictions(stack, xtr, cfg.parallel_eval)));
    const std::vector<int> test_pred = eval_predictions(stack, xte, cfg.parallel_eval);
    report.test_confusion = confusion(test.labels, test_pred);
    report.test_accuracy = accuracy(report.test_confusion);
    std::printf("[%s] train %.3f%%  test %.3f%%  (%.1fs)\n", name.c_str(), 100 * report.train_accuracy,
                100 * report.test_accuracy, report.train_seconds);
    std::fflush(stdout);

    if (!models_dir.empty()) stack.save(models_dir / (name + ".dnet"));
    if (!curves_dir.empty()) emit_curves(report.history, curves_dir / (name + "_curves.csv"));
    return report;
}

int run(const RunConfig& cfg) {
    fs::path data_dir = cfg.data_dir;
    if (data_dir.empty()) {
        if (const char* env = std::getenv("DIGIT_TRIAD_DATA")) data_dir = env;
    }
    if (data_dir.empty()) {
        std::fprintf(stderr, "error: no data directory (use --data-dir or DIGIT_TRIAD_DATA)\n");
        return kExitDataError;
    }

    LabeledDataset<real_t> train, test;
    double load_seconds = 0.0;
    try {
        auto loaded = timed([&] {
            return std::pair{load_dataset<real_t>(data_dir, Role::train), load_dataset<real_t>(data_dir, Role::test)};
        });
        train = std::move(loaded.value.first);
        test = std::move(loaded.value.second);
        load_seconds = loaded.seconds;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: loading MNIST from %s failed: %s\n", data_dir.string().c_str(), e.what());
        return kExitDataError;
    }
    std::printf("loaded %lld train / %lld test images in %.2fs\n", static_cast<long long>(train.size()),
                static_cast<long long>(test.size()), load_seconds);
    std::fflush(stdout);

    try {
        if (!cfg.save_models_dir.empty()) fs::create_directories(cfg.save_models_dir);
        if (!cfg.curves_dir.empty()) fs::create_directories(cfg.curves_dir);
        if (!cfg.stats_path.empty()) emit_dataset_stats(label_histogram(train), cfg.stats_path);

        std::vector<BenchReport> reports;
        const bool all = cfg.model == "all";
        if (all || cfg.model == "svm") reports.push_back(run_svm(train, test, cfg, cfg.save_models_dir));
        if (all || cfg.model == "mlp") {
            reports.push_back(run_deep("mlp", train, test, cfg, cfg.save_models_dir, cfg.curves_dir));
        }
        if (all || cfg.model == "cnn") {
            reports.push_back(run_deep("cnn", train, test, cfg, cfg.save_models_dir, cfg.curves_dir));
        }
        emit_report(reports, cfg.report_path, load_seconds);
        std::printf("report written to %s\n", cfg.report_path.c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOutputError;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MNIST classifier benchmark: linear SVM, MLP and CNN from one scratch-built stack"};
    app.require_subcommand(1);

    RunConfig cfg;
    CLI::App* run_cmd = app.add_subcommand("run", "train the selected models and write the comparison report");
    run_cmd->add_option("--model", cfg.model, "svm | mlp | cnn | all")
        ->check(CLI::IsMember({"svm", "mlp", "cnn", "all"}))
        ->capture_default_str();
    run_cmd->add_option("--epochs", cfg.epochs, "training epochs for the deep models")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run_cmd->add_option("--batch-size", cfg.batch_size, "mini-batch size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run_cmd->add_option("--seed", cfg.seed, "run seed")->capture_default_str();
    run_cmd->add_option("--data-dir", cfg.data_dir, "directory with the four MNIST IDX files (.gz or raw)");
    run_cmd->add_option("--report", cfg.report_path, "output JSON report path")->required();
    run_cmd->add_option("--curves-dir", cfg.curves_dir, "directory for per-epoch CSV curves (deep models)");
    run_cmd->add_option("--stats", cfg.stats_path, "output CSV with the training label histogram");
    run_cmd->add_option("--save-models", cfg.save_models_dir, "directory for trained model binaries");
    run_cmd->add_option("--parallel-eval", cfg.parallel_eval, "evaluation shard count")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    return run(cfg);
}
