#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "digitriad/dataset.hpp"
#include "digitriad/errors.hpp"
#include "digitriad/evaluation.hpp"

namespace digitriad {

// Machine-readable outputs: a JSON summary (nested confusion matrices) and
// CSV curve/stat files for plotting.

inline nlohmann::ordered_json report_to_json(const std::vector<BenchReport>& reports, double load_seconds) {
    nlohmann::ordered_json doc;
    doc["load_seconds"] = load_seconds;
    doc["runs"] = nlohmann::ordered_json::array();
    for (const BenchReport& r : reports) {
        nlohmann::ordered_json run;
        run["model"] = r.model;
        run["train_accuracy"] = r.train_accuracy;
        run["test_accuracy"] = r.test_accuracy;
        run["train_seconds"] = r.train_seconds;
        run["epochs"] = r.epochs;
        run["batch_size"] = r.batch_size;
        run["seed"] = r.seed;
        nlohmann::ordered_json cm = nlohmann::ordered_json::array();
        for (const auto& row : r.test_confusion.counts) cm.push_back(row);
        run["confusion_matrix"] = std::move(cm);
        doc["runs"].push_back(std::move(run));
    }
    return doc;
}

inline void emit_report(const std::vector<BenchReport>& reports, const std::filesystem::path& path,
                        double load_seconds) {
    if (reports.empty()) throw domain_error("emit_report needs at least one run");
    std::ofstream f(path);
    if (!f) throw io_error("cannot write " + path.string());
    f << report_to_json(reports, load_seconds).dump(2) << '\n';
    if (!f) throw io_error("short write to " + path.string());
}

inline void emit_curves(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
    if (history.empty()) throw domain_error("emit_curves needs a non-empty history");
    std::ofstream f(path);
    if (!f) throw io_error("cannot write " + path.string());
    f << "epoch,loss,accuracy,seconds\n";
    for (const EpochRecord& r : history) {
        char line[128];
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g\n", r.epoch, r.loss, r.accuracy, r.seconds);
        f << line;
    }
    if (!f) throw io_error("short write to " + path.string());
}

inline void emit_dataset_stats(const std::array<std::int64_t, kClasses>& counts, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot write " + path.string());
    f << "label,count\n";
    for (int k = 0; k < kClasses; ++k) f << k << ',' << counts[static_cast<std::size_t>(k)] << '\n';
    if (!f) throw io_error("short write to " + path.string());
}

}  // namespace digitriad
