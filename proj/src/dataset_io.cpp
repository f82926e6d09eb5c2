#include "concurrence/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace concurrence {

namespace {

constexpr int kManifestVersion = 1;

Signal read_signal_csv(const fs::path& path, const std::string& context) {
    std::ifstream in(path);
    if (!in) throw DataError(context + ": cannot open '" + path.string() + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t n_cols = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end) {
            double value = 0.0;
            const auto [next, ec] = std::from_chars(p, end, value);
            if (ec != std::errc())
                throw DataError(context + ": malformed number in '" + path.string() +
                                "' at row " + std::to_string(rows.size()));
            row.push_back(value);
            p = next;
            if (p < end) {
                if (*p != ',')
                    throw DataError(context + ": expected ',' in '" + path.string() +
                                    "' at row " + std::to_string(rows.size()));
                ++p;
            }
        }
        if (n_cols == 0) n_cols = row.size();
        if (row.size() != n_cols)
            throw DataError(context + ": ragged row " + std::to_string(rows.size()) +
                            " in '" + path.string() + "'");
        rows.push_back(std::move(row));
    }
    if (rows.empty() || n_cols == 0)
        throw DataError(context + ": empty signal file '" + path.string() + "'");
    Signal sig(static_cast<int>(n_cols), static_cast<int>(rows.size()));
    for (int t = 0; t < sig.length; ++t)
        for (int c = 0; c < sig.channels; ++c)
            sig.at(c, t) = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
    return sig;
}

void write_signal_csv(const Signal& sig, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    char buf[40];
    std::string line;
    for (int t = 0; t < sig.length; ++t) {
        line.clear();
        for (int c = 0; c < sig.channels; ++c) {
            // %.17g round-trips doubles exactly
            std::snprintf(buf, sizeof(buf), "%.17g", sig.at(c, t));
            if (c) line += ',';
            line += buf;
        }
        line += '\n';
        out << line;
    }
    if (!out) throw DataError("I/O failure while writing '" + path.string() + "'");
}

}  // namespace

SignalDataset load_dataset(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest '" + manifest_path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest '" + manifest_path.string() + "': " + e.what());
    }
    if (!doc.contains("version") || !doc.contains("pairs"))
        throw DataError("manifest '" + manifest_path.string() +
                        "' is missing required fields {version, pairs}");

    const fs::path base = manifest_path.parent_path();
    SignalDataset ds;
    for (const auto& entry : doc["pairs"]) {
        SignalPair pair;
        pair.pair_id = entry.at("pair_id").get<std::string>();
        if (entry.contains("group_id")) pair.group_id = entry["group_id"].get<std::string>();
        const std::string context = "pair " + pair.pair_id;
        pair.x = read_signal_csv(base / entry.at("x_file").get<std::string>(), context + " / x");
        pair.y = read_signal_csv(base / entry.at("y_file").get<std::string>(), context + " / y");
        ds.pairs.push_back(std::move(pair));
    }
    if (doc.contains("metadata"))
        for (const auto& [key, value] : doc["metadata"].items())
            ds.metadata.emplace_back(key, value.get<double>());
    ds.validate();
    return ds;
}

fs::path save_dataset(const SignalDataset& dataset, const fs::path& dir,
                      const std::string& manifest_name) {
    dataset.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());

    nlohmann::json manifest;
    manifest["version"] = kManifestVersion;
    manifest["pairs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
        const auto& pair = dataset.pairs[i];
        const std::string x_file = pair.pair_id + "_x.csv";
        const std::string y_file = pair.pair_id + "_y.csv";
        write_signal_csv(pair.x, dir / x_file);
        write_signal_csv(pair.y, dir / y_file);
        nlohmann::json entry = {{"pair_id", pair.pair_id}, {"x_file", x_file}, {"y_file", y_file}};
        if (!pair.group_id.empty()) entry["group_id"] = pair.group_id;
        manifest["pairs"].push_back(entry);
    }
    if (!dataset.metadata.empty()) {
        nlohmann::json meta;
        for (const auto& [key, value] : dataset.metadata) meta[key] = value;
        manifest["metadata"] = meta;
    }
    const fs::path manifest_path = dir / manifest_name;
    std::ofstream out(manifest_path);
    if (!out) throw DataError("cannot write manifest '" + manifest_path.string() + "'");
    out << manifest.dump(2) << '\n';
    if (!out) throw DataError("I/O failure while writing '" + manifest_path.string() + "'");
    return manifest_path;
}

}  // namespace concurrence
