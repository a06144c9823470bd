// File parsing and serialization: TSV datasets and label files, kernel
// dictionary JSON, result tables, and the run manifest.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "genescreen/core_types.hpp"
#include "genescreen/marker_models.hpp"
#include "genescreen/rng.hpp"
#include "genescreen/sim_harness.hpp"

namespace genescreen {

inline constexpr const char* kToolVersion = "0.1.0";

inline Error parse_error(const std::string& path, std::size_t line, const std::string& what) {
    return data_error("ParseError", path + ":" + std::to_string(line) + ": " + what);
}

// Numbers are serialized with 17 significant digits so reloads round-trip.
inline std::string format_double(double x) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x,
                                         std::chars_format::general, 17);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

inline double parse_value(const std::string& field, const std::string& path, std::size_t line) {
    double x = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, x);
    if (ec != std::errc{} || ptr != end) {
        throw parse_error(path, line, "non-numeric cell '" + field + "'");
    }
    return x;
}

// Label file: one "sample_id<TAB>0|1" line per sample.
inline std::unordered_map<std::string, std::uint8_t> load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("IoError", "cannot open " + path);
    std::unordered_map<std::string, std::uint8_t> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2 || (fields[1] != "0" && fields[1] != "1")) {
            throw parse_error(path, lineno, "expected 'sample_id<TAB>0|1'");
        }
        if (!labels.emplace(fields[0], fields[1] == "1" ? 1 : 0).second) {
            throw parse_error(path, lineno, "duplicate sample id '" + fields[0] + "'");
        }
    }
    if (labels.empty()) throw data_error("ParseError", path + ": no labels");
    return labels;
}

// Matrix TSV: header row of sample ids after the marker_id and gene_id
// columns; one marker per row.
inline Dataset load_tsv_dataset(const std::string& matrix_path, const std::string& labels_path,
                                std::optional<DataKind> kind_override = std::nullopt) {
    std::ifstream in(matrix_path);
    if (!in) throw data_error("IoError", "cannot open " + matrix_path);
    const auto labels = load_labels(labels_path);

    std::string line;
    if (!std::getline(in, line)) throw parse_error(matrix_path, 1, "missing header");
    const auto header = split_tabs(line);
    if (header.size() < 3 || header[0] != "marker_id" || header[1] != "gene_id") {
        throw parse_error(matrix_path, 1, "header must start 'marker_id<TAB>gene_id<TAB>...'");
    }
    Dataset data;
    data.n_samples = header.size() - 2;
    data.group_labels.resize(data.n_samples);
    for (std::size_t i = 0; i < data.n_samples; ++i) {
        const auto it = labels.find(header[i + 2]);
        if (it == labels.end()) {
            throw parse_error(matrix_path, 1, "sample '" + header[i + 2] + "' has no label");
        }
        data.group_labels[i] = it->second;
    }
    std::size_t lineno = 1;
    bool all_binary = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != data.n_samples + 2) {
            throw parse_error(matrix_path, lineno, "expected " + std::to_string(data.n_samples + 2) +
                                                       " columns, got " +
                                                       std::to_string(fields.size()));
        }
        data.marker_ids.push_back(fields[0]);
        data.gene_of_marker.push_back(fields[1]);
        for (std::size_t i = 0; i < data.n_samples; ++i) {
            const double x = parse_value(fields[i + 2], matrix_path, lineno);
            all_binary &= (x == 0.0 || x == 1.0);
            data.values.push_back(x);
        }
        data.n_markers += 1;
    }
    data.kind = kind_override.value_or(all_binary ? DataKind::Binary : DataKind::Continuous01);
    return validate_dataset(std::move(data));
}

inline void save_tsv_dataset(const Dataset& data, const std::string& matrix_path,
                             const std::string& labels_path) {
    std::ofstream out(matrix_path);
    if (!out) throw data_error("IoError", "cannot write " + matrix_path);
    out << "marker_id\tgene_id";
    for (std::size_t n = 0; n < data.n_samples; ++n) out << "\tS" << (n + 1);
    out << "\n";
    for (std::size_t m = 0; m < data.n_markers; ++m) {
        out << data.marker_ids[m] << "\t" << data.gene_of_marker[m];
        for (std::size_t n = 0; n < data.n_samples; ++n) {
            out << "\t" << format_double(data.value(m, n));
        }
        out << "\n";
    }
    std::ofstream lab(labels_path);
    if (!lab) throw data_error("IoError", "cannot write " + labels_path);
    for (std::size_t n = 0; n < data.n_samples; ++n) {
        lab << "S" << (n + 1) << "\t" << int(data.group_labels[n]) << "\n";
    }
}

inline KernelDictionary load_kernel_dictionary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("IoError", "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("ParseError", path + ": " + e.what());
    }
    KernelDictionary dict;
    try {
        dict.mu = j.at("mu").get<std::vector<double>>();
        dict.sigma = j.at("sigma").get<std::vector<double>>();
        dict.lambda = j.at("lambda").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error("ParseError", path + ": " + e.what());
    }
    dict.check();
    return dict;
}

inline void save_kernel_dictionary(const KernelDictionary& dict, const std::string& path) {
    nlohmann::json j;
    j["k"] = dict.size();
    j["mu"] = dict.mu;
    j["sigma"] = dict.sigma;
    j["lambda"] = dict.lambda;
    std::ofstream out(path);
    if (!out) throw data_error("IoError", "cannot write " + path);
    out << j.dump(2) << "\n";
}

// Stable content hash of a file (FNV-1a over bytes), hex encoded.
inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("IoError", "cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

inline void write_posteriors_tsv(const Dataset& data, const ScreenResult& result,
                                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("IoError", "cannot write " + path);
    out << "marker_id\tgene_id\tpost_null\tpost_null_rb\n";
    for (std::size_t m = 0; m < data.n_markers; ++m) {
        out << data.marker_ids[m] << "\t" << data.gene_of_marker[m] << "\t"
            << format_double(result.post_null[m]) << "\t"
            << format_double(result.post_null_rb[m]) << "\n";
    }
}

inline void write_gene_probs_tsv(const Dataset& data, const ScreenResult& result,
                                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("IoError", "cannot write " + path);
    out << "gene_id\tn_markers\tgene_prob\n";
    for (std::size_t g = 0; g < data.gene_index.n_genes(); ++g) {
        out << data.gene_index.genes[g].gene_id << "\t"
            << data.gene_index.genes[g].marker_rows.size() << "\t"
            << format_double(result.gene_prob[g]) << "\n";
    }
}

inline void write_trace_tsv(const ScreenResult& result, const std::string& gene_path,
                            const std::string& null_path) {
    std::ofstream gout(gene_path);
    if (!gout) throw data_error("IoError", "cannot write " + gene_path);
    for (const auto& row : result.trace_gene_prob) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) gout << "\t";
            gout << format_double(row[i]);
        }
        gout << "\n";
    }
    std::ofstream nout(null_path);
    if (!nout) throw data_error("IoError", "cannot write " + null_path);
    for (const auto& row : result.trace_null) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) nout << "\t";
            nout << int(row[i]);
        }
        nout << "\n";
    }
}

inline void write_roc_csv(std::span<const RocPoint> points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("IoError", "cannot write " + path);
    out << "fpr,tpr\n";
    for (const auto& pt : points) {
        out << format_double(pt.fpr) << "," << format_double(pt.tpr) << "\n";
    }
}

inline void write_comparison_csv(std::span<const ComparisonRow> rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("IoError", "cannot write " + path);
    out << "method,scenario,replicates,threshold_error,threshold_error_se,"
           "expected_error,expected_error_se,expected_error_rb,auc\n";
    for (const auto& row : rows) {
        out << method_name(row.method) << "," << scenario_name(row.scenario) << ","
            << row.replicates << "," << format_double(row.mean_threshold_error) << ","
            << format_double(row.se_threshold_error) << ","
            << format_double(row.mean_expected_error) << ","
            << format_double(row.se_expected_error) << ","
            << format_double(row.mean_expected_error_rb) << "," << format_double(row.mean_auc)
            << "\n";
    }
}

struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::unordered_map<std::string, std::string> input_digests;
    double duration_seconds = 0.0;
};

inline void write_manifest(const RunManifest& manifest, const std::string& path) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["config"] = manifest.config;
    j["seed"] = manifest.seed;
    j["tool_version"] = kToolVersion;
    j["input_digests"] = manifest.input_digests;
    j["duration_seconds"] = manifest.duration_seconds;
    std::ofstream out(path);
    if (!out) throw data_error("IoError", "cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace genescreen
