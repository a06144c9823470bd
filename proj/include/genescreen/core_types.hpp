// Dataset, gene index, and result containers shared by all modules.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace genescreen {

enum class ErrorCode {
    Usage = 1,
    Data = 2,
    Numerical = 3,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, std::string kind, std::string message)
        : std::runtime_error(kind + ": " + message), code_(code), kind_(std::move(kind)) {}

    ErrorCode code() const { return code_; }
    const std::string& kind() const { return kind_; }

  private:
    ErrorCode code_;
    std::string kind_;
};

inline Error data_error(std::string kind, std::string message) {
    return Error(ErrorCode::Data, std::move(kind), std::move(message));
}

enum class DataKind { Binary, Continuous01 };

// Row indices of each gene's markers, genes in first-occurrence order.
struct GeneIndex {
    struct Gene {
        std::string gene_id;
        std::vector<std::size_t> marker_rows;
    };
    std::vector<Gene> genes;
    std::vector<std::size_t> gene_of_row;  // marker row -> gene position

    std::size_t n_genes() const { return genes.size(); }
};

inline GeneIndex build_gene_index(const std::vector<std::string>& gene_of_marker) {
    if (gene_of_marker.empty()) {
        throw data_error("OrphanMarker", "gene map is empty");
    }
    GeneIndex index;
    index.gene_of_row.resize(gene_of_marker.size());
    std::unordered_map<std::string, std::size_t> position;
    position.reserve(gene_of_marker.size());
    for (std::size_t row = 0; row < gene_of_marker.size(); ++row) {
        const std::string& gid = gene_of_marker[row];
        auto [it, inserted] = position.try_emplace(gid, index.genes.size());
        if (inserted) {
            index.genes.push_back({gid, {}});
        }
        index.genes[it->second].marker_rows.push_back(row);
        index.gene_of_row[row] = it->second;
    }
    return index;
}

// Marker-by-sample observation matrix plus gene map and binary group labels.
// Immutable after validate(); safe to share across concurrent readers.
struct Dataset {
    std::vector<double> values;  // row-major, M x N
    std::size_t n_markers = 0;
    std::size_t n_samples = 0;
    std::vector<std::string> marker_ids;
    std::vector<std::string> gene_of_marker;
    std::vector<std::uint8_t> group_labels;  // 0/1 per sample
    DataKind kind = DataKind::Binary;
    GeneIndex gene_index;  // filled by validate()

    double value(std::size_t row, std::size_t col) const { return values[row * n_samples + col]; }

    std::size_t group_size(int group) const {
        std::size_t n = 0;
        for (auto y : group_labels) n += (y == group);
        return n;
    }
};

inline Dataset validate_dataset(Dataset raw) {
    const std::size_t m = raw.n_markers;
    const std::size_t n = raw.n_samples;
    if (m == 0 || n == 0) {
        throw data_error("DimensionMismatch", "dataset has no markers or no samples");
    }
    if (raw.values.size() != m * n) {
        throw data_error("DimensionMismatch", "value matrix is not M x N");
    }
    if (raw.marker_ids.size() != m) {
        throw data_error("DimensionMismatch", "marker_ids length != M");
    }
    if (raw.gene_of_marker.size() != m) {
        throw data_error("OrphanMarker", "gene map length != M");
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (raw.gene_of_marker[i].empty()) {
            throw data_error("OrphanMarker", "marker " + raw.marker_ids[i] + " has no gene");
        }
    }
    if (raw.group_labels.size() != n) {
        throw data_error("DimensionMismatch", "label vector length != N");
    }
    const std::size_t n1 = raw.group_size(1);
    const std::size_t n0 = n - n1;
    if (n0 == 0 || n1 == 0) {
        throw data_error("EmptyGroup", "both groups must be non-empty");
    }
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
        const double x = raw.values[i];
        if (raw.kind == DataKind::Binary) {
            if (x != 0.0 && x != 1.0) {
                throw data_error("ValueOutOfRange",
                                 "binary value " + std::to_string(x) + " at flat index " +
                                     std::to_string(i));
            }
        } else {
            if (!(x >= 0.0 && x <= 1.0)) {
                throw data_error("ValueOutOfRange",
                                 "continuous value " + std::to_string(x) + " at flat index " +
                                     std::to_string(i));
            }
        }
    }
    raw.gene_index = build_gene_index(raw.gene_of_marker);
    std::size_t total = 0;
    for (const auto& g : raw.gene_index.genes) total += g.marker_rows.size();
    if (total != m) {
        throw data_error("DimensionMismatch", "gene index does not partition the markers");
    }
    return raw;
}

enum class EstimationMode { Hierarchical, Separate, Joint, Simple };

inline const char* mode_name(EstimationMode mode) {
    switch (mode) {
        case EstimationMode::Hierarchical: return "hierarchical";
        case EstimationMode::Separate: return "separate";
        case EstimationMode::Joint: return "joint";
        case EstimationMode::Simple: return "simple";
    }
    return "?";
}

inline std::optional<EstimationMode> parse_mode(const std::string& s) {
    if (s == "hierarchical") return EstimationMode::Hierarchical;
    if (s == "separate") return EstimationMode::Separate;
    if (s == "joint") return EstimationMode::Joint;
    if (s == "simple") return EstimationMode::Simple;
    return std::nullopt;
}

// Posterior summaries of one screening run (pooled over chains).
struct ScreenResult {
    std::vector<double> post_null;        // per marker, indicator-draw average
    std::vector<double> post_null_rb;     // per marker, Rao-Blackwellized average
    std::vector<double> gene_prob;        // per gene, posterior mean of p_g
    std::vector<std::vector<double>> chain_gene_prob;  // per chain
    EstimationMode mode = EstimationMode::Hierarchical;
    std::size_t n_sweeps = 0;
    std::size_t n_burnin = 0;
    std::uint64_t seed = 0;
    bool chain_divergence_warning = false;
    double chain_rms_difference = 0.0;
    // Optional traces: one row per retained sweep.
    std::vector<std::vector<double>> trace_gene_prob;
    std::vector<std::vector<std::uint8_t>> trace_null;
};

}  // namespace genescreen
