#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "twinfuse/labeled.hpp"
#include "twinfuse/matrix.hpp"
#include "twinfuse/score_matrix.hpp"

namespace twinfuse {

// Externally computed deep ear embeddings, keyed by sample_id.
struct EmbeddingTable {
    std::vector<std::string> ids;             // insertion order
    std::vector<std::vector<double>> vectors; // parallel to ids
    std::size_t dim = 0;

    const std::vector<double>* find(const std::string& sample_id) const;
};

// Text table, header "sample_id,f0,f1,...", one row per sample.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

struct PcaModel {
    std::vector<double> mean;        // dim
    Matrix components;               // k x dim, rows orthonormal
    std::vector<double> eigenvalues; // k, non-increasing

    std::size_t dim() const { return mean.size(); }
    std::size_t k() const { return components.rows(); }
};

// Sample-covariance eigendecomposition (divisor n-1) of the mean-centered
// gallery; top-k components, each signed so its largest-magnitude
// coordinate is positive. Requires 1 <= k <= min(n-1, dim).
PcaModel pca_fit(const std::vector<std::vector<double>>& vectors, std::size_t k);

// Full fit, then the smallest k whose eigenvalue mass reaches
// variance_target (at least 1 component).
PcaModel pca_fit_auto(const std::vector<std::vector<double>>& vectors, double variance_target);

std::vector<double> pca_project(const PcaModel& m, std::span<const double> v);

double manhattan_distance(std::span<const double> a, std::span<const double> b);

// matrix[probe][subject] = min over the subject's gallery vectors of the
// Manhattan distance; lower-better orientation.
ScoreMatrix pairwise_vector_scores(const std::vector<LabeledVector>& probes,
                                   const std::vector<LabeledVector>& gallery);

} // namespace twinfuse
