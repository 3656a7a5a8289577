#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "twinfuse/matrix.hpp"

namespace twinfuse {

// Probes x gallery-subjects dissimilarity matrix. lower_better is the
// orientation every scorer in this project emits; normalized means tanh
// normalization has been applied (entries then live in [0,1]).
struct ScoreMatrix {
    Matrix values;
    std::vector<std::string> probe_ids;   // row labels
    std::vector<std::string> subject_ids; // column labels
    bool lower_better = true;
    bool normalized = false;

    std::size_t n_probes() const { return values.rows(); }
    std::size_t n_subjects() const { return values.cols(); }

    void validate() const; // shape/id consistency, finite entries
};

// CSV body (first row subject ids, first column probe ids) plus a sidecar
// JSON header <csv>.json carrying the orientation and normalized flags.
void save_score_matrix(const ScoreMatrix& m, const std::filesystem::path& csv_path);
ScoreMatrix load_score_matrix(const std::filesystem::path& csv_path);

} // namespace twinfuse
