#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "twinfuse/labeled.hpp"
#include "twinfuse/score_matrix.hpp"

namespace twinfuse {

struct DtwResult {
    double distance = 0.0;
    std::size_t path_length = 0;
    bool normalized = false;
};

// Euclidean distance between two frames; |e - t| in the scalar case.
double local_distance(std::span<const double> e, std::span<const double> t);

// Standard three-predecessor recurrence with cumulative first row/column.
// With normalize_by_path the distance is divided by the optimal warping
// path length (ties broken toward the diagonal).
DtwResult dtw_distance(const FeatureSequence& e, const FeatureSequence& t,
                       bool normalize_by_path = false);

// matrix[probe][subject] = min over the subject's gallery takes of
// dtw_distance(probe, take); lower-better orientation.
ScoreMatrix pairwise_dtw_scores(const std::vector<LabeledSequence>& probes,
                                const std::vector<LabeledSequence>& gallery,
                                bool normalize_by_path = false);

} // namespace twinfuse
