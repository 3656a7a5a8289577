#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinfuse/score_matrix.hpp"

namespace twinfuse {

// s' = 0.5 * (tanh(c * (s - mu) / sigma) + 1), mu/sigma over all entries
// (population sigma). sigma = 0 maps everything to 0.5. per_row computes
// the statistics per probe row instead.
ScoreMatrix tanh_normalize(const ScoreMatrix& m, double c = 0.01, bool per_row = false);

// Elementwise sum of w[i] * m[i]; inputs must be normalized, share labels
// and orientation, and the weights must sum to 1 (each >= 0).
ScoreMatrix weighted_fuse(const std::vector<ScoreMatrix>& ms, const std::vector<double>& weights);

// Tree of scorers: a node is either a leaf naming a scorer id or an inner
// node fusing its children with per-node weights.
struct FusionPlan {
    struct Node {
        std::string name;   // row label in reports; leaves default to the scorer id
        std::string leaf;   // scorer id; empty for inner nodes
        std::vector<Node> children;
        std::vector<double> weights;

        bool is_leaf() const { return !leaf.empty(); }
    };

    Node root;

    // Fig. 2 arrangement with the published weights:
    // fusion1(hog 0.21, embedding 0.79), fusion2(dtw 0.98, lstm 0.02),
    // fusion3(fusion1 0.14, fusion2 0.86).
    static FusionPlan default_plan();

    static FusionPlan from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;

    void validate() const; // weight sums, weight signs, at least one leaf
    std::vector<std::string> leaf_ids() const;

    // Drops leaves not in `keep`, renormalizes sibling weights and collapses
    // single-child nodes. Returns false when nothing is left.
    bool prune_to(const std::set<std::string>& keep);
};

// Normalizes every leaf matrix, then fuses bottom-up. Returns the matrices
// of all nodes keyed by node name (leaves included, normalized).
std::vector<std::pair<std::string, ScoreMatrix>> run_fusion_plan_full(
    const FusionPlan& plan, const std::map<std::string, ScoreMatrix>& leaves);

// Root matrix only.
ScoreMatrix run_fusion_plan(const FusionPlan& plan,
                            const std::map<std::string, ScoreMatrix>& leaves);

} // namespace twinfuse
