#include "twinfuse/fusion.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace twinfuse {

namespace {

void normalize_span(std::span<double> values, double c) {
    const std::size_t n = values.size();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n); // population variance
    const double sigma = std::sqrt(var);
    if (sigma == 0.0) {
        for (double& v : values) v = 0.5;
    } else {
        for (double& v : values) v = 0.5 * (std::tanh(c * (v - mean) / sigma) + 1.0);
    }
}

} // namespace

ScoreMatrix tanh_normalize(const ScoreMatrix& m, double c, bool per_row) {
    m.validate();
    if (m.normalized) throw std::invalid_argument("matrix is already normalized");
    if (m.values.empty()) throw std::invalid_argument("cannot normalize empty matrix");

    ScoreMatrix out = m;
    if (per_row) {
        for (std::size_t r = 0; r < out.values.rows(); ++r) normalize_span(out.values.row(r), c);
    } else {
        normalize_span(out.values.data(), c);
    }
    out.normalized = true;
    return out;
}

ScoreMatrix weighted_fuse(const std::vector<ScoreMatrix>& ms, const std::vector<double>& weights) {
    if (ms.empty()) throw std::invalid_argument("nothing to fuse");
    if (ms.size() != weights.size())
        throw std::invalid_argument("weight count does not match matrix count");

    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("fusion weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("fusion weights must sum to 1");

    const ScoreMatrix& first = ms.front();
    for (const ScoreMatrix& m : ms) {
        if (!m.normalized) throw std::invalid_argument("weighted_fuse needs normalized inputs");
        if (m.lower_better != first.lower_better)
            throw std::invalid_argument("orientation mismatch in fusion");
        if (m.probe_ids != first.probe_ids || m.subject_ids != first.subject_ids)
            throw std::invalid_argument("probe/subject id mismatch in fusion");
    }

    ScoreMatrix out = first;
    for (double& v : out.values.data()) v = 0.0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const auto& src = ms[i].values.data();
        auto& dst = out.values.data();
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += weights[i] * src[j];
    }
    out.normalized = true;
    return out;
}

FusionPlan FusionPlan::default_plan() {
    FusionPlan plan;
    Node hog{"hog", "hog", {}, {}};
    Node embedding{"embedding", "embedding", {}, {}};
    Node dtw{"dtw", "dtw", {}, {}};
    Node lstm{"lstm", "lstm", {}, {}};
    Node fusion1{"fusion1", "", {hog, embedding}, {0.21, 0.79}};
    Node fusion2{"fusion2", "", {dtw, lstm}, {0.98, 0.02}};
    plan.root = Node{"fusion3", "", {fusion1, fusion2}, {0.14, 0.86}};
    return plan;
}

namespace {

FusionPlan::Node node_from_json(const nlohmann::json& j) {
    FusionPlan::Node node;
    if (j.contains("leaf")) {
        node.leaf = j.at("leaf").get<std::string>();
        node.name = j.value("name", node.leaf);
        return node;
    }
    node.name = j.at("name").get<std::string>();
    for (const auto& child : j.at("children")) node.children.push_back(node_from_json(child));
    node.weights = j.at("weights").get<std::vector<double>>();
    return node;
}

nlohmann::ordered_json node_to_json(const FusionPlan::Node& node) {
    nlohmann::ordered_json j;
    if (node.is_leaf()) {
        j["leaf"] = node.leaf;
        if (node.name != node.leaf) j["name"] = node.name;
        return j;
    }
    j["name"] = node.name;
    j["children"] = nlohmann::ordered_json::array();
    for (const auto& child : node.children) j["children"].push_back(node_to_json(child));
    j["weights"] = node.weights;
    return j;
}

void validate_node(const FusionPlan::Node& node) {
    if (node.is_leaf()) {
        if (!node.children.empty() || !node.weights.empty())
            throw std::invalid_argument("leaf node cannot have children or weights");
        return;
    }
    if (node.children.empty()) throw std::invalid_argument("inner node without children");
    if (node.children.size() != node.weights.size())
        throw std::invalid_argument("node weights do not match children");
    double sum = 0.0;
    for (double w : node.weights) {
        if (w < 0.0) throw std::invalid_argument("fusion weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("node weights must sum to 1 at '" + node.name + "'");
    for (const auto& child : node.children) validate_node(child);
}

void collect_leaves(const FusionPlan::Node& node, std::vector<std::string>& out) {
    if (node.is_leaf()) {
        out.push_back(node.leaf);
        return;
    }
    for (const auto& child : node.children) collect_leaves(child, out);
}

// Returns the surviving node, or nullopt when every leaf below was dropped.
std::optional<FusionPlan::Node> prune_node(const FusionPlan::Node& node,
                                           const std::set<std::string>& keep) {
    if (node.is_leaf())
        return keep.count(node.leaf) ? std::optional<FusionPlan::Node>(node) : std::nullopt;

    FusionPlan::Node out;
    out.name = node.name;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (auto kept = prune_node(node.children[i], keep)) {
            out.children.push_back(std::move(*kept));
            out.weights.push_back(node.weights[i]);
            weight_sum += node.weights[i];
        }
    }
    if (out.children.empty()) return std::nullopt;
    if (out.children.size() == 1) return out.children.front(); // collapse
    if (weight_sum <= 0.0) {
        const double equal = 1.0 / static_cast<double>(out.weights.size());
        for (double& w : out.weights) w = equal;
    } else {
        for (double& w : out.weights) w /= weight_sum;
    }
    return out;
}

} // namespace

FusionPlan FusionPlan::from_json(const nlohmann::json& j) {
    FusionPlan plan;
    plan.root = node_from_json(j);
    plan.validate();
    return plan;
}

nlohmann::ordered_json FusionPlan::to_json() const { return node_to_json(root); }

void FusionPlan::validate() const { validate_node(root); }

std::vector<std::string> FusionPlan::leaf_ids() const {
    std::vector<std::string> out;
    collect_leaves(root, out);
    return out;
}

bool FusionPlan::prune_to(const std::set<std::string>& keep) {
    auto pruned = prune_node(root, keep);
    if (!pruned) return false;
    root = std::move(*pruned);
    return true;
}

namespace {

ScoreMatrix evaluate_node(const FusionPlan::Node& node,
                          const std::map<std::string, ScoreMatrix>& leaves,
                          std::vector<std::pair<std::string, ScoreMatrix>>& out) {
    if (node.is_leaf()) {
        auto it = leaves.find(node.leaf);
        if (it == leaves.end())
            throw std::invalid_argument("unresolved-leaf: no score matrix for '" + node.leaf + "'");
        if (it->second.normalized)
            throw std::invalid_argument("leaf matrices must be raw (unnormalized)");
        ScoreMatrix normalized = tanh_normalize(it->second);
        out.emplace_back(node.name, normalized);
        return normalized;
    }
    std::vector<ScoreMatrix> inputs;
    inputs.reserve(node.children.size());
    for (const auto& child : node.children)
        inputs.push_back(evaluate_node(child, leaves, out));
    ScoreMatrix fused = weighted_fuse(inputs, node.weights);
    out.emplace_back(node.name, fused);
    return fused;
}

} // namespace

std::vector<std::pair<std::string, ScoreMatrix>> run_fusion_plan_full(
    const FusionPlan& plan, const std::map<std::string, ScoreMatrix>& leaves) {
    plan.validate();
    std::vector<std::pair<std::string, ScoreMatrix>> out;
    evaluate_node(plan.root, leaves, out);
    return out;
}

ScoreMatrix run_fusion_plan(const FusionPlan& plan,
                            const std::map<std::string, ScoreMatrix>& leaves) {
    auto all = run_fusion_plan_full(plan, leaves);
    return std::move(all.back().second);
}

} // namespace twinfuse
