#include "twinfuse/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace twinfuse {

double local_distance(std::span<const double> e, std::span<const double> t) {
    if (e.size() != t.size()) throw std::invalid_argument("frame dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double d = e[i] - t[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

DtwResult dtw_distance(const FeatureSequence& e, const FeatureSequence& t,
                       bool normalize_by_path) {
    const std::size_t n = e.n_frames(), m = t.n_frames();
    if (n == 0 || m == 0) throw std::invalid_argument("dtw on empty sequence");
    if (e.dim() != t.dim()) throw std::invalid_argument("dtw dimension mismatch");

    Matrix dp(n, m, 0.0);
    dp(0, 0) = local_distance(e.frames.row(0), t.frames.row(0));
    for (std::size_t j = 1; j < m; ++j)
        dp(0, j) = dp(0, j - 1) + local_distance(e.frames.row(0), t.frames.row(j));
    for (std::size_t i = 1; i < n; ++i)
        dp(i, 0) = dp(i - 1, 0) + local_distance(e.frames.row(i), t.frames.row(0));
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 1; j < m; ++j) {
            const double best = std::min({dp(i - 1, j - 1), dp(i - 1, j), dp(i, j - 1)});
            dp(i, j) = best + local_distance(e.frames.row(i), t.frames.row(j));
        }
    }

    // Backtrack one optimal path for its length; diagonal wins ties.
    std::size_t i = n - 1, j = m - 1, steps = 0;
    while (i > 0 || j > 0) {
        if (i == 0) --j;
        else if (j == 0) --i;
        else {
            const double diag = dp(i - 1, j - 1), up = dp(i - 1, j), left = dp(i, j - 1);
            if (diag <= up && diag <= left) { --i; --j; }
            else if (up <= left) --i;
            else --j;
        }
        ++steps;
    }

    DtwResult r;
    r.path_length = steps + 1;
    r.normalized = normalize_by_path;
    r.distance = dp(n - 1, m - 1);
    if (normalize_by_path) r.distance /= static_cast<double>(r.path_length);
    return r;
}

ScoreMatrix pairwise_dtw_scores(const std::vector<LabeledSequence>& probes,
                                const std::vector<LabeledSequence>& gallery,
                                bool normalize_by_path) {
    if (probes.empty() || gallery.empty())
        throw std::invalid_argument("empty probe or gallery set");

    std::vector<std::string> subjects;
    std::map<std::string, std::size_t> col;
    for (const auto& g : gallery)
        if (!col.count(g.subject)) {
            col[g.subject] = subjects.size();
            subjects.push_back(g.subject);
        }

    ScoreMatrix m;
    m.subject_ids = subjects;
    m.values = Matrix(probes.size(), subjects.size(), std::numeric_limits<double>::infinity());
    for (const auto& p : probes) m.probe_ids.push_back(p.id);

    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
        for (const auto& g : gallery) {
            const double d = dtw_distance(probes[pi].features, g.features, normalize_by_path).distance;
            double& cell = m.values(pi, col[g.subject]);
            cell = std::min(cell, d);
        }
    }
    m.validate();
    return m;
}

} // namespace twinfuse
