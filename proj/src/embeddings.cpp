#include "twinfuse/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace twinfuse {

const std::vector<double>* EmbeddingTable::find(const std::string& sample_id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == sample_id) return &vectors[i];
    return nullptr;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embedding table: " + path.string());

    std::string line;
    if (!std::getline(in, line) || line.rfind("sample_id", 0) != 0)
        throw std::runtime_error("embedding table must start with a sample_id header");

    EmbeddingTable table;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        const std::string id = cell;
        if (!seen.insert(id).second)
            throw std::runtime_error("duplicate-id in embedding table: " + id);
        std::vector<double> vec;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                vec.push_back(std::stod(cell, &pos));
                if (pos != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw std::runtime_error("non-numeric cell in embedding table: '" + cell + "'");
            }
        }
        if (vec.empty()) throw std::runtime_error("embedding row without values");
        if (table.dim == 0) table.dim = vec.size();
        else if (vec.size() != table.dim)
            throw std::runtime_error("ragged-row in embedding table at '" + id + "'");
        table.ids.push_back(id);
        table.vectors.push_back(std::move(vec));
    }
    return table;
}

void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write embedding table: " + path.string());
    out << "sample_id";
    for (std::size_t i = 0; i < table.dim; ++i) out << ",f" << i;
    out << "\n";
    char cell[64];
    for (std::size_t r = 0; r < table.ids.size(); ++r) {
        out << table.ids[r];
        for (double v : table.vectors[r]) {
            std::snprintf(cell, sizeof cell, "%.17g", v);
            out << "," << cell;
        }
        out << "\n";
    }
}

namespace {

void fix_component_sign(Matrix& components) {
    for (std::size_t r = 0; r < components.rows(); ++r) {
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t c = 0; c < components.cols(); ++c) {
            const double a = std::abs(components(r, c));
            if (a > best) {
                best = a;
                arg = c;
            }
        }
        if (components(r, arg) < 0.0)
            for (std::size_t c = 0; c < components.cols(); ++c) components(r, c) = -components(r, c);
    }
}

} // namespace

PcaModel pca_fit(const std::vector<std::vector<double>>& vectors, std::size_t k) {
    const std::size_t n = vectors.size();
    if (n < 2) throw std::invalid_argument("pca_fit needs at least 2 vectors");
    const std::size_t dim = vectors.front().size();
    for (const auto& v : vectors)
        if (v.size() != dim) throw std::invalid_argument("pca_fit on ragged vectors");
    if (k < 1 || k > std::min(n - 1, dim))
        throw std::invalid_argument("k-out-of-range: need 1 <= k <= min(n-1, dim)");

    PcaModel model;
    model.mean.assign(dim, 0.0);
    for (const auto& v : vectors)
        for (std::size_t c = 0; c < dim; ++c) model.mean[c] += v[c];
    for (double& m : model.mean) m /= static_cast<double>(n);

    Eigen::MatrixXd centered(n, dim);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < dim; ++c) centered(r, c) = vectors[r][c] - model.mean[c];

    model.components = Matrix(k, dim);
    model.eigenvalues.resize(k);

    if (dim <= n) {
        const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        if (solver.info() != Eigen::Success) throw std::runtime_error("pca eigensolve failed");
        // Eigen sorts ascending; take the top k from the back.
        for (std::size_t i = 0; i < k; ++i) {
            const Eigen::Index src = static_cast<Eigen::Index>(dim - 1 - i);
            model.eigenvalues[i] = solver.eigenvalues()(src);
            for (std::size_t c = 0; c < dim; ++c)
                model.components(i, c) = solver.eigenvectors()(c, src);
        }
    } else {
        // Gram-matrix route for wide data: eigenvectors of X X^T lift to
        // component directions X^T u.
        const Eigen::MatrixXd gram = centered * centered.transpose() / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        if (solver.info() != Eigen::Success) throw std::runtime_error("pca eigensolve failed");
        for (std::size_t i = 0; i < k; ++i) {
            const Eigen::Index src = static_cast<Eigen::Index>(n - 1 - i);
            const double lambda = solver.eigenvalues()(src);
            model.eigenvalues[i] = lambda;
            Eigen::VectorXd dir = centered.transpose() * solver.eigenvectors().col(src);
            const double norm = dir.norm();
            if (norm > 0.0) dir /= norm;
            for (std::size_t c = 0; c < dim; ++c) model.components(i, c) = dir(c);
        }
    }
    fix_component_sign(model.components);
    return model;
}

PcaModel pca_fit_auto(const std::vector<std::vector<double>>& vectors, double variance_target) {
    const std::size_t n = vectors.size();
    if (n < 2) throw std::invalid_argument("pca_fit needs at least 2 vectors");
    const std::size_t dim = vectors.front().size();
    const std::size_t k_max = std::min(n - 1, dim);
    PcaModel full = pca_fit(vectors, k_max);

    double total = 0.0;
    for (double e : full.eigenvalues) total += std::max(e, 0.0);
    std::size_t k = 1;
    if (total > 0.0) {
        double acc = 0.0;
        for (k = 0; k < k_max;) {
            acc += std::max(full.eigenvalues[k], 0.0);
            ++k;
            if (acc / total >= variance_target) break;
        }
    }

    PcaModel out;
    out.mean = full.mean;
    out.eigenvalues.assign(full.eigenvalues.begin(), full.eigenvalues.begin() + k);
    out.components = Matrix(k, dim);
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < dim; ++c) out.components(r, c) = full.components(r, c);
    return out;
}

std::vector<double> pca_project(const PcaModel& m, std::span<const double> v) {
    if (v.size() != m.dim()) throw std::invalid_argument("pca_project dimension mismatch");
    std::vector<double> out(m.k(), 0.0);
    for (std::size_t r = 0; r < m.k(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m.dim(); ++c) acc += m.components(r, c) * (v[c] - m.mean[c]);
        out[r] = acc;
    }
    return out;
}

double manhattan_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("manhattan length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc;
}

ScoreMatrix pairwise_vector_scores(const std::vector<LabeledVector>& probes,
                                   const std::vector<LabeledVector>& gallery) {
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

    for (std::size_t pi = 0; pi < probes.size(); ++pi)
        for (const auto& g : gallery) {
            const double d = manhattan_distance(probes[pi].values, g.values);
            double& cell = m.values(pi, col[g.subject]);
            cell = std::min(cell, d);
        }
    m.validate();
    return m;
}

} // namespace twinfuse
