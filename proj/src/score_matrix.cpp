#include "twinfuse/score_matrix.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace twinfuse {

void ScoreMatrix::validate() const {
    if (values.rows() != probe_ids.size() || values.cols() != subject_ids.size())
        throw std::invalid_argument("score matrix labels do not match shape");
    std::set<std::string> p(probe_ids.begin(), probe_ids.end());
    std::set<std::string> s(subject_ids.begin(), subject_ids.end());
    if (p.size() != probe_ids.size() || s.size() != subject_ids.size())
        throw std::invalid_argument("score matrix ids must be unique");
    for (double v : values.data())
        if (!std::isfinite(v)) throw std::invalid_argument("score matrix has non-finite entry");
    if (normalized)
        for (double v : values.data())
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("normalized score outside [0,1]");
}

void save_score_matrix(const ScoreMatrix& m, const std::filesystem::path& csv_path) {
    m.validate();
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write score matrix: " + csv_path.string());

    for (const auto& sid : m.subject_ids) out << "," << sid;
    out << "\n";
    char cell[64];
    for (std::size_t r = 0; r < m.n_probes(); ++r) {
        out << m.probe_ids[r];
        for (std::size_t c = 0; c < m.n_subjects(); ++c) {
            std::snprintf(cell, sizeof cell, "%.17g", m.values(r, c));
            out << "," << cell;
        }
        out << "\n";
    }

    nlohmann::ordered_json header;
    header["orientation"] = m.lower_better ? "lower-better" : "higher-better";
    header["normalized"] = m.normalized;
    header["n_probes"] = m.n_probes();
    header["n_subjects"] = m.n_subjects();
    std::ofstream side(csv_path.string() + ".json");
    if (!side) throw std::runtime_error("cannot write sidecar: " + csv_path.string() + ".json");
    side << header.dump(2) << "\n";
}

ScoreMatrix load_score_matrix(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot read score matrix: " + csv_path.string());

    ScoreMatrix m;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty score matrix: " + csv_path.string());
    {
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ','); // corner cell
        while (std::getline(ss, cell, ',')) m.subject_ids.push_back(cell);
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        m.probe_ids.push_back(cell);
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != m.subject_ids.size())
            throw std::runtime_error("ragged score matrix row in " + csv_path.string());
        rows.push_back(std::move(row));
    }
    m.values = Matrix(rows.size(), m.subject_ids.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m.values(r, c) = rows[r][c];

    const auto sidecar = csv_path.string() + ".json";
    std::ifstream side(sidecar);
    if (side) {
        nlohmann::json header;
        side >> header;
        m.lower_better = header.value("orientation", "lower-better") == std::string("lower-better");
        m.normalized = header.value("normalized", false);
    }
    m.validate();
    return m;
}

} // namespace twinfuse
