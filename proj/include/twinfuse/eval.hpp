#pragma once

<
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinfuse/score_matrix.hpp"

namespace twinfuse {

struct RankResult {
    std::string probe_id;
    std::string true_subject;
    std::size_t rank = 0;      // 1-based
    std::size_t tie_count = 0; // other subjects tied with the true score
};

// rates[k-1] = fraction of probes identified within rank k.
struct CmcCurve {
    std::vector<double> rates;

    // rank-k rate, clamped to the last rank when k > n_subjects.
    double rank_rate(std::size_t k) const;
};

// rank = 1 + #{others strictly better} + #{others tied}; ties count against
// the true identity. Requires lower-better orientation.
std::vector<RankResult> probe_ranks(const ScoreMatrix& m,
                                    const std::map<std::string, std::string>& truth);

CmcCurve cmc_curve(const std::vector<RankResult>& ranks, std::size_t n_subjects);

// Mean of the CMC rates over ranks 1..N (normalized area).
double cmc_auc(const CmcCurve& curve);

struct ScorerResult {
    std::string name;
    CmcCurve cmc;
    std::size_t n_probes = 0;
    std::size_t n_subjects = 0;
};

// JSON report (rank-1/2/5, AUC, full CMC; 6-decimal floats, fixed key
// order) plus a companion CSV "rank,scorer1,..." table. When svg_path is
// given, a small line chart of the curves is written next to them.
void write_report(const std::vector<ScorerResult>& results,
                  const nlohmann::ordered_json& config_echo, std::uint64_t seed,
                  const std::filesystem::path& json_path,
                  const std::filesystem::path& cmc_csv_path,
                  const std::filesystem::path* svg_path = nullptr);

} // namespace twinfuse
