#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace twinfuse {

using SubjectId = std::string;

enum class Modality { voice, ear };
enum class EarSide { left, right };

std::string to_string(Modality m);
std::string to_string(EarSide s);

// One biometric capture. Voice samples carry a take index 1..3, ear samples
// carry a left/right side.
struct SampleRecord {
    std::string sample_id;
    SubjectId subject;
    std::string twin_pair; // id of the pair the subject belongs to
    Modality modality = Modality::voice;
    int take = 0;
    EarSide side = EarSide::left;
    std::string path;

    bool operator==(const SampleRecord&) const = default;
};

struct Dataset {
    std::vector<std::pair<SubjectId, SubjectId>> pairs;
    std::vector<SampleRecord> samples;

    bool operator==(const Dataset&) const = default;
};

// Violations are data, not failures: validate_dataset reports them all.
struct Violation {
    std::string code;   // duplicate-id, pair-membership, missing-sample, missing-file, bad-field
    std::string where;  // sample or subject the violation refers to
    std::string detail;
};

struct ModalitySplit {
    std::vector<SampleRecord> gallery;
    std::vector<SampleRecord> probes;
};

struct SplitPlan {
    ModalitySplit voice;
    ModalitySplit ear;
    std::vector<std::string> warnings;
};

struct SplitOptions {
    // Abort on a subject missing required samples instead of excluding it.
    bool abort_on_missing = false;
    // When a subject is excluded from a modality, drop its twin there too.
    bool exclude_whole_pair = true;
};

Dataset load_manifest(const std::filesystem::path& path);
void write_manifest(const Dataset& ds, const std::filesystem::path& path);

std::vector<Violation> validate_dataset(const Dataset& ds, bool check_paths = true);

// Voice takes 1-2 enroll, take 3 probes; left ear enrolls, right ear probes.
SplitPlan apply_split(const Dataset& ds, const SplitOptions& opts = {});

} // namespace twinfuse
