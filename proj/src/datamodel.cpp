#include "twinfuse/datamodel.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace twinfuse {

std::string to_string(Modality m) { return m == Modality::voice ? "voice" : "ear"; }
std::string to_string(EarSide s) { return s == EarSide::left ? "left" : "right"; }

namespace {

// Maps each subject to its pair id; throws if a subject is listed in zero or
// more than one pair.
std::map<SubjectId, std::string> pair_index(const Dataset& ds) {
    std::map<SubjectId, std::string> idx;
    for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
        std::ostringstream name;
        name << "pair" << i;
        for (const auto& subject : {ds.pairs[i].first, ds.pairs[i].second}) {
            if (idx.count(subject))
                throw std::runtime_error("subject '" + subject + "' appears in two pairs");
            idx[subject] = name.str();
        }
    }
    return idx;
}

} // namespace

Dataset load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path.string());

    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("manifest parse error in " + path.string() + ": " + e.what());
    }

    Dataset ds;
    try {
        for (const auto& p : doc.at("pairs")) {
            if (!p.is_array() || p.size() != 2)
                throw std::runtime_error("each pair must be a 2-element array");
            ds.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
        }
        const auto pairs_of = pair_index(ds);

        std::set<std::string> seen_ids;
        for (const auto& s : doc.at("samples")) {
            SampleRecord rec;
            rec.sample_id = s.at("sample_id").get<std::string>();
            rec.subject = s.at("subject").get<std::string>();
            rec.path = s.at("path").get<std::string>();
            const auto modality = s.at("modality").get<std::string>();
            if (modality == "voice") {
                rec.modality = Modality::voice;
                rec.take = s.at("take").get<int>();
            } else if (modality == "ear") {
                rec.modality = Modality::ear;
                const auto side = s.at("side").get<std::string>();
                if (side == "left") rec.side = EarSide::left;
                else if (side == "right") rec.side = EarSide::right;
                else throw std::runtime_error("unknown side '" + side + "'");
            } else {
                throw std::runtime_error("unknown modality '" + modality + "'");
            }

            if (!seen_ids.insert(rec.sample_id).second)
                throw std::runtime_error("duplicate sample_id '" + rec.sample_id + "'");
            auto it = pairs_of.find(rec.subject);
            if (it == pairs_of.end())
                throw std::runtime_error("subject '" + rec.subject + "' is not in any pair");
            rec.twin_pair = it->second;
            ds.samples.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("manifest parse error in " + path.string() + ": " + e.what());
    }
    return ds;
}

void write_manifest(const Dataset& ds, const std::filesystem::path& path) {
    nlohmann::ordered_json doc;
    doc["pairs"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : ds.pairs) doc["pairs"].push_back({a, b});
    doc["samples"] = nlohmann::ordered_json::array();
    for (const auto& rec : ds.samples) {
        nlohmann::ordered_json s;
        s["sample_id"] = rec.sample_id;
        s["subject"] = rec.subject;
        s["modality"] = to_string(rec.modality);
        if (rec.modality == Modality::voice) s["take"] = rec.take;
        else s["side"] = to_string(rec.side);
        s["path"] = rec.path;
        doc["samples"].push_back(std::move(s));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
    out << doc.dump(2) << "\n";
}

std::vector<Violation> validate_dataset(const Dataset& ds, bool check_paths) {
    std::vector<Violation> out;

    std::map<SubjectId, int> pair_count;
    for (const auto& [a, b] : ds.pairs) {
        ++pair_count[a];
        ++pair_count[b];
    }
    for (const auto& [subject, n] : pair_count)
        if (n > 1) out.push_back({"pair-membership", subject, "subject listed in more than one pair"});

    std::set<std::string> ids;
    std::map<SubjectId, std::set<int>> takes;
    std::map<SubjectId, std::set<EarSide>> sides;
    std::set<SubjectId> with_samples;
    for (const auto& rec : ds.samples) {
        with_samples.insert(rec.subject);
        if (!ids.insert(rec.sample_id).second)
            out.push_back({"duplicate-id", rec.sample_id, "sample_id occurs more than once"});
        if (!pair_count.count(rec.subject))
            out.push_back({"pair-membership", rec.subject, "subject is not in any pair"});
        if (rec.modality == Modality::voice) {
            if (rec.take < 1 || rec.take > 3)
                out.push_back({"bad-field", rec.sample_id, "voice take must be 1..3"});
            else
                takes[rec.subject].insert(rec.take);
        } else {
            sides[rec.subject].insert(rec.side);
        }
        if (check_paths && !std::filesystem::exists(rec.path))
            out.push_back({"missing-file", rec.sample_id, "path does not exist: " + rec.path});
    }

    // Split preconditions: 3 voice takes and both ear sides per subject.
    for (const auto& subject : with_samples) {
        for (int t = 1; t <= 3; ++t)
            if (!takes[subject].count(t))
                out.push_back({"missing-sample", subject,
                               "voice take " + std::to_string(t) + " missing"});
        for (auto side : {EarSide::left, EarSide::right})
            if (!sides[subject].count(side))
                out.push_back({"missing-sample", subject,
                               to_string(side) + " ear image missing"});
    }
    return out;
}

SplitPlan apply_split(const Dataset& ds, const SplitOptions& opts) {
    SplitPlan plan;

    std::map<SubjectId, std::set<int>> takes;
    std::map<SubjectId, std::set<EarSide>> sides;
    std::map<SubjectId, SubjectId> twin_of;
    for (const auto& [a, b] : ds.pairs) {
        twin_of[a] = b;
        twin_of[b] = a;
    }
    std::vector<SubjectId> order; // first-appearance order, for deterministic warnings
    for (const auto& rec : ds.samples) {
        if (!takes.count(rec.subject) && !sides.count(rec.subject)) order.push_back(rec.subject);
        if (rec.modality == Modality::voice) takes[rec.subject].insert(rec.take);
        else sides[rec.subject].insert(rec.side);
    }

    // A subject takes part in a modality only if it has samples there; a
    // partial set is excluded (or aborts), optionally dragging the twin along.
    std::set<SubjectId> excluded_voice, excluded_ear;
    for (const auto& subject : order) {
        const bool has_voice = !takes[subject].empty();
        const bool has_ear = !sides[subject].empty();
        const bool voice_ok = takes[subject].count(1) && takes[subject].count(2) && takes[subject].count(3);
        const bool ear_ok = sides[subject].count(EarSide::left) && sides[subject].count(EarSide::right);
        if (has_voice && !voice_ok) {
            if (opts.abort_on_missing)
                throw std::runtime_error("missing-sample: subject '" + subject +
                                         "' lacks a complete set of voice takes");
            excluded_voice.insert(subject);
            if (opts.exclude_whole_pair && twin_of.count(subject)) excluded_voice.insert(twin_of[subject]);
            plan.warnings.push_back("excluding '" + subject + "' from voice: incomplete takes");
        }
        if (has_ear && !ear_ok) {
            if (opts.abort_on_missing)
                throw std::runtime_error("missing-sample: subject '" + subject +
                                         "' lacks a left/right ear image");
            excluded_ear.insert(subject);
            if (opts.exclude_whole_pair && twin_of.count(subject)) excluded_ear.insert(twin_of[subject]);
            plan.warnings.push_back("excluding '" + subject + "' from ear: incomplete sides");
        }
    }

    for (const auto& rec : ds.samples) {
        if (rec.modality == Modality::voice) {
            if (excluded_voice.count(rec.subject)) continue;
            if (rec.take == 1 || rec.take == 2) plan.voice.gallery.push_back(rec);
            else if (rec.take == 3) plan.voice.probes.push_back(rec);
        } else {
            if (excluded_ear.count(rec.subject)) continue;
            if (rec.side == EarSide::left) plan.ear.gallery.push_back(rec);
            else plan.ear.probes.push_back(rec);
        }
    }

    // Explicit take order within the gallery, never file order.
    auto by_subject_take = [](const SampleRecord& a, const SampleRecord& b) {
        return std::tie(a.subject, a.take) < std::tie(b.subject, b.take);
    };
    std::stable_sort(plan.voice.gallery.begin(), plan.voice.gallery.end(), by_subject_take);

    return plan;
}

} // namespace twinfuse
