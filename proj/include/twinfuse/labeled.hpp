#pragma once

#include <string>
#include <vector>

#include "twinfuse/audio.hpp"

namespace twinfuse {

// Feature payloads tagged with the identity they belong to. `id` names the
// probe/gallery entry (the pipeline uses subject ids for probe rows),
// `subject` is the enrolled identity used for gallery grouping.
struct LabeledSequence {
    std::string id;
    std::string subject;
    FeatureSequence features;
};

struct LabeledVector {
    std::string id;
    std::string subject;
    std::vector<double> values;
};

} // namespace twinfuse
