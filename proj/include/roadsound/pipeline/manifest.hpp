#pragma once

#include <string>
#include <vector>

namespace roadsound::pipeline {

// One clip. The first three fields always exist; the rest are provenance
// written by the split/augment stage: which side of the split the clip is on,
// and for augmented variants the source clip, the transform, its parameter,
// and the background-noise donor (noise mixes only).
struct ManifestRow {
    std::string clip_id;
    std::string path;
    std::string label;
    std::string split;      // "", "train" or "test"
    std::string parent_id;  // empty for originals
    std::string aug_type;   // noise_mix | time_stretch | pitch_shift | time_shift
    double aug_param = 0.0;
    std::string aug_donor;  // clip_id of the mixed-in noise clip

    bool is_original() const { return parent_id.empty(); }
};

using Manifest = std::vector<ManifestRow>;

// CSV with a header. Relative clip paths are resolved against the manifest's
// directory on load. Labels are trimmed and lowercased; duplicate clip ids,
// missing required columns and unknown columns are errors.
Manifest load_manifest(const std::string& path);

// Writes the provenance columns only when some row uses them.
void save_manifest(const std::string& path, const Manifest& manifest);

// Sorted unique labels; class ids are indices into this list.
std::vector<std::string> label_names(const Manifest& manifest);
int label_index(const std::vector<std::string>& names, const std::string& label);

// Split hygiene: every row carries a split, test rows are originals only,
// every variant's parent and noise donor are train rows. Returns one message
// per violation; empty means the split is sound.
std::vector<std::string> audit_split(const Manifest& manifest);

}  // namespace roadsound::pipeline
