#include "roadsound/pipeline/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "roadsound/errors.hpp"

namespace roadsound::pipeline {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// One CSV record; handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

const std::vector<std::string> kColumns = {"clip_id",   "path",     "label",    "split",
                                           "parent_id", "aug_type", "aug_param", "aug_donor"};

}  // namespace

Manifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("manifest: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw DecodeError("manifest: empty file '" + path + "'");

    const std::vector<std::string> header = split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = lower(trim(header[i]));
        if (std::find(kColumns.begin(), kColumns.end(), name) == kColumns.end()) {
            throw DecodeError("manifest: unknown column '" + name + "'");
        }
        if (col.count(name)) throw DecodeError("manifest: duplicate column '" + name + "'");
        col[name] = i;
    }
    for (const char* required : {"clip_id", "path", "label"}) {
        if (!col.count(required)) {
            throw DecodeError(std::string("manifest: missing required column '") + required +
                              "'");
        }
    }

    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    Manifest manifest;
    std::set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != header.size()) {
            throw DecodeError("manifest: line " + std::to_string(line_no) + " has " +
                              std::to_string(fields.size()) + " fields, header has " +
                              std::to_string(header.size()));
        }
        auto get = [&](const char* name) -> std::string {
            const auto it = col.find(name);
            return it == col.end() ? std::string() : trim(fields[it->second]);
        };
        ManifestRow row;
        row.clip_id = get("clip_id");
        row.path = get("path");
        row.label = lower(get("label"));
        row.split = lower(get("split"));
        row.parent_id = get("parent_id");
        row.aug_type = get("aug_type");
        row.aug_donor = get("aug_donor");
        const std::string param = get("aug_param");
        if (!param.empty()) {
            try {
                row.aug_param = std::stod(param);
            } catch (const std::exception&) {
                throw DecodeError("manifest: line " + std::to_string(line_no) +
                                  ": bad aug_param '" + param + "'");
            }
        }
        if (row.clip_id.empty() || row.path.empty() || row.label.empty()) {
            throw DecodeError("manifest: line " + std::to_string(line_no) +
                              ": clip_id, path and label are required");
        }
        if (!row.split.empty() && row.split != "train" && row.split != "test") {
            throw DecodeError("manifest: line " + std::to_string(line_no) + ": bad split '" +
                              row.split + "'");
        }
        if (!seen.insert(row.clip_id).second) {
            throw DecodeError("manifest: duplicate clip_id '" + row.clip_id + "'");
        }
        std::filesystem::path p(row.path);
        if (p.is_relative()) row.path = (base / p).string();
        manifest.push_back(std::move(row));
    }
    return manifest;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
    const bool extended =
        std::any_of(manifest.begin(), manifest.end(), [](const ManifestRow& r) {
            return !r.split.empty() || !r.parent_id.empty() || !r.aug_type.empty() ||
                   !r.aug_donor.empty();
        });
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("manifest: cannot open '" + path + "' for writing");

    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto stored_path = [&](const std::string& p) {
        std::error_code ec;
        const std::filesystem::path rel = std::filesystem::relative(p, base, ec);
        if (!ec && !rel.empty() && rel.native()[0] != '.') return rel.string();
        return p;
    };

    if (extended) {
        f << "clip_id,path,label,split,parent_id,aug_type,aug_param,aug_donor\n";
        for (const auto& r : manifest) {
            std::ostringstream param;
            if (!r.aug_type.empty()) param << r.aug_param;
            f << csv_field(r.clip_id) << ',' << csv_field(stored_path(r.path)) << ','
              << csv_field(r.label) << ',' << r.split << ',' << csv_field(r.parent_id) << ','
              << r.aug_type << ',' << param.str() << ',' << csv_field(r.aug_donor) << '\n';
        }
    } else {
        f << "clip_id,path,label\n";
        for (const auto& r : manifest) {
            f << csv_field(r.clip_id) << ',' << csv_field(stored_path(r.path)) << ','
              << csv_field(r.label) << '\n';
        }
    }
    if (!f) throw IoError("manifest: write to '" + path + "' failed");
}

std::vector<std::string> label_names(const Manifest& manifest) {
    std::set<std::string> labels;
    for (const auto& r : manifest) labels.insert(r.label);
    return {labels.begin(), labels.end()};
}

int label_index(const std::vector<std::string>& names, const std::string& label) {
    const auto it = std::lower_bound(names.begin(), names.end(), label);
    if (it == names.end() || *it != label) {
        throw std::invalid_argument("label '" + label + "' not in label set");
    }
    return static_cast<int>(it - names.begin());
}

std::vector<std::string> audit_split(const Manifest& manifest) {
    std::vector<std::string> violations;
    std::map<std::string, const ManifestRow*> by_id;
    for (const auto& r : manifest) by_id[r.clip_id] = &r;

    for (const auto& r : manifest) {
        if (r.split.empty()) {
            violations.push_back("clip '" + r.clip_id + "' has no split assignment");
            continue;
        }
        if (r.split == "test" && !r.is_original()) {
            violations.push_back("augmented clip '" + r.clip_id + "' is in the test set");
        }
        if (!r.parent_id.empty()) {
            const auto it = by_id.find(r.parent_id);
            if (it == by_id.end()) {
                violations.push_back("clip '" + r.clip_id + "' has unknown parent '" +
                                     r.parent_id + "'");
            } else if (it->second->split != r.split) {
                violations.push_back("clip '" + r.clip_id + "' (split " + r.split +
                                     ") has parent '" + r.parent_id + "' in split " +
                                     it->second->split);
            }
        }
        if (!r.aug_donor.empty()) {
            const auto it = by_id.find(r.aug_donor);
            if (it == by_id.end()) {
                violations.push_back("clip '" + r.clip_id + "' has unknown noise donor '" +
                                     r.aug_donor + "'");
            } else if (it->second->split != "train") {
                violations.push_back("clip '" + r.clip_id + "' mixes noise from '" +
                                     r.aug_donor + "' which is not a train clip");
            }
        }
    }
    return violations;
}

}  // namespace roadsound::pipeline
