#pragma once

#include "channelrank/dataset.hpp"
#include "channelrank/format.hpp"

#include "json.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace channelrank {

/// Sidecar describing the shape of a long-format dataset CSV.
struct Manifest {
    std::string name;
    std::size_t samples_per_trial = 0;
    std::size_t channels = 0;
    std::size_t trials_per_class = 0;
    std::size_t classes = 0;
    std::optional<std::vector<Label>> class_labels; ///< optional whitelist
};

inline Manifest read_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open manifest " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    Manifest manifest;
    try {
        manifest.name = doc.value("name", std::string{});
        manifest.samples_per_trial = doc.at("samples_per_trial").get<std::size_t>();
        manifest.channels = doc.at("channels").get<std::size_t>();
        manifest.trials_per_class = doc.at("trials_per_class").get<std::size_t>();
        manifest.classes = doc.at("classes").get<std::size_t>();
        if (doc.contains("class_labels")) {
            manifest.class_labels = doc.at("class_labels").get<std::vector<Label>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("manifest " + path.string() + ": " + e.what());
    }
    if (manifest.samples_per_trial == 0 || manifest.channels == 0 || manifest.trials_per_class == 0 ||
        manifest.classes < 2) {
        throw Error("manifest " + path.string() + " declares a degenerate shape");
    }
    if (manifest.class_labels && manifest.class_labels->size() != manifest.classes) {
        throw Error("manifest " + path.string() + ": class_labels length differs from classes");
    }
    return manifest;
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& manifest)
{
    nlohmann::ordered_json doc;
    doc["name"] = manifest.name;
    doc["samples_per_trial"] = manifest.samples_per_trial;
    doc["channels"] = manifest.channels;
    doc["trials_per_class"] = manifest.trials_per_class;
    doc["classes"] = manifest.classes;
    if (manifest.class_labels) {
        doc["class_labels"] = *manifest.class_labels;
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write manifest " + path.string());
    }
    out << doc.dump(2) << '\n';
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    for (auto& field : fields) {
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
            field.remove_prefix(1);
        }
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
            field.remove_suffix(1);
        }
    }
    return fields;
}

template <class T>
T parse_field(std::string_view field, std::size_t line_no, std::string_view column)
{
    T value{};
    const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || end != field.data() + field.size()) {
        throw Error("line " + std::to_string(line_no) + ": cannot parse " + std::string(column) + " value '" +
                    std::string(field) + "'");
    }
    return value;
}

} // namespace detail

/**
 * Reads a long-format CSV (`trial,class,sample,ch0,...`) checked against its
 * manifest. Rows may come in any order; samples are placed by their index.
 */
inline TrialTensor load_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& manifest_path)
{
    const Manifest manifest = read_manifest(manifest_path);
    std::ifstream in(csv_path);
    if (!in) {
        throw Error("cannot open data file " + csv_path.string());
    }

    std::string line;
    if (!std::getline(in, line)) {
        throw Error("data file " + csv_path.string() + " is empty");
    }
    const auto header = detail::split_fields(line);
    const std::size_t expected_fields = 3 + manifest.channels;
    if (header.size() != expected_fields || header[0] != "trial" || header[1] != "class" || header[2] != "sample") {
        throw Error("data header has " + std::to_string(header.size()) + " columns, manifest implies " +
                    std::to_string(expected_fields) + " (trial,class,sample,ch0..ch" +
                    std::to_string(manifest.channels - 1) + "): dimension mismatch with manifest");
    }

    struct Slot {
        Matrix data;
        std::vector<bool> filled;
    };
    std::map<std::pair<Label, std::size_t>, Slot> slots;
    const auto rows = static_cast<Eigen::Index>(manifest.samples_per_trial);
    const auto cols = static_cast<Eigen::Index>(manifest.channels);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto fields = detail::split_fields(line);
        if (fields.size() != expected_fields) {
            throw Error("line " + std::to_string(line_no) + ": " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(expected_fields) + " (dimension mismatch with manifest)");
        }
        const auto trial = detail::parse_field<std::size_t>(fields[0], line_no, "trial");
        const auto label = detail::parse_field<Label>(fields[1], line_no, "class");
        const auto sample = detail::parse_field<std::size_t>(fields[2], line_no, "sample");
        if (manifest.class_labels && std::ranges::find(*manifest.class_labels, label) == manifest.class_labels->end()) {
            throw Error("line " + std::to_string(line_no) + ": unknown class label " + std::to_string(label));
        }
        if (sample >= manifest.samples_per_trial) {
            throw Error("line " + std::to_string(line_no) + ": sample index " + std::to_string(sample) +
                        " exceeds samples_per_trial " + std::to_string(manifest.samples_per_trial));
        }
        auto [it, inserted] = slots.try_emplace({label, trial});
        Slot& slot = it->second;
        if (inserted) {
            slot.data = Matrix::Zero(rows, cols);
            slot.filled.assign(manifest.samples_per_trial, false);
        }
        if (slot.filled[sample]) {
            throw Error("line " + std::to_string(line_no) + ": duplicate sample " + std::to_string(sample) +
                        " for class " + std::to_string(label) + " trial " + std::to_string(trial));
        }
        slot.filled[sample] = true;
        for (Eigen::Index c = 0; c < cols; ++c) {
            const std::string_view field = fields[3 + static_cast<std::size_t>(c)];
            double value = 0.0;
            const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
            if (ec != std::errc{} || end != field.data() + field.size()) {
                throw Error("line " + std::to_string(line_no) + ": cannot parse ch" + std::to_string(c) +
                            " value '" + std::string(field) + "'");
            }
            if (!std::isfinite(value)) {
                throw Error("line " + std::to_string(line_no) + ": non-finite value in ch" + std::to_string(c));
            }
            slot.data(static_cast<Eigen::Index>(sample), c) = value;
        }
    }

    std::map<Label, std::size_t> trials_per_label;
    std::vector<Trial> trials;
    trials.reserve(slots.size());
    for (auto& [key, slot] : slots) {
        if (std::ranges::find(slot.filled, false) != slot.filled.end()) {
            throw Error("class " + std::to_string(key.first) + " trial " + std::to_string(key.second) +
                        " is missing samples (manifest declares " + std::to_string(manifest.samples_per_trial) + ")");
        }
        ++trials_per_label[key.first];
        trials.push_back({key.first, key.second, std::move(slot.data)});
    }
    if (trials_per_label.size() > manifest.classes) {
        throw Error("data contains " + std::to_string(trials_per_label.size()) +
                    " class labels, manifest declares " + std::to_string(manifest.classes) + " (unknown class label)");
    }
    if (trials_per_label.size() < manifest.classes) {
        throw Error("data contains " + std::to_string(trials_per_label.size()) + " classes, manifest declares " +
                    std::to_string(manifest.classes));
    }
    for (const auto& [label, count] : trials_per_label) {
        if (count != manifest.trials_per_class) {
            throw Error("class " + std::to_string(label) + " has " + std::to_string(count) +
                        " trials, manifest declares " + std::to_string(manifest.trials_per_class));
        }
    }
    return {std::move(trials), manifest.channels, manifest.samples_per_trial};
}

/// Manifest path convention: same stem, `.json` extension.
inline TrialTensor load_dataset(const std::filesystem::path& csv_path)
{
    std::filesystem::path manifest = csv_path;
    manifest.replace_extension(".json");
    return load_dataset(csv_path, manifest);
}

/// Writes CSV rows sorted by (class, trial, sample) with exact round-trip values.
inline void save_dataset(const TrialTensor& tensor, const std::filesystem::path& csv_path,
                         const std::filesystem::path& manifest_path, const std::string& name)
{
    std::ofstream out(csv_path);
    if (!out) {
        throw Error("cannot write data file " + csv_path.string());
    }
    out << "trial,class,sample";
    for (std::size_t c = 0; c < tensor.channel_count(); ++c) {
        out << ",ch" << c;
    }
    out << '\n';
    std::string row;
    for (const Trial& trial : tensor.trials()) {
        for (Eigen::Index s = 0; s < trial.data.rows(); ++s) {
            row.clear();
            row += std::to_string(trial.trial_index);
            row += ',';
            row += std::to_string(trial.class_label);
            row += ',';
            row += std::to_string(s);
            for (Eigen::Index c = 0; c < trial.data.cols(); ++c) {
                row += ',';
                row += format_exact(trial.data(s, c));
            }
            row += '\n';
            out << row;
        }
    }
    if (!out) {
        throw Error("failed while writing " + csv_path.string());
    }

    Manifest manifest;
    manifest.name = name;
    manifest.samples_per_trial = tensor.samples_per_trial();
    manifest.channels = tensor.channel_count();
    manifest.trials_per_class = tensor.trials_per_class();
    manifest.classes = tensor.class_count();
    manifest.class_labels = tensor.class_labels();
    write_manifest(manifest_path, manifest);
}

} // namespace channelrank
