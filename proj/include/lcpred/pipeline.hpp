#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcpred/clustering.hpp"
#include "lcpred/evaluation.hpp"
#include "lcpred/extraction.hpp"
#include "lcpred/features.hpp"
#include "lcpred/fuzzy.hpp"
#include "lcpred/synth.hpp"

namespace lcpred {

// The run definition. See docs/config.md for the file schema.
struct PipelineConfig {
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::filesystem::path input_dir;
    std::filesystem::path output_dir = "out";

    ExtractionOptions extraction;
    GapPolicy gap_policy = GapPolicy::reject_track;
    std::size_t sequence_length = 50;

    KMeansOptions clustering;

    std::vector<FuzzyCoefficients> grid = coefficient_grid();
    SpeedScope speed_scope = SpeedScope::all;

    ClassifierSpec classifier;
    bool save_models = false;

    DatasetSpec train_dataset;  // for the train command

    CorpusOptions synth;

    // Config hash: FNV-1a over the canonical JSON of every field except the I/O paths.
    nlohmann::json canonical() const;
    std::string hash() const;
    std::string provenance() const;  // "config_hash=<hex> seed=<n>"

    std::filesystem::path stage_dir(const std::string& stage) const { return output_dir / stage; }
};

// Strict: unknown keys, wrong types and out-of-range values throw ConfigError.
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);
void validate_config(const PipelineConfig& config);

// Stage commands. They write atomically under config.output_dir and throw
// ConfigError / DataError / Error for the CLI to map onto exit codes.
void cmd_synth(const PipelineConfig& config, std::ostream& log);
void cmd_extract(const PipelineConfig& config, std::ostream& log);
void cmd_cluster(const PipelineConfig& config, std::ostream& log);
void cmd_build_datasets(const PipelineConfig& config, std::ostream& log);
void cmd_train(const PipelineConfig& config, std::ostream& log);
void cmd_sweep(const PipelineConfig& config, std::ostream& log);
void cmd_report(const std::filesystem::path& run_dir, std::ostream& log);

// Every <id>_recordingMeta.csv with its <id>_tracks.csv, sorted by id.
std::vector<Recording> load_recordings(const std::filesystem::path& dir, GapPolicy gaps);

// Extracted sample tables (aggregates in CSV, sequences in a tensor file).
std::string samples_csv(const std::vector<FeatureSample>& samples, const std::string& provenance);
std::vector<FeatureSample> read_samples(const std::filesystem::path& csv, const std::filesystem::path& tensors);

// Model-dataset export: identifiers, label, optional driving_style, 32 aggregates.
std::string dataset_csv(const ModelDataset& ds, const std::string& provenance);

// Path-safe run directory name ("Bird&DS" -> "Bird_DS").
std::string run_dir_name(const std::string& run);

// Problems found in a summary document; empty when it conforms.
std::vector<std::string> validate_summary(const nlohmann::json& summary);

}  // namespace lcpred
