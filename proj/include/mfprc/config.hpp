#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mfprc/evolution.hpp"
#include "mfprc/sweeps.hpp"

namespace mfprc {

struct GridConfig {
    Rect basin{0.0, 1.0, 0.0, 1.0};
    long basin_nx = 20;
    long basin_ny = 20;
    std::vector<Rect> basin_zoom;  // nested refinements after the first level
    Axis post_kpas{350.0, 400.0, 11};
    Axis post_kact{350.0, 400.0, 11};
    double slice_kpas = 375.0;
    Axis pre_kpas{175.0, 575.0, 17};
    Axis pre_kact{175.0, 575.0, 17};
};

struct ExperimentConfig {
    ModelParams model;
    PipelineConfig pipeline;
    std::string phenotype = "table1";
    ClassifierConfig classifier;
    GAConfig ga;
    SweepSettings sweep;
    GridConfig grid;
    std::uint64_t seed = 0;
    std::string out = "runs";
    int threads = 0;

    void validate() const;
    // Canonical "key = value" text of every key, sorted.
    std::string to_text() const;
};

// "paper" (defaults) or "desk".
ExperimentConfig profile_config(const std::string& name);

// Sets one dotted key; throws ConfigError for unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const ExperimentConfig& cfg, const std::string& key);
std::vector<std::string> config_keys();

// Lines of "key = value"; '#' starts a comment.
void apply_config_text(ExperimentConfig& cfg, const std::string& text);
void apply_config_file(ExperimentConfig& cfg, const std::string& path);

// MFPRC_<KEY> with dots as underscores, e.g. MFPRC_PIPELINE_STEPS.
std::string env_name(const std::string& key);
// Returns the keys that were overridden.
std::vector<std::string> apply_env_overrides(ExperimentConfig& cfg);

// Derived settings that pick up the shared pipeline, classifier and seed values.
SweepSettings sweep_settings(const ExperimentConfig& cfg);
GAConfig ga_config(const ExperimentConfig& cfg);

}  // namespace mfprc
