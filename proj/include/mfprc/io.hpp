#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mfprc/config.hpp"
#include "mfprc/evolution.hpp"
#include "mfprc/sweeps.hpp"

namespace mfprc {

using Json = nlohmann::json;

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Writes to a temporary sibling and renames it over `path`. Creates parent
// directories. Throws IoError.
void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Shortest text that reads back to the same double.
std::string format_double(double v);

std::string model_fingerprint(const RobotModel& model);
std::string model_hash(const RobotModel& model);
std::string phenotype_hash(const Phenotype& ph);

// --- JSON records ---
Json to_json(const Phenotype& ph);
Phenotype phenotype_from_json(const Json& j);

// Full state (restorable) plus tendon lengths, sensor flags and bottom face.
Json state_to_json(const SimState& s, const RobotModel& model);
SimState state_from_json(const Json& j);
// time followed by the 78 state scalars
std::vector<double> state_csv_row(const SimState& s);

Json weights_to_json(const ReadoutWeights& w, const Phenotype& ph, const RobotModel& model);
ReadoutWeights weights_from_json(const Json& j);

Json to_json(const AttractorLabel& l);
Json to_json(const FitnessVector& f);
FitnessVector fitness_from_json(const Json& j);

Json checkpoint_to_json(const EvolutionState& st, const GAConfig& cfg);
EvolutionState checkpoint_from_json(const Json& j);

// --- CSV (first line "# schema: <name>/<version>") ---
std::string open_trace_csv(const ReservoirTrace& tr);
ReservoirTrace open_trace_from_csv(const std::string& text);
std::string closed_trace_csv(const ClosedLoopTrace& tr);
std::string basin_csv(const std::vector<BasinCell>& cells);
std::string stiffness_csv(const std::vector<StiffnessCell>& cells);
std::string slice_csv(const std::vector<SliceRow>& rows);
std::string pre_learning_csv(const std::vector<PreLearningCell>& cells);
std::string history_csv(const std::vector<GenerationStats>& history);

// Grid of cells; numeric values get a colour ramp, anything else a palette.
std::string heatmap_svg(const std::string& title, long nx, long ny,
                        const std::vector<std::string>& values, const std::string& x_label,
                        const std::string& y_label);

// Status goes "running" then "complete" or "failed".
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string model_hash;
    std::uint64_t seed = 0;
    std::string build;
    std::string started;
    std::string finished;
    std::string status = "running";
    std::string config_text;
    std::vector<std::filesystem::path> files;

    Json to_json(const std::filesystem::path& root) const;
};

std::string build_identifier();
std::string utc_timestamp();

}  // namespace mfprc
