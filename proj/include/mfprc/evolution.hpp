#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mfprc/analysis.hpp"
#include "mfprc/pipeline.hpp"

namespace mfprc {

// All three objectives are maximised.
struct FitnessVector {
    double f1 = 0.0;  // summed locomotion of the two open loops, m
    double f2 = 0.0;  // behaviour difference
    double f3 = 0.0;  // -(f3a + f3b)
    double f3a = 0.0;
    double f3b = 0.0;
    bool valid = false;
    std::string error;

    std::array<double, 3> objectives() const { return {f1, f2, f3}; }
};

struct Individual {
    long id = -1;  // unique within a run, in creation order
    int generation = 0;
    Phenotype phenotype;
    std::optional<FitnessVector> fitness;
    std::optional<ReadoutWeights> readout;
    int rank = -1;  // 0 is the first front
    double crowding = 0.0;
};

struct EvalHorizons {
    PipelineConfig pipeline;         // open-loop length, tau, beta, clamp
    long closed_steps = 20000;
    long fitness_window = 5000;      // final window for F1, F2, F3
    ShiftRange shifts;
};

struct GAConfig {
    int generations = 100;
    int population = 64;
    int offspring = 64;
    double crossover_prob = 0.7;
    double mutation_prob = 0.3;
    double gene_mutation_prob = 1.0 / 16.0;
    std::uint64_t seed = 0;
    int threads = 0;
    EvalHorizons horizons;
    std::array<double, 3> hv_reference{0.0, 0.0, -4.0};

    void validate() const;
};

// Invalid fitness is dominated by every valid one; two invalid ones never
// dominate each other.
bool dominates(const FitnessVector& a, const FitnessVector& b);

// Index lists of the fronts, first front first; sets Individual::rank.
// Throws UnevaluatedIndividual.
std::vector<std::vector<std::size_t>> nondominated_sort(std::vector<Individual>& pop);

// Sets Individual::crowding for the members of one front.
void crowding_distance(std::vector<Individual>& pop, const std::vector<std::size_t>& front);

// Ranks and crowding distances of a whole population.
void assign_rank_and_crowding(std::vector<Individual>& pop);

// Independent generator for (seed, generation, index, stream).
std::mt19937_64 individual_rng(std::uint64_t seed, int generation, long index, std::uint64_t stream);

Phenotype random_phenotype(std::mt19937_64& rng);

// Parents must carry rank and crowding. Offspring are unevaluated, with ids
// starting at first_id.
std::vector<Individual> make_offspring(const std::vector<Individual>& parents, const GAConfig& cfg,
                                       int generation, long first_id);

// Failures and divergence give valid = false. `readout` receives W on success.
FitnessVector evaluate(const Phenotype& ph, const RobotModel& model, const SimState& rest,
                       const EvalHorizons& h, ReadoutWeights* readout = nullptr);

// Dominated volume between the valid points and the reference point; points
// not strictly better than the reference in every objective add nothing.
double hypervolume(const std::vector<std::array<double, 3>>& points,
                   const std::array<double, 3>& reference);

struct GenerationStats {
    int generation = 0;
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};
    std::array<double, 3> best{};  // over the archive
    double hypervolume = 0.0;
    long evaluations = 0;          // cumulative
    long invalid = 0;              // in this population
};

struct EvolutionState {
    int generation = -1;  // last completed generation; -1 before initialisation
    long next_id = 0;
    std::vector<Individual> population;
    std::vector<Individual> archive;  // non-dominated set of everything evaluated
    std::vector<GenerationStats> history;
};

using GenerationCallback = std::function<void(const EvolutionState&)>;

// Random initial population, evaluated; generation 0.
EvolutionState initialize_evolution(const GAConfig& cfg, const RobotModel& model,
                                    const SimState& rest);

// One mu + lambda generation.
void evolve_generation(EvolutionState& st, const GAConfig& cfg, const RobotModel& model,
                       const SimState& rest);

// Runs (or continues) until cfg.generations generations have completed.
// The callback sees the state after every generation, including 0.
EvolutionState evolve(const GAConfig& cfg, const RobotModel& model, const SimState& rest,
                      std::optional<EvolutionState> resume = std::nullopt,
                      const GenerationCallback& on_generation = {});

}  // namespace mfprc
