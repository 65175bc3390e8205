#include "mfprc/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfprc/errors.hpp"
#include "mfprc/parallel.hpp"

namespace mfprc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamVary = 2;

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

const FitnessVector& fit(const Individual& ind) {
    if (!ind.fitness) throw UnevaluatedIndividual("individual " + std::to_string(ind.id) + " has no fitness");
    return *ind.fitness;
}

}  // namespace

void GAConfig::validate() const {
    if (generations < 0) throw InvalidArgument("generations must be non-negative");
    if (population < 1 || offspring < 1) throw InvalidArgument("population and offspring must be positive");
    for (double p : {crossover_prob, mutation_prob, gene_mutation_prob})
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("probabilities must lie in [0, 1]");
    if (crossover_prob + mutation_prob > 1.0 + 1e-12)
        throw InvalidArgument("crossover and mutation probabilities must sum to at most 1");
    if (horizons.fitness_window < 1 || horizons.closed_steps < 1)
        throw InvalidArgument("fitness horizons must be positive");
}

bool dominates(const FitnessVector& a, const FitnessVector& b) {
    if (!a.valid) return false;
    if (!b.valid) return true;
    const auto x = a.objectives();
    const auto y = b.objectives();
    bool strict = false;
    for (int k = 0; k < 3; ++k) {
        if (x[k] < y[k]) return false;
        if (x[k] > y[k]) strict = true;
    }
    return strict;
}

std::vector<std::vector<std::size_t>> nondominated_sort(std::vector<Individual>& pop) {
    const std::size_t n = pop.size();
    for (const auto& ind : pop) fit(ind);
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<long> count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(*pop[i].fitness, *pop[j].fitness)) {
                dominated[i].push_back(j);
                ++count[j];
            } else if (dominates(*pop[j].fitness, *pop[i].fitness)) {
                dominated[j].push_back(i);
                ++count[i];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (count[i] == 0) fronts[0].push_back(i);
    while (!fronts.back().empty()) {
        std::vector<std::size_t> next;
        for (std::size_t i : fronts.back()) {
            pop[i].rank = static_cast<int>(fronts.size() - 1);
            for (std::size_t j : dominated[i])
                if (--count[j] == 0) next.push_back(j);
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();
    return fronts;
}

void crowding_distance(std::vector<Individual>& pop, const std::vector<std::size_t>& front) {
    for (std::size_t i : front) pop[i].crowding = 0.0;
    std::vector<std::size_t> valid;
    for (std::size_t i : front)
        if (fit(pop[i]).valid) valid.push_back(i);
    if (valid.empty()) return;
    for (int k = 0; k < 3; ++k) {
        auto order = valid;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return pop[a].fitness->objectives()[k] < pop[b].fitness->objectives()[k];
        });
        pop[order.front()].crowding = kInf;
        pop[order.back()].crowding = kInf;
        const double lo = pop[order.front()].fitness->objectives()[k];
        const double hi = pop[order.back()].fitness->objectives()[k];
        if (!(hi > lo)) continue;
        for (std::size_t m = 1; m + 1 < order.size(); ++m) {
            const double gap = pop[order[m + 1]].fitness->objectives()[k] -
                               pop[order[m - 1]].fitness->objectives()[k];
            pop[order[m]].crowding += gap / (hi - lo);
        }
    }
}

void assign_rank_and_crowding(std::vector<Individual>& pop) {
    for (const auto& f : nondominated_sort(pop)) crowding_distance(pop, f);
}

std::mt19937_64 individual_rng(std::uint64_t seed, int generation, long index, std::uint64_t stream) {
    std::uint64_t x = seed;
    std::uint64_t h = splitmix64(x);
    for (std::uint64_t v : {static_cast<std::uint64_t>(generation), static_cast<std::uint64_t>(index), stream}) {
        x = h ^ v;
        h = splitmix64(x);
    }
    return std::mt19937_64(h);
}

Phenotype random_phenotype(std::mt19937_64& rng) {
    std::array<double, 16> g{};
    const auto& r = gene_ranges();
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = std::uniform_real_distribution<double>(r[i].lo, r[i].hi)(rng);
    return Phenotype::from_genes(g);
}

namespace {

const Individual& tournament(const std::vector<Individual>& parents, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, parents.size() - 1);
    const Individual& a = parents[pick(rng)];
    const Individual& b = parents[pick(rng)];
    if (b.rank < a.rank || (b.rank == a.rank && b.crowding > a.crowding)) return b;
    return a;
}

}  // namespace

std::vector<Individual> make_offspring(const std::vector<Individual>& parents, const GAConfig& cfg,
                                       int generation, long first_id) {
    if (parents.empty()) throw InvalidArgument("parent pool is empty");
    const auto& ranges = gene_ranges();
    std::vector<Individual> out(static_cast<std::size_t>(cfg.offspring));
    for (long i = 0; i < cfg.offspring; ++i) {
        auto rng = individual_rng(cfg.seed, generation, i, kStreamVary);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double r = unit(rng);
        std::array<double, 16> g{};
        if (r < cfg.crossover_prob) {
            const auto p1 = tournament(parents, rng).phenotype.genes();
            const auto p2 = tournament(parents, rng).phenotype.genes();
            for (std::size_t k = 0; k < g.size(); ++k) g[k] = p2[k] + unit(rng) * (p1[k] - p2[k]);
        } else if (r < cfg.crossover_prob + cfg.mutation_prob) {
            g = tournament(parents, rng).phenotype.genes();
            for (std::size_t k = 0; k < g.size(); ++k)
                if (unit(rng) < cfg.gene_mutation_prob)
                    g[k] = std::uniform_real_distribution<double>(ranges[k].lo, ranges[k].hi)(rng);
        } else {
            g = tournament(parents, rng).phenotype.genes();
        }
        auto& child = out[static_cast<std::size_t>(i)];
        child.phenotype = Phenotype::from_genes(g);
        child.phenotype.clamp_to_range();
        child.id = first_id + i;
        child.generation = generation;
    }
    return out;
}

FitnessVector evaluate(const Phenotype& ph, const RobotModel& model, const SimState& rest,
                       const EvalHorizons& h, ReadoutWeights* readout) {
    FitnessVector f;
    try {
        const MfprcRun run = run_mfprc(model, rest, ph, h.pipeline, h.closed_steps);
        if (run.closed_a.diverged || run.closed_b.diverged) {
            f.error = "closed loop diverged";
            return f;
        }
        const long w = h.fitness_window;
        f.f1 = locomotion_distance(run.open_a.com, w) + locomotion_distance(run.open_b.com, w);
        f.f2 = behavior_difference(run.open_a.measurements, run.open_b.measurements, w, h.shifts);
        const auto nrmse = [&](const ClosedLoopTrace& tr, Target t) {
            const Series2 d = sample_signal(target_signal(ph, t), tr.rows(), tr.tau, tr.start_time);
            return nrmse_shifted(tr.outputs, d, w, h.shifts).error;
        };
        f.f3a = nrmse(run.closed_a, Target::A);
        f.f3b = nrmse(run.closed_b, Target::B);
        f.f3 = -(f.f3a + f.f3b);
        f.valid = std::isfinite(f.f1) && std::isfinite(f.f2) && std::isfinite(f.f3);
        if (!f.valid) f.error = "non-finite fitness";
        if (f.valid && readout) *readout = run.readout;
    } catch (const Error& e) {
        f = FitnessVector{};
        f.error = e.what();
    }
    return f;
}

namespace {

// Area dominated by points with positive coordinates relative to the origin.
double area_2d(std::vector<std::array<double, 2>> pts) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a[0] > b[0]; });
    double area = 0.0;
    double y_max = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        y_max = std::max(y_max, pts[i][1]);
        const double x_next = i + 1 < pts.size() ? pts[i + 1][0] : 0.0;
        area += (pts[i][0] - x_next) * y_max;
    }
    return area;
}

}  // namespace

double hypervolume(const std::vector<std::array<double, 3>>& points,
                   const std::array<double, 3>& reference) {
    std::vector<std::array<double, 3>> p;
    for (const auto& x : points) {
        const std::array<double, 3> d{x[0] - reference[0], x[1] - reference[1], x[2] - reference[2]};
        if (d[0] > 0.0 && d[1] > 0.0 && d[2] > 0.0 && std::isfinite(d[0] + d[1] + d[2])) p.push_back(d);
    }
    std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a[2] > b[2]; });
    double vol = 0.0;
    std::vector<std::array<double, 2>> slice;
    for (std::size_t i = 0; i < p.size(); ++i) {
        slice.push_back({p[i][0], p[i][1]});
        const double z_next = i + 1 < p.size() ? p[i + 1][2] : 0.0;
        if (p[i][2] > z_next) vol += area_2d(slice) * (p[i][2] - z_next);
    }
    return vol;
}

namespace {

void evaluate_all(std::vector<Individual>& pop, const GAConfig& cfg, const RobotModel& model,
                  const SimState& rest) {
    parallel_for(static_cast<long>(pop.size()), cfg.threads, [&](long i) {
        auto& ind = pop[static_cast<std::size_t>(i)];
        ReadoutWeights w;
        ind.fitness = evaluate(ind.phenotype, model, rest, cfg.horizons, &w);
        if (ind.fitness->valid) ind.readout = w;
    });
}

void update_archive(std::vector<Individual>& archive, const std::vector<Individual>& fresh) {
    for (const auto& ind : fresh)
        if (ind.fitness && ind.fitness->valid) archive.push_back(ind);
    std::vector<Individual> kept;
    for (std::size_t i = 0; i < archive.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < archive.size() && !dominated; ++j)
            dominated = j != i && dominates(*archive[j].fitness, *archive[i].fitness);
        if (!dominated) kept.push_back(archive[i]);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    archive = std::move(kept);
}

GenerationStats stats_of(const EvolutionState& st, const GAConfig& cfg, long evaluations) {
    GenerationStats g;
    g.generation = st.generation;
    g.evaluations = evaluations;
    std::vector<std::array<double, 3>> vals;
    for (const auto& ind : st.population) {
        if (ind.fitness->valid)
            vals.push_back(ind.fitness->objectives());
        else
            ++g.invalid;
    }
    for (int k = 0; k < 3; ++k) {
        if (vals.empty()) {
            g.mean[k] = g.stddev[k] = kNaN;
        } else {
            double s = 0.0;
            for (const auto& v : vals) s += v[k];
            g.mean[k] = s / static_cast<double>(vals.size());
            double q = 0.0;
            for (const auto& v : vals) q += (v[k] - g.mean[k]) * (v[k] - g.mean[k]);
            g.stddev[k] = std::sqrt(q / static_cast<double>(vals.size()));
        }
        g.best[k] = st.archive.empty() ? kNaN : -kInf;
        for (const auto& a : st.archive) g.best[k] = std::max(g.best[k], a.fitness->objectives()[k]);
    }
    std::vector<std::array<double, 3>> pts;
    for (const auto& a : st.archive) pts.push_back(a.fitness->objectives());
    g.hypervolume = hypervolume(pts, cfg.hv_reference);
    return g;
}

}  // namespace

EvolutionState initialize_evolution(const GAConfig& cfg, const RobotModel& model,
                                    const SimState& rest) {
    cfg.validate();
    EvolutionState st;
    st.population.resize(static_cast<std::size_t>(cfg.population));
    for (int i = 0; i < cfg.population; ++i) {
        auto rng = individual_rng(cfg.seed, 0, i, kStreamInit);
        auto& ind = st.population[static_cast<std::size_t>(i)];
        ind.id = i;
        ind.generation = 0;
        ind.phenotype = random_phenotype(rng);
    }
    st.next_id = cfg.population;
    evaluate_all(st.population, cfg, model, rest);
    assign_rank_and_crowding(st.population);
    st.generation = 0;
    update_archive(st.archive, st.population);
    st.history.push_back(stats_of(st, cfg, st.next_id));
    return st;
}

void evolve_generation(EvolutionState& st, const GAConfig& cfg, const RobotModel& model,
                       const SimState& rest) {
    cfg.validate();
    if (st.generation < 0 || st.population.empty())
        throw InvalidArgument("evolution state is not initialised");
    const int gen = st.generation + 1;
    assign_rank_and_crowding(st.population);
    auto offspring = make_offspring(st.population, cfg, gen, st.next_id);
    st.next_id += cfg.offspring;
    evaluate_all(offspring, cfg, model, rest);

    std::vector<Individual> pool = st.population;
    pool.insert(pool.end(), offspring.begin(), offspring.end());
    const auto fronts = nondominated_sort(pool);
    std::vector<Individual> next;
    for (const auto& front : fronts) {
        crowding_distance(pool, front);
        const std::size_t room = static_cast<std::size_t>(cfg.population) - next.size();
        if (front.size() <= room) {
            for (std::size_t i : front) next.push_back(pool[i]);
        } else {
            auto order = front;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return pool[a].crowding > pool[b].crowding;
            });
            for (std::size_t k = 0; k < room; ++k) next.push_back(pool[order[k]]);
        }
        if (next.size() == static_cast<std::size_t>(cfg.population)) break;
    }
    st.population = std::move(next);
    assign_rank_and_crowding(st.population);
    st.generation = gen;
    update_archive(st.archive, offspring);
    st.history.push_back(stats_of(st, cfg, st.next_id));
}

EvolutionState evolve(const GAConfig& cfg, const RobotModel& model, const SimState& rest,
                      std::optional<EvolutionState> resume, const GenerationCallback& on_generation) {
    cfg.validate();
    EvolutionState st;
    if (resume && resume->generation >= 0) {
        st = std::move(*resume);
        if (static_cast<int>(st.population.size()) != cfg.population)
            throw InvalidArgument("checkpoint population size differs from the configuration");
    } else {
        st = initialize_evolution(cfg, model, rest);
        if (on_generation) on_generation(st);
    }
    while (st.generation < cfg.generations) {
        evolve_generation(st, cfg, model, rest);
        if (on_generation) on_generation(st);
    }
    return st;
}

}  // namespace mfprc
