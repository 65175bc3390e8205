#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "mfprc/dynamics.hpp"

namespace mfprc {

enum class Target { A, B };

// Two Lissajous target signals. Index 0,1 drive d_A; 2,3 drive d_B:
//   d_k(t) = a_k sin(omega_k t + phi_k) + b_k
struct Phenotype {
    std::array<double, 4> a{};
    std::array<double, 4> omega{};
    std::array<double, 4> phi{};
    std::array<double, 4> b{};

    // Gene order: a1..a4, omega1..omega4, phi1..phi4, b1..b4.
    std::array<double, 16> genes() const;
    static Phenotype from_genes(const std::array<double, 16>& g);

    bool in_range() const;
    void clamp_to_range();

    bool operator==(const Phenotype&) const = default;
};

struct GeneRange {
    double lo;
    double hi;
};

// Per-gene search ranges in gene order.
const std::array<GeneRange, 16>& gene_ranges();

// Named presets; "table1" is the reference phenotype.
Phenotype phenotype_preset(const std::string& name);
std::vector<std::string> phenotype_preset_names();

MotorCommand eval_target(const Phenotype& ph, Target which, double t);

struct InterpolationPoint {
    double p = 0.0;
    double q = 0.0;
};

// Channel 1 blends genes 1 and 3 with weight p, channel 2 blends 2 and 4
// with weight q, parameter by parameter. (0,0) is d_A and (1,1) is d_B.
MotorCommand eval_interpolated(const Phenotype& ph, InterpolationPoint pt, double t);

using Signal = std::function<MotorCommand(double)>;

Signal target_signal(const Phenotype& ph, Target which);
Signal interpolated_signal(const Phenotype& ph, InterpolationPoint pt);

}  // namespace mfprc
