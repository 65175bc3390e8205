#include "mfprc/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfprc/errors.hpp"

namespace mfprc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_time(double t) {
    if (!(t >= 0.0)) throw InvalidArgument("signal time must be non-negative");
}

double channel(double a, double w, double phi, double b, double t) {
    return a * std::sin(w * t + phi) + b;
}

double blend(double x, double y, double w) { return (1.0 - w) * x + w * y; }

}  // namespace

std::array<double, 16> Phenotype::genes() const {
    std::array<double, 16> g{};
    for (int i = 0; i < 4; ++i) {
        g[i] = a[i];
        g[4 + i] = omega[i];
        g[8 + i] = phi[i];
        g[12 + i] = b[i];
    }
    return g;
}

Phenotype Phenotype::from_genes(const std::array<double, 16>& g) {
    Phenotype ph;
    for (int i = 0; i < 4; ++i) {
        ph.a[i] = g[i];
        ph.omega[i] = g[4 + i];
        ph.phi[i] = g[8 + i];
        ph.b[i] = g[12 + i];
    }
    return ph;
}

const std::array<GeneRange, 16>& gene_ranges() {
    static const auto ranges = [] {
        std::array<GeneRange, 16> r{};
        for (int i = 0; i < 4; ++i) {
            r[i] = {0.01, 0.3};
            r[4 + i] = {kTwoPi, 20.0 * kTwoPi};
            r[8 + i] = {0.0, kTwoPi};
            r[12 + i] = {0.4, 1.0};
        }
        return r;
    }();
    return ranges;
}

bool Phenotype::in_range() const {
    const auto g = genes();
    const auto& r = gene_ranges();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!(g[i] >= r[i].lo && g[i] <= r[i].hi)) return false;
    return true;
}

void Phenotype::clamp_to_range() {
    auto g = genes();
    const auto& r = gene_ranges();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::clamp(g[i], r[i].lo, r[i].hi);
    *this = from_genes(g);
}

Phenotype phenotype_preset(const std::string& name) {
    if (name == "table1") {
        Phenotype ph;
        ph.a = {0.2563, 0.2264, 0.2626, 0.01001};
        ph.omega = {42.73, 45.24, 48.82, 103.7};
        ph.phi = {0.4945, 4.214, 3.666, 0.01529};
        ph.b = {0.4467, 0.6040, 0.9200, 0.7480};
        return ph;
    }
    std::string known;
    for (const auto& n : phenotype_preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw InvalidArgument("unknown phenotype preset '" + name + "' (available: " + known + ")");
}

std::vector<std::string> phenotype_preset_names() { return {"table1"}; }

MotorCommand eval_target(const Phenotype& ph, Target which, double t) {
    check_time(t);
    const int i = which == Target::A ? 0 : 2;
    return {channel(ph.a[i], ph.omega[i], ph.phi[i], ph.b[i], t),
            channel(ph.a[i + 1], ph.omega[i + 1], ph.phi[i + 1], ph.b[i + 1], t)};
}

MotorCommand eval_interpolated(const Phenotype& ph, InterpolationPoint pt, double t) {
    check_time(t);
    const double p = pt.p;
    const double q = pt.q;
    return {channel(blend(ph.a[0], ph.a[2], p), blend(ph.omega[0], ph.omega[2], p),
                    blend(ph.phi[0], ph.phi[2], p), blend(ph.b[0], ph.b[2], p), t),
            channel(blend(ph.a[1], ph.a[3], q), blend(ph.omega[1], ph.omega[3], q),
                    blend(ph.phi[1], ph.phi[3], q), blend(ph.b[1], ph.b[3], q), t)};
}

Signal target_signal(const Phenotype& ph, Target which) {
    return [ph, which](double t) { return eval_target(ph, which, t); };
}

Signal interpolated_signal(const Phenotype& ph, InterpolationPoint pt) {
    return [ph, pt](double t) { return eval_interpolated(ph, pt, t); };
}

}  // namespace mfprc
