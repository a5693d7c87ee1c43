#pragma once

#include <cstdint>

#include "epr/pipeline.hpp"

namespace epr::synthetic {

/// Options for the bundled demo generator: a three-tier table whose meso
/// and macro columns follow power-law generator models of the tier below,
/// with optional relative noise and missing cells.
struct DemoOptions {
    std::uint64_t seed = 1;
    std::size_t rows = 120;
    /// Relative noise applied to every generated (non-micro) value.
    double noise = 0.05;
    /// Probability that a meso or macro cell is blanked out.
    double missing_fraction = 0.0;
};

/// Columns: micro a, b, c; meso A, B, C; macro Ym, Ts, Dm, Sc.
std::vector<VariableSpec> demo_schema();

Dataset demo_dataset(const DemoOptions& options);

/// The exact models the generator evaluates, as plan nodes. On a noise-free
/// table the chained predictions reproduce the generated columns bit for
/// bit. B is independent of the micro tier and is passed through.
std::vector<HierarchyPlan::Node> demo_generator_nodes();
std::vector<std::string> demo_passthrough();

}  // namespace epr::synthetic
