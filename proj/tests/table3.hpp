#pragma once

// Per-case reference scores shared by the unit tests and the acceptance run.

#include "modernize/quality_validator.hpp"

#include <vector>

namespace modernize::table3 {

struct Row {
    const char* name;
    double final;
    const char* grade;
    double confidence;
    DimensionScores dims;
    double judge;
};

inline const std::vector<Row>& table() {
    static const std::vector<Row> rows = {
        {"acoustic_wave_2d", 0.941, "A", 0.750, {1, 1, 1, 1.000, 0.820}, 0.900},
        {"advection_simple", 0.892, "A", 0.900, {1, 1, 1, 1.000, 0.840}, 0.800},
        {"advection_upwind", 0.780, "B", 0.750, {1, 1, 1, 0.950, 0.640}, 0.600},
        {"crank_nicolson_heat", 0.930, "A", 0.750, {1, 1, 1, 1.000, 0.600}, 0.900},
        {"diffusion_3d", 0.883, "A", 0.750, {1, 1, 1, 0.950, 0.700}, 0.800},
        {"heat_1d_simple", 0.842, "A", 0.900, {1, 1, 1, 1.000, 0.840}, 0.700},
        {"heat_equation_2d", 0.842, "A", 0.950, {1, 1, 1, 1.000, 0.840}, 0.700},
        {"laplace_solver", 0.877, "A", 0.750, {1, 1, 1, 0.800, 0.740}, 0.800},
        {"legacy_advection", 0.886, "A", 0.900, {1, 1, 1, 0.750, 0.960}, 0.800},
        {"poisson_jacobi", 0.827, "A", 0.750, {1, 1, 1, 0.800, 0.740}, 0.700},
        {"poisson_simple", 0.877, "A", 0.750, {1, 1, 1, 0.800, 0.740}, 0.800},
        {"wave_1d_simple", 0.729, "B", 0.750, {1, 1, 1, 0.900, 0.680}, 0.500},
        {"wave_equation_1d", 0.729, "B", 0.750, {1, 1, 1, 0.900, 0.680}, 0.500},
    };
    return rows;
}

}  // namespace modernize::table3
