#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace modernize {

enum class PdeClass { parabolic, hyperbolic, elliptic, unknown };
enum class Scheme { central, upwind, crank_nicolson, jacobi, ftcs, unknown };
enum class TimeStepping { explicit_, implicit, none };
enum class BoundaryCondition { dirichlet, neumann, periodic, absorbing, unknown };

std::string to_string(PdeClass v);
std::string to_string(Scheme v);
std::string to_string(TimeStepping v);
std::string to_string(BoundaryCondition v);

struct FortranAnalysis {
    int dimensions = 0;  // 0 when no stencil update was found
    PdeClass pde_class = PdeClass::unknown;
    Scheme scheme = Scheme::unknown;
    TimeStepping time_stepping = TimeStepping::none;
    std::set<BoundaryCondition> boundary_conditions{BoundaryCondition::unknown};
    int stencil_radius = 0;
    double confidence = 0.0;
    double complexity = 0.0;
    std::vector<std::pair<std::string, int>> detected_arrays;  // (name, rank), declaration order
    std::size_t detected_loops = 0;
    int max_loop_depth = 0;
    std::vector<std::pair<std::string, std::string>> parameters;  // named constants and literal scalars
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

inline constexpr int kExpectedSignatures = 6;

/// Lexical scan of declarations, DO nests, index offsets and boundary
/// assignments. Throws EmptySource. Text without Fortran keywords yields
/// unknowns, confidence 0 and a warning.
FortranAnalysis analyze(const std::string& source);

enum class QueryTier { primary, secondary, concept_ };
enum class Strategy { comprehensive, fast, deep, hybrid };

std::string to_string(QueryTier v);
std::string to_string(Strategy v);
Strategy strategy_from_string(const std::string& s);  // throws UnknownStrategy
Strategy strategy_for(QueryTier tier);

struct QuerySpec {
    QueryTier tier;
    Strategy strategy;
    std::string text;
    std::set<std::string> keywords;
};

/// 1-2 primary, 2-3 secondary (1 when nothing is known), 1-2 concept queries.
std::vector<QuerySpec> generate_queries(const FortranAnalysis& a);

/// "heat", "wave", "advection", "Laplace" or empty, from class and scheme.
std::string pde_name(const FortranAnalysis& a);

}  // namespace modernize
