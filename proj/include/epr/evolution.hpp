#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "epr/regression.hpp"
#include "epr/rng.hpp"

namespace epr {

/// The three search objectives, all minimized: sum of squared errors,
/// number of coefficients (terms plus bias), number of distinct inputs.
struct ObjectiveVector {
    double fitness_cost = 0.0;
    std::size_t n_coefficients = 0;
    std::size_t n_inputs = 0;

    friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
};

/// True iff u is no worse on every objective and strictly better on at
/// least one.
bool dominates(const ObjectiveVector& u, const ObjectiveVector& v);

struct GaConfig {
    std::size_t population_size = 100;
    std::size_t generations = 200;
    double crossover_rate = 0.9;
    /// Per-gene mutation probability; defaults to 1/(max_terms * k).
    std::optional<double> mutation_rate;
    std::uint64_t seed = 0;
    bool elitism = true;
};

/// Model-space settings shared by the genetic and exhaustive searches.
struct EprConfig {
    CandidateExponents exponents{{-1.0, -0.5, 0.0, 0.5, 1.0}};
    std::size_t max_terms = 3;
    FitOptions fit;
    /// exhaustive_search refuses spaces with more canonical structures.
    std::size_t exhaustive_cap = 1'000'000;
};

struct FrontEntry {
    FittedModel model;
    ObjectiveVector objectives;
};

/// Non-dominated set, sorted by coefficient count ascending and, within a
/// count, by fitness cost descending, so walking the front reads as the
/// usual performance-versus-complexity curve.
class ParetoFront {
public:
    ParetoFront() = default;
    explicit ParetoFront(std::vector<FrontEntry> entries) : entries_(std::move(entries)) {}

    const std::vector<FrontEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const FrontEntry& operator[](std::size_t i) const { return entries_[i]; }

private:
    std::vector<FrontEntry> entries_;
};

/// Exact dominance filter: keeps precisely the candidates not dominated by
/// any other. Ties on identical objective vectors keep the entry with the
/// lexicographically smallest structure.
ParetoFront non_dominated_filter(std::vector<FrontEntry> candidates);

/// Uniform per-gene crossover with an explicit swap mask (row-major over
/// the exponent grid); exposed so the exchange is testable without drawing
/// randomness.
std::pair<ExponentMatrix, ExponentMatrix> crossover_masked(
    const ExponentMatrix& parent_a, const ExponentMatrix& parent_b,
    const std::vector<bool>& swap_mask);

std::pair<ExponentMatrix, ExponentMatrix> crossover(const ExponentMatrix& parent_a,
                                                    const ExponentMatrix& parent_b,
                                                    Rng& rng);

/// Each entry is independently replaced, with the given probability, by a
/// uniformly drawn different member of the candidate set.
ExponentMatrix mutate(const ExponentMatrix& structure, const CandidateExponents& exponents,
                      Rng& rng, double rate);

/// Multi-objective genetic search over exponent matrices. Deterministic
/// given the seed. Returns the front of fitted, pruned models over every
/// structure evaluated during the run.
ParetoFront evolve(const Dataset& dataset, const CaseView& view, const EprConfig& epr,
                   const GaConfig& ga);

/// Fits every canonical structure with at most max_terms rows over the
/// exponent set; exact oracle for small spaces.
ParetoFront exhaustive_search(const Dataset& dataset, const CaseView& view,
                              const EprConfig& epr);

/// Number of canonical structures (as a double; the count grows fast).
double canonical_structure_count(std::size_t input_count, std::size_t max_terms,
                                 std::size_t exponent_count);

/// Convenience model pick: walks the front from simple to complex and keeps
/// moving while the R-squared gain per added coefficient stays at or above
/// the threshold. Returns an index into the front.
std::size_t knee_selection(const ParetoFront& front, double threshold);

}  // namespace epr
