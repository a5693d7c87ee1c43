#include "epr/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "epr/error.hpp"

namespace epr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Evaluation {
    bool evaluable = false;
    std::optional<FittedModel> model;
    ObjectiveVector objectives;
};

ObjectiveVector objectives_of(const FittedModel& model) {
    return ObjectiveVector{model.fit().sse, model.coefficient_count(),
                           model.structure().distinct_inputs_used()};
}

/// Shared evaluation path for the genetic and exhaustive searches: fit the
/// canonical structure, prune insignificant terms, derive objectives.
/// Structures that cannot be evaluated on the training rows (or that have
/// more coefficients than rows) get an infinite-cost surrogate so the
/// search stays total.
class Evaluator {
public:
    Evaluator(const Dataset& dataset, const CaseView& view, const EprConfig& epr)
        : dataset_(dataset), view_(view), epr_(epr) {}

    const Evaluation& evaluate(const ExponentMatrix& genome) {
        return evaluate_canonical(canonicalize(genome));
    }

    const Evaluation& evaluate_canonical(const ExponentMatrix& canonical) {
        std::vector<double> key;
        key.reserve(canonical.term_count() * canonical.input_count());
        for (const auto& row : canonical.rows())
            key.insert(key.end(), row.begin(), row.end());
        const auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        Evaluation eval;
        const std::size_t p =
            canonical.term_count() + (epr_.fit.bias ? 1 : 0);
        if (p > view_.row_indices.size()) {
            eval.objectives = ObjectiveVector{kInf, p, canonical.distinct_inputs_used()};
        } else {
            try {
                FittedModel model = prune_insignificant(
                    fit_structure(canonical, view_, dataset_, epr_.fit), view_, dataset_,
                    epr_.fit);
                eval.objectives = objectives_of(model);
                eval.model = std::move(model);
                eval.evaluable = true;
            } catch (const DomainError&) {
                eval.objectives = ObjectiveVector{kInf, p, canonical.distinct_inputs_used()};
            }
        }
        return cache_.emplace(std::move(key), std::move(eval)).first->second;
    }

    /// Every evaluable model seen during the run, in canonical key order.
    std::vector<FrontEntry> archive_entries() const {
        std::vector<FrontEntry> entries;
        for (const auto& [key, eval] : cache_)
            if (eval.evaluable) entries.push_back({*eval.model, eval.objectives});
        return entries;
    }

private:
    const Dataset& dataset_;
    const CaseView& view_;
    const EprConfig& epr_;
    std::map<std::vector<double>, Evaluation> cache_;
};

bool lex_less(const ExponentMatrix& a, const ExponentMatrix& b) { return a < b; }

/// Drops entries whose fitness is not below the best fitness reached at
/// any strictly smaller coefficient count, so the front read in order is a
/// monotone performance-versus-complexity curve. Input must already be
/// sorted by (n_coefficients asc, fitness desc).
std::vector<FrontEntry> monotone_trim(std::vector<FrontEntry> sorted) {
    std::vector<FrontEntry> kept;
    double best_lower = kInf;   // best fitness over kept lower-complexity entries
    double group_best = kInf;
    std::size_t group_nc = 0;
    bool first = true;
    for (auto& entry : sorted) {
        if (first || entry.objectives.n_coefficients != group_nc) {
            if (!first) best_lower = std::min(best_lower, group_best);
            group_nc = entry.objectives.n_coefficients;
            group_best = kInf;
            first = false;
        }
        if (entry.objectives.fitness_cost <= best_lower) {
            group_best = std::min(group_best, entry.objectives.fitness_cost);
            kept.push_back(std::move(entry));
        }
    }
    return kept;
}

ParetoFront front_from_entries(std::vector<FrontEntry> entries) {
    auto front = non_dominated_filter(std::move(entries));
    return ParetoFront(monotone_trim(front.entries()));
}

void validate(const GaConfig& ga) {
    if (ga.population_size < 2) throw ConfigError("population size must be at least 2");
    if (ga.generations < 1) throw ConfigError("generation count must be at least 1");
    if (!(ga.crossover_rate >= 0.0 && ga.crossover_rate <= 1.0))
        throw ConfigError("crossover rate must lie in [0, 1]");
    if (ga.mutation_rate && !(*ga.mutation_rate >= 0.0 && *ga.mutation_rate <= 1.0))
        throw ConfigError("mutation rate must lie in [0, 1]");
}

struct RankInfo {
    std::size_t rank = 0;
    double crowding = 0.0;
};

/// Fast non-dominated sorting plus crowding distance. Individuals with a
/// non-finite fitness surrogate all land in one trailing rank.
std::vector<RankInfo> rank_population(const std::vector<const Evaluation*>& evals) {
    const std::size_t n = evals.size();
    std::vector<RankInfo> info(n);
    std::vector<std::size_t> finite;
    for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(evals[i]->objectives.fitness_cost)) finite.push_back(i);

    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> domination_count(n, 0);
    for (std::size_t a = 0; a < finite.size(); ++a)
        for (std::size_t b = a + 1; b < finite.size(); ++b) {
            const std::size_t i = finite[a], j = finite[b];
            if (dominates(evals[i]->objectives, evals[j]->objectives)) {
                dominated[i].push_back(j);
                ++domination_count[j];
            } else if (dominates(evals[j]->objectives, evals[i]->objectives)) {
                dominated[j].push_back(i);
                ++domination_count[i];
            }
        }

    std::vector<std::size_t> current;
    for (const std::size_t i : finite)
        if (domination_count[i] == 0) current.push_back(i);
    std::size_t rank = 0;
    std::size_t assigned = 0;
    std::vector<std::vector<std::size_t>> fronts;
    while (!current.empty()) {
        fronts.push_back(current);
        std::vector<std::size_t> next;
        for (const std::size_t i : current) {
            info[i].rank = rank;
            ++assigned;
            for (const std::size_t j : dominated[i])
                if (--domination_count[j] == 0) next.push_back(j);
        }
        current = std::move(next);
        ++rank;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(evals[i]->objectives.fitness_cost)) info[i].rank = rank;
    (void)assigned;

    // Crowding distance per rank over the three objectives.
    for (const auto& members : fronts) {
        if (members.size() <= 2) {
            for (const std::size_t i : members) info[i].crowding = kInf;
            continue;
        }
        const auto objective = [&](std::size_t i, int o) {
            const auto& v = evals[i]->objectives;
            return o == 0 ? v.fitness_cost
                          : o == 1 ? static_cast<double>(v.n_coefficients)
                                   : static_cast<double>(v.n_inputs);
        };
        for (int o = 0; o < 3; ++o) {
            std::vector<std::size_t> order = members;
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) {
                                 return objective(a, o) < objective(b, o);
                             });
            const double lo = objective(order.front(), o);
            const double hi = objective(order.back(), o);
            info[order.front()].crowding = kInf;
            info[order.back()].crowding = kInf;
            if (hi <= lo) continue;
            for (std::size_t k = 1; k + 1 < order.size(); ++k)
                info[order[k]].crowding +=
                    (objective(order[k + 1], o) - objective(order[k - 1], o)) / (hi - lo);
        }
    }
    return info;
}

}  // namespace

bool dominates(const ObjectiveVector& u, const ObjectiveVector& v) {
    if (u.fitness_cost > v.fitness_cost || u.n_coefficients > v.n_coefficients ||
        u.n_inputs > v.n_inputs)
        return false;
    return u.fitness_cost < v.fitness_cost || u.n_coefficients < v.n_coefficients ||
           u.n_inputs < v.n_inputs;
}

ParetoFront non_dominated_filter(std::vector<FrontEntry> candidates) {
    std::vector<FrontEntry> finite;
    for (auto& c : candidates)
        if (std::isfinite(c.objectives.fitness_cost)) finite.push_back(std::move(c));

    std::vector<FrontEntry> kept;
    for (std::size_t i = 0; i < finite.size(); ++i) {
        bool is_dominated = false;
        for (std::size_t j = 0; j < finite.size(); ++j)
            if (j != i && dominates(finite[j].objectives, finite[i].objectives)) {
                is_dominated = true;
                break;
            }
        if (!is_dominated) kept.push_back(std::move(finite[i]));
    }

    // Identical objective vectors: keep the lexicographically smallest
    // structure only.
    std::stable_sort(kept.begin(), kept.end(), [](const FrontEntry& a, const FrontEntry& b) {
        if (a.objectives.n_coefficients != b.objectives.n_coefficients)
            return a.objectives.n_coefficients < b.objectives.n_coefficients;
        if (a.objectives.fitness_cost != b.objectives.fitness_cost)
            return a.objectives.fitness_cost > b.objectives.fitness_cost;
        if (a.objectives.n_inputs != b.objectives.n_inputs)
            return a.objectives.n_inputs < b.objectives.n_inputs;
        return lex_less(a.model.structure(), b.model.structure());
    });
    std::vector<FrontEntry> unique;
    for (auto& entry : kept) {
        if (!unique.empty() && unique.back().objectives == entry.objectives) continue;
        unique.push_back(std::move(entry));
    }
    return ParetoFront(std::move(unique));
}

std::pair<ExponentMatrix, ExponentMatrix> crossover_masked(
    const ExponentMatrix& parent_a, const ExponentMatrix& parent_b,
    const std::vector<bool>& swap_mask) {
    if (parent_a.term_count() != parent_b.term_count() ||
        parent_a.input_count() != parent_b.input_count())
        throw std::invalid_argument("crossover parents must share dimensions");
    const std::size_t m = parent_a.term_count();
    const std::size_t k = parent_a.input_count();
    if (swap_mask.size() != m * k)
        throw std::invalid_argument("swap mask size does not match the genome");

    std::vector<std::vector<double>> a = parent_a.rows();
    std::vector<std::vector<double>> b = parent_b.rows();
    for (std::size_t t = 0; t < m; ++t)
        for (std::size_t j = 0; j < k; ++j)
            if (swap_mask[t * k + j]) std::swap(a[t][j], b[t][j]);
    return {ExponentMatrix(std::move(a), parent_a.variable_names()),
            ExponentMatrix(std::move(b), parent_b.variable_names())};
}

std::pair<ExponentMatrix, ExponentMatrix> crossover(const ExponentMatrix& parent_a,
                                                    const ExponentMatrix& parent_b,
                                                    Rng& rng) {
    std::vector<bool> mask(parent_a.term_count() * parent_a.input_count());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.bernoulli(0.5);
    return crossover_masked(parent_a, parent_b, mask);
}

ExponentMatrix mutate(const ExponentMatrix& structure, const CandidateExponents& exponents,
                      Rng& rng, double rate) {
    if (!(rate >= 0.0 && rate <= 1.0))
        throw std::invalid_argument("mutation rate must lie in [0, 1]");
    std::vector<std::vector<double>> rows = structure.rows();
    if (exponents.size() < 2) return structure;
    for (auto& row : rows)
        for (auto& cell : row) {
            if (!rng.bernoulli(rate)) continue;
            const std::size_t current = exponents.index_of(cell);
            std::size_t pick = rng.next_below(exponents.size() - 1);
            if (pick >= current) ++pick;
            cell = exponents.values()[pick];
        }
    return ExponentMatrix(std::move(rows), structure.variable_names());
}

ParetoFront evolve(const Dataset& dataset, const CaseView& view, const EprConfig& epr,
                   const GaConfig& ga) {
    validate(ga);
    if (epr.max_terms < 1) throw ConfigError("max_terms must be at least 1");
    const std::size_t k = view.inputs.size();
    const std::size_t max_coefficients = epr.max_terms + (epr.fit.bias ? 1 : 0);
    if (view.row_indices.size() <= max_coefficients)
        throw SearchError("underdetermined search: view has " +
                          std::to_string(view.row_indices.size()) +
                          " rows but models use up to " +
                          std::to_string(max_coefficients) + " coefficients");

    Evaluator evaluator(dataset, view, epr);
    const double mutation_rate =
        ga.mutation_rate.value_or(1.0 / static_cast<double>(epr.max_terms * k));

    const auto make_random = [&](Rng& rng) {
        std::vector<std::vector<double>> rows(epr.max_terms, std::vector<double>(k));
        for (auto& row : rows)
            for (auto& cell : row)
                cell = epr.exponents.values()[rng.next_below(epr.exponents.size())];
        return ExponentMatrix(std::move(rows), view.inputs);
    };

    std::vector<ExponentMatrix> population;
    population.reserve(ga.population_size);
    // The all-zero genome keeps the bias-only model in play from the start.
    population.emplace_back(
        std::vector<std::vector<double>>(epr.max_terms, std::vector<double>(k, 0.0)),
        view.inputs);
    Rng init_rng(derive_seed(ga.seed, 0, 0));
    while (population.size() < ga.population_size) population.push_back(make_random(init_rng));

    std::vector<const Evaluation*> evals;
    for (const auto& genome : population) evals.push_back(&evaluator.evaluate(genome));

    for (std::size_t gen = 1; gen <= ga.generations; ++gen) {
        const std::vector<RankInfo> info = rank_population(evals);
        const auto better = [&](std::size_t a, std::size_t b) {
            if (info[a].rank != info[b].rank) return info[a].rank < info[b].rank;
            if (info[a].crowding != info[b].crowding)
                return info[a].crowding > info[b].crowding;
            return lex_less(population[a], population[b]);
        };
        const auto tournament = [&](Rng& rng) {
            const std::size_t a = rng.next_below(population.size());
            const std::size_t b = rng.next_below(population.size());
            return better(a, b) ? a : b;
        };

        std::vector<ExponentMatrix> children;
        children.reserve(ga.population_size);
        std::uint64_t pair = 0;
        while (children.size() < ga.population_size) {
            Rng rng(derive_seed(ga.seed, gen, pair++));
            const std::size_t pa = tournament(rng);
            const std::size_t pb = tournament(rng);
            ExponentMatrix child_a = population[pa];
            ExponentMatrix child_b = population[pb];
            if (rng.bernoulli(ga.crossover_rate))
                std::tie(child_a, child_b) = crossover(child_a, child_b, rng);
            child_a = mutate(child_a, epr.exponents, rng, mutation_rate);
            child_b = mutate(child_b, epr.exponents, rng, mutation_rate);
            children.push_back(std::move(child_a));
            if (children.size() < ga.population_size) children.push_back(std::move(child_b));
        }

        std::vector<const Evaluation*> child_evals;
        for (const auto& genome : children) child_evals.push_back(&evaluator.evaluate(genome));

        if (ga.elitism) {
            std::vector<ExponentMatrix> combined = population;
            combined.insert(combined.end(), children.begin(), children.end());
            std::vector<const Evaluation*> combined_evals = evals;
            combined_evals.insert(combined_evals.end(), child_evals.begin(),
                                  child_evals.end());
            const std::vector<RankInfo> combined_info = rank_population(combined_evals);
            std::vector<std::size_t> order(combined.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (combined_info[a].rank != combined_info[b].rank)
                    return combined_info[a].rank < combined_info[b].rank;
                if (combined_info[a].crowding != combined_info[b].crowding)
                    return combined_info[a].crowding > combined_info[b].crowding;
                return lex_less(combined[a], combined[b]);
            });
            std::vector<ExponentMatrix> next;
            std::vector<const Evaluation*> next_evals;
            for (std::size_t i = 0; i < ga.population_size; ++i) {
                next.push_back(std::move(combined[order[i]]));
                next_evals.push_back(combined_evals[order[i]]);
            }
            population = std::move(next);
            evals = std::move(next_evals);
        } else {
            population = std::move(children);
            evals = std::move(child_evals);
        }
    }

    ParetoFront front = front_from_entries(evaluator.archive_entries());
    if (front.empty())
        throw SearchError("no structure was evaluable on the training rows");
    return front;
}

double canonical_structure_count(std::size_t input_count, std::size_t max_terms,
                                 std::size_t exponent_count) {
    double nonzero_rows = 1.0;
    for (std::size_t j = 0; j < input_count; ++j)
        nonzero_rows *= static_cast<double>(exponent_count);
    nonzero_rows -= 1.0;

    double total = 1.0;  // the empty (bias-only) structure
    double choose = 1.0;
    for (std::size_t t = 1; t <= max_terms; ++t) {
        choose *= (nonzero_rows - static_cast<double>(t) + 1.0) / static_cast<double>(t);
        if (choose < 0.0) break;  // fewer distinct rows than terms
        total += choose;
    }
    return total;
}

ParetoFront exhaustive_search(const Dataset& dataset, const CaseView& view,
                              const EprConfig& epr) {
    if (epr.max_terms < 1) throw ConfigError("max_terms must be at least 1");
    const std::size_t k = view.inputs.size();

    const double space =
        canonical_structure_count(k, epr.max_terms, epr.exponents.size());
    if (space > static_cast<double>(epr.exhaustive_cap))
        throw SearchError("structure space holds " + format_number(space, 6) +
                          " canonical structures, above the cap of " +
                          std::to_string(epr.exhaustive_cap));

    // All nonzero exponent rows in lexicographic order.
    std::vector<std::vector<double>> all_rows;
    std::vector<double> row(k, 0.0);
    std::vector<std::size_t> odometer(k, 0);
    while (true) {
        bool all_zero = true;
        for (std::size_t j = 0; j < k; ++j) {
            row[j] = epr.exponents.values()[odometer[j]];
            if (row[j] != 0.0) all_zero = false;
        }
        if (!all_zero) all_rows.push_back(row);
        std::size_t pos = k;
        while (pos > 0) {
            if (++odometer[pos - 1] < epr.exponents.size()) break;
            odometer[pos - 1] = 0;
            --pos;
        }
        if (pos == 0) break;
    }
    std::sort(all_rows.begin(), all_rows.end());

    Evaluator evaluator(dataset, view, epr);
    evaluator.evaluate_canonical(ExponentMatrix({}, view.inputs));

    const std::size_t row_count = all_rows.size();
    const std::size_t terms = std::min(epr.max_terms, row_count);
    for (std::size_t m = 1; m <= terms; ++m) {
        std::vector<std::size_t> pick(m);
        for (std::size_t i = 0; i < m; ++i) pick[i] = i;
        while (true) {
            std::vector<std::vector<double>> rows;
            rows.reserve(m);
            for (const std::size_t i : pick) rows.push_back(all_rows[i]);
            evaluator.evaluate_canonical(ExponentMatrix(std::move(rows), view.inputs));

            std::size_t pos = m;
            while (pos > 0 && pick[pos - 1] == row_count - (m - pos) - 1) --pos;
            if (pos == 0) break;
            ++pick[pos - 1];
            for (std::size_t i = pos; i < m; ++i) pick[i] = pick[i - 1] + 1;
        }
    }

    ParetoFront front = front_from_entries(evaluator.archive_entries());
    if (front.empty())
        throw SearchError("no structure was evaluable on the training rows");
    return front;
}

std::size_t knee_selection(const ParetoFront& front, double threshold) {
    if (front.empty()) throw SearchError("cannot select from an empty front");
    const auto r2 = [&](std::size_t i) {
        const double value = front[i].model.fit().r_squared;
        return std::isfinite(value) ? value : -1.0;
    };
    std::size_t current = 0;
    while (true) {
        double best_gain = 0.0;
        std::size_t best = current;
        for (std::size_t j = current + 1; j < front.size(); ++j) {
            const double extra_coeffs = std::max<double>(
                1.0, static_cast<double>(front[j].objectives.n_coefficients) -
                         static_cast<double>(front[current].objectives.n_coefficients));
            const double gain = (r2(j) - r2(current)) / extra_coeffs;
            if (gain > best_gain) {
                best_gain = gain;
                best = j;
            }
        }
        if (best == current || best_gain < threshold) break;
        current = best;
    }
    return current;
}

}  // namespace epr
