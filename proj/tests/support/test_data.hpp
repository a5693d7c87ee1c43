#pragma once

// Shared helpers for building in-memory datasets and views in tests.

#include <map>
#include <string>
#include <vector>

#include "epr/dataset.hpp"
#include "epr/rng.hpp"

namespace testsupport {

inline constexpr double NA = std::numeric_limits<double>::quiet_NaN();

inline std::vector<epr::VariableSpec> specs(const std::vector<std::string>& names,
                                            epr::Tier tier = epr::Tier::micro) {
    std::vector<epr::VariableSpec> out;
    for (const auto& name : names) out.push_back({name, tier, "", ""});
    return out;
}

inline epr::Dataset make_dataset(const std::vector<std::string>& names,
                                 std::vector<std::vector<double>> rows,
                                 epr::Tier tier = epr::Tier::micro) {
    return epr::Dataset(specs(names, tier), std::move(rows), "test");
}

/// Dataset with one target column computed from positive random inputs by
/// a caller-supplied generator, plus optional gaussian noise.
template <typename Generator>
epr::Dataset generated_dataset(const std::vector<std::string>& input_names,
                               const std::string& target_name, std::size_t rows,
                               std::uint64_t seed, double noise_sd, Generator&& generator,
                               const std::vector<std::pair<double, double>>& ranges) {
    epr::Rng rng(seed);
    std::vector<std::string> names = input_names;
    names.push_back(target_name);
    std::vector<std::vector<double>> data;
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> row;
        std::map<std::string, double> record;
        for (std::size_t j = 0; j < input_names.size(); ++j) {
            const double v = rng.uniform(ranges[j].first, ranges[j].second);
            row.push_back(v);
            record[input_names[j]] = v;
        }
        double y = generator(record);
        if (noise_sd > 0.0) y += noise_sd * rng.next_normal();
        row.push_back(y);
        data.push_back(std::move(row));
    }
    return make_dataset(names, std::move(data));
}

}  // namespace testsupport
