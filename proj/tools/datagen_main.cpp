#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "epr/error.hpp"
#include "epr/synthetic.hpp"

// Writes the bundled three-tier demo table as a CSV so the main binary has
// something realistic to chew on out of the box.
int main(int argc, char** argv) {
    CLI::App app{"eprkit demo data generator"};

    epr::synthetic::DemoOptions options;
    std::string out_path = "synthetic_demo.csv";
    app.add_option("-o,--out", out_path, "output CSV path")->capture_default_str();
    app.add_option("--seed", options.seed, "generator seed")->capture_default_str();
    app.add_option("--rows", options.rows, "number of rows")->capture_default_str();
    app.add_option("--noise", options.noise, "relative noise on generated tiers")
        ->capture_default_str();
    app.add_option("--missing", options.missing_fraction,
                   "fraction of meso/macro cells blanked out")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        const epr::Dataset dataset = epr::synthetic::demo_dataset(options);
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw epr::IoError("cannot write '" + out_path + "'");
        for (std::size_t c = 0; c < dataset.n_vars(); ++c)
            out << (c ? "," : "") << dataset.variables()[c].name;
        out << "\n";
        for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
            for (std::size_t c = 0; c < dataset.n_vars(); ++c) {
                if (c) out << ",";
                if (!dataset.is_missing(r, c))
                    out << epr::format_number(dataset.value(r, c), 12);
            }
            out << "\n";
        }
        std::cout << out_path << ": " << dataset.n_rows() << " rows, "
                  << dataset.n_vars() << " columns\n";
        return 0;
    } catch (const epr::Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        return 1;
    }
}
