#include <CLI11.hpp>

#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "idsbench/error.hpp"
#include "idsbench/fetch.hpp"
#include "idsbench/harness.hpp"

namespace {

using namespace idsbench;

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw DataError("cannot write '" + path.string() + "'");
}

int run_command(const std::string& config_path, const std::string& scenario, const std::optional<std::string>& dataset,
                const std::optional<std::string>& slice, const std::optional<std::size_t>& row_budget,
                const std::optional<std::uint64_t>& seed, const std::optional<std::string>& out_dir, bool quiet) {
    HarnessConfig config = config_path.empty() ? default_config(parse_dataset_preset(dataset.value_or("kdd99")))
                                               : load_config(config_path);
    if (dataset && parse_dataset_preset(*dataset) != config.preset) {
        throw ConfigError("--dataset " + *dataset + " does not match the config's preset " +
                          std::string(to_string(config.preset)));
    }
    if (row_budget) config.row_budget = *row_budget;
    if (seed) {
        config.seeds = {*seed, *seed, *seed, *seed, *seed};
        config.preprocess.balance_seed = *seed;
    }
    if (out_dir) config.output_dir = *out_dir;

    RunOptions options;
    if (scenario != "all") options.scenarios = {parse_scenario(scenario)};
    options.slice = slice.value_or("");
    options.log = quiet ? nullptr : &std::clog;
    const ScenarioReport report = run_scenarios(config, options);

    const bool both = std::any_of(report.rows.begin(), report.rows.end(), [](const ReportRow& r) { return r.scenario == Scenario::ce1; }) &&
                      std::any_of(report.rows.begin(), report.rows.end(), [](const ReportRow& r) { return r.scenario == Scenario::ce2; });
    if (both) {
        const Comparison cmp = compare_scenarios(report);
        write_file(config.output_dir / "comparison.csv", comparison_csv(cmp));
        write_file(config.output_dir / "comparison.md", comparison_markdown(cmp));
    }
    std::cout << "wrote " << report.rows.size() << " report rows to " << config.output_dir.string() << '\n';
    return 0;
}

int compare_command(const std::string& in_dir) {
    const ScenarioReport report = read_report(in_dir);
    const Comparison cmp = compare_scenarios(report);
    write_file(std::filesystem::path(in_dir) / "comparison.csv", comparison_csv(cmp));
    write_file(std::filesystem::path(in_dir) / "comparison.md", comparison_markdown(cmp));
    std::cout << comparison_markdown(cmp);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intrusion-detection pipeline benchmark"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run CE1/CE2/CE3 scenarios and write reports");
    std::string config_path;
    std::string scenario = "all";
    std::optional<std::string> dataset;
    std::optional<std::string> slice;
    std::optional<std::size_t> row_budget;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool quiet = false;
    run->add_option("--config", config_path, "JSON config file");
    run->add_option("--scenario", scenario, "ce1, ce2, ce3 or all")->check(CLI::IsMember({"ce1", "ce2", "ce3", "all"}, CLI::ignore_case));
    run->add_option("--dataset", dataset, "cicids2018, kdd99 or custom");
    run->add_option("--slice", slice, "Run a single slice");
    run->add_option("--row-budget", row_budget, "Rows kept per slice (0 = all)");
    run->add_option("--seed", seed, "Overrides every seed");
    run->add_option("--out", out_dir, "Output directory");
    run->add_flag("--quiet", quiet, "No progress log");

    auto* compare = app.add_subcommand("compare", "Compare CE1/CE2/CE3 rows of a report directory");
    std::string in_dir;
    compare->add_option("--in", in_dir, "Directory holding report.csv and timings.csv")->required();

    auto* fetch = app.add_subcommand("fetch-data", "Download and verify a dataset");
    std::string fetch_dataset_name = "kdd99";
    bool verify = false;
    std::optional<std::string> from;
    std::optional<std::string> data_dir;
    fetch->add_option("--dataset", fetch_dataset_name, "cicids2018 or kdd99");
    fetch->add_flag("--verify", verify, "Check sha256 checksums");
    fetch->add_option("--from", from, "Install from a local archive instead of downloading");
    fetch->add_option("--data-dir", data_dir, "Target directory (default: IDSBENCH_DATA_DIR or ./data)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::config_error);
    }

    try {
        if (*run) return run_command(config_path, scenario, dataset, slice, row_budget, seed, out_dir, quiet);
        if (*compare) return compare_command(in_dir);
        if (*fetch) {
            FetchOptions fo;
            fo.data_dir = data_dir ? std::filesystem::path(*data_dir) : default_data_dir();
            fo.verify = verify;
            if (from) fo.from = *from;
            fo.log = &std::clog;
            fetch_dataset(parse_dataset_preset(fetch_dataset_name), fo);
            return 0;
        }
    } catch (const IdsError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::pipeline_error);
    }
    return 0;
}
