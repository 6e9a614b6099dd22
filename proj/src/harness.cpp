#include "idsbench/harness.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "idsbench/error.hpp"
#include "idsbench/util.hpp"

namespace idsbench {

namespace {

using Json = nlohmann::ordered_json;

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string file_stem(std::string_view name) {
    std::string out;
    for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

// Re-raises an error with the slice/scenario/stage it came from, keeping its category.
template <typename F>
auto with_context(const std::string& where, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const EmptyDatasetError& e) {
        throw EmptyDatasetError(where + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const PipelineError& e) {
        throw PipelineError(where + ": " + e.what());
    } catch (const ContractViolation& e) {
        throw PipelineError(where + ": " + e.what());
    }
}

HyperParams overlay(HyperParams base, const HyperParams& top) {
    for (const auto& [k, v] : top.entries()) base.set(k, v);
    return base;
}

// ---- config parsing -------------------------------------------------------

void reject_unknown(const Json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

std::vector<std::string> string_list(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) throw ConfigError(where + ": expected an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::uint64_t seed_value(const Json& j, const std::string& where) {
    if (!j.is_number_unsigned()) throw ConfigError(where + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

double number(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

// Grid and default values: numbers, or null / "unlimited" for an unlimited depth (0).
double param_value(const Json& j, const std::string& where) {
    if (j.is_null()) return 0.0;
    if (j.is_string() && j.get<std::string>() == "unlimited") return 0.0;
    if (j.is_boolean()) return j.get<bool>() ? 1.0 : 0.0;
    return number(j, where);
}

void parse_dataset(const Json& j, HarnessConfig& cfg, const std::filesystem::path& base_dir) {
    reject_unknown(j, {"preset", "data_dir", "row_budget", "slices", "schema"}, "dataset");
    if (j.contains("preset")) {
        cfg = [&] {
            HarnessConfig fresh = default_config(parse_dataset_preset(j.at("preset").get<std::string>()));
            fresh.data_dir = cfg.data_dir;
            return fresh;
        }();
    }
    if (j.contains("data_dir")) {
        std::filesystem::path p = j.at("data_dir").get<std::string>();
        cfg.data_dir = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }
    if (j.contains("row_budget")) cfg.row_budget = static_cast<std::size_t>(seed_value(j.at("row_budget"), "dataset.row_budget"));
    if (j.contains("schema")) {
        const Json& s = j.at("schema");
        reject_unknown(s,
                       {"columns", "label_column", "benign_tokens", "timestamp_columns", "timestamp_format",
                        "drop_columns", "drop_constant_columns"},
                       "dataset.schema");
        Schema& schema = cfg.schema;
        if (s.contains("columns")) schema.column_names = string_list(s.at("columns"), "dataset.schema.columns");
        if (s.contains("label_column")) schema.label_column = s.at("label_column").get<std::string>();
        if (s.contains("benign_tokens")) {
            const auto tokens = string_list(s.at("benign_tokens"), "dataset.schema.benign_tokens");
            schema.benign_tokens = {tokens.begin(), tokens.end()};
        }
        if (s.contains("timestamp_columns")) {
            schema.timestamp_columns = string_list(s.at("timestamp_columns"), "dataset.schema.timestamp_columns");
        }
        if (s.contains("timestamp_format")) {
            schema.timestamp_format = parse_timestamp_format(s.at("timestamp_format").get<std::string>());
        }
        if (s.contains("drop_columns")) schema.drop_columns = string_list(s.at("drop_columns"), "dataset.schema.drop_columns");
        if (s.contains("drop_constant_columns")) schema.drop_constant_columns = s.at("drop_constant_columns").get<bool>();
    }
    if (j.contains("slices")) {
        cfg.slices.clear();
        for (const auto& sj : j.at("slices")) {
            reject_unknown(sj, {"name", "files", "attack_labels", "balance"}, "dataset.slices[]");
            SliceSpec slice;
            slice.name = sj.at("name").get<std::string>();
            slice.files = string_list(sj.at("files"), "dataset.slices[].files");
            if (sj.contains("attack_labels")) {
                const auto labels = string_list(sj.at("attack_labels"), "dataset.slices[].attack_labels");
                slice.attack_labels = {labels.begin(), labels.end()};
            }
            slice.balance = sj.value("balance", true);
            cfg.slices.push_back(std::move(slice));
        }
    }
}

void parse_preprocess(const Json& j, PreprocessConfig& p) {
    reject_unknown(j, {"zscore_threshold", "corr_threshold", "scale_min", "scale_max", "balance", "fit_scope"},
                   "preprocess");
    if (j.contains("zscore_threshold")) p.zscore_threshold = number(j.at("zscore_threshold"), "preprocess.zscore_threshold");
    if (j.contains("corr_threshold")) p.corr_threshold = number(j.at("corr_threshold"), "preprocess.corr_threshold");
    if (j.contains("scale_min")) p.scale_min = number(j.at("scale_min"), "preprocess.scale_min");
    if (j.contains("scale_max")) p.scale_max = number(j.at("scale_max"), "preprocess.scale_max");
    if (j.contains("balance")) p.balance = j.at("balance").get<bool>();
    if (j.contains("fit_scope")) p.fit_scope = parse_fit_scope(j.at("fit_scope").get<std::string>());
}

}  // namespace

// ---- scenarios, slices, config --------------------------------------------

std::string_view to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::ce1: return "CE1";
        case Scenario::ce2: return "CE2";
        case Scenario::ce3: return "CE3";
    }
    return "?";
}

Scenario parse_scenario(std::string_view name) {
    const std::string n = lower(name);
    if (n == "ce1") return Scenario::ce1;
    if (n == "ce2") return Scenario::ce2;
    if (n == "ce3") return Scenario::ce3;
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

bool uses_preprocessing(Scenario scenario) { return scenario != Scenario::ce1; }
bool uses_grid_search(Scenario scenario) { return scenario == Scenario::ce3; }

std::vector<SliceSpec> cicids2018_slices() {
    auto day = [](const char* d) { return std::string(d) + "-2018_TrafficForML_CICFlowMeter.csv"; };
    return {
        {"BotNet", {day("Friday-02-03")}, {"Bot"}, true},
        {"DDoS HOIC", {day("Wednesday-21-02")}, {"DDOS attack-HOIC"}, true},
        {"DDoS LOIC HTTP", {day("Tuesday-20-02")}, {"DDoS attacks-LOIC-HTTP"}, true},
        {"DDoS LOIC UDP", {day("Wednesday-21-02")}, {"DDOS attack-LOIC-UDP"}, false},
        {"DoS GoldenEye", {day("Thursday-15-02")}, {"DoS attacks-GoldenEye"}, true},
        {"DoS Hulk", {day("Friday-16-02")}, {"DoS attacks-Hulk"}, true},
        {"DoS SlowHTTPTest", {day("Friday-16-02")}, {"DoS attacks-SlowHTTPTest"}, true},
        {"DoS Slowloris", {day("Thursday-15-02")}, {"DoS attacks-Slowloris"}, false},
        {"FTP BruteForce", {day("Wednesday-14-02")}, {"FTP-BruteForce"}, true},
        {"Infilteration", {day("Wednesday-28-02"), day("Thursday-01-03")}, {"Infilteration"}, true},
        {"SSH BruteForce", {day("Wednesday-14-02")}, {"SSH-Bruteforce"}, true},
        {"BruteForce Web XSS",
         {day("Thursday-22-02"), day("Friday-23-02")},
         {"Brute Force -Web", "Brute Force -XSS"},
         true},
    };
}

SliceSpec kdd99_slice() { return {"all", {kKddFileName}, {}, false}; }

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("IDSBENCH_DATA_DIR"); env != nullptr && *env != '\0') return env;
    return "data";
}

HarnessConfig default_config(DatasetPreset preset) {
    HarnessConfig cfg;
    cfg.preset = preset;
    cfg.schema = preset_schema(preset);
    cfg.data_dir = default_data_dir();
    if (preset == DatasetPreset::kdd99) cfg.slices = {kdd99_slice()};
    if (preset == DatasetPreset::cicids2018) cfg.slices = cicids2018_slices();
    cfg.algorithms = all_algorithms();
    for (Algorithm a : all_algorithms()) cfg.grids[a] = default_grid(a);
    return cfg;
}

void HarnessConfig::validate() const {
    schema.validate();
    preprocess.validate();
    if (slices.empty()) throw ConfigError("config: no dataset slices");
    std::set<std::string> names;
    for (const auto& s : slices) {
        if (s.files.empty()) throw ConfigError("config: slice '" + s.name + "' lists no files");
        if (!names.insert(s.name).second) throw ConfigError("config: duplicate slice '" + s.name + "'");
    }
    if (algorithms.empty()) throw ConfigError("config: no algorithms selected");
    if (cv_folds < 2) throw ConfigError("config: cv.folds must be >= 2");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("config: cv.test_fraction must be in (0, 1)");
    if (threads == 0) throw ConfigError("config: threads must be >= 1");
    for (const auto& [alg, grid] : grids) {
        if (grid.algorithm != alg) throw ConfigError("config: grid stored under the wrong algorithm");
        grid.validate();
    }
    for (const auto& [alg, params] : default_overrides) {
        const auto& known = known_params(alg);
        for (const auto& [k, v] : params.entries()) {
            if (std::find(known.begin(), known.end(), k) == known.end()) {
                throw ConfigError("config: unknown hyperparameter '" + k + "' for " + std::string(to_string(alg)));
            }
        }
    }
}

HarnessConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    HarnessConfig cfg = default_config(DatasetPreset::kdd99);
    try {
        reject_unknown(root,
                       {"dataset", "preprocess", "algorithms", "defaults", "grids", "grid_algorithms", "seeds", "cv",
                        "output", "threads", "parallel"},
                       "config");
        if (root.contains("dataset")) parse_dataset(root.at("dataset"), cfg, base_dir);
        if (root.contains("preprocess")) parse_preprocess(root.at("preprocess"), cfg.preprocess);
        if (root.contains("algorithms")) {
            cfg.algorithms.clear();
            for (const auto& name : string_list(root.at("algorithms"), "algorithms")) {
                const Algorithm a = parse_algorithm(name);
                if (std::find(cfg.algorithms.begin(), cfg.algorithms.end(), a) != cfg.algorithms.end()) {
                    throw ConfigError("algorithms: '" + name + "' listed twice");
                }
                cfg.algorithms.push_back(a);
            }
        }
        if (root.contains("defaults")) {
            for (const auto& [name, params] : root.at("defaults").items()) {
                const Algorithm a = parse_algorithm(name);
                HyperParams hp;
                for (const auto& [k, v] : params.items()) hp.set(k, param_value(v, "defaults." + name + "." + k));
                cfg.default_overrides[a] = hp;
            }
        }
        if (root.contains("grids")) {
            for (const auto& [name, axes] : root.at("grids").items()) {
                const Algorithm a = parse_algorithm(name);
                ParamGrid grid;
                grid.algorithm = a;
                if (!axes.is_object()) throw ConfigError("grids." + name + ": expected an object");
                for (const auto& [k, values] : axes.items()) {
                    if (!values.is_array()) throw ConfigError("grids." + name + "." + k + ": expected an array");
                    std::vector<double> list;
                    for (const auto& v : values) list.push_back(param_value(v, "grids." + name + "." + k));
                    grid.axes.emplace_back(k, std::move(list));
                }
                cfg.grids[a] = std::move(grid);
            }
        }
        if (root.contains("grid_algorithms")) {
            cfg.grid_algorithms.clear();
            for (const auto& name : string_list(root.at("grid_algorithms"), "grid_algorithms")) {
                cfg.grid_algorithms.push_back(parse_algorithm(name));
            }
        }
        if (root.contains("seeds")) {
            const Json& s = root.at("seeds");
            reject_unknown(s, {"split", "folds", "models", "balancing", "subsample"}, "seeds");
            if (s.contains("split")) cfg.seeds.split = seed_value(s.at("split"), "seeds.split");
            if (s.contains("folds")) cfg.seeds.folds = seed_value(s.at("folds"), "seeds.folds");
            if (s.contains("models")) cfg.seeds.models = seed_value(s.at("models"), "seeds.models");
            if (s.contains("balancing")) cfg.seeds.balancing = seed_value(s.at("balancing"), "seeds.balancing");
            if (s.contains("subsample")) cfg.seeds.subsample = seed_value(s.at("subsample"), "seeds.subsample");
        }
        if (root.contains("cv")) {
            const Json& c = root.at("cv");
            reject_unknown(c, {"folds", "test_fraction"}, "cv");
            if (c.contains("folds")) cfg.cv_folds = static_cast<std::size_t>(seed_value(c.at("folds"), "cv.folds"));
            if (c.contains("test_fraction")) cfg.test_fraction = number(c.at("test_fraction"), "cv.test_fraction");
        }
        if (root.contains("output")) {
            const Json& o = root.at("output");
            reject_unknown(o, {"dir", "save_models"}, "output");
            if (o.contains("dir")) {
                std::filesystem::path p = o.at("dir").get<std::string>();
                cfg.output_dir = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
            }
            if (o.contains("save_models")) cfg.save_models = o.at("save_models").get<bool>();
        }
        if (root.contains("threads")) cfg.threads = static_cast<unsigned>(seed_value(root.at("threads"), "threads"));
        if (root.contains("parallel")) cfg.parallel = root.at("parallel").get<bool>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.preprocess.balance_seed = cfg.seeds.balancing;
    cfg.validate();
    return cfg;
}

HarnessConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str(), path.parent_path());
}

// ---- data loading -----------------------------------------------------------

std::vector<std::size_t> stratified_subsample(std::span<const Label> labels, std::size_t budget, std::uint64_t seed) {
    const std::size_t n = labels.size();
    std::vector<std::size_t> out;
    if (budget == 0 || budget >= n) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = i;
        return out;
    }
    std::array<std::vector<std::size_t>, 2> rows;
    for (std::size_t i = 0; i < n; ++i) rows[labels[i]].push_back(i);
    const std::size_t c1 = rows[1].size();
    const std::size_t c0 = rows[0].size();
    auto k1 = static_cast<std::size_t>(std::llround(static_cast<double>(c1) * static_cast<double>(budget) / static_cast<double>(n)));
    // Keep both classes represented when the budget allows it.
    k1 = std::clamp<std::size_t>(k1, std::min<std::size_t>(c1, 2), c1);
    std::size_t k0 = budget - std::min(k1, budget);
    if (k0 > c0) {
        k0 = c0;
        k1 = budget - k0;
    } else if (k0 < std::min<std::size_t>(c0, 2) && budget >= 4) {
        k0 = std::min<std::size_t>(c0, 2);
        k1 = budget - k0;
    }
    Rng rng(seed);
    const std::array<std::size_t, 2> keep{k0, k1};
    for (int c = 0; c < 2; ++c) {
        rng.shuffle(rows[c]);
        out.insert(out.end(), rows[c].begin(), rows[c].begin() + static_cast<std::ptrdiff_t>(keep[c]));
    }
    std::sort(out.begin(), out.end());
    return out;
}

LoadedTable load_slice(const HarnessConfig& config, const SliceSpec& slice) {
    Schema schema = config.schema;
    schema.label_filter = slice.attack_labels;
    schema.drop_constant_columns = false;

    std::vector<LoadedTable> parts;
    for (const auto& file : slice.files) {
        std::filesystem::path path = file;
        if (path.is_relative()) path = config.data_dir / path;
        if (!std::filesystem::exists(path)) {
            throw DataError("dataset file '" + path.string() + "' not found; run `idsbench fetch-data --dataset " +
                            std::string(to_string(config.preset)) + "` or point IDSBENCH_DATA_DIR at the data");
        }
        parts.push_back(load_csv(path, schema));
    }

    LoadedTable merged;
    IngestReport& report = merged.report;
    std::vector<std::string> names = parts.front().table.column_names();
    for (const auto& part : parts) {
        report.rows_read += part.report.rows_read;
        report.rows_dropped_malformed += part.report.rows_dropped_malformed;
        report.rows_dropped_nonfinite += part.report.rows_dropped_nonfinite;
        report.rows_skipped_slice += part.report.rows_skipped_slice;
        for (const auto& [k, v] : part.report.label_histogram) report.label_histogram[k] += v;
        for (const auto& c : part.report.columns_dropped) {
            if (std::find(report.columns_dropped.begin(), report.columns_dropped.end(), c) == report.columns_dropped.end()) {
                report.columns_dropped.push_back(c);
            }
        }
    }
    // Only columns present in every file survive the merge.
    std::vector<std::string> common;
    for (const auto& name : names) {
        const bool everywhere = std::all_of(parts.begin(), parts.end(),
                                            [&](const LoadedTable& p) { return p.table.find_column(name).has_value(); });
        if (everywhere) {
            common.push_back(name);
        } else {
            report.columns_dropped.push_back(name);
        }
    }
    std::vector<Column> columns;
    for (const auto& name : common) {
        Column col{name, {}};
        for (const auto& p : parts) {
            const auto v = p.table.values(*p.table.find_column(name));
            col.values.insert(col.values.end(), v.begin(), v.end());
        }
        columns.push_back(std::move(col));
    }
    std::vector<Label> labels;
    for (const auto& p : parts) labels.insert(labels.end(), p.table.labels().begin(), p.table.labels().end());

    if (config.schema.drop_constant_columns && labels.size() >= 2) {
        std::vector<Column> kept;
        for (auto& c : columns) {
            const auto [lo, hi] = std::minmax_element(c.values.begin(), c.values.end());
            if (*lo == *hi) {
                report.columns_dropped.push_back(c.name);
            } else {
                kept.push_back(std::move(c));
            }
        }
        columns = std::move(kept);
    }
    ColumnarTable full(std::move(columns), std::move(labels));
    const auto attacks = full.count_label(1);
    report.single_class = attacks == 0 || attacks == full.n_rows();

    const auto keep = stratified_subsample(full.labels(), config.row_budget, config.seeds.subsample);
    merged.table = keep.size() == full.n_rows() ? std::move(full) : full.select_rows(keep);
    return merged;
}

// ---- running ----------------------------------------------------------------

namespace {

struct PreparedData {
    ColumnarTable train;
    ColumnarTable test;
    PreprocessReport report;
    bool preprocessed = false;
};

PreparedData prepare(const HarnessConfig& config, const SliceSpec& slice, const ColumnarTable& data, Scenario scenario) {
    PreparedData out;
    auto split_into = [&](const ColumnarTable& t, ColumnarTable& train, ColumnarTable& test) {
        const SplitIndices split = stratified_split(t.labels(), config.test_fraction, config.seeds.split);
        train = t.select_rows(split.train_rows);
        test = t.select_rows(split.test_rows);
    };
    if (!uses_preprocessing(scenario)) {
        split_into(data, out.train, out.test);
        return out;
    }
    PreprocessConfig pc = config.preprocess;
    pc.balance_seed = config.seeds.balancing;
    out.preprocessed = true;
    if (pc.fit_scope == FitScope::whole_dataset) {
        PreprocessOutcome po = preprocess(data, pc, slice.balance);
        out.report = po.report;
        split_into(po.table, out.train, out.test);
    } else {
        ColumnarTable raw_train;
        ColumnarTable raw_test;
        split_into(data, raw_train, raw_test);
        PreprocessOutcome po = preprocess(raw_train, pc, slice.balance);
        out.report = po.report;
        out.test = apply_fitted(raw_test, po, pc);
        out.train = std::move(po.table);
    }
    return out;
}

bool grid_enabled(const HarnessConfig& config, Algorithm alg) {
    if (config.grid_algorithms.empty()) return true;
    return std::find(config.grid_algorithms.begin(), config.grid_algorithms.end(), alg) != config.grid_algorithms.end();
}

}  // namespace

ScenarioReport run_scenarios(const HarnessConfig& config, const RunOptions& options) {
    config.validate();
    std::vector<Scenario> scenarios = options.scenarios;
    std::sort(scenarios.begin(), scenarios.end());
    scenarios.erase(std::unique(scenarios.begin(), scenarios.end()), scenarios.end());
    if (scenarios.empty()) throw ConfigError("no scenarios selected");

    std::vector<const SliceSpec*> slices;
    for (const auto& s : config.slices) {
        if (options.slice.empty() || s.name == options.slice) slices.push_back(&s);
    }
    if (slices.empty()) throw ConfigError("no slice named '" + options.slice + "' in the config");

    if (options.write_files) {
        ensure_dir(config.output_dir);
        if (config.save_models) ensure_dir(config.output_dir / "models");
    }
    auto log = [&](const std::string& line) {
        if (options.log != nullptr) *options.log << line << '\n' << std::flush;
    };

    ScenarioReport report;
    for (const SliceSpec* slice : slices) {
        const std::string slice_ctx = "slice '" + slice->name + "'";
        const LoadedTable data = with_context(slice_ctx + ", stage ingest", [&] { return load_slice(config, *slice); });
        log(slice_ctx + ": " + std::to_string(data.table.n_rows()) + " rows, " +
            std::to_string(data.table.n_features()) + " features");

        for (Scenario scenario : scenarios) {
            const std::string ctx = slice_ctx + ", " + std::string(to_string(scenario));
            const PreparedData prepared = with_context(ctx + ", stage preprocessing/partition",
                                                       [&] { return prepare(config, *slice, data.table, scenario); });
            if (options.write_files && prepared.preprocessed) {
                write_text(config.output_dir / ("preprocess_" + file_stem(slice->name) + "_" +
                                                std::string(to_string(scenario)) + ".csv"),
                           preprocess_report_csv(prepared.report));
            }

            for (Algorithm alg : config.algorithms) {
                const std::string actx = ctx + ", " + std::string(to_string(alg));
                HyperParams params = default_params(alg);
                if (const auto it = config.default_overrides.find(alg); it != config.default_overrides.end()) {
                    params = overlay(params, it->second);
                }
                ReportRow row;
                row.slice = slice->name;
                row.algorithm = alg;
                row.scenario = scenario;

                if (uses_grid_search(scenario) && grid_enabled(config, alg)) {
                    const auto git = config.grids.find(alg);
                    const ParamGrid grid = git != config.grids.end() ? git->second : default_grid(alg);
                    const HyperParams base = params;
                    const SearchResult search = with_context(actx + ", stage grid search", [&] {
                        const FoldPlan plan = make_folds(prepared.train.labels(), config.cv_folds, config.seeds.folds);
                        SearchOptions so;
                        so.model_seed = config.seeds.models;
                        so.threads = config.threads;
                        so.fitter = [&base](Algorithm a, const HyperParams& p, const ColumnarTable& t, const FitOptions& o) {
                            return fit_model(a, overlay(base, p), t, o);
                        };
                        return grid_search(grid, prepared.train, plan, so);
                    });
                    if (options.write_files) {
                        write_text(config.output_dir / ("search_" + file_stem(slice->name) + "_" +
                                                        std::string(to_string(alg)) + ".csv"),
                                   search.to_csv());
                    }
                    params = overlay(base, search.best_params());
                    row.params_from_grid = true;
                }

                FitOptions fo{config.seeds.models, config.parallel ? config.threads : 1u};
                Stopwatch sw;
                const auto model = with_context(actx + ", stage fit", [&] { return fit_model(alg, params, prepared.train, fo); });
                row.timing.fit_seconds = sw.seconds();
                sw.restart();
                const std::vector<double> scores = model->predict_score(prepared.test);
                row.timing.predict_total_seconds = sw.seconds();
                row.timing.predict_per_instance_seconds =
                    row.timing.predict_total_seconds / static_cast<double>(prepared.test.n_rows());
                if (prepared.preprocessed) row.timing.preprocess_stage_seconds = prepared.report.stage_seconds;

                row.metrics = with_context(actx + ", stage evaluation", [&] { return evaluate(prepared.test.labels(), scores); });
                row.params = params;
                row.rows_input = data.table.n_rows();
                row.rows_train = prepared.train.n_rows();
                row.rows_test = prepared.test.n_rows();
                row.features = prepared.train.n_features();
                row.rows_dropped_outlier = prepared.report.rows_dropped_outlier;
                row.columns_dropped_correlation = prepared.report.columns_dropped_correlation.size();
                row.rows_dropped_balancing = prepared.report.rows_dropped_balancing;
                row.balancing_skipped = prepared.report.balancing_skipped;
                row.split_seed = config.seeds.split;
                row.test_fraction = config.test_fraction;
                if (options.write_files && config.save_models) {
                    row.model_file = "models/" + file_stem(slice->name) + "_" + std::string(to_string(alg)) + "_" +
                                     std::string(to_string(scenario)) + ".json";
                    write_text(config.output_dir / row.model_file, model->serialize());
                }
                log(actx + ": accuracy " + format_metric(row.metrics.accuracy) + ", auc " +
                    format_metric(row.metrics.roc_auc) + ", fit " + shortest(row.timing.fit_seconds) + " s");
                report.rows.push_back(std::move(row));
            }
        }
    }

    // Stable order: slice, then algorithm, then scenario, whatever order the loops ran in.
    std::unordered_map<std::string, std::size_t> slice_rank;
    for (std::size_t i = 0; i < config.slices.size(); ++i) slice_rank[config.slices[i].name] = i;
    auto alg_rank = [&](Algorithm a) {
        return static_cast<std::size_t>(std::find(config.algorithms.begin(), config.algorithms.end(), a) -
                                        config.algorithms.begin());
    };
    std::stable_sort(report.rows.begin(), report.rows.end(), [&](const ReportRow& a, const ReportRow& b) {
        return std::tuple(slice_rank[a.slice], alg_rank(a.algorithm), a.scenario) <
               std::tuple(slice_rank[b.slice], alg_rank(b.algorithm), b.scenario);
    });

    if (options.write_files) emit_report(report, config.output_dir);
    return report;
}

// ---- report files -----------------------------------------------------------

std::string format_metric(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", value);
    return buf;
}

namespace {

const std::vector<std::string>& report_header() {
    static const std::vector<std::string> h = {
        "slice", "algorithm", "scenario", "accuracy", "precision", "recall", "f1", "roc_auc", "accuracy_full",
        "precision_full", "recall_full", "f1_full", "roc_auc_full", "tp", "fp", "tn", "fn", "undefined_ratio",
        "params_source", "hyperparameters", "rows_input", "rows_train", "rows_test", "features",
        "rows_dropped_outlier", "columns_dropped_correlation", "rows_dropped_balancing", "balancing_skipped",
        "split_seed", "test_fraction", "model_file"};
    return h;
}

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> s = {kStageOutlier, kStageNormalization, kStageCorrelation, kStageBalancing,
                                               kStageTotal};
    return s;
}

const std::vector<std::string>& timings_header() {
    static const auto h = [] {
        std::vector<std::string> v = {"slice", "algorithm", "scenario", "fit_seconds", "predict_total_seconds",
                                      "predict_per_instance_seconds"};
        for (const auto& s : stage_names()) v.push_back(s + "_seconds");
        return v;
    }();
    return h;
}

std::string join_header(const std::vector<std::string>& h) {
    std::string out;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (i) out += ',';
        out += h[i];
    }
    return out + '\n';
}

double parse_double(const std::string& s, const char* what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError(std::string("report: bad ") + what + " value '" + s + "'");
    }
    return v;
}

std::uint64_t parse_count(const std::string& s, const char* what) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError(std::string("report: bad ") + what + " value '" + s + "'");
    }
    return v;
}

std::vector<std::vector<std::string>> parse_table(std::string_view text, const std::vector<std::string>& header,
                                                  const char* what) {
    std::istringstream in{std::string(text)};
    std::string record;
    if (!read_csv_record(in, record) || split_csv_record(record) != header) {
        throw DataError(std::string(what) + ": unexpected header");
    }
    std::vector<std::vector<std::string>> rows;
    while (read_csv_record(in, record)) {
        if (record.empty()) continue;
        auto fields = split_csv_record(record);
        if (fields.size() != header.size()) throw DataError(std::string(what) + ": wrong field count");
        rows.push_back(std::move(fields));
    }
    return rows;
}

using Key = std::tuple<std::string, Algorithm, Scenario>;

}  // namespace

std::string report_csv(const ScenarioReport& report) {
    std::ostringstream os;
    os << join_header(report_header());
    for (const auto& r : report.rows) {
        const MetricSet& m = r.metrics;
        const double values[] = {m.accuracy, m.precision_weighted, m.recall_weighted, m.f1_weighted, m.roc_auc};
        os << csv_field(r.slice) << ',' << to_string(r.algorithm) << ',' << to_string(r.scenario);
        for (double v : values) os << ',' << format_metric(v);
        for (double v : values) os << ',' << shortest(v);
        os << ',' << m.counts.tp << ',' << m.counts.fp << ',' << m.counts.tn << ',' << m.counts.fn << ','
           << (m.undefined_ratio ? 1 : 0) << ',' << (r.params_from_grid ? "grid" : "default") << ','
           << csv_field(r.params.to_string()) << ',' << r.rows_input << ',' << r.rows_train << ',' << r.rows_test << ','
           << r.features << ',' << r.rows_dropped_outlier << ',' << r.columns_dropped_correlation << ','
           << r.rows_dropped_balancing << ',' << (r.balancing_skipped ? 1 : 0) << ',' << r.split_seed << ','
           << shortest(r.test_fraction) << ',' << csv_field(r.model_file) << '\n';
    }
    return os.str();
}

std::string timings_csv(const ScenarioReport& report) {
    std::ostringstream os;
    os << join_header(timings_header());
    for (const auto& r : report.rows) {
        const TimingRecord& t = r.timing;
        os << csv_field(r.slice) << ',' << to_string(r.algorithm) << ',' << to_string(r.scenario) << ','
           << shortest(t.fit_seconds) << ',' << shortest(t.predict_total_seconds) << ','
           << shortest(t.predict_per_instance_seconds);
        for (const auto& s : stage_names()) {
            os << ',';
            if (const auto it = t.preprocess_stage_seconds.find(s); it != t.preprocess_stage_seconds.end()) {
                os << shortest(it->second);
            }
        }
        os << '\n';
    }
    return os.str();
}

ScenarioReport parse_report(std::string_view report_text, std::string_view timings_text) {
    ScenarioReport out;
    for (const auto& f : parse_table(report_text, report_header(), "report.csv")) {
        ReportRow r;
        r.slice = f[0];
        try {
            r.algorithm = parse_algorithm(f[1]);
            r.scenario = parse_scenario(f[2]);
            r.params = f[19].empty() ? HyperParams{} : HyperParams::parse(f[19]);
        } catch (const ConfigError& e) {
            throw DataError(std::string("report.csv: ") + e.what());
        }
        MetricSet& m = r.metrics;
        m.accuracy = parse_double(f[8], "accuracy_full");
        m.precision_weighted = parse_double(f[9], "precision_full");
        m.recall_weighted = parse_double(f[10], "recall_full");
        m.f1_weighted = parse_double(f[11], "f1_full");
        m.roc_auc = parse_double(f[12], "roc_auc_full");
        m.counts = {parse_count(f[13], "tp"), parse_count(f[14], "fp"), parse_count(f[15], "tn"),
                    parse_count(f[16], "fn")};
        m.undefined_ratio = f[17] == "1";
        if (f[18] != "grid" && f[18] != "default") throw DataError("report.csv: bad params_source '" + f[18] + "'");
        r.params_from_grid = f[18] == "grid";
        r.rows_input = parse_count(f[20], "rows_input");
        r.rows_train = parse_count(f[21], "rows_train");
        r.rows_test = parse_count(f[22], "rows_test");
        r.features = parse_count(f[23], "features");
        r.rows_dropped_outlier = parse_count(f[24], "rows_dropped_outlier");
        r.columns_dropped_correlation = parse_count(f[25], "columns_dropped_correlation");
        r.rows_dropped_balancing = parse_count(f[26], "rows_dropped_balancing");
        r.balancing_skipped = f[27] == "1";
        r.split_seed = parse_count(f[28], "split_seed");
        r.test_fraction = parse_double(f[29], "test_fraction");
        r.model_file = f[30];
        out.rows.push_back(std::move(r));
    }

    std::map<Key, TimingRecord> timings;
    for (const auto& f : parse_table(timings_text, timings_header(), "timings.csv")) {
        TimingRecord t;
        t.fit_seconds = parse_double(f[3], "fit_seconds");
        t.predict_total_seconds = parse_double(f[4], "predict_total_seconds");
        t.predict_per_instance_seconds = parse_double(f[5], "predict_per_instance_seconds");
        for (std::size_t s = 0; s < stage_names().size(); ++s) {
            if (!f[6 + s].empty()) t.preprocess_stage_seconds[stage_names()[s]] = parse_double(f[6 + s], "stage seconds");
        }
        try {
            timings[{f[0], parse_algorithm(f[1]), parse_scenario(f[2])}] = t;
        } catch (const ConfigError& e) {
            throw DataError(std::string("timings.csv: ") + e.what());
        }
    }
    for (auto& r : out.rows) {
        const auto it = timings.find({r.slice, r.algorithm, r.scenario});
        if (it == timings.end()) {
            throw DataError("timings.csv: no row for " + r.slice + "/" + std::string(to_string(r.algorithm)) + "/" +
                            std::string(to_string(r.scenario)));
        }
        r.timing = it->second;
    }
    return out;
}

ScenarioReport read_report(const std::filesystem::path& dir) {
    return parse_report(read_text(dir / "report.csv"), read_text(dir / "timings.csv"));
}

std::string report_markdown(const ScenarioReport& report) {
    std::ostringstream os;
    os << "# Scenario report\n\n## Classification metrics\n\n"
       << "| Slice | Algorithm | Scenario | Accuracy | Precision | Recall | F1 | ROC-AUC | Hyperparameters |\n"
       << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : report.rows) {
        const MetricSet& m = r.metrics;
        os << "| " << r.slice << " | " << to_string(r.algorithm) << " | " << to_string(r.scenario) << " | "
           << format_metric(m.accuracy) << " | " << format_metric(m.precision_weighted) << " | "
           << format_metric(m.recall_weighted) << " | " << format_metric(m.f1_weighted) << " | "
           << format_metric(m.roc_auc) << " | " << (r.params_from_grid ? "grid: " : "default: ")
           << r.params.to_string() << " |\n";
    }

    os << "\n## Preprocessing times (s)\n\n"
       << "| Slice | Scenario | Outlier filtering | Normalization | Correlation filtering | Balancing | Total | "
          "Rows dropped (outlier) | Columns dropped | Rows dropped (balancing) |\n"
       << "|---|---|---|---|---|---|---|---|---|---|\n";
    std::set<std::pair<std::string, Scenario>> seen;
    for (const auto& r : report.rows) {
        if (r.timing.preprocess_stage_seconds.empty() || !seen.insert({r.slice, r.scenario}).second) continue;
        os << "| " << r.slice << " | " << to_string(r.scenario);
        for (const auto& s : stage_names()) {
            const auto it = r.timing.preprocess_stage_seconds.find(s);
            os << " | " << (it == r.timing.preprocess_stage_seconds.end() ? std::string("-") : shortest(it->second));
        }
        os << " | " << r.rows_dropped_outlier << " | " << r.columns_dropped_correlation << " | "
           << (r.balancing_skipped ? std::string("skipped") : std::to_string(r.rows_dropped_balancing)) << " |\n";
    }

    os << "\n## Training and testing times\n\n"
       << "| Slice | Algorithm | Scenario | Train rows | Test rows | Features | Fit (s) | Predict total (s) | "
          "Predict per instance (s) |\n"
       << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : report.rows) {
        os << "| " << r.slice << " | " << to_string(r.algorithm) << " | " << to_string(r.scenario) << " | "
           << r.rows_train << " | " << r.rows_test << " | " << r.features << " | " << shortest(r.timing.fit_seconds)
           << " | " << shortest(r.timing.predict_total_seconds) << " | "
           << shortest(r.timing.predict_per_instance_seconds) << " |\n";
    }
    return os.str();
}

void emit_report(const ScenarioReport& report, const std::filesystem::path& dir) {
    ensure_dir(dir);
    write_text(dir / "report.csv", report_csv(report));
    write_text(dir / "timings.csv", timings_csv(report));
    write_text(dir / "report.md", report_markdown(report));
}

// ---- comparison -------------------------------------------------------------

double percent_reduction(double before, double after) {
    return before > 0.0 ? 100.0 * (before - after) / before : 0.0;
}

Comparison compare_scenarios(const ScenarioReport& report) {
    std::map<Scenario, std::set<std::pair<std::string, Algorithm>>> coverage;
    std::set<std::pair<std::string, Algorithm>> all_pairs;
    std::vector<std::string> problems;
    for (const auto& r : report.rows) {
        if (!coverage[r.scenario].insert({r.slice, r.algorithm}).second) {
            problems.push_back("duplicate " + r.slice + "/" + std::string(to_string(r.algorithm)) + "/" +
                               std::string(to_string(r.scenario)));
        }
        all_pairs.insert({r.slice, r.algorithm});
    }
    for (Scenario s : {Scenario::ce1, Scenario::ce2}) {
        if (!coverage.contains(s)) problems.push_back("no " + std::string(to_string(s)) + " rows");
    }
    for (const auto& [scenario, pairs] : coverage) {
        for (const auto& p : all_pairs) {
            if (!pairs.contains(p)) {
                problems.push_back("missing " + p.first + "/" + std::string(to_string(p.second)) + "/" +
                                   std::string(to_string(scenario)));
            }
        }
    }
    if (!problems.empty()) {
        std::string msg = "comparison: report coverage mismatch:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw PipelineError(msg);
    }

    Comparison out;
    for (Algorithm alg : all_algorithms()) {
        struct Sum {
            double fit = 0, predict = 0;
            std::array<double, 5> metrics{};
            std::size_t n = 0;
        };
        std::map<Scenario, Sum> sums;
        for (const auto& r : report.rows) {
            if (r.algorithm != alg) continue;
            Sum& s = sums[r.scenario];
            s.fit += r.timing.fit_seconds;
            s.predict += r.timing.predict_total_seconds;
            const MetricSet& m = r.metrics;
            const std::array<double, 5> v{m.accuracy, m.precision_weighted, m.recall_weighted, m.f1_weighted, m.roc_auc};
            for (std::size_t i = 0; i < 5; ++i) s.metrics[i] += v[i];
            ++s.n;
        }
        if (sums.empty()) continue;
        AlgorithmComparison ac;
        ac.algorithm = alg;
        for (const auto& [scenario, s] : sums) {
            const double n = static_cast<double>(s.n);
            ac.mean_fit_seconds[scenario] = s.fit / n;
            ac.mean_predict_seconds[scenario] = s.predict / n;
            ac.mean_total_seconds[scenario] = (s.fit + s.predict) / n;
            MetricSet m;
            m.accuracy = s.metrics[0] / n;
            m.precision_weighted = s.metrics[1] / n;
            m.recall_weighted = s.metrics[2] / n;
            m.f1_weighted = s.metrics[3] / n;
            m.roc_auc = s.metrics[4] / n;
            ac.mean_metrics[scenario] = m;
        }
        auto delta = [](const MetricSet& a, const MetricSet& b) {
            MetricSet d;
            d.accuracy = a.accuracy - b.accuracy;
            d.precision_weighted = a.precision_weighted - b.precision_weighted;
            d.recall_weighted = a.recall_weighted - b.recall_weighted;
            d.f1_weighted = a.f1_weighted - b.f1_weighted;
            d.roc_auc = a.roc_auc - b.roc_auc;
            return d;
        };
        ac.reduction_pct = percent_reduction(ac.mean_total_seconds[Scenario::ce1], ac.mean_total_seconds[Scenario::ce2]);
        ac.change_pct = -ac.reduction_pct;
        ac.fit_reduction_pct = percent_reduction(ac.mean_fit_seconds[Scenario::ce1], ac.mean_fit_seconds[Scenario::ce2]);
        ac.predict_reduction_pct =
            percent_reduction(ac.mean_predict_seconds[Scenario::ce1], ac.mean_predict_seconds[Scenario::ce2]);
        ac.delta_ce2_ce1 = delta(ac.mean_metrics[Scenario::ce2], ac.mean_metrics[Scenario::ce1]);
        ac.has_ce3 = sums.contains(Scenario::ce3);
        if (ac.has_ce3) ac.delta_ce3_ce2 = delta(ac.mean_metrics[Scenario::ce3], ac.mean_metrics[Scenario::ce2]);
        out.algorithms.push_back(std::move(ac));
    }
    return out;
}

std::string comparison_csv(const Comparison& comparison) {
    std::ostringstream os;
    os << "algorithm,ce1_fit_seconds,ce2_fit_seconds,ce1_predict_seconds,ce2_predict_seconds,ce1_total_seconds,"
          "ce2_total_seconds,fit_reduction_pct,predict_reduction_pct,reduction_pct,change_pct";
    const char* metric_names[] = {"accuracy", "precision", "recall", "f1", "roc_auc"};
    for (const char* m : metric_names) os << ",delta_ce2_ce1_" << m;
    for (const char* m : metric_names) os << ",delta_ce3_ce2_" << m;
    os << '\n';
    for (const auto& a : comparison.algorithms) {
        auto at = [](const std::map<Scenario, double>& m, Scenario s) { return m.at(s); };
        os << to_string(a.algorithm) << ',' << shortest(at(a.mean_fit_seconds, Scenario::ce1)) << ','
           << shortest(at(a.mean_fit_seconds, Scenario::ce2)) << ','
           << shortest(at(a.mean_predict_seconds, Scenario::ce1)) << ','
           << shortest(at(a.mean_predict_seconds, Scenario::ce2)) << ','
           << shortest(at(a.mean_total_seconds, Scenario::ce1)) << ','
           << shortest(at(a.mean_total_seconds, Scenario::ce2)) << ',' << shortest(a.fit_reduction_pct) << ','
           << shortest(a.predict_reduction_pct) << ',' << shortest(a.reduction_pct) << ',' << shortest(a.change_pct);
        for (const MetricSet* d : {&a.delta_ce2_ce1, &a.delta_ce3_ce2}) {
            const bool blank = d == &a.delta_ce3_ce2 && !a.has_ce3;
            for (double v : {d->accuracy, d->precision_weighted, d->recall_weighted, d->f1_weighted, d->roc_auc}) {
                os << ',' << (blank ? std::string() : shortest(v));
            }
        }
        os << '\n';
    }
    return os.str();
}

std::string comparison_markdown(const Comparison& comparison) {
    auto pct = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%+.2f%%", v);
        return std::string(buf);
    };
    auto signed4 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%+.4f", v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "# Scenario comparison\n\n## CE1 vs CE2 time (mean over slices)\n\n"
       << "| Algorithm | CE1 train (s) | CE2 train (s) | CE1 test (s) | CE2 test (s) | CE1 total (s) | CE2 total (s) | "
          "Reduction | Change |\n"
       << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& a : comparison.algorithms) {
        os << "| " << to_string(a.algorithm) << " | " << shortest(a.mean_fit_seconds.at(Scenario::ce1)) << " | "
           << shortest(a.mean_fit_seconds.at(Scenario::ce2)) << " | "
           << shortest(a.mean_predict_seconds.at(Scenario::ce1)) << " | "
           << shortest(a.mean_predict_seconds.at(Scenario::ce2)) << " | "
           << shortest(a.mean_total_seconds.at(Scenario::ce1)) << " | "
           << shortest(a.mean_total_seconds.at(Scenario::ce2)) << " | " << pct(a.reduction_pct) << " | "
           << pct(a.change_pct) << " |\n";
    }
    os << "\nReference full-scale reduction band: 42.02% to 56.53%. CE3 times are excluded because its grid "
          "search is not comparable.\n";
    os << "\n## Metric deltas\n\n"
       << "| Algorithm | Step | Accuracy | Precision | Recall | F1 | ROC-AUC |\n"
       << "|---|---|---|---|---|---|---|\n";
    for (const auto& a : comparison.algorithms) {
        auto line = [&](const char* step, const MetricSet& d) {
            os << "| " << to_string(a.algorithm) << " | " << step << " | " << signed4(d.accuracy) << " | "
               << signed4(d.precision_weighted) << " | " << signed4(d.recall_weighted) << " | "
               << signed4(d.f1_weighted) << " | " << signed4(d.roc_auc) << " |\n";
        };
        line("CE2 - CE1", a.delta_ce2_ce1);
        if (a.has_ce3) line("CE3 - CE2", a.delta_ce3_ce2);
    }
    return os.str();
}

}  // namespace idsbench
