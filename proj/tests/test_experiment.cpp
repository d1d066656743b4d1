#include "catch_amalgamated.hpp"
#include "support.hpp"

#include <fstream>
#include <sstream>

using namespace channelrank;
using nlohmann::json;
using test_support::TempDir;

namespace {

json small_synth_config()
{
    return json::parse(R"({
        "name": "toy",
        "synth": {"channels": 6, "trials": 3, "samples": 60, "classes": 2,
                  "informative": [2], "effect": 2.0, "seed": 5},
        "methods": ["relief", "mrmr", "laplacian"],
        "setting": "both",
        "classifiers": ["knn", "lda", "tree"],
        "seed": 11
    })");
}

std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream stream(line);
    std::string field;
    while (std::getline(stream, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

TEST_CASE("config parsing fills every section")
{
    const json doc = json::parse(R"({
        "name": "plt",
        "dataset": {"csv": "data/x.csv", "manifest": "data/x.json"},
        "methods": ["relief", "ls"],
        "setting": "horizontal",
        "classifiers": ["lda", "tree"],
        "split_fraction": 0.6,
        "seed": 42,
        "relief": {"iterations": 100, "neighbor_mode": "random", "probe_order": "random", "seed": 3},
        "mrmr": {"bins": 5},
        "laplacian": {"k_neighbors": 7, "kernel_width": 2.5, "subsample_cap": 0},
        "classifier_params": {"knn_k": 5, "tree_max_depth": 4, "tree_min_leaf": 2, "lda_ridge": 0.01},
        "horizontal_mode": "per_trial",
        "output_dir": "out"
    })");
    const RunConfig c = parse_run_config(doc, "/base");
    CHECK(c.name == "plt");
    CHECK(*c.data_csv == std::filesystem::path("/base/data/x.csv"));
    CHECK(*c.data_manifest == std::filesystem::path("/base/data/x.json"));
    CHECK(c.methods == std::vector<RankMethod>{RankMethod::relief, RankMethod::laplacian});
    CHECK(c.settings == std::vector<Setting>{Setting::horizontal});
    REQUIRE(c.classifiers.size() == 2);
    CHECK(c.classifiers[0].kind == ClassifierKind::lda);
    CHECK(c.classifiers[1].tree_max_depth == 4);
    CHECK(c.classifiers[1].tree_min_leaf == 2);
    CHECK(c.classifiers[0].lda_ridge == 0.01);
    CHECK(c.classifiers[0].knn_k == 5);
    CHECK(c.split_fraction == 0.6);
    CHECK(c.seed == 42);
    CHECK(*c.ranker.relief.iterations == 100);
    CHECK(c.ranker.relief.neighbor_mode == NeighborMode::random);
    CHECK(c.ranker.relief.probe_order == ProbeOrder::random);
    CHECK(c.ranker_for(RankMethod::relief).relief.seed == 3);
    CHECK(c.ranker_for(RankMethod::laplacian).laplacian.seed == 42);
    CHECK(c.ranker.mrmr.scheme.kind == DiscretizationScheme::Kind::equal_width);
    CHECK(c.ranker.mrmr.scheme.levels == 5);
    CHECK(c.ranker.laplacian.k_neighbors == 7);
    CHECK(*c.ranker.laplacian.kernel_width == 2.5);
    CHECK(c.ranker.laplacian.subsample_cap == 0);
    CHECK(c.horizontal_mode == HorizontalMode::per_trial);
    CHECK(c.output_dir == std::filesystem::path("/base/out"));
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("config defaults")
{
    const RunConfig c = parse_run_config(json::parse(R"({"synth": {}})"), ".");
    CHECK(c.methods == std::vector<RankMethod>{RankMethod::relief});
    CHECK(c.settings.size() == 2);
    CHECK(c.classifiers.size() == 1);
    CHECK(c.split_fraction == 0.7);
    CHECK_FALSE(c.ranker.relief.iterations.has_value());
    CHECK_FALSE(c.ranker.laplacian.kernel_width.has_value());
    CHECK(c.ranker.laplacian.subsample_cap == 2000);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("config errors are usage errors")
{
    const auto parse = [](const char* text) { return parse_run_config(json::parse(text), "."); };
    CHECK_THROWS_AS(parse(R"({"synth": {}, "colour": 1})"), UsageError);
    CHECK_THROWS_AS(parse(R"({"synth": {"chanels": 4}})"), UsageError);
    CHECK_THROWS_AS(parse(R"({"synth": {}, "relief": {"k": 2}})"), UsageError);
    CHECK_THROWS_AS(parse(R"({"synth": {}, "methods": ["boruta"]})"), UsageError);
    CHECK_THROWS_AS(parse(R"({"synth": {}, "classifiers": ["svm"]})"), UsageError);
    CHECK_THROWS_AS(parse(R"({"synth": {}, "setting": "diagonal"})"), UsageError);
    CHECK_THROWS_AS(parse(R"({"synth": {}, "seed": "abc"})"), UsageError);
    CHECK_THROWS_AS(parse(R"({"synth": {}, "split_fraction": 1.0})").validate(), UsageError);
    CHECK_THROWS_AS(parse(R"({"synth": {}, "methods": []})").validate(), UsageError);
    CHECK_THROWS_AS(parse(R"({"methods": ["relief"]})").validate(), UsageError);
    CHECK_THROWS_AS(parse(R"({"synth": {}, "laplacian": {"kernel_width": 0}})").validate(), UsageError);
    CHECK_THROWS_AS(parse(R"({"synth": {}, "classifier_params": {"knn_k": 0}})").validate(), UsageError);

    TempDir dir("config");
    {
        std::ofstream(dir / "bad.json") << "{ not json";
    }
    CHECK_THROWS_AS(load_run_config(dir / "bad.json"), UsageError);
    CHECK_THROWS_AS(load_run_config(dir / "missing.json"), UsageError);
}

TEST_CASE("full grid: 18 rows with consistent rho")
{
    const RunConfig config = parse_run_config(small_synth_config(), ".");
    const TrialTensor tensor = load_run_dataset(config);
    const GridResult grid = run_experiment_grid(config, tensor, 1);
    CHECK(grid.failures == 0);
    REQUIRE(grid.rows.size() == 18);
    CHECK(grid.rows[0].method == "relief");
    CHECK(grid.rows[0].setting == "horizontal");
    CHECK(grid.rows[0].classifier == "knn");
    CHECK(grid.rows[17].method == "laplacian");
    CHECK(grid.rows[17].setting == "vertical");
    CHECK(grid.rows[17].classifier == "tree");

    TempDir dir("grid");
    write_grid_outputs(dir.path(), config, grid, Precision::full);
    std::ifstream in(dir / "report.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == report_csv_header());
    std::size_t count = 0;
    while (std::getline(in, line)) {
        const auto fields = split_csv_line(line);
        REQUIRE(fields.size() == 10);
        CHECK(fields[9] == "ok");
        const double selected = std::stod(fields[4]);
        const double ca = std::stod(fields[5]);
        CHECK(std::stod(fields[7]) == rho(ca, selected));
        CHECK((fields[8] == "single_feature") == (selected == 1.0));
        ++count;
    }
    CHECK(count == 18);
    for (const char* stem : {"relief_horizontal", "mrmr_vertical", "laplacian_horizontal"}) {
        CHECK(std::filesystem::exists(dir / "rankings" / (std::string(stem) + ".json")));
        CHECK(std::filesystem::exists(dir / "curves" / (std::string(stem) + "_lda.csv")));
    }
    CHECK(std::filesystem::exists(dir / "trials" / "mrmr_horizontal_tree.csv"));
    CHECK_FALSE(std::filesystem::exists(dir / "trials" / "mrmr_vertical_tree.csv"));
}

TEST_CASE("grid outputs are reproducible across runs and thread counts")
{
    const RunConfig config = parse_run_config(small_synth_config(), ".");
    const TrialTensor tensor = load_run_dataset(config);
    TempDir a("repro_a");
    TempDir b("repro_b");
    write_grid_outputs(a.path(), config, run_experiment_grid(config, tensor, 1), Precision::six_significant);
    write_grid_outputs(b.path(), config, run_experiment_grid(config, tensor, 5), Precision::six_significant);
    for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
        if (!entry.is_regular_file()) continue;
        const auto relative = std::filesystem::relative(entry.path(), a.path());
        INFO(relative.string());
        CHECK(slurp(entry.path()) == slurp(b.path() / relative));
    }
}

TEST_CASE("a failing classifier leaves the other rows intact")
{
    // Channel 0 is constant, so LDA without a ridge meets a singular covariance.
    SynthSpec spec;
    spec.channel_count = 4;
    spec.trials_per_class = 2;
    spec.samples_per_trial = 40;
    spec.informative_channels = {1};
    spec.effect_size = 2.0;
    const TrialTensor raw = generate_synthetic(spec, 3);
    std::vector<Trial> trials = raw.trials();
    for (Trial& t : trials) t.data.col(0).setConstant(1.25);
    const TrialTensor tensor(std::move(trials), 4, 40);

    json doc = json::parse(R"({"synth": {}, "methods": ["laplacian"], "setting": "vertical",
                               "classifiers": ["knn", "lda", "tree"],
                               "classifier_params": {"lda_ridge": 0}})");
    const RunConfig config = parse_run_config(doc, ".");
    const GridResult grid = run_experiment_grid(config, tensor, 1);
    REQUIRE(grid.rows.size() == 3);
    CHECK(grid.failures == 1);
    CHECK(grid.rows[0].report.has_value());
    CHECK_FALSE(grid.rows[1].report.has_value());
    CHECK_FALSE(grid.rows[1].error.empty());
    CHECK(grid.rows[2].report.has_value());

    TempDir dir("partial");
    write_grid_outputs(dir.path(), config, grid, Precision::six_significant);
    const std::string report = slurp(dir / "report.csv");
    CHECK(report.find("laplacian,vertical,lda,,,,,,error: ") != std::string::npos);
}

TEST_CASE("dataset file configs load through the manifest")
{
    TempDir dir("dataset_cfg");
    SynthSpec spec;
    spec.channel_count = 3;
    spec.trials_per_class = 2;
    spec.samples_per_trial = 20;
    const TrialTensor tensor = generate_synthetic(spec, 1);
    save_dataset(tensor, dir / "d.csv", dir / "d.json", "d");
    {
        std::ofstream(dir / "run.json") << R"({"dataset": {"csv": "d.csv", "manifest": "d.json"}})";
    }
    const RunConfig config = load_run_config(dir / "run.json");
    const TrialTensor loaded = load_run_dataset(config);
    CHECK(loaded.channel_count() == 3);
    CHECK(test_support::bitwise_equal(loaded.trials()[3].data, tensor.trials()[3].data));
}
