// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adaspark/harness.hpp"
#include "support.hpp"

using namespace adaspark;
using nlohmann::json;

namespace {

RunConfig small_config() {
    RunConfig c;
    c.seed = 5;
    c.grid = {2, 8, 8};
    c.cube = {4, 4, 2};
    c.num_text_tokens = 8;
    c.num_layers = 2;
    c.num_heads = 2;
    c.d_model = 32;
    c.d_ff = 64;
    return c;
}

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = std::string("/tmp/adaspark_test_") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("parsers: grid, cube, strategy, mode") {
    const GridShape grid = parse_grid("8x16x16");
    CHECK(grid.frames == 8);
    CHECK(grid.height == 16);
    CHECK(grid.width == 16);
    const CubeShape cube = parse_cube("8x8x4");
    CHECK(cube.h == 8);
    CHECK(cube.w == 8);
    CHECK(cube.t == 4);
    CHECK(format_grid(grid) == "8x16x16");
    CHECK(format_cube(cube) == "8x8x4");
    CHECK_THROWS_AS(parse_grid("8x16"), ConfigError);
    CHECK_THROWS_AS(parse_grid("axbxc"), ConfigError);

    const SelectionStrategy p = parse_strategy("topp:0.8");
    CHECK(p.kind == SelectionStrategy::Kind::kTopP);
    CHECK(p.p == doctest::Approx(0.8));
    const SelectionStrategy k = parse_strategy("topk:5");
    CHECK(k.kind == SelectionStrategy::Kind::kTopK);
    CHECK(k.k == 5);
    const SelectionStrategy u = parse_strategy("uniform:0.25");
    CHECK(u.ratio == doctest::Approx(0.25));
    CHECK_THROWS_AS(parse_strategy("nucleus"), ConfigError);
    CHECK_THROWS_AS(parse_strategy("topp:1.5"), ConfigError);

    CHECK(parse_run_mode("both") == RunMode::kBoth);
    CHECK_THROWS_AS(parse_run_mode("fast"), ConfigError);
}

TEST_CASE("config validation: bad shapes are configuration errors") {
    RunConfig c = small_config();
    c.grid = {0, 8, 8};
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = small_config();
    c.cube = {3, 4, 2};  // 8 % 3 != 0
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = small_config();
    c.d_model = 30;  // d_k = 15, odd
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = small_config();
    c.num_layers = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = small_config();
    c.strategy.p = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config file: parse, comments, overrides, unknown keys") {
    const std::string path = write_temp("config.conf",
                                        "# workload\n"
                                        "seed = 9\n"
                                        "grid = 2x8x8\n"
                                        "cube = 4x4x2   # h x w x t\n"
                                        "text_tokens = 4\n"
                                        "layers = 1\n"
                                        "heads = 2\n"
                                        "d_model = 32\n"
                                        "d_ff = 64\n"
                                        "strategy = topk:3\n"
                                        "mean_compensation = false\n"
                                        "mode = both\n");
    const RunConfig c = load_config_file(path);
    CHECK(c.seed == 9);
    CHECK(c.grid.frames == 2);
    CHECK(c.cube.t == 2);
    CHECK(c.num_text_tokens == 4);
    CHECK(c.strategy.kind == SelectionStrategy::Kind::kTopK);
    CHECK(c.strategy.k == 3);
    CHECK_FALSE(c.mean_compensation);
    CHECK(c.mode == RunMode::kBoth);

    RunConfig o = c;
    apply_config_entry(o, "p", "0.5");
    CHECK(o.strategy.kind == SelectionStrategy::Kind::kTopP);
    CHECK(o.strategy.p == doctest::Approx(0.5));
    CHECK_THROWS_AS(apply_config_entry(o, "warp_factor", "9"), ConfigError);

    const std::string bad = write_temp("bad.conf", "seed 9\n");
    CHECK_THROWS_AS(load_config_file(bad), ConfigError);
    CHECK_THROWS_AS(load_config_file("/nonexistent/adaspark.conf"), ConfigError);
}

TEST_CASE("workload: shapes, modality split, determinism, planted structure") {
    RunConfig c = small_config();
    const SequenceState a = make_workload(c);
    const SequenceState b = make_workload(c);
    CHECK(a.num_vision == 128);
    CHECK(a.seq_len() == 136);
    CHECK(a.embeddings.cols == 32);
    CHECK(test::max_abs_diff(a.embeddings, b.embeddings) == 0.0);

    c.seed = 6;
    const SequenceState other = make_workload(c);
    CHECK(test::max_abs_diff(a.embeddings, other.embeddings) > 0.0);

    // Planted structure: tokens within a cube correlate more strongly with
    // their own cube's mean than with another cube's mean.
    const auto cube0 = a.layout.cube_range(0);
    const auto cube1 = a.layout.cube_range(1);
    auto mean_row = [&](CubeLayout::Range r) {
        Vector m(32, 0.0);
        for (std::size_t i = r.begin; i < r.end; ++i) {
            for (std::size_t j = 0; j < 32; ++j) {
                m[j] += a.embeddings.at(i, j);
            }
        }
        for (double& v : m) {
            v /= static_cast<double>(r.size());
        }
        return m;
    };
    const Vector m0 = mean_row(cube0);
    const Vector m1 = mean_row(cube1);
    double own = 0.0, cross = 0.0;
    for (std::size_t i = cube0.begin; i < cube0.end; ++i) {
        for (std::size_t j = 0; j < 32; ++j) {
            own += a.embeddings.at(i, j) * m0[j];
            cross += a.embeddings.at(i, j) * m1[j];
        }
    }
    CHECK(own > cross);
}

TEST_CASE("run: identical seed and config give byte-identical reports") {
    RunConfig c = small_config();
    c.mode = RunMode::kBoth;
    const std::string a = run(c).to_json();
    const std::string b = run(c).to_json();
    CHECK(a == b);
    CHECK(a.find("wall_time") == std::string::npos);
}

TEST_CASE("run: mode=both at p=1 reports sub-1e-9 equivalence error") {
    RunConfig c = small_config();
    c.mode = RunMode::kBoth;
    c.strategy = SelectionStrategy::top_p(1.0);
    const RunReport report = run(c);
    REQUIRE(report.has_equivalence);
    CHECK(report.equiv_max_rel_error < 1e-9);
    CHECK(report.equiv_rel_error_per_layer.size() == c.num_layers);
}

TEST_CASE("run: default config emits per-layer arrays of length 4") {
    RunConfig c;  // stock defaults: cube 8x8x4, p 0.7, 4 layers
    CHECK(c.num_layers == 4);
    CHECK(format_cube(c.cube) == "8x8x4");
    CHECK(format_grid(c.grid) == "8x16x16");
    CHECK(c.strategy.p == doctest::Approx(0.7));
    // shrink the workload but keep the 4-layer default
    c.grid = {2, 8, 8};
    c.cube = {4, 4, 2};
    c.d_model = 32;
    c.d_ff = 64;
    c.num_heads = 2;
    const json report = json::parse(run(c).to_json());
    CHECK(report["per_layer"]["mean_cubes_selected"].size() == 4);
    CHECK(report["per_layer"]["mean_keep_ratio"].size() == 4);
    CHECK(report["layers"].size() == 4);
    CHECK(report["schema"] == "adaspark.run_report/1");
    for (const auto& layer : report["layers"]) {
        CHECK(layer["ffn"]["keep_ratio_per_cube"].size() == 4);
        CHECK(layer["attn"]["text_cube_selection_freq"].size() == 4);
    }
}

TEST_CASE("layer forward: sparse equals dense at p=1 through a full layer") {
    RunConfig c = small_config();
    const SequenceState state = make_workload(c);
    const LayerWeights weights = LayerWeights::seeded(c.d_model, c.d_ff, 515);
    AttentionConfig ac = c.attention_config();
    FfnConfig fc = c.ffn_config();
    ac.strategy = SelectionStrategy::top_p(1.0);
    fc.strategy = SelectionStrategy::top_p(1.0);
    const Matrix sparse = sparse_layer_forward(state, weights, ac, fc);
    const Matrix dense = dense_layer_forward(state, weights, ac, fc);
    CHECK(max_rel_error(sparse, dense) < 1e-12);
}

TEST_CASE("sweep: p axis rows are monotone and independent of ordering") {
    RunConfig base = small_config();
    const std::vector<std::string> values = {"1.0", "0.7", "0.4"};
    const auto rows = sweep(SweepAxis::kP, values, base);
    REQUIRE(rows.size() == 3);
    for (const auto& row : rows) {
        CHECK(row.ok);
    }
    CHECK(rows[0].sparse_flops >= rows[1].sparse_flops);
    CHECK(rows[1].sparse_flops >= rows[2].sparse_flops);

    const auto reordered = sweep(SweepAxis::kP, {"0.4", "1.0"}, base);
    CHECK(reordered[0].sparse_flops == rows[2].sparse_flops);
    CHECK(reordered[1].sparse_flops == rows[0].sparse_flops);
}

TEST_CASE("sweep: cube_shape keeps the token count and flags bad shapes") {
    RunConfig base = small_config();
    base.grid = {64, 8, 8};
    base.num_layers = 1;
    base.num_text_tokens = 0;
    const auto rows =
        sweep(SweepAxis::kCubeShape, {"1x1x64", "4x4x4", "8x8x1", "5x5x5"}, base);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].ok);
    CHECK(rows[1].ok);
    CHECK(rows[2].ok);
    CHECK_FALSE(rows[3].ok);
    CHECK(rows[3].error.find("divisible") != std::string::npos);
    // identical workload size in every valid row
    CHECK(rows[0].dense_flops == rows[1].dense_flops);
    CHECK(rows[1].dense_flops == rows[2].dense_flops);
}

TEST_CASE("sweep: cube_size scales the temporal extent and keeps going on errors") {
    RunConfig base = small_config();
    base.grid = {8, 16, 16};
    base.cube = {8, 8, 4};
    base.d_model = 32;
    base.num_layers = 1;
    const auto rows = sweep(SweepAxis::kCubeSize, {"64", "256", "96", "1024"}, base);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].ok);   // t = 1
    CHECK(rows[1].ok);   // t = 4
    CHECK_FALSE(rows[2].ok);  // 96 not a multiple of 64
    CHECK_FALSE(rows[3].ok);  // t = 16 > 8 frames
}

TEST_CASE("sweep: strategy rows land within 10% of the top-p pilot's FLOPs") {
    RunConfig base = small_config();
    base.num_layers = 1;
    const auto rows = sweep(SweepAxis::kStrategy, {"topp", "topk", "uniform"}, base);
    REQUIRE(rows.size() == 3);
    for (const auto& row : rows) {
        REQUIRE(row.ok);
    }
    const double reference = rows[0].sparse_flops;
    for (const auto& row : rows) {
        CHECK(std::abs(row.sparse_flops - reference) / reference < 0.10);
    }
    CHECK(rows[1].value.find("topk") != std::string::npos);
    CHECK(rows[2].value.find("uniform") != std::string::npos);
}

TEST_CASE("sweep: csv and json serializations carry every row") {
    RunConfig base = small_config();
    base.num_layers = 1;
    const auto rows = sweep(SweepAxis::kP, {"0.7", "2.5"}, base);
    const std::string csv = sweep_to_csv(rows);
    CHECK(csv.find("value,status") == 0);
    CHECK(csv.find("0.7,ok") != std::string::npos);
    CHECK(csv.find("2.5,error") != std::string::npos);
    const json parsed = json::parse(sweep_to_json(rows));
    CHECK(parsed["schema"] == "adaspark.sweep/1");
    REQUIRE(parsed["rows"].size() == 2);
    CHECK(parsed["rows"][0]["status"] == "ok");
    CHECK(parsed["rows"][1]["status"] == "error");
}

TEST_CASE("diagnostics: per-layer arrays, modality split, empty text section") {
    RunConfig c = small_config();
    const json diag = json::parse(diagnostics_json(c, 0.7));
    CHECK(diag["schema"] == "adaspark.diagnostics/1");
    CHECK(diag["cumulative_attention_per_layer"].size() == c.num_layers);
    REQUIRE(diag["ffn_norm_ratio_per_layer"].size() == c.num_layers);
    for (const auto& layer : diag["ffn_norm_ratio_per_layer"]) {
        CHECK(layer.contains("vision"));
        CHECK(layer.contains("text"));
        CHECK(layer["vision"]["count"] == 128);
        CHECK(layer["text"]["count"] == 8);
        CHECK(layer["vision"]["mean"].get<double>() > 0.0);
    }

    RunConfig no_text = c;
    no_text.num_text_tokens = 0;
    const json silent = json::parse(diagnostics_json(no_text, 0.7));
    CHECK(silent["cumulative_attention_per_layer"].empty());
    for (const auto& layer : silent["ffn_norm_ratio_per_layer"]) {
        CHECK(layer["text"]["count"] == 0);
    }

    CHECK_THROWS_AS(diagnostics_json(c, 0.0), ConfigError);
}

TEST_CASE("flops table: analytical rows in both formats") {
    RunConfig c = small_config();
    const std::string csv = flops_table_csv(c);
    CHECK(csv.find("fraction,n_bar") != std::string::npos);
    std::size_t lines = 0;
    for (char ch : csv) {
        lines += ch == '\n' ? 1 : 0;
    }
    CHECK(lines == 12);  // comment + header + 10 rows
    const json table = json::parse(flops_table_json(c));
    CHECK(table["schema"] == "adaspark.flops/1");
    REQUIRE(table["rows"].size() == 10);
    CHECK(table["rows"][9]["fraction"] == 1.0);
    const double full = table["rows"][9]["sparse_ffn_flops"].get<double>();
    CHECK(full == table["dense"]["ffn"].get<double>());
}

TEST_CASE("golden file: the pinned config reproduces the committed report") {
    const std::string golden_dir = ADASPARK_GOLDEN_DIR;
    const RunConfig config = load_config_file(golden_dir + "/golden.conf");
    const std::string got = run(config).to_json();
    std::ifstream in(golden_dir + "/run_report.json", std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    CHECK(got == buffer.str());
}
