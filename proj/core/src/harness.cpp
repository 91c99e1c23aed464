// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#include "adaspark/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "adaspark/rng.hpp"

namespace adaspark {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kPlantedCubeWeight = 0.5;  // shared per-cube component scale

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::size_t parse_count(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(text, &pos);
        if (pos != text.size() || v < 0) {
            throw std::invalid_argument(what);
        }
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError(what + ": expected a non-negative integer, got '" + text + "'");
    }
}

double parse_real(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) {
            throw std::invalid_argument(what);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": expected a real number, got '" + text + "'");
    }
}

bool parse_bool(const std::string& text, const std::string& what) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no" || text == "off") {
        return false;
    }
    throw ConfigError(what + ": expected a boolean, got '" + text + "'");
}

std::vector<std::size_t> parse_triple(const std::string& text, const std::string& what) {
    std::vector<std::size_t> parts;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, 'x')) {
        parts.push_back(parse_count(trim(token), what));
    }
    if (parts.size() != 3) {
        throw ConfigError(what + ": expected three x-separated extents, got '" + text + "'");
    }
    return parts;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

ordered_json strategy_to_json(const SelectionStrategy& s) {
    switch (s.kind) {
        case SelectionStrategy::Kind::kTopP:
            return {{"kind", "topp"}, {"p", s.p}};
        case SelectionStrategy::Kind::kTopK:
            return {{"kind", "topk"}, {"k", s.k}};
        case SelectionStrategy::Kind::kUniform:
            return {{"kind", "uniform"}, {"ratio", s.ratio}};
    }
    return {};
}

ordered_json config_to_json(const RunConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["grid"] = format_grid(c.grid);
    j["cube"] = format_cube(c.cube);
    j["text_tokens"] = c.num_text_tokens;
    j["layers"] = c.num_layers;
    j["heads"] = c.num_heads;
    j["d_model"] = c.d_model;
    j["d_ff"] = c.d_ff;
    j["strategy"] = strategy_to_json(c.strategy);
    if (c.ffn_strategy.has_value()) {
        j["ffn_strategy"] = strategy_to_json(*c.ffn_strategy);
    }
    j["mean_compensation"] = c.mean_compensation;
    j["mode"] = to_string(c.mode);
    return j;
}

ordered_json stats_summary(const double* values, std::size_t n) {
    ordered_json j;
    j["count"] = n;
    if (n == 0) {
        j["mean"] = 0.0;
        j["stddev"] = 0.0;
        j["min"] = 0.0;
        j["max"] = 0.0;
        return j;
    }
    double sum = 0.0, lo = values[0], hi = values[0];
    for (std::size_t i = 0; i < n; ++i) {
        sum += values[i];
        lo = std::min(lo, values[i]);
        hi = std::max(hi, values[i]);
    }
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        var += (values[i] - mean) * (values[i] - mean);
    }
    j["mean"] = mean;
    j["stddev"] = std::sqrt(var / static_cast<double>(n));
    j["min"] = lo;
    j["max"] = hi;
    return j;
}

double mean_of(const double* values, std::size_t n) {
    if (n == 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += values[i];
    }
    return sum / static_cast<double>(n);
}

LayerStats make_sparse_layer_stats(const AttnTrace& at, const FfnTrace& ft,
                                   std::size_t tokens_per_cube, std::size_t vision,
                                   std::size_t seq) {
    LayerStats s;
    s.attn_mean_cubes_selected = at.mean_selected();
    double attended = 0.0;
    for (std::uint32_t a : at.attended_count) {
        attended += a;
    }
    s.attn_mean_attended_keys =
        at.attended_count.empty() ? 0.0 : attended / static_cast<double>(at.attended_count.size());
    s.attn_mean_local_prefix = at.mean_local(tokens_per_cube);
    s.text_cube_selection_freq = at.text_cube_freq();
    s.ffn_mean_keep_ratio = ft.mean_keep_ratio();
    s.keep_ratio_per_cube = ft.keep_ratio;
    s.norm_ratio_vision_mean = mean_of(ft.norm_ratio.data(), vision);
    s.norm_ratio_text_mean = mean_of(ft.norm_ratio.data() + vision, seq - vision);
    return s;
}

LayerStats make_dense_layer_stats(const FfnTrace& ft, std::size_t vision, std::size_t seq) {
    LayerStats s;
    s.ffn_mean_keep_ratio = ft.mean_keep_ratio();
    s.keep_ratio_per_cube = ft.keep_ratio;
    s.norm_ratio_vision_mean = mean_of(ft.norm_ratio.data(), vision);
    s.norm_ratio_text_mean = mean_of(ft.norm_ratio.data() + vision, seq - vision);
    return s;
}

}  // namespace

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::kSparse: return "sparse";
        case RunMode::kDense: return "dense";
        case RunMode::kBoth: return "both";
    }
    return "sparse";
}

RunMode parse_run_mode(const std::string& text) {
    if (text == "sparse") return RunMode::kSparse;
    if (text == "dense") return RunMode::kDense;
    if (text == "both") return RunMode::kBoth;
    throw ConfigError("mode: expected sparse, dense or both, got '" + text + "'");
}

GridShape parse_grid(const std::string& text) {
    const auto parts = parse_triple(text, "grid");
    return GridShape{parts[0], parts[1], parts[2]};
}

CubeShape parse_cube(const std::string& text) {
    const auto parts = parse_triple(text, "cube");
    return CubeShape{parts[0], parts[1], parts[2]};
}

std::string format_grid(const GridShape& grid) {
    return std::to_string(grid.frames) + "x" + std::to_string(grid.height) + "x" +
           std::to_string(grid.width);
}

std::string format_cube(const CubeShape& cube) {
    return std::to_string(cube.h) + "x" + std::to_string(cube.w) + "x" + std::to_string(cube.t);
}

SelectionStrategy parse_strategy(const std::string& text) {
    std::string kind = text;
    std::string param;
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        kind = text.substr(0, colon);
        param = trim(text.substr(colon + 1));
    }
    kind = trim(kind);
    SelectionStrategy s;
    if (kind == "topp") {
        s = SelectionStrategy::top_p(param.empty() ? 0.7 : parse_real(param, "strategy topp"));
    } else if (kind == "topk") {
        s = SelectionStrategy::top_k(param.empty() ? 1 : parse_count(param, "strategy topk"));
    } else if (kind == "uniform") {
        s = SelectionStrategy::uniform(param.empty() ? 1.0
                                                     : parse_real(param, "strategy uniform"));
    } else {
        throw ConfigError("strategy: expected topp, topk or uniform, got '" + text + "'");
    }
    s.validate();
    return s;
}

std::string format_strategy(const SelectionStrategy& s) {
    switch (s.kind) {
        case SelectionStrategy::Kind::kTopP: return "topp:" + format_double(s.p);
        case SelectionStrategy::Kind::kTopK: return "topk:" + std::to_string(s.k);
        case SelectionStrategy::Kind::kUniform: return "uniform:" + format_double(s.ratio);
    }
    return "";
}

void RunConfig::validate() const {
    if (num_layers < 1) {
        throw ConfigError("config: layers must be >= 1");
    }
    if (grid.frames < 1 || grid.height < 1 || grid.width < 1) {
        throw ConfigError("config: grid extents must all be >= 1");
    }
    CubeLayout::partition(grid, cube);  // divisibility check
    attention_config().validate();
    ffn_config().validate();
}

AttentionConfig RunConfig::attention_config() const {
    AttentionConfig c;
    c.num_heads = num_heads;
    c.d_model = d_model;
    c.strategy = strategy;
    return c;
}

FfnConfig RunConfig::ffn_config() const {
    FfnConfig c;
    c.d_model = d_model;
    c.d_ff = d_ff;
    c.strategy = ffn_strategy.value_or(strategy);
    c.mean_compensation = mean_compensation;
    return c;
}

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "seed") {
        config.seed = parse_count(value, "seed");
    } else if (key == "grid") {
        config.grid = parse_grid(value);
    } else if (key == "cube") {
        config.cube = parse_cube(value);
    } else if (key == "text_tokens") {
        config.num_text_tokens = parse_count(value, "text_tokens");
    } else if (key == "layers") {
        config.num_layers = parse_count(value, "layers");
    } else if (key == "heads") {
        config.num_heads = parse_count(value, "heads");
    } else if (key == "d_model") {
        config.d_model = parse_count(value, "d_model");
    } else if (key == "d_ff") {
        config.d_ff = parse_count(value, "d_ff");
    } else if (key == "strategy") {
        config.strategy = parse_strategy(value);
    } else if (key == "ffn_strategy") {
        config.ffn_strategy = parse_strategy(value);
    } else if (key == "p") {
        config.strategy = SelectionStrategy::top_p(parse_real(value, "p"));
        config.strategy.validate();
    } else if (key == "k") {
        config.strategy = SelectionStrategy::top_k(parse_count(value, "k"));
    } else if (key == "ratio") {
        config.strategy = SelectionStrategy::uniform(parse_real(value, "ratio"));
        config.strategy.validate();
    } else if (key == "mean_compensation") {
        config.mean_compensation = parse_bool(value, "mean_compensation");
    } else if (key == "mode") {
        config.mode = parse_run_mode(value);
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    RunConfig config;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(lineno) +
                              " is not a key=value entry");
        }
        apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

SequenceState make_workload(const RunConfig& config) {
    CubeLayout layout = CubeLayout::partition(config.grid, config.cube);
    const std::size_t vis = layout.total_tokens();
    const std::size_t seq = vis + config.num_text_tokens;
    Matrix emb(seq, config.d_model);

    GaussianStream cube_stream(derive_seed(config.seed, 1));
    GaussianStream noise_stream(derive_seed(config.seed, 2));
    GaussianStream text_stream(derive_seed(config.seed, 3));

    const double a = kPlantedCubeWeight;
    const double b = std::sqrt(1.0 - a * a);
    Vector shared(config.d_model);
    for (std::size_t cube = 0; cube < layout.num_cubes(); ++cube) {
        for (double& v : shared) {
            v = cube_stream.next();
        }
        const auto range = layout.cube_range(cube);
        for (std::size_t r = range.begin; r < range.end; ++r) {
            double* row = emb.row(r);
            for (std::size_t j = 0; j < config.d_model; ++j) {
                row[j] = a * shared[j] + b * noise_stream.next();
            }
        }
    }
    for (std::size_t r = vis; r < seq; ++r) {
        double* row = emb.row(r);
        for (std::size_t j = 0; j < config.d_model; ++j) {
            row[j] = text_stream.next();
        }
    }
    return SequenceState{std::move(emb), vis, std::move(layout)};
}

Matrix sparse_layer_forward(const SequenceState& state, const LayerWeights& weights,
                            const AttentionConfig& attn_config, const FfnConfig& ffn_config,
                            AttnTrace* attn_trace, FfnTrace* ffn_trace, MacCounter* counter) {
    const SequenceState normed =
        state.with_embeddings(rms_norm(state.embeddings, weights.attn_norm_gain));
    const Matrix attn = sparse_attend(normed, weights, attn_config, attn_trace, counter);
    Matrix hidden = state.embeddings;
    for (std::size_t i = 0; i < hidden.data.size(); ++i) {
        hidden.data[i] += attn.data[i];
    }
    return sparse_ffn(state.with_embeddings(std::move(hidden)), weights, ffn_config, ffn_trace,
                      counter);
}

Matrix dense_layer_forward(const SequenceState& state, const LayerWeights& weights,
                           const AttentionConfig& attn_config, const FfnConfig& ffn_config,
                           FfnTrace* ffn_trace, MacCounter* counter) {
    const SequenceState normed =
        state.with_embeddings(rms_norm(state.embeddings, weights.attn_norm_gain));
    const Matrix attn = dense_attend(normed, weights, attn_config, counter);
    Matrix hidden = state.embeddings;
    for (std::size_t i = 0; i < hidden.data.size(); ++i) {
        hidden.data[i] += attn.data[i];
    }
    return dense_ffn(state.with_embeddings(std::move(hidden)), weights, ffn_config, ffn_trace,
                     counter);
}

RunReport run(const RunConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    const SequenceState state = make_workload(config);
    const AttentionConfig attn_config = config.attention_config();
    const FfnConfig ffn_config = config.ffn_config();

    std::vector<LayerWeights> weights;
    weights.reserve(config.num_layers);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        weights.push_back(
            LayerWeights::seeded(config.d_model, config.d_ff, derive_seed(config.seed, 1000 + l)));
    }

    RunReport report;
    report.config = config;
    report.vision_tokens = state.num_vision;
    report.total_tokens = state.seq_len();
    report.num_cubes = state.layout.num_cubes();
    report.tokens_per_cube = state.layout.tokens_per_cube();

    const bool want_sparse = config.mode != RunMode::kDense;
    const bool want_dense = config.mode != RunMode::kSparse;
    const std::size_t seq = state.seq_len();
    const std::size_t vis = state.num_vision;
    const std::size_t heads = config.num_heads;
    const std::size_t c = state.layout.tokens_per_cube();

    MacCounter sparse_counter;
    MacCounter dense_counter;
    Matrix x_sparse = state.embeddings;
    Matrix x_dense = state.embeddings;

    std::uint64_t selected_events = 0;
    std::uint64_t attended_keys = 0;
    std::uint64_t activated_tokens = 0;

    for (std::size_t l = 0; l < config.num_layers; ++l) {
        if (want_sparse) {
            AttnTrace attn_trace;
            FfnTrace ffn_trace;
            x_sparse = sparse_layer_forward(state.with_embeddings(std::move(x_sparse)),
                                            weights[l], attn_config, ffn_config, &attn_trace,
                                            &ffn_trace, &sparse_counter);
            report.layers.push_back(
                make_sparse_layer_stats(attn_trace, ffn_trace, c, vis, seq));
            for (std::size_t i = 0; i < attn_trace.selected_count.size(); ++i) {
                selected_events += attn_trace.selected_count[i];
                attended_keys += attn_trace.attended_count[i];
            }
            activated_tokens += ffn_trace.activated_total();
        }
        if (want_dense) {
            FfnTrace ffn_trace;
            x_dense = dense_layer_forward(state.with_embeddings(std::move(x_dense)), weights[l],
                                          attn_config, ffn_config,
                                          want_sparse ? nullptr : &ffn_trace, &dense_counter);
            if (!want_sparse) {
                report.layers.push_back(make_dense_layer_stats(ffn_trace, vis, seq));
            }
        }
        if (want_sparse && want_dense) {
            report.equiv_rel_error_per_layer.push_back(max_rel_error(x_sparse, x_dense));
        }
    }

    if (want_sparse && want_dense) {
        report.has_equivalence = true;
        report.equiv_max_rel_error = 0.0;
        for (double e : report.equiv_rel_error_per_layer) {
            report.equiv_max_rel_error = std::max(report.equiv_max_rel_error, e);
        }
    }

    CostInputs inputs;
    inputs.seq_len = seq;
    inputs.vision_tokens = vis;
    inputs.text_tokens = seq - vis;
    inputs.d_model = config.d_model;
    inputs.d_ff = config.d_ff;
    inputs.tokens_per_cube = c;
    inputs.num_cubes = state.layout.num_cubes();
    inputs.num_layers = config.num_layers;
    const double query_head_events =
        static_cast<double>(seq) * static_cast<double>(heads) *
        static_cast<double>(config.num_layers);
    if (want_sparse) {
        inputs.n_bar = static_cast<double>(selected_events) / query_head_events;
        inputs.r_bar = static_cast<double>(activated_tokens) /
                       (static_cast<double>(vis) * static_cast<double>(config.num_layers));
        inputs.local_avg =
            (static_cast<double>(attended_keys) -
             static_cast<double>(selected_events) * static_cast<double>(c)) /
            query_head_events;
    } else {
        inputs.n_bar = 0.0;
        inputs.r_bar = 1.0;
        inputs.local_avg = 0.0;
    }

    report.flops = build_flops_report(inputs, want_sparse ? &sparse_counter : nullptr,
                                      want_dense ? &dense_counter : nullptr);

    const auto end = std::chrono::steady_clock::now();
    report.wall_time_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(end - start)
            .count();
    return report;
}

std::string RunReport::to_json() const {
    ordered_json j;
    j["schema"] = "adaspark.run_report/1";
    j["config"] = config_to_json(config);
    j["sequence"] = {{"vision_tokens", vision_tokens},
                     {"text_tokens", total_tokens - vision_tokens},
                     {"total_tokens", total_tokens},
                     {"num_cubes", num_cubes},
                     {"tokens_per_cube", tokens_per_cube}};

    ordered_json cubes_selected = ordered_json::array();
    ordered_json keep_ratio = ordered_json::array();
    for (const LayerStats& s : layers) {
        cubes_selected.push_back(s.attn_mean_cubes_selected);
        keep_ratio.push_back(s.ffn_mean_keep_ratio);
    }
    j["per_layer"] = {{"mean_cubes_selected", cubes_selected},
                      {"mean_keep_ratio", keep_ratio}};

    ordered_json layer_array = ordered_json::array();
    for (const LayerStats& s : layers) {
        ordered_json attn;
        attn["mean_cubes_selected"] = s.attn_mean_cubes_selected;
        attn["mean_attended_keys"] = s.attn_mean_attended_keys;
        attn["mean_local_prefix"] = s.attn_mean_local_prefix;
        attn["text_cube_selection_freq"] = s.text_cube_selection_freq;
        ordered_json ffn;
        ffn["mean_keep_ratio"] = s.ffn_mean_keep_ratio;
        ffn["keep_ratio_per_cube"] = s.keep_ratio_per_cube;
        ffn["norm_ratio_vision_mean"] = s.norm_ratio_vision_mean;
        ffn["norm_ratio_text_mean"] = s.norm_ratio_text_mean;
        layer_array.push_back({{"attn", attn}, {"ffn", ffn}});
    }
    j["layers"] = layer_array;

    ordered_json flops_json;
    flops_json["observed"] = {{"n_bar", flops.inputs.n_bar},
                              {"r_bar", flops.inputs.r_bar},
                              {"local_avg", flops.inputs.local_avg}};
    flops_json["analytical"] = {{"dense_attn_approx", flops.analytical_dense_attn},
                                {"dense_attn_exact", flops.analytical_dense_attn_exact},
                                {"sparse_attn", flops.analytical_sparse_attn},
                                {"local_attn_exact", flops.analytical_local_attn},
                                {"dense_ffn", flops.analytical_dense_ffn},
                                {"sparse_ffn", flops.analytical_sparse_ffn}};
    flops_json["measured"] = {{"attn_selected", flops.measured_attn_selected},
                              {"attn_local", flops.measured_attn_local},
                              {"attn_dense", flops.measured_attn_dense},
                              {"ffn_vision", flops.measured_ffn_vision},
                              {"ffn_text", flops.measured_ffn_text},
                              {"projection", flops.measured_projection},
                              {"overhead", flops.measured_overhead}};
    flops_json["comparison"] = {{"sparse_total", flops.measured_sparse_total()},
                                {"dense_reference_total", flops.dense_reference_total()},
                                {"reduction_ratio", flops.reduction_ratio}};
    j["flops"] = flops_json;

    if (has_equivalence) {
        j["equivalence"] = {{"max_rel_error", equiv_max_rel_error},
                            {"per_layer", equiv_rel_error_per_layer}};
    }
    return j.dump(2) + "\n";
}

std::string RunReport::csv_header() {
    return "seed,mode,grid,cube,text_tokens,layers,heads,d_model,d_ff,strategy,"
           "n_bar,r_bar,sparse_flops,dense_reference_flops,reduction_ratio,max_rel_error";
}

std::string RunReport::to_csv_row() const {
    std::ostringstream out;
    out << config.seed << ',' << to_string(config.mode) << ',' << format_grid(config.grid) << ','
        << format_cube(config.cube) << ',' << config.num_text_tokens << ',' << config.num_layers
        << ',' << config.num_heads << ',' << config.d_model << ',' << config.d_ff << ','
        << format_strategy(config.strategy) << ',' << format_double(flops.inputs.n_bar) << ','
        << format_double(flops.inputs.r_bar) << ','
        << format_double(flops.measured_sparse_total()) << ','
        << format_double(flops.dense_reference_total()) << ','
        << format_double(flops.reduction_ratio) << ','
        << format_double(has_equivalence ? equiv_max_rel_error : 0.0);
    return out.str();
}

SweepAxis parse_sweep_axis(const std::string& text) {
    if (text == "cube_shape") return SweepAxis::kCubeShape;
    if (text == "cube_size") return SweepAxis::kCubeSize;
    if (text == "p") return SweepAxis::kP;
    if (text == "strategy") return SweepAxis::kStrategy;
    throw ConfigError("sweep axis: expected cube_shape, cube_size, p or strategy, got '" + text +
                      "'");
}

namespace {

// Expected selected cubes per (query, head) under fixed top-k: min(k, i)
// for a vision query in cube i, min(k, N) for a text query.
double expected_topk_selected(std::size_t k, std::size_t num_cubes, std::size_t tokens_per_cube,
                              std::size_t text_tokens) {
    double total = 0.0;
    for (std::size_t i = 0; i < num_cubes; ++i) {
        total += static_cast<double>(tokens_per_cube) *
                 static_cast<double>(std::min(k, i));
    }
    total += static_cast<double>(text_tokens) * static_cast<double>(std::min(k, num_cubes));
    const double queries = static_cast<double>(num_cubes * tokens_per_cube + text_tokens);
    return total / queries;
}

double expected_uniform_selected(double ratio, std::size_t num_cubes,
                                 std::size_t tokens_per_cube, std::size_t text_tokens) {
    double total = 0.0;
    for (std::size_t i = 0; i < num_cubes; ++i) {
        const double picked = i == 0 ? 0.0 : std::ceil(ratio * static_cast<double>(i) - 1e-12);
        total += static_cast<double>(tokens_per_cube) * picked;
    }
    total += static_cast<double>(text_tokens) *
             std::ceil(ratio * static_cast<double>(num_cubes) - 1e-12);
    const double queries = static_cast<double>(num_cubes * tokens_per_cube + text_tokens);
    return total / queries;
}

struct CalibratedStrategies {
    SelectionStrategy attention;
    SelectionStrategy ffn;
    std::string label;
};

CalibratedStrategies calibrate_topk(double n_bar, double r_bar, std::size_t num_cubes,
                                    std::size_t tokens_per_cube, std::size_t text_tokens) {
    std::size_t best_k = 1;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= std::max<std::size_t>(num_cubes, 1); ++k) {
        const double err = std::abs(
            expected_topk_selected(k, num_cubes, tokens_per_cube, text_tokens) - n_bar);
        if (err < best_err) {
            best_err = err;
            best_k = k;
        }
    }
    const std::size_t ffn_k = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(r_bar * static_cast<double>(tokens_per_cube))), 1,
        tokens_per_cube);
    CalibratedStrategies out;
    out.attention = SelectionStrategy::top_k(best_k);
    out.ffn = SelectionStrategy::top_k(ffn_k);
    out.label = "topk[attn_k=" + std::to_string(best_k) + " ffn_k=" + std::to_string(ffn_k) + "]";
    return out;
}

CalibratedStrategies calibrate_uniform(double n_bar, double r_bar, std::size_t num_cubes,
                                       std::size_t tokens_per_cube, std::size_t text_tokens) {
    double best_ratio = 1.0;
    double best_err = std::numeric_limits<double>::infinity();
    const std::size_t steps = 4 * std::max<std::size_t>(num_cubes, 1);
    for (std::size_t s = 1; s <= steps; ++s) {
        const double ratio = static_cast<double>(s) / static_cast<double>(steps);
        const double err = std::abs(
            expected_uniform_selected(ratio, num_cubes, tokens_per_cube, text_tokens) - n_bar);
        if (err < best_err) {
            best_err = err;
            best_ratio = ratio;
        }
    }
    const double ffn_ratio = std::clamp(r_bar, 1.0 / static_cast<double>(tokens_per_cube), 1.0);
    CalibratedStrategies out;
    out.attention = SelectionStrategy::uniform(best_ratio);
    out.ffn = SelectionStrategy::uniform(ffn_ratio);
    out.label = "uniform[attn_r=" + format_double(best_ratio) +
                " ffn_r=" + format_double(ffn_ratio) + "]";
    return out;
}

SweepRow row_from_report(const RunReport& report, const std::string& value) {
    SweepRow row;
    row.value = value;
    row.ok = true;
    row.n_bar = report.flops.inputs.n_bar;
    row.r_bar = report.flops.inputs.r_bar;
    row.sparse_flops = report.flops.measured_sparse_total();
    row.dense_flops = report.flops.dense_reference_total();
    row.reduction = report.flops.reduction_ratio;
    return row;
}

}  // namespace

std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<std::string>& values,
                            const RunConfig& base) {
    base.validate();
    std::vector<SweepRow> rows;
    rows.reserve(values.size());

    // The strategy axis calibrates topk/uniform against a pilot run of the
    // base strategy so all rows sit at an equivalent compression level.
    std::optional<RunReport> pilot;
    auto ensure_pilot = [&]() -> const RunReport& {
        if (!pilot.has_value()) {
            RunConfig pilot_config = base;
            pilot_config.mode = RunMode::kSparse;
            pilot = run(pilot_config);
        }
        return *pilot;
    };

    for (const std::string& raw : values) {
        const std::string value = trim(raw);
        SweepRow row;
        row.value = value;
        try {
            RunConfig config = base;
            config.mode = RunMode::kSparse;
            std::string label = value;
            switch (axis) {
                case SweepAxis::kP: {
                    config.strategy = SelectionStrategy::top_p(parse_real(value, "sweep p"));
                    config.strategy.validate();
                    config.ffn_strategy.reset();
                    break;
                }
                case SweepAxis::kCubeShape: {
                    config.cube = parse_cube(value);
                    break;
                }
                case SweepAxis::kCubeSize: {
                    const std::size_t size = parse_count(value, "sweep cube_size");
                    const std::size_t spatial = base.cube.h * base.cube.w;
                    if (spatial == 0 || size % spatial != 0 || size / spatial == 0) {
                        throw ConfigError("cube size " + value +
                                          " is not a multiple of the base spatial window " +
                                          std::to_string(spatial));
                    }
                    config.cube = CubeShape{base.cube.h, base.cube.w, size / spatial};
                    break;
                }
                case SweepAxis::kStrategy: {
                    std::string kind = value;
                    std::string param;
                    const auto colon = value.find(':');
                    if (colon != std::string::npos) {
                        kind = value.substr(0, colon);
                        param = trim(value.substr(colon + 1));
                    }
                    const bool automatic = param.empty() || param == "auto";
                    if (kind == "topp") {
                        const double p = automatic
                                             ? (base.strategy.kind == SelectionStrategy::Kind::kTopP
                                                    ? base.strategy.p
                                                    : 0.7)
                                             : parse_real(param, "sweep strategy topp");
                        config.strategy = SelectionStrategy::top_p(p);
                        config.strategy.validate();
                        config.ffn_strategy.reset();
                        label = format_strategy(config.strategy);
                    } else if (kind == "topk" && automatic) {
                        const RunReport& p = ensure_pilot();
                        const CalibratedStrategies cal = calibrate_topk(
                            p.flops.inputs.n_bar, p.flops.inputs.r_bar, p.num_cubes,
                            p.tokens_per_cube, p.total_tokens - p.vision_tokens);
                        config.strategy = cal.attention;
                        config.ffn_strategy = cal.ffn;
                        label = cal.label;
                    } else if (kind == "uniform" && automatic) {
                        const RunReport& p = ensure_pilot();
                        const CalibratedStrategies cal = calibrate_uniform(
                            p.flops.inputs.n_bar, p.flops.inputs.r_bar, p.num_cubes,
                            p.tokens_per_cube, p.total_tokens - p.vision_tokens);
                        config.strategy = cal.attention;
                        config.ffn_strategy = cal.ffn;
                        label = cal.label;
                    } else {
                        config.strategy = parse_strategy(value);
                        config.ffn_strategy.reset();
                        label = format_strategy(config.strategy);
                    }
                    break;
                }
            }
            config.validate();
            row = row_from_report(run(config), label);
        } catch (const ConfigError& e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "value,status,n_bar,r_bar,sparse_flops,dense_reference_flops,reduction_ratio,error\n";
    for (const SweepRow& row : rows) {
        if (row.ok) {
            out << row.value << ",ok," << format_double(row.n_bar) << ','
                << format_double(row.r_bar) << ',' << format_double(row.sparse_flops) << ','
                << format_double(row.dense_flops) << ',' << format_double(row.reduction)
                << ",\n";
        } else {
            out << row.value << ",error,,,,,," << '"' << row.error << '"' << "\n";
        }
    }
    return out.str();
}

std::string sweep_to_json(const std::vector<SweepRow>& rows) {
    ordered_json arr = ordered_json::array();
    for (const SweepRow& row : rows) {
        ordered_json j;
        j["value"] = row.value;
        j["status"] = row.ok ? "ok" : "error";
        if (row.ok) {
            j["n_bar"] = row.n_bar;
            j["r_bar"] = row.r_bar;
            j["sparse_flops"] = row.sparse_flops;
            j["dense_reference_flops"] = row.dense_flops;
            j["reduction_ratio"] = row.reduction;
        } else {
            j["error"] = row.error;
        }
        arr.push_back(j);
    }
    ordered_json out;
    out["schema"] = "adaspark.sweep/1";
    out["rows"] = arr;
    return out.dump(2) + "\n";
}

std::string diagnostics_json(const RunConfig& config, double threshold) {
    config.validate();
    if (!(threshold > 0.0) || !(threshold < 1.0)) {
        throw ConfigError("diagnostics threshold must lie in (0, 1)");
    }
    const SequenceState state = make_workload(config);
    const AttentionConfig attn_config = config.attention_config();
    const FfnConfig ffn_config = config.ffn_config();

    ordered_json cum = ordered_json::array();
    ordered_json norms = ordered_json::array();
    Matrix x = state.embeddings;
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        const LayerWeights weights =
            LayerWeights::seeded(config.d_model, config.d_ff, derive_seed(config.seed, 1000 + l));
        const SequenceState current = state.with_embeddings(std::move(x));
        if (current.num_text() > 0) {
            const SequenceState normed = current.with_embeddings(
                rms_norm(current.embeddings, weights.attn_norm_gain));
            cum.push_back(
                cumulative_attention_profile(normed, weights, attn_config, threshold));
        }
        FfnTrace trace;
        x = dense_layer_forward(current, weights, attn_config, ffn_config, &trace, nullptr);
        ordered_json entry;
        entry["vision"] =
            stats_summary(trace.norm_ratio.data(), current.num_vision);
        entry["text"] = stats_summary(trace.norm_ratio.data() + current.num_vision,
                                      current.num_text());
        norms.push_back(entry);
    }

    ordered_json out;
    out["schema"] = "adaspark.diagnostics/1";
    out["config"] = config_to_json(config);
    out["threshold"] = threshold;
    out["cumulative_attention_per_layer"] = cum;
    out["ffn_norm_ratio_per_layer"] = norms;
    return out.dump(2) + "\n";
}

namespace {

struct FlopsTableRow {
    double fraction;
    double n_bar;
    double sparse_attn;
    double sparse_ffn;
    double sparse_total;
    double reduction;
};

std::vector<FlopsTableRow> flops_table_rows(const RunConfig& config) {
    const CubeLayout layout = CubeLayout::partition(config.grid, config.cube);
    const std::size_t vis = layout.total_tokens();
    const std::size_t seq = vis + config.num_text_tokens;
    const double layers = static_cast<double>(config.num_layers);
    const double dense_total =
        layers * (exact_causal_attn_flops(seq, config.d_model) +
                  dense_ffn_flops(seq, config.d_model, config.d_ff));
    std::vector<FlopsTableRow> rows;
    for (int i = 1; i <= 10; ++i) {
        const double f = static_cast<double>(i) / 10.0;
        FlopsTableRow row;
        row.fraction = f;
        row.n_bar = f * static_cast<double>(layout.num_cubes());
        row.sparse_attn = layers * sparse_attn_flops(seq, row.n_bar, layout.tokens_per_cube(),
                                                     config.d_model);
        row.sparse_ffn =
            layers * (sparse_ffn_flops(f, vis, config.d_model, config.d_ff) +
                      dense_ffn_flops(config.num_text_tokens, config.d_model, config.d_ff));
        row.sparse_total = row.sparse_attn + row.sparse_ffn;
        row.reduction = 1.0 - row.sparse_total / dense_total;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

std::string flops_table_csv(const RunConfig& config) {
    const CubeLayout layout = CubeLayout::partition(config.grid, config.cube);
    const std::size_t seq = layout.total_tokens() + config.num_text_tokens;
    const double layers = static_cast<double>(config.num_layers);
    std::ostringstream out;
    out << "# dense_attn_approx=" << format_double(layers * dense_attn_flops(seq, config.d_model))
        << " dense_attn_exact="
        << format_double(layers * exact_causal_attn_flops(seq, config.d_model))
        << " dense_ffn=" << format_double(layers * dense_ffn_flops(seq, config.d_model, config.d_ff))
        << "\n";
    out << "fraction,n_bar,sparse_attn_flops,sparse_ffn_flops,sparse_total_flops,reduction_ratio\n";
    for (const FlopsTableRow& row : flops_table_rows(config)) {
        out << format_double(row.fraction) << ',' << format_double(row.n_bar) << ','
            << format_double(row.sparse_attn) << ',' << format_double(row.sparse_ffn) << ','
            << format_double(row.sparse_total) << ',' << format_double(row.reduction) << "\n";
    }
    return out.str();
}

std::string flops_table_json(const RunConfig& config) {
    const CubeLayout layout = CubeLayout::partition(config.grid, config.cube);
    const std::size_t seq = layout.total_tokens() + config.num_text_tokens;
    const double layers = static_cast<double>(config.num_layers);
    ordered_json out;
    out["schema"] = "adaspark.flops/1";
    out["config"] = config_to_json(config);
    out["dense"] = {{"attn_approx", layers * dense_attn_flops(seq, config.d_model)},
                    {"attn_exact", layers * exact_causal_attn_flops(seq, config.d_model)},
                    {"ffn", layers * dense_ffn_flops(seq, config.d_model, config.d_ff)}};
    ordered_json rows = ordered_json::array();
    for (const FlopsTableRow& row : flops_table_rows(config)) {
        rows.push_back({{"fraction", row.fraction},
                        {"n_bar", row.n_bar},
                        {"sparse_attn_flops", row.sparse_attn},
                        {"sparse_ffn_flops", row.sparse_ffn},
                        {"sparse_total_flops", row.sparse_total},
                        {"reduction_ratio", row.reduction}});
    }
    out["rows"] = rows;
    return out.dump(2) + "\n";
}

}  // namespace adaspark
