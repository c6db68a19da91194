#include "lcpred/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "lcpred/common.hpp"
#include "lcpred/csv.hpp"
#include "lcpred/tensor_io.hpp"

namespace lcpred {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- config parsing -------------------------------------------------------

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* a : allowed) known = known || it.key() == a;
        if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

std::string read_string(const json& obj, const char* key, const std::string& where, const std::string& fallback) {
    std::string s = fallback;
    read(obj, key, s, where);
    return s;
}

json grid_json(const std::vector<FuzzyCoefficients>& grid) {
    json g = json::array();
    for (const auto& c : grid) g.push_back({c.a, c.b});
    return g;
}

// ---- small file helpers ---------------------------------------------------

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    write_file_atomic(path, text);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("missing file " + path.string());
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": invalid json: " + e.what());
    }
}

std::string content_hash(const std::string& text) { return hex64(fnv1a(text)); }

json provenance_json(const PipelineConfig& c) { return {{"config_hash", c.hash()}, {"seed", c.seed}}; }

std::string comment_line(const std::string& provenance) { return "# " + provenance + "\n"; }

const fs::path& require_dir(const fs::path& dir, const char* what) {
    if (dir.empty()) throw ConfigError(std::string(what) + " is not set");
    if (!fs::is_directory(dir)) throw DataError(std::string(what) + " '" + dir.string() + "' is not a directory");
    return dir;
}

// ---- stage inputs ---------------------------------------------------------

struct PairRow {
    std::size_t pair_id = 0;
    StyleFeatures style;
};

std::vector<PairRow> read_pairs(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("missing " + path.string() + " (run extract first)");
    const auto t = CsvTable::read(path);
    const auto c_id = t.require_column("pair_id");
    const auto c_d = t.require_column("duration");
    const auto c_a = t.require_column("lat_accel");
    const auto c_s = t.require_column("lat_speed");
    std::vector<PairRow> rows;
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        PairRow p;
        p.pair_id = static_cast<std::size_t>(t.integer(r, c_id));
        p.style = {t.number(r, c_d), t.number(r, c_a), t.number(r, c_s)};
        rows.push_back(p);
    }
    return rows;
}

std::map<std::size_t, DrivingStyle> read_styles(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("missing " + path.string() + " (run cluster first)");
    const auto t = CsvTable::read(path);
    const auto c_id = t.require_column("pair_id");
    const auto c_style = t.require_column("driving_style");
    std::map<std::size_t, DrivingStyle> out;
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        out[static_cast<std::size_t>(t.integer(r, c_id))] = parse_style(t.cell(r, c_style));
    }
    return out;
}

std::vector<FeatureSample> load_styled_samples(const PipelineConfig& c) {
    const auto ex = c.stage_dir("extract");
    auto samples = read_samples(ex / "samples.csv", ex / "sequences.lctf");
    const auto styles = read_styles(c.stage_dir("cluster") / "styles.csv");
    for (auto& s : samples) {
        auto it = styles.find(s.pair_id);
        if (it == styles.end()) throw DataError("pair " + std::to_string(s.pair_id) + " has no style assignment");
        s.style = it->second;
    }
    return samples;
}

InputForm form_for(ClassifierKind k) {
    return k == ClassifierKind::random_forest ? InputForm::aggregate : InputForm::sequence;
}

// ---- run artifacts --------------------------------------------------------

std::string importance_table(const std::vector<std::string>& names, const std::vector<double>& imp,
                             const std::string& provenance) {
    std::vector<std::size_t> order(imp.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
    CsvWriter w;
    w.comment(provenance);
    w.row({"rank", "feature", "importance"});
    for (std::size_t i = 0; i < order.size(); ++i) w.cell(i + 1).cell(names[order[i]]).cell(imp[order[i]]).end_row();
    return w.str();
}

json run_manifest(const ExperimentResult& r, const PipelineConfig& c) {
    json m;
    m["run"] = r.run;
    m["provenance"] = provenance_json(c);
    m["classifier"] = to_string(r.classifier);
    m["variant"] = to_string(r.dataset.variant);
    m["form"] = r.dataset.form == InputForm::aggregate ? "aggregate" : "sequence";
    m["speed_scope"] = to_string(r.dataset.speed_scope);
    if (r.dataset.coefficients) {
        m["a"] = r.dataset.coefficients->a;
        m["b"] = r.dataset.coefficients->b;
    }
    m["split_seed"] = r.split_seed;
    m["model_seed"] = r.model_seed;
    m["ok"] = r.ok;
    if (r.ok) {
        m["model_hash"] = r.model_hash;
        m["train_rows"] = r.train_rows;
        m["test_rows"] = r.test_rows;
    } else {
        m["error"] = r.error;
    }
    return m;
}

void write_run(const fs::path& dir, const ExperimentResult& r, const PipelineConfig& c, bool save_model) {
    const auto prov = c.provenance();
    fs::create_directories(dir);
    json files = json::object();
    auto put = [&](const std::string& name, const std::string& text) {
        write_text(dir / name, text);
        files[name] = content_hash(text);
    };
    if (r.ok) {
        json metrics = metrics_json(r);
        metrics["provenance"] = provenance_json(c);
        put("metrics.json", metrics.dump(2) + "\n");
        json conf = {{"provenance", provenance_json(c)},
                     {"threshold", 0.5},
                     {"train", to_json(r.train.confusion)},
                     {"test", to_json(r.test.confusion)}};
        put("confusion.json", conf.dump(2) + "\n");
        put("roc.csv", roc_csv(r.test_roc, prov));
        if (r.classifier == ClassifierKind::random_forest) {
            put("importance.csv", importance_table(r.feature_names, r.importance, prov));
        } else {
            put("history.csv", comment_line(prov) + history_csv(r.history));
        }
        if (save_model && r.forest) {
            json model = to_json(*r.forest);
            model["provenance"] = provenance_json(c);
            put("model.json", model.dump() + "\n");
        }
        if (save_model && r.network) {
            const std::string bytes = encode_tensors(network_tensors(*r.network, prov));
            write_text(dir / "model.lctf", bytes);
            files["model.lctf"] = content_hash(bytes);
        }
    }
    json m = run_manifest(r, c);
    m["files"] = files;
    write_json(dir / "manifest.json", m);
}

void print_top(const std::vector<ExperimentResult>& runs, std::size_t n, std::ostream& log) {
    log << "rank  run            test_acc  test_prec  test_rec  test_f1  test_auc\n";
    for (std::size_t i = 0; i < std::min(n, runs.size()); ++i) {
        const auto& r = runs[i];
        char line[160];
        if (r.ok) {
            std::snprintf(line, sizeof(line), "%-5zu %-14s %8.4f  %9.4f  %8.4f  %7.4f  %8.4f\n", i + 1, r.run.c_str(),
                          r.test.metrics.accuracy, r.test.metrics.precision, r.test.metrics.recall, r.test.metrics.f1,
                          r.test.auc);
        } else {
            std::snprintf(line, sizeof(line), "%-5zu %-14s failed: %s\n", i + 1, r.run.c_str(), r.error.c_str());
        }
        log << line;
    }
}

std::string first_comment(const fs::path& path) {
    const std::string text = read_file(path);
    if (text.rfind("# ", 0) != 0) return "";
    return text.substr(2, text.find('\n') - 2);
}

json provenance_from_comment(const std::string& comment) {
    json p = json::object();
    for (const auto& part : split(comment, ' ')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = part.substr(0, eq);
        const std::string value = part.substr(eq + 1);
        if (key == "seed") {
            try {
                p[key] = std::stoull(value);
            } catch (const std::exception&) {
                p[key] = value;
            }
        } else {
            p[key] = value;
        }
    }
    return p;
}

json csv_records(const fs::path& path) {
    const auto t = CsvTable::read(path);
    json rows = json::array();
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        json row = json::object();
        for (std::size_t c = 0; c < t.header().size(); ++c) {
            const auto& cell = t.cell(r, c);
            double v = 0.0;
            if (try_parse_double(cell, v)) {
                row[t.header()[c]] = v;
            } else {
                row[t.header()[c]] = cell;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

// ---- config -----------------------------------------------------------------

nlohmann::json PipelineConfig::canonical() const {
    const auto& f = classifier.forest;
    const auto& n = classifier.network;
    json j;
    j["seed"] = seed;
    j["extraction"] = {{"window_seconds", extraction.window_seconds},
                       {"gap_policy", gap_policy == GapPolicy::reject_track ? "reject_track" : "split_track"},
                       {"sequence_length", sequence_length}};
    j["clustering"] = {{"k", clustering.k},
                       {"restarts", clustering.restarts},
                       {"tol", clustering.tol},
                       {"max_iter", clustering.max_iter}};
    j["fuzzy"] = {{"grid", grid_json(grid)}, {"speed_scope", to_string(speed_scope)}};
    j["classifier"] = {
        {"kind", to_string(classifier.kind)},
        {"split_ratio", classifier.split_ratio},
        {"validation_fraction", classifier.validation_fraction},
        {"forest",
         {{"n_trees", f.n_trees},
          {"max_depth", f.max_depth},
          {"min_samples_leaf", f.min_samples_leaf},
          {"features_per_split", f.features_per_split},
          {"bootstrap", f.bootstrap}}},
        {"network",
         {{"conv_filters", n.conv_filters},
          {"kernel_size", n.kernel_size},
          {"conv_stride", n.conv_stride},
          {"pool_size", n.pool_size},
          {"dropout", n.dropout},
          {"hidden_size", n.hidden_size},
          {"learning_rate", n.learning_rate},
          {"batch_size", n.batch_size},
          {"max_epochs", n.max_epochs},
          {"patience", n.patience}}}};
    j["save_models"] = save_models;
    json train = {{"variant", to_string(train_dataset.variant)}};
    if (train_dataset.coefficients) {
        train["a"] = train_dataset.coefficients->a;
        train["b"] = train_dataset.coefficients->b;
    }
    j["train"] = train;
    json presets = json::array();
    for (auto p : synth.presets) presets.push_back(to_string(p));
    j["synth"] = {{"presets", presets},
                  {"recordings_per_preset", synth.recordings_per_preset},
                  {"platoons_per_recording", synth.platoons_per_recording}};
    return j;
}

std::string PipelineConfig::hash() const { return hex64(fnv1a(canonical().dump())); }

std::string PipelineConfig::provenance() const { return "config_hash=" + hash() + " seed=" + std::to_string(seed); }

PipelineConfig parse_config(const json& j) {
    check_keys(j, "config", {"seed", "input_dir", "output_dir", "extraction", "clustering", "fuzzy", "classifier",
                             "save_models", "train", "synth"});
    PipelineConfig c;
    if (j.contains("seed")) {
        read(j, "seed", c.seed, "config");
        c.seed_set = true;
    }
    c.input_dir = read_string(j, "input_dir", "config", "");
    c.output_dir = read_string(j, "output_dir", "config", "out");
    read(j, "save_models", c.save_models, "config");

    if (j.contains("extraction")) {
        const auto& e = j.at("extraction");
        check_keys(e, "extraction", {"window_seconds", "gap_policy", "sequence_length"});
        read(e, "window_seconds", c.extraction.window_seconds, "extraction");
        const auto gp = read_string(e, "gap_policy", "extraction", "reject_track");
        if (gp == "reject_track") c.gap_policy = GapPolicy::reject_track;
        else if (gp == "split_track") c.gap_policy = GapPolicy::split_track;
        else throw ConfigError("extraction.gap_policy must be reject_track or split_track");
        read(e, "sequence_length", c.sequence_length, "extraction");
    }
    if (j.contains("clustering")) {
        const auto& k = j.at("clustering");
        check_keys(k, "clustering", {"k", "restarts", "tol", "max_iter"});
        read(k, "k", c.clustering.k, "clustering");
        read(k, "restarts", c.clustering.restarts, "clustering");
        read(k, "tol", c.clustering.tol, "clustering");
        read(k, "max_iter", c.clustering.max_iter, "clustering");
    }
    if (j.contains("fuzzy")) {
        const auto& fz = j.at("fuzzy");
        check_keys(fz, "fuzzy", {"grid", "speed_scope"});
        if (fz.contains("grid")) {
            const auto& g = fz.at("grid");
            if (g.is_string()) {
                if (g.get<std::string>() != "full") throw ConfigError("fuzzy.grid: expected \"full\" or a list of [a, b]");
            } else if (g.is_array()) {
                c.grid.clear();
                for (const auto& p : g) {
                    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
                        throw ConfigError("fuzzy.grid: entries must be [a, b] pairs");
                    }
                    c.grid.emplace_back(p[0].get<double>(), p[1].get<double>());
                }
            } else {
                throw ConfigError("fuzzy.grid: expected \"full\" or a list of [a, b]");
            }
        }
        c.speed_scope = parse_speed_scope(read_string(fz, "speed_scope", "fuzzy", "all"));
    }
    if (j.contains("classifier")) {
        const auto& cl = j.at("classifier");
        check_keys(cl, "classifier", {"kind", "split_ratio", "validation_fraction", "forest", "network"});
        c.classifier.kind = parse_classifier(read_string(cl, "kind", "classifier", "rf"));
        read(cl, "split_ratio", c.classifier.split_ratio, "classifier");
        read(cl, "validation_fraction", c.classifier.validation_fraction, "classifier");
        if (cl.contains("forest")) {
            const auto& f = cl.at("forest");
            check_keys(f, "classifier.forest",
                       {"n_trees", "max_depth", "min_samples_leaf", "features_per_split", "bootstrap", "threads"});
            auto& fc = c.classifier.forest;
            read(f, "n_trees", fc.n_trees, "classifier.forest");
            read(f, "max_depth", fc.max_depth, "classifier.forest");
            read(f, "min_samples_leaf", fc.min_samples_leaf, "classifier.forest");
            read(f, "features_per_split", fc.features_per_split, "classifier.forest");
            read(f, "bootstrap", fc.bootstrap, "classifier.forest");
            read(f, "threads", fc.threads, "classifier.forest");
        }
        if (cl.contains("network")) {
            const auto& n = cl.at("network");
            check_keys(n, "classifier.network",
                       {"conv_filters", "kernel_size", "conv_stride", "pool_size", "dropout", "hidden_size",
                        "learning_rate", "batch_size", "max_epochs", "patience"});
            auto& nc = c.classifier.network;
            read(n, "conv_filters", nc.conv_filters, "classifier.network");
            read(n, "kernel_size", nc.kernel_size, "classifier.network");
            read(n, "conv_stride", nc.conv_stride, "classifier.network");
            read(n, "pool_size", nc.pool_size, "classifier.network");
            read(n, "dropout", nc.dropout, "classifier.network");
            read(n, "hidden_size", nc.hidden_size, "classifier.network");
            read(n, "learning_rate", nc.learning_rate, "classifier.network");
            read(n, "batch_size", nc.batch_size, "classifier.network");
            read(n, "max_epochs", nc.max_epochs, "classifier.network");
            read(n, "patience", nc.patience, "classifier.network");
        }
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        check_keys(t, "train", {"variant", "a", "b"});
        c.train_dataset.variant = parse_variant(read_string(t, "variant", "train", "bird"));
        if (c.train_dataset.variant == DatasetVariant::fuzzy) {
            double a = 0.0;
            double b = 0.0;
            read(t, "a", a, "train");
            read(t, "b", b, "train");
            c.train_dataset.coefficients = FuzzyCoefficients(a, b);
        } else if (t.contains("a") || t.contains("b")) {
            throw ConfigError("train: coefficients only apply to the fuzzy variant");
        }
    }
    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        check_keys(s, "synth", {"presets", "recordings_per_preset", "platoons_per_recording"});
        if (s.contains("presets")) {
            std::vector<std::string> names;
            read(s, "presets", names, "synth");
            c.synth.presets.clear();
            for (const auto& n : names) c.synth.presets.push_back(parse_preset(n));
        }
        read(s, "recordings_per_preset", c.synth.recordings_per_preset, "synth");
        read(s, "platoons_per_recording", c.synth.platoons_per_recording, "synth");
    }
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid json: " + e.what());
    }
    return parse_config(j);
}

void validate_config(const PipelineConfig& c) {
    if (!c.seed_set) throw ConfigError("config: seed is mandatory");
    if (c.output_dir.empty()) throw ConfigError("config: output_dir is empty");
    if (!(c.extraction.window_seconds > 0.0)) throw ConfigError("extraction.window_seconds must be positive");
    if (c.sequence_length < 2) throw ConfigError("extraction.sequence_length must be >= 2");
    if (c.clustering.k < 1 || c.clustering.k > kStyleCount) throw ConfigError("clustering.k must be 1, 2 or 3");
    if (c.clustering.restarts < 1 || c.clustering.max_iter < 1 || !(c.clustering.tol >= 0.0)) {
        throw ConfigError("clustering: restarts and max_iter must be >= 1, tol >= 0");
    }
    if (c.grid.empty()) throw ConfigError("fuzzy.grid is empty");
    if (!(c.classifier.split_ratio > 0.0 && c.classifier.split_ratio < 1.0)) {
        throw ConfigError("classifier.split_ratio must lie in (0, 1)");
    }
    if (!(c.classifier.validation_fraction > 0.0 && c.classifier.validation_fraction < 1.0)) {
        throw ConfigError("classifier.validation_fraction must lie in (0, 1)");
    }
    c.classifier.forest.validate(kAggregateFeatureCount);
    c.classifier.network.validate();
    if (c.synth.recordings_per_preset < 1 || c.synth.platoons_per_recording < 1) {
        throw ConfigError("synth: counts must be >= 1");
    }
}

// ---- data I/O ------------------------------------------------------------

std::vector<Recording> load_recordings(const fs::path& dir, GapPolicy gaps) {
    require_dir(dir, "input_dir");
    std::vector<std::string> ids;
    const std::string suffix = "_recordingMeta.csv";
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
            ids.push_back(name.substr(0, name.size() - suffix.size()));
        }
    }
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw DataError("no *_recordingMeta.csv files in '" + dir.string() + "'");
    std::vector<Recording> out;
    for (const auto& id : ids) {
        Recording r;
        r.meta = parse_recording_meta(dir / (id + suffix));
        const auto tracks = dir / (id + "_tracks.csv");
        if (!fs::exists(tracks)) throw DataError("missing tracks file " + tracks.string());
        auto parsed = parse_tracks(tracks, r.meta, gaps);
        r.tracks = std::move(parsed.tracks);
        r.issues = std::move(parsed.issues);
        out.push_back(std::move(r));
    }
    return out;
}

std::string samples_csv(const std::vector<FeatureSample>& samples, const std::string& provenance) {
    CsvWriter w;
    if (!provenance.empty()) w.comment(provenance);
    std::vector<std::string> header = {"sample_id", "pair_id", "recording_id", "track_id",
                                       "label",     "direction", "start_frame"};
    for (const auto& n : aggregate_feature_names()) header.push_back(n);
    w.row(header);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        w.cell(i).cell(s.pair_id).cell(s.recording_id).cell(s.track_id).cell(to_string(s.label))
            .cell(to_string(s.direction)).cell(s.start_frame);
        for (double v : s.aggregate.values) w.cell(v);
        w.end_row();
    }
    return w.str();
}

std::vector<FeatureSample> read_samples(const fs::path& csv, const fs::path& tensors) {
    if (!fs::exists(csv)) throw DataError("missing " + csv.string() + " (run extract first)");
    const auto t = CsvTable::read(csv);
    const auto c_pair = t.require_column("pair_id");
    const auto c_rec = t.require_column("recording_id");
    const auto c_track = t.require_column("track_id");
    const auto c_label = t.require_column("label");
    const auto c_dir = t.require_column("direction");
    const auto c_start = t.require_column("start_frame");
    std::vector<std::size_t> c_agg;
    for (const auto& n : aggregate_feature_names()) c_agg.push_back(t.require_column(n));

    if (!fs::exists(tensors)) throw DataError("missing " + tensors.string() + " (run extract first)");
    const auto tf = load_tensors(tensors);
    const auto& seq = tf.get("sequences");
    if (seq.dims.size() != 3 || seq.dims[0] != t.row_count() || seq.dims[2] != kFrameFeatureCount) {
        throw DataError(tensors.string() + ": sequence tensor does not match the sample table");
    }
    const auto steps = static_cast<std::size_t>(seq.dims[1]);

    std::vector<FeatureSample> out;
    out.reserve(t.row_count());
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        FeatureSample s;
        s.pair_id = static_cast<std::size_t>(t.integer(r, c_pair));
        s.recording_id = t.cell(r, c_rec);
        s.track_id = static_cast<int>(t.integer(r, c_track));
        try {
            s.label = parse_label(t.cell(r, c_label));
            s.direction = parse_side(t.cell(r, c_dir));
        } catch (const DataError& e) {
            throw ParseError(csv.string(), t.line_of(r), "", e.what());
        }
        s.start_frame = static_cast<int>(t.integer(r, c_start));
        for (std::size_t k = 0; k < kAggregateFeatureCount; ++k) s.aggregate.values[k] = t.number(r, c_agg[k]);
        s.sequence.resize(steps);
        const std::size_t base = r * steps * kFrameFeatureCount;
        for (std::size_t i = 0; i < steps; ++i) {
            for (std::size_t k = 0; k < kFrameFeatureCount; ++k) {
                s.sequence[i].values[k] = seq.values[base + i * kFrameFeatureCount + k];
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string dataset_csv(const ModelDataset& ds, const std::string& provenance) {
    CsvWriter w;
    if (!provenance.empty()) w.comment(provenance);
    std::vector<std::string> header = {"sample_id", "pair_id", "recording_id", "track_id", "label"};
    if (ds.has_style_column()) header.push_back("driving_style");
    for (const auto& n : aggregate_feature_names()) header.push_back(n);
    w.row(header);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        w.cell(i).cell(s.pair_id).cell(s.recording_id).cell(s.track_id).cell(s.label == Label::lane_change ? 1 : 0);
        if (ds.has_style_column()) w.cell(to_string(*s.style));
        for (double v : s.aggregate.values) w.cell(v);
        w.end_row();
    }
    return w.str();
}

std::string run_dir_name(const std::string& run) {
    std::string out;
    for (char ch : run) out += (ch == '&' || ch == '/' || ch == ' ') ? '_' : ch;
    return out;
}

// ---- commands ------------------------------------------------------------

void cmd_synth(const PipelineConfig& c, std::ostream& log) {
    validate_config(c);
    const fs::path dir = c.input_dir.empty() ? c.stage_dir("synth") : c.input_dir;
    CorpusOptions opt = c.synth;
    opt.seed = derive_seed(c.seed, "synth");
    const auto recs = corpus(opt);
    CsvWriter gt;
    gt.comment(c.provenance());
    gt.row({"recording_id", "vehicle_id", "tag", "direction", "source_lane", "target_lane", "marking", "t_lead",
            "t_trail", "expected_t_s", "expected_t_e", "duration", "lat_accel", "lat_speed", "observed"});
    std::size_t changes = 0;
    for (const auto& r : recs) {
        write_recording(r, dir.string());
        for (const auto& ch : r.truth.changes) {
            gt.cell(r.meta.recording_id).cell(ch.vehicle_id).cell(ch.tag).cell(to_string(ch.direction))
                .cell(ch.source_lane).cell(ch.target_lane).cell(ch.marking).cell(ch.t_lead).cell(ch.t_trail)
                .cell(ch.expected_t_s).cell(ch.expected_t_e).cell(ch.style.duration).cell(ch.style.lat_accel)
                .cell(ch.style.lat_speed).cell(ch.observed ? 1 : 0).end_row();
            ++changes;
        }
    }
    write_text(dir / "ground_truth.csv", gt.str());
    log << "synth: " << recs.size() << " recordings, " << changes << " scripted lane changes -> " << dir.string()
        << "\n";
}

void cmd_extract(const PipelineConfig& c, std::ostream& log) {
    validate_config(c);
    const auto recordings = load_recordings(c.input_dir, c.gap_policy);
    const auto ds = build_lc_decision_dataset(recordings, c.extraction);
    FeatureCounters counters;
    auto samples = feature_samples(ds, &counters);
    for (auto& s : samples) {
        s.sequence = sequence_sample(s.sequence, ds.frame_rate, c.sequence_length, c.extraction.window_seconds).rows;
    }
    const auto prov = c.provenance();
    const auto dir = c.stage_dir("extract");
    json files = json::object();
    auto put = [&](const std::string& name, const std::string& text) {
        write_text(dir / name, text);
        files[name] = content_hash(text);
    };

    CsvWriter pairs;
    pairs.comment(prov);
    pairs.row({"pair_id", "recording_id", "track_id", "direction", "source_lane", "target_lane", "t_lc", "t_s", "t_e",
               "duration", "lat_accel", "lat_speed"});
    for (const auto& p : ds.pairs) {
        const auto sf = style_features(p.event, p.execution);
        pairs.cell(p.pair_id).cell(p.recording_id).cell(p.event.track_id).cell(to_string(p.event.direction))
            .cell(p.event.source_lane).cell(p.event.target_lane).cell(p.event.t_lc).cell(p.event.t_s)
            .cell(p.event.t_e).cell(sf.duration).cell(sf.lat_accel).cell(sf.lat_speed).end_row();
    }
    put("pairs.csv", pairs.str());
    put("samples.csv", samples_csv(samples, prov));

    TensorFile tf;
    tf.metadata = json({{"provenance", prov}, {"columns", frame_feature_names()}}).dump();
    Tensor seq;
    seq.name = "sequences";
    seq.dims = {samples.size(), c.sequence_length, kFrameFeatureCount};
    for (const auto& s : samples) {
        for (const auto& row : s.sequence) seq.values.insert(seq.values.end(), row.values.begin(), row.values.end());
    }
    tf.tensors.push_back(std::move(seq));
    const std::string bytes = encode_tensors(tf);
    write_text(dir / "sequences.lctf", bytes);
    files["sequences.lctf"] = content_hash(bytes);

    CsvWriter drops;
    drops.comment(prov);
    drops.row({"reason", "count"});
    for (int i = 0; i < kDropReasonCount; ++i) {
        const auto r = static_cast<DropReason>(i);
        auto it = ds.drops.counts.find(r);
        drops.cell(to_string(r)).cell(it == ds.drops.counts.end() ? std::size_t{0} : it->second).end_row();
    }
    put("drops.csv", drops.str());

    json rec_ids = json::array();
    std::size_t issues = 0;
    for (const auto& r : recordings) {
        rec_ids.push_back(r.meta.recording_id);
        issues += r.issues.size();
    }
    json m = {{"stage", "extract"},
              {"provenance", provenance_json(c)},
              {"recordings", rec_ids},
              {"frame_rate", ds.frame_rate},
              {"events_detected", ds.events_detected},
              {"pairs", ds.pairs.size()},
              {"samples", samples.size()},
              {"dropped", ds.drops.total()},
              {"rejected_tracks", issues},
              {"clamped_gaps", counters.clamped_gaps},
              {"files", files}};
    write_json(dir / "manifest.json", m);
    log << "extract: " << recordings.size() << " recordings, " << ds.events_detected << " lane changes detected, "
        << ds.pairs.size() << " qualified pairs, " << ds.drops.total() << " dropped\n";
    if (ds.pairs.empty()) log << "warning: no qualified lane-change pairs\n";
}

void cmd_cluster(const PipelineConfig& c, std::ostream& log) {
    validate_config(c);
    const auto pairs = read_pairs(c.stage_dir("extract") / "pairs.csv");
    if (pairs.size() < static_cast<std::size_t>(c.clustering.k)) {
        throw DataError("cluster: " + std::to_string(pairs.size()) + " lane changes, fewer than k = " +
                        std::to_string(c.clustering.k));
    }
    if (c.clustering.k == 1) log << "warning: k = 1, every driver is labelled general\n";
    std::vector<StyleFeatures> points;
    for (const auto& p : pairs) points.push_back(p.style);
    KMeansOptions opt = c.clustering;
    opt.seed = derive_seed(c.seed, "cluster");
    const auto model = kmeans_fit(points, opt);

    const auto prov = c.provenance();
    const auto dir = c.stage_dir("cluster");
    json files = json::object();
    auto put = [&](const std::string& name, const std::string& text) {
        write_text(dir / name, text);
        files[name] = content_hash(text);
    };
    json mj = to_json(model);
    mj["provenance"] = provenance_json(c);
    put("cluster_model.json", mj.dump(2) + "\n");

    std::vector<DrivingStyle> styles;
    CsvWriter st;
    st.comment(prov);
    st.row({"pair_id", "cluster", "driving_style", "duration", "lat_accel", "lat_speed"});
    for (const auto& p : pairs) {
        const int k = assign_cluster(model, p.style);
        const auto s = model.label_map[static_cast<std::size_t>(k)];
        styles.push_back(s);
        st.cell(p.pair_id).cell(k).cell(to_string(s)).cell(p.style.duration).cell(p.style.lat_accel)
            .cell(p.style.lat_speed).end_row();
    }
    put("styles.csv", st.str());
    const auto report = cluster_report(points, styles);
    put("cluster_report.csv", comment_line(prov) + cluster_report_csv(report));
    write_json(dir / "manifest.json", {{"stage", "cluster"},
                                       {"provenance", provenance_json(c)},
                                       {"k", model.k},
                                       {"events", pairs.size()},
                                       {"objective", model.objective},
                                       {"files", files}});
    log << "cluster: " << pairs.size() << " lane changes into " << model.k << " styles\n";
    for (const auto& row : report) log << "  " << row.style << ": " << row.count << "\n";
}

void cmd_build_datasets(const PipelineConfig& c, std::ostream& log) {
    validate_config(c);
    const auto samples = load_styled_samples(c);
    const auto prov = c.provenance();
    const auto dir = c.stage_dir("datasets");
    json files = json::object();
    std::vector<std::pair<std::string, DatasetSpec>> specs = {
        {"dataset1_Bird.csv", {DatasetVariant::bird, std::nullopt, InputForm::aggregate, c.speed_scope}},
        {"dataset2_Bird_DS.csv", {DatasetVariant::bird_with_style, std::nullopt, InputForm::aggregate, c.speed_scope}}};
    for (const auto& g : c.grid) {
        specs.push_back({"dataset3_" + g.tag() + ".csv", {DatasetVariant::fuzzy, g, InputForm::aggregate, c.speed_scope}});
    }
    for (const auto& [name, spec] : specs) {
        const auto text = dataset_csv(build_dataset_variant(samples, spec), prov);
        write_text(dir / name, text);
        files[name] = content_hash(text);
    }
    write_json(dir / "manifest.json", {{"stage", "build-datasets"},
                                       {"provenance", provenance_json(c)},
                                       {"rows", samples.size()},
                                       {"speed_scope", to_string(c.speed_scope)},
                                       {"files", files}});
    log << "build-datasets: " << specs.size() << " datasets of " << samples.size() << " rows\n";
}

void cmd_train(const PipelineConfig& c, std::ostream& log) {
    validate_config(c);
    const auto samples = load_styled_samples(c);
    DatasetSpec spec = c.train_dataset;
    spec.form = form_for(c.classifier.kind);
    spec.speed_scope = c.speed_scope;
    const auto ds = build_dataset_variant(samples, spec);
    const auto r = run_experiment(ds, c.classifier, derive_seed(c.seed, "experiment"));
    const auto dir = c.stage_dir("train") / run_dir_name(r.run);
    write_run(dir, r, c, true);
    log << "train: " << r.run << " test accuracy " << format_double(r.test.metrics.accuracy) << " -> "
        << dir.string() << "\n";
}

void cmd_sweep(const PipelineConfig& c, std::ostream& log) {
    validate_config(c);
    const auto samples = load_styled_samples(c);
    SweepOptions opt;
    opt.form = form_for(c.classifier.kind);
    opt.speed_scope = c.speed_scope;
    opt.keep_models = c.save_models;
    const auto runs = sweep(samples, c.grid, c.classifier, derive_seed(c.seed, "experiment"), opt);
    const auto dir = c.stage_dir("sweep");
    const auto prov = c.provenance();
    std::size_t failed = 0;
    for (const auto& r : runs) {
        write_run(dir / "runs" / run_dir_name(r.run), r, c, c.save_models);
        failed += r.ok ? 0 : 1;
    }
    const auto board = leaderboard_csv(runs, prov);
    write_text(dir / "leaderboard.csv", board);
    write_json(dir / "manifest.json", {{"stage", "sweep"},
                                       {"provenance", provenance_json(c)},
                                       {"classifier", to_string(c.classifier.kind)},
                                       {"runs", runs.size()},
                                       {"failed", failed},
                                       {"files", {{"leaderboard.csv", content_hash(board)}}}});
    log << "sweep: " << runs.size() << " runs (" << failed << " failed); top 5:\n";
    print_top(runs, 5, log);
    if (failed == runs.size()) throw Error("sweep: every run failed; first error: " + runs.front().error);
}

void cmd_report(const fs::path& run_dir, std::ostream& log) {
    require_dir(run_dir, "run directory");
    const auto board_path = run_dir / "leaderboard.csv";
    if (!fs::exists(board_path)) throw DataError("missing artifacts:\n  " + board_path.string());
    const auto board = CsvTable::read(board_path);
    const auto c_run = board.require_column("run");
    const auto c_status = board.require_column("status");

    std::vector<std::string> missing;
    json runs = json::array();
    for (std::size_t r = 0; r < board.row_count(); ++r) {
        const std::string run = board.cell(r, c_run);
        const bool ok = board.cell(r, c_status) == "ok";
        const auto dir = run_dir / "runs" / run_dir_name(run);
        std::vector<std::string> need = {"manifest.json"};
        if (ok) {
            for (const char* f : {"metrics.json", "confusion.json", "roc.csv"}) need.push_back(f);
        }
        std::vector<std::string> here;
        for (const auto& f : need) {
            if (!fs::exists(dir / f)) missing.push_back((dir / f).string());
        }
        if (ok && !fs::exists(dir / "importance.csv") && !fs::exists(dir / "history.csv")) {
            missing.push_back((dir / "importance.csv").string() + " (or history.csv)");
        }
        if (!missing.empty()) continue;

        const auto manifest = read_json(dir / "manifest.json");
        json entry;
        entry["rank"] = r + 1;
        entry["run"] = run;
        entry["status"] = ok ? "ok" : "failed";
        entry["variant"] = manifest.value("variant", "");
        entry["classifier"] = manifest.value("classifier", "");
        if (manifest.contains("a")) {
            entry["a"] = manifest["a"];
            entry["b"] = manifest["b"];
        }
        if (!ok) {
            entry["error"] = manifest.value("error", "");
            runs.push_back(std::move(entry));
            continue;
        }
        entry["model_hash"] = manifest.value("model_hash", "");
        const auto metrics = read_json(dir / "metrics.json");
        entry["train"] = metrics.at("train");
        entry["test"] = metrics.at("test");
        entry["confusion"] = read_json(dir / "confusion.json").at("test");
        json roc = json::array();
        for (const auto& p : csv_records(dir / "roc.csv")) roc.push_back({p.at("fpr"), p.at("tpr")});
        entry["roc"] = roc;
        json hashes = json::object();
        for (const auto& f : fs::directory_iterator(dir)) {
            hashes[f.path().filename().string()] = content_hash(read_file(f.path()));
        }
        entry["artifact_hashes"] = hashes;
        if (fs::exists(dir / "importance.csv")) entry["importance"] = csv_records(dir / "importance.csv");
        if (fs::exists(dir / "history.csv")) entry["history"] = csv_records(dir / "history.csv");
        runs.push_back(std::move(entry));
    }
    if (!missing.empty()) {
        std::string msg = "missing artifacts:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw DataError(msg);
    }

    json summary;
    summary["format"] = "lcpred.summary";
    summary["version"] = 1;
    summary["provenance"] = provenance_from_comment(first_comment(board_path));
    summary["leaderboard_hash"] = content_hash(read_file(board_path));
    summary["runs"] = runs;
    const auto problems = validate_summary(summary);
    if (!problems.empty()) {
        std::string msg = "summary does not match the schema:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw Error(msg);
    }
    write_json(run_dir / "summary.json", summary);

    CsvWriter w;
    w.comment(first_comment(board_path));
    w.row({"rank", "run", "status", "test_accuracy", "test_precision", "test_recall", "test_f1", "test_auc",
           "model_hash"});
    for (const auto& e : runs) {
        w.cell(e["rank"].get<std::size_t>()).cell(e["run"].get<std::string>()).cell(e["status"].get<std::string>());
        if (e["status"] == "ok") {
            const auto& t = e["test"];
            w.cell(t["accuracy"].get<double>()).cell(t["precision"].get<double>()).cell(t["recall"].get<double>())
                .cell(t["f1"].get<double>()).cell(t["auc"].get<double>()).cell(e["model_hash"].get<std::string>());
        } else {
            for (int i = 0; i < 6; ++i) w.cell("");
        }
        w.end_row();
    }
    write_text(run_dir / "summary.csv", w.str());
    log << "report: " << runs.size() << " runs -> " << (run_dir / "summary.json").string() << "\n";
}

std::vector<std::string> validate_summary(const json& s) {
    std::vector<std::string> p;
    auto need = [&](const json& obj, const std::string& where, const char* key, json::value_t type) {
        if (!obj.is_object() || !obj.contains(key)) {
            p.push_back(where + "." + key + " missing");
            return false;
        }
        const auto t = obj.at(key).type();
        const bool number = type == json::value_t::number_float &&
                            (t == json::value_t::number_float || t == json::value_t::number_integer ||
                             t == json::value_t::number_unsigned);
        const bool integer = type == json::value_t::number_unsigned &&
                             (t == json::value_t::number_integer || t == json::value_t::number_unsigned);
        if (t != type && !number && !integer) {
            p.push_back(where + "." + key + " has the wrong type");
            return false;
        }
        return true;
    };
    auto unit = [&](const json& obj, const std::string& where, const char* key) {
        if (need(obj, where, key, json::value_t::number_float)) {
            const double v = obj.at(key).get<double>();
            if (!(v >= 0.0 && v <= 1.0)) p.push_back(where + "." + key + " outside [0, 1]");
        }
    };
    using V = json::value_t;
    if (need(s, "summary", "format", V::string) && s["format"] != "lcpred.summary") p.push_back("summary.format wrong");
    need(s, "summary", "version", V::number_unsigned);
    if (need(s, "summary", "provenance", V::object)) {
        need(s["provenance"], "summary.provenance", "config_hash", V::string);
        need(s["provenance"], "summary.provenance", "seed", V::number_unsigned);
    }
    need(s, "summary", "leaderboard_hash", V::string);
    if (!need(s, "summary", "runs", V::array)) return p;
    for (std::size_t i = 0; i < s["runs"].size(); ++i) {
        const auto& r = s["runs"][i];
        const std::string w = "runs[" + std::to_string(i) + "]";
        need(r, w, "rank", V::number_unsigned);
        need(r, w, "run", V::string);
        if (!need(r, w, "status", V::string)) continue;
        if (r["status"] != "ok") continue;
        need(r, w, "model_hash", V::string);
        for (const char* split : {"train", "test"}) {
            if (!need(r, w, split, V::object)) continue;
            for (const char* m : {"accuracy", "precision", "recall", "f1", "auc"}) unit(r[split], w + "." + split, m);
        }
        if (need(r, w, "confusion", V::object)) {
            for (const char* k : {"tp", "fp", "tn", "fn"}) need(r["confusion"], w + ".confusion", k, V::number_unsigned);
        }
        if (need(r, w, "roc", V::array)) {
            const auto& roc = r["roc"];
            if (roc.size() < 2) p.push_back(w + ".roc has fewer than two points");
            for (const auto& pt : roc) {
                if (!pt.is_array() || pt.size() != 2) {
                    p.push_back(w + ".roc point malformed");
                    break;
                }
            }
        }
        need(r, w, "artifact_hashes", V::object);
        if (!r.contains("importance") && !r.contains("history")) p.push_back(w + " has neither importance nor history");
    }
    return p;
}

}  // namespace lcpred
