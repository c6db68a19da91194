#include "lcpred/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "lcpred/common.hpp"
#include "lcpred/csv.hpp"

namespace lcpred {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void require_both_classes(std::span<const int> labels, std::span<const std::size_t> rows, const char* side) {
    std::size_t pos = 0;
    for (auto r : rows) pos += labels[r] == 1 ? 1 : 0;
    if (pos == 0 || pos == rows.size()) {
        throw DataError(std::string("too few samples per class: the ") + side + " side lacks a class (" +
                        std::to_string(rows.size()) + " rows)");
    }
}

std::vector<int> gather_labels(std::span<const int> all, std::span<const std::size_t> rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(all[r]);
    return out;
}

bool is_baseline(const ExperimentResult& r) { return r.dataset.variant != DatasetVariant::fuzzy; }

std::pair<double, double> sort_key(const ExperimentResult& r) {
    if (is_baseline(r)) {
        return {-1.0, r.dataset.variant == DatasetVariant::bird ? -1.0 : -0.5};
    }
    return {r.dataset.coefficients->a, r.dataset.coefficients->b};
}

void fit_forest(const ModelDataset& ds, const ClassifierSpec& spec, const SplitResult& split, ExperimentResult& out) {
    const FeatureMatrix all = ds.design_matrix();
    const auto labels = ds.labels();
    const FeatureMatrix train_raw = all.select_rows(split.train);
    const ZScaler scaler = ZScaler::fit(train_raw);
    const FeatureMatrix xtr = standardize(scaler, train_raw);
    const FeatureMatrix xte = standardize(scaler, all.select_rows(split.test));
    const auto ytr = gather_labels(labels, split.train);
    const auto yte = gather_labels(labels, split.test);

    ForestConfig cfg = spec.forest;
    cfg.seed = out.model_seed;
    out.feature_names = ds.design_names();
    Forest forest = train_forest(xtr, ytr, cfg, out.feature_names);
    const auto str = predict_proba(forest, xtr);
    const auto ste = predict_proba(forest, xte);
    out.train = evaluate_scores("train", str, ytr);
    out.test = evaluate_scores("test", ste, yte);
    out.test_roc = roc_auc(ste, yte);
    out.importance = feature_importance(forest);
    out.model_hash = hex64(fnv1a(to_json(forest).dump()));
    out.forest = std::move(forest);
}

void fit_network(const ModelDataset& ds, const ClassifierSpec& spec, const SplitResult& split,
                 std::uint64_t seed, ExperimentResult& out) {
    const auto labels = ds.labels();
    const auto groups = ds.groups();

    // Hold out a share of the training groups for early stopping.
    std::vector<int> tr_labels = gather_labels(labels, split.train);
    std::vector<std::size_t> tr_groups;
    for (auto r : split.train) tr_groups.push_back(groups[r]);
    const auto inner = split_train_test(tr_labels, tr_groups, 1.0 - spec.validation_fraction,
                                        derive_seed(seed, "validation"));
    std::vector<std::size_t> fit_rows;
    std::vector<std::size_t> val_rows;
    for (auto i : inner.train) fit_rows.push_back(split.train[i]);
    for (auto i : inner.test) val_rows.push_back(split.train[i]);

    std::vector<Sequence> fit_raw;
    for (auto r : fit_rows) fit_raw.push_back(to_sequence(ds.samples[r]));
    const auto scaler = SequenceScaler::fit(fit_raw);
    auto make_set = [&](std::span<const std::size_t> rows) {
        SequenceSet set;
        for (auto r : rows) {
            set.inputs.push_back(scaler.transform(to_sequence(ds.samples[r])));
            set.labels.push_back(labels[r]);
        }
        return set;
    };
    const SequenceSet fit = make_set(fit_rows);
    const SequenceSet val = make_set(val_rows);
    const SequenceSet test = make_set(split.test);

    NetworkConfig cfg = spec.network;
    cfg.input_size = static_cast<int>(kFrameFeatureCount);
    cfg.seed = out.model_seed;
    Network net = make_network(cfg);
    out.history = train_network(net, fit, val);
    if (out.history.diverged) throw Error("network training diverged (non-finite loss)");

    const auto str = predict_proba(net, fit.inputs);
    const auto ste = predict_proba(net, test.inputs);
    out.train = evaluate_scores("train", str, fit.labels);
    out.test = evaluate_scores("test", ste, test.labels);
    out.test_roc = roc_auc(ste, test.labels);
    out.feature_names.assign(frame_feature_names().begin(), frame_feature_names().end());
    out.model_hash = hex64(fnv1a(encode_tensors(network_tensors(net))));
    out.train_rows = fit_rows.size();
    out.network = std::move(net);
}

}  // namespace

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
    if (scores.size() != labels.size()) throw DataError("confusion: scores and labels differ in length");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        const bool pos = labels[i] == 1;
        if (pred && pos) ++cm.tp;
        else if (pred) ++cm.fp;
        else if (pos) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
    Metrics m;
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DataError("roc: scores and labels differ in length");
    std::size_t p = 0;
    for (int y : labels) p += y == 1 ? 1 : 0;
    const std::size_t n = labels.size() - p;
    if (p == 0 || n == 0) throw DataError("roc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult r;
    r.curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0;
    std::size_t fp = 0;
    double area2 = 0.0;  // twice the area in units of (fp, tp) counts
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        const std::size_t tp0 = tp;
        const std::size_t fp0 = fp;
        for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] == 1 ? tp : fp) += 1;
        area2 += static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0);
        r.curve.push_back({ratio(fp, n), ratio(tp, p), s});
    }
    r.auc = area2 / (2.0 * static_cast<double>(p) * static_cast<double>(n));
    return r;
}

MetricsReport evaluate_scores(std::string split, std::span<const double> scores, std::span<const int> labels) {
    MetricsReport r;
    r.split = std::move(split);
    r.confusion = confusion(scores, labels);
    r.metrics = metrics(r.confusion);
    r.auc = roc_auc(scores, labels).auc;
    return r;
}

SplitResult split_train_test(std::span<const int> labels, std::span<const std::size_t> groups, double ratio,
                             std::uint64_t seed) {
    if (labels.empty()) throw DataError("split: empty dataset");
    if (groups.size() != labels.size()) throw DataError("split: group ids do not match rows");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split: ratio must lie in (0, 1)");

    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> buckets;
    for (const auto& [g, rows] : members) {
        std::size_t pos = 0;
        for (auto r : rows) pos += labels[r] == 1 ? 1 : 0;
        buckets[{pos, rows.size() - pos}].push_back(g);
    }

    std::mt19937_64 rng(seed);
    std::map<std::size_t, bool> test_group;
    for (auto& [sig, gs] : buckets) {
        std::shuffle(gs.begin(), gs.end(), rng);
        const auto n_test = static_cast<std::size_t>(std::llround((1.0 - ratio) * static_cast<double>(gs.size())));
        for (std::size_t i = 0; i < gs.size(); ++i) test_group[gs[i]] = i < n_test;
    }
    SplitResult s;
    for (std::size_t i = 0; i < labels.size(); ++i) (test_group[groups[i]] ? s.test : s.train).push_back(i);
    require_both_classes(labels, s.train, "train");
    require_both_classes(labels, s.test, "test");
    return s;
}

FeatureMatrix standardize(const ZScaler& scaler, const FeatureMatrix& data) { return scaler.transform(data); }

SequenceScaler SequenceScaler::fit(std::span<const Sequence> sequences) {
    if (sequences.empty() || sequences.front().empty()) throw DataError("sequence scaler: no training frames");
    const std::size_t d = sequences.front().front().size();
    std::vector<double> sum(d, 0.0);
    std::size_t frames = 0;
    for (const auto& s : sequences) {
        for (const auto& row : s) {
            for (std::size_t j = 0; j < d; ++j) sum[j] += row[j];
            ++frames;
        }
    }
    SequenceScaler sc;
    sc.mean.resize(d);
    sc.scale.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) sc.mean[j] = sum[j] / static_cast<double>(frames);
    std::vector<double> ss(d, 0.0);
    std::vector<bool> constant(d, true);
    const auto& first = sequences.front().front();
    for (const auto& s : sequences) {
        for (const auto& row : s) {
            for (std::size_t j = 0; j < d; ++j) {
                ss[j] += (row[j] - sc.mean[j]) * (row[j] - sc.mean[j]);
                if (row[j] != first[j]) constant[j] = false;
            }
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(ss[j] / static_cast<double>(frames));
        if (!constant[j] && sd > 0.0) {
            sc.scale[j] = sd;
        } else {
            sc.mean[j] = 0.0;
        }
    }
    return sc;
}

Sequence SequenceScaler::transform(const Sequence& seq) const {
    Sequence out = seq;
    for (auto& row : out) {
        if (row.size() != mean.size()) throw DataError("sequence scaler: feature count mismatch");
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / scale[j];
    }
    return out;
}

std::string_view to_string(ClassifierKind k) noexcept { return k == ClassifierKind::random_forest ? "rf" : "cnn_lstm"; }

ClassifierKind parse_classifier(std::string_view text) {
    if (text == "rf" || text == "random_forest") return ClassifierKind::random_forest;
    if (text == "cnn_lstm") return ClassifierKind::cnn_lstm;
    throw ConfigError("unknown classifier '" + std::string(text) + "' (expected rf or cnn_lstm)");
}

Sequence to_sequence(const FeatureSample& sample) {
    Sequence seq;
    seq.reserve(sample.sequence.size());
    for (const auto& f : sample.sequence) seq.emplace_back(f.values.begin(), f.values.end());
    return seq;
}

ExperimentResult run_experiment(const ModelDataset& dataset, const ClassifierSpec& spec, std::uint64_t seed) {
    ExperimentResult out;
    out.run = dataset.spec.tag();
    out.dataset = dataset.spec;
    out.classifier = spec.kind;
    if (spec.kind == ClassifierKind::cnn_lstm && dataset.spec.variant == DatasetVariant::bird_with_style) {
        throw ConfigError("the style-augmented dataset is only used with the random forest");
    }
    if (spec.kind == ClassifierKind::cnn_lstm && dataset.spec.form != InputForm::sequence) {
        throw ConfigError("the sequence network needs a sequence-form dataset");
    }
    if (spec.kind == ClassifierKind::random_forest && dataset.spec.form != InputForm::aggregate) {
        throw ConfigError("the random forest needs an aggregate-form dataset");
    }
    out.split_seed = derive_seed(seed, "split");
    out.model_seed = derive_seed(seed, "model");
    const auto labels = dataset.labels();
    const auto groups = dataset.groups();
    const SplitResult split = split_train_test(labels, groups, spec.split_ratio, out.split_seed);
    out.train_rows = split.train.size();
    out.test_rows = split.test.size();
    if (spec.kind == ClassifierKind::random_forest) {
        fit_forest(dataset, spec, split, out);
    } else {
        fit_network(dataset, spec, split, seed, out);
    }
    out.ok = true;
    return out;
}

std::vector<ExperimentResult> sweep(std::span<const FeatureSample> samples, std::span<const FuzzyCoefficients> grid,
                                    const ClassifierSpec& spec, std::uint64_t seed, const SweepOptions& options) {
    if (grid.empty()) throw ConfigError("sweep: empty coefficient grid");
    std::vector<DatasetSpec> specs;
    specs.push_back({DatasetVariant::bird, std::nullopt, options.form, options.speed_scope});
    if (options.include_style_baseline && spec.kind == ClassifierKind::random_forest) {
        specs.push_back({DatasetVariant::bird_with_style, std::nullopt, options.form, options.speed_scope});
    }
    for (const auto& c : grid) specs.push_back({DatasetVariant::fuzzy, c, options.form, options.speed_scope});

    std::vector<ExperimentResult> runs;
    runs.reserve(specs.size());
    for (const auto& ds_spec : specs) {
        try {
            auto r = run_experiment(build_dataset_variant(samples, ds_spec), spec, seed);
            if (!options.keep_models) {
                r.forest.reset();
                r.network.reset();
            }
            runs.push_back(std::move(r));
        } catch (const Error& e) {
            ExperimentResult failed;
            failed.run = ds_spec.tag();
            failed.dataset = ds_spec;
            failed.classifier = spec.kind;
            failed.ok = false;
            failed.error = e.what();
            runs.push_back(std::move(failed));
        }
    }
    sort_leaderboard(runs);
    return runs;
}

void sort_leaderboard(std::vector<ExperimentResult>& runs) {
    std::stable_sort(runs.begin(), runs.end(), [](const ExperimentResult& x, const ExperimentResult& y) {
        if (x.ok != y.ok) return x.ok;
        if (x.ok && x.test.metrics.accuracy != y.test.metrics.accuracy) {
            return x.test.metrics.accuracy > y.test.metrics.accuracy;
        }
        return sort_key(x) < sort_key(y);
    });
}

std::string leaderboard_csv(const std::vector<ExperimentResult>& runs, const std::string& provenance) {
    CsvWriter w;
    if (!provenance.empty()) w.comment(provenance);
    std::vector<std::string> header = {"rank", "run", "variant", "a", "b"};
    for (const char* split : {"train", "test"}) {
        for (const char* m : {"accuracy", "precision", "recall", "f1", "auc"}) {
            header.push_back(std::string(split) + "_" + m);
        }
    }
    header.push_back("status");
    w.row(header);
    std::size_t rank = 0;
    for (const auto& r : runs) {
        w.cell(++rank).cell(r.run).cell(to_string(r.dataset.variant));
        if (r.dataset.coefficients) {
            w.cell(r.dataset.coefficients->a).cell(r.dataset.coefficients->b);
        } else {
            w.cell("").cell("");
        }
        for (const MetricsReport* m : {&r.train, &r.test}) {
            if (r.ok) {
                w.cell(m->metrics.accuracy).cell(m->metrics.precision).cell(m->metrics.recall).cell(m->metrics.f1)
                    .cell(m->auc);
            } else {
                for (int i = 0; i < 5; ++i) w.cell("");
            }
        }
        w.cell(r.ok ? "ok" : "failed").end_row();
    }
    return w.str();
}

std::string roc_csv(const RocResult& roc, const std::string& provenance) {
    CsvWriter w;
    if (!provenance.empty()) w.comment(provenance);
    w.row({"fpr", "tpr", "threshold"});
    for (const auto& p : roc.curve) {
        w.cell(p.fpr).cell(p.tpr);
        if (std::isinf(p.threshold)) {
            w.cell("inf");
        } else {
            w.cell(p.threshold);
        }
        w.end_row();
    }
    return w.str();
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
    return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

nlohmann::json to_json(const MetricsReport& r) {
    return {{"split", r.split},           {"accuracy", r.metrics.accuracy}, {"precision", r.metrics.precision},
            {"recall", r.metrics.recall}, {"f1", r.metrics.f1},             {"auc", r.auc},
            {"confusion", to_json(r.confusion)}};
}

nlohmann::json metrics_json(const ExperimentResult& r) {
    nlohmann::json j;
    j["run"] = r.run;
    j["classifier"] = to_string(r.classifier);
    j["variant"] = to_string(r.dataset.variant);
    j["ok"] = r.ok;
    if (!r.ok) {
        j["error"] = r.error;
        return j;
    }
    j["train"] = to_json(r.train);
    j["test"] = to_json(r.test);
    j["train_rows"] = r.train_rows;
    j["test_rows"] = r.test_rows;
    return j;
}

}  // namespace lcpred
