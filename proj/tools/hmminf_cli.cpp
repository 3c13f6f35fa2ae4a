// hmminf: train, score and benchmark HMM influence diagnostics from the shell.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "hmminf/error.hpp"
#include "hmminf/influence.hpp"
#include "hmminf/io.hpp"
#include "hmminf/outliers.hpp"
#include "hmminf/reference.hpp"
#include "hmminf/sampling.hpp"
#include "hmminf/training.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Collects everything needed to rerun a command; written next to the output.
class Manifest {
public:
    Manifest(std::string subcommand, const std::vector<std::string>& argv) {
        doc_["subcommand"] = std::move(subcommand);
        doc_["version"] = kVersion;
        doc_["argv"] = argv;
        doc_["inputs"] = ordered_json::object();
        doc_["outputs"] = ordered_json::object();
        doc_["parameters"] = ordered_json::object();
        doc_["timings_seconds"] = ordered_json::object();
    }

    void input(const std::string& key, const std::string& path) { doc_["inputs"][key] = path; }
    void output(const std::string& key, const std::string& path) {
        if (!path.empty() && path != "-") doc_["outputs"][key] = path;
    }
    template <class T>
    void param(const std::string& key, const T& value) { doc_["parameters"][key] = value; }
    void seed(std::uint64_t s) { doc_["seed"] = s; }
    void note(const std::string& key, ordered_json v) { doc_[key] = std::move(v); }

    template <class F>
    auto phase(const std::string& name, F&& f) {
        const auto start = std::chrono::steady_clock::now();
        struct Stop {
            Manifest* self;
            std::string name;
            std::chrono::steady_clock::time_point start;
            ~Stop() {
                self->doc_["timings_seconds"][name] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
        } stop{this, name, start};
        return f();
    }

    /// Explicit path, else `<primary output>.manifest.json`, else nowhere.
    void write(const std::string& explicit_path, const std::string& primary) const {
        std::string path = explicit_path;
        if (path.empty() && !primary.empty() && primary != "-") path = primary + ".manifest.json";
        if (path.empty()) return;
        std::ofstream os(path);
        if (!os) throw hmminf::Error("cannot open " + path + " for writing");
        os << doc_.dump(2) << '\n';
    }

private:
    ordered_json doc_;
};

/// Output stream that is either stdout ("-" or empty) or a file.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_.open(path);
        if (!file_) throw hmminf::Error("cannot open " + path + " for writing");
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

// ---------------------------------------------------------------------------

struct TrainOptions {
    std::string data, out = "-", report, trace, manifest;
    std::size_t states = 3, restarts = 20, max_iters = 500, threads = 1;
    std::uint64_t seed = 1;
    double tol = 1e-8;
    bool tie = false, heteroscedastic = false, uniform_initial = false;
    std::string init = "kmeans";
};

hmminf::EmConfig em_config(const TrainOptions& o) {
    hmminf::EmConfig cfg;
    cfg.num_states = o.states;
    cfg.num_restarts = o.restarts;
    cfg.max_iters = o.max_iters;
    cfg.tolerance = o.tol;
    cfg.seed = o.seed;
    cfg.tie_transitions = o.tie;
    cfg.homoscedastic = !o.heteroscedastic;
    cfg.uniform_initial = o.uniform_initial;
    cfg.init = o.init == "quantiles" ? hmminf::InitStrategy::PerturbedQuantiles : hmminf::InitStrategy::KMeans;
    cfg.threads = o.threads;
    return cfg;
}

int run_train(const TrainOptions& o, const std::vector<std::string>& argv) {
    Manifest man("train", argv);
    man.input("data", o.data);
    man.output("model", o.out);
    man.output("report", o.report);
    man.output("trace", o.trace);
    man.seed(o.seed);
    man.param("states", o.states);
    man.param("restarts", o.restarts);
    man.param("max_iters", o.max_iters);
    man.param("tolerance", o.tol);
    man.param("tie_transitions", o.tie);
    man.param("homoscedastic", !o.heteroscedastic);
    man.param("uniform_initial", o.uniform_initial);
    man.param("init", o.init);
    man.param("threads", o.threads);

    const auto obs = man.phase("read", [&] { return hmminf::read_observations_file(o.data); });
    const auto fit = man.phase("em", [&] { return hmminf::em_fit(obs, em_config(o)); });
    const auto model = hmminf::canonicalize(fit.model);

    man.phase("write", [&] {
        Output out(o.out);
        hmminf::write_model(out.stream(), model);
        if (!o.report.empty()) {
            Output rep(o.report);
            auto& os = rep.stream();
            fmt::print(os, "restart\tlog_likelihood\titerations\tconverged\tdegenerate\tselected\n");
            for (const auto& r : fit.restarts)
                fmt::print(os, "{}\t{:.17g}\t{}\t{}\t{}\t{}\n", r.index, r.log_likelihood, r.iterations,
                           int(r.converged), int(r.degenerate), int(r.index == fit.best_restart));
        }
        if (!o.trace.empty()) {
            Output tr(o.trace);
            fmt::print(tr.stream(), "iteration\tlog_likelihood\n");
            for (std::size_t i = 0; i < fit.log_likelihood.size(); ++i)
                fmt::print(tr.stream(), "{}\t{:.17g}\n", i, fit.log_likelihood[i]);
        }
        return 0;
    });
    man.note("fit", {{"log_likelihood", fit.log_likelihood.back()},
                     {"iterations", fit.iterations()},
                     {"converged", fit.converged},
                     {"best_restart", fit.best_restart}});
    if (!fit.converged) fmt::print(stderr, "warning: EM stopped at the iteration limit without converging\n");
    man.write(o.manifest, o.out);
    return kOk;
}

// ---------------------------------------------------------------------------

struct InfluenceOptions {
    std::string model, data, out = "-", posterior, manifest;
    std::size_t window = 1;
    std::string engine = "fast";
};

int run_influence(const InfluenceOptions& o, const std::vector<std::string>& argv) {
    Manifest man("influence", argv);
    man.input("model", o.model);
    man.input("data", o.data);
    man.output("influence", o.out);
    man.output("posterior", o.posterior);
    man.param("window", o.window);
    man.param("engine", o.engine);

    const auto model = man.phase("read_model", [&] { return hmminf::read_model_file(o.model); });
    const auto obs = man.phase("read", [&] { return hmminf::read_observations_file(o.data); });
    if (o.window < 1 || o.window > obs.size())
        throw UsageError(fmt::format("--window must be between 1 and the series length ({})", obs.size()));
    if (o.engine == "naive" && o.window != 1) throw UsageError("--engine naive supports --window 1 only");

    Output out(o.out);
    if (o.window == 1) {
        const auto prof = man.phase("influence", [&] {
            return o.engine == "naive" ? hmminf::reference::kld_influence_naive(model, obs)
                                       : hmminf::kld_influence(model, obs);
        });
        hmminf::write_influence_tsv(out.stream(), prof);
        if (!o.posterior.empty()) {
            Output post(o.posterior);
            hmminf::write_marginals_tsv(post.stream(), prof.marginals, prof.labels);
        }
    } else {
        const auto prof = man.phase("influence", [&] { return hmminf::windowed_influence(model, obs, o.window); });
        hmminf::write_window_influence_tsv(out.stream(), prof);
        if (!o.posterior.empty()) {
            Output post(o.posterior);
            const auto marg = hmminf::posterior_marginals(hmminf::forward_backward(model, obs));
            hmminf::write_marginals_tsv(post.stream(), marg, obs.labels);
        }
    }
    man.write(o.manifest, o.out);
    return kOk;
}

// ---------------------------------------------------------------------------

struct DetectOptions {
    std::string data, model, out = "-", manifest;
    std::string method = "kld";
    std::optional<double> threshold;
    std::optional<std::size_t> top_k;
    std::size_t states = 3, restarts = 20;
    std::uint64_t seed = 1;
    bool free_transitions = false, heteroscedastic = false, uniform_initial = false;
};

int run_detect(const DetectOptions& o, const std::vector<std::string>& argv) {
    Manifest man("detect", argv);
    man.input("data", o.data);
    if (!o.model.empty()) man.input("model", o.model);
    man.output("scores", o.out);
    man.seed(o.seed);
    man.param("method", o.method);
    man.param("states", o.states);
    man.param("restarts", o.restarts);
    man.param("tie_transitions", !o.free_transitions);
    man.param("homoscedastic", !o.heteroscedastic);
    man.param("uniform_initial", o.uniform_initial);
    if (o.threshold) man.param("threshold", *o.threshold);
    const std::size_t top_k = o.threshold ? 0 : o.top_k.value_or(5);
    if (!o.threshold) man.param("top_k", top_k);

    const auto obs = man.phase("read", [&] { return hmminf::read_observations_file(o.data); });
    const std::size_t n = obs.size();
    if (top_k > n) throw UsageError(fmt::format("--top-k exceeds the series length ({})", n));

    std::vector<double> scores;
    if (o.method == "kld") {
        hmminf::HmmModel model;
        if (!o.model.empty()) {
            model = hmminf::read_model_file(o.model);
        } else {
            TrainOptions t;
            t.states = o.states;
            t.restarts = o.restarts;
            t.seed = o.seed;
            t.tie = !o.free_transitions;
            t.heteroscedastic = o.heteroscedastic;
            t.uniform_initial = o.uniform_initial;
            model = man.phase("em", [&] { return hmminf::em_fit(obs, em_config(t)).model; });
        }
        scores = man.phase("score", [&] { return hmminf::kld_influence(model, obs).k; });
    } else if (o.method == "z") {
        const auto z = man.phase("score", [&] { return hmminf::z_value_scores(obs.values, o.states, o.seed); });
        if (z.degenerate) fmt::print(stderr, "warning: a cluster has zero spread; its sigma was floored at 1e-12\n");
        scores.resize(n);
        std::transform(z.z.begin(), z.z.end(), scores.begin(), [](double v) { return std::abs(v); });
    } else {
        const auto lof = man.phase("score", [&] { return hmminf::lof_statistic(obs.values); });
        if (lof.clipped)
            fmt::print(stderr, "warning: series has {} points; LOF neighbor range clipped to {}..{}\n", n,
                       lof.r_min, lof.r_max);
        man.note("lof_range", {lof.r_min, lof.r_max});
        scores = lof.scores;
    }

    std::vector<bool> flag(n, false);
    if (o.threshold) {
        for (std::size_t i = 0; i < n; ++i) flag[i] = scores[i] >= *o.threshold;
    } else {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
        for (std::size_t r = 0; r < top_k; ++r) flag[order[r]] = true;
    }

    Output out(o.out);
    fmt::print(out.stream(), "label\tvalue\tscore\tflagged\n");
    for (std::size_t i = 0; i < n; ++i)
        fmt::print(out.stream(), "{}\t{}\t{:.17g}\t{}\n", obs.labels[i], obs.values[i], scores[i], int(flag[i]));
    man.write(o.manifest, o.out);
    return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
    std::string data, out = "-", scores, manifest;
    std::vector<double> deltas{0.5, 2.0, 3.0};
    std::size_t replicates = 1000, n = 53, restarts = 5, threads = 1, bootstrap = 2000, states = 3;
    double contamination = 0.05;
    std::uint64_t seed = 1;
    bool resume = false;
};

std::vector<hmminf::ScoredReplicate> read_scores(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw hmminf::ParseError("cannot open " + path, 0);
    std::vector<hmminf::ScoredReplicate> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(hmminf::replicate_from_json(line));
        } catch (const hmminf::ParseError& e) {
            throw hmminf::ParseError(e.what(), lineno);
        }
    }
    return out;
}

int run_simulate(const SimulateOptions& o, const std::vector<std::string>& argv) {
    Manifest man("simulate", argv);
    man.input("data", o.data);
    man.output("benchmark", o.out);
    man.output("scores", o.scores);
    man.seed(o.seed);
    man.param("deltas", o.deltas);
    man.param("replicates", o.replicates);
    man.param("n", o.n);
    man.param("contamination", o.contamination);
    man.param("states", o.states);
    man.param("em_restarts", o.restarts);
    man.param("bootstrap", o.bootstrap);
    man.param("threads", o.threads);
    if (o.replicates == 0) throw UsageError("--replicates must be positive");
    if (o.resume && o.scores.empty()) throw UsageError("--resume needs --scores");

    hmminf::BenchmarkConfig cfg;
    cfg.simulation.source = man.phase("read", [&] { return hmminf::read_observations_file(o.data).values; });
    cfg.simulation.n = o.n;
    cfg.simulation.contamination = o.contamination;
    cfg.simulation.replicates = o.replicates;
    cfg.simulation.seed = o.seed;
    cfg.simulation.num_states = o.states;
    cfg.simulation.em_restarts = o.restarts;
    cfg.deltas = o.deltas;
    cfg.bootstrap = o.bootstrap;
    cfg.threads = o.threads;

    std::vector<hmminf::ScoredReplicate> done;
    if (o.resume && fs::exists(o.scores)) done = read_scores(o.scores);
    man.param("resumed_replicates", done.size());

    const auto result = man.phase("simulate", [&] { return hmminf::run_benchmark(cfg, done); });
    std::size_t resamples = 0;
    for (const auto& r : result.replicates) resamples += r.resamples;
    man.note("em_resamples", resamples);

    if (!o.scores.empty()) {
        std::ofstream os(o.scores);
        if (!os) throw hmminf::Error("cannot open " + o.scores + " for writing");
        for (const auto& r : result.replicates) os << hmminf::to_json_line(r) << '\n';
    }
    Output out(o.out);
    hmminf::write_benchmark_tsv(out.stream(), result.rows);
    man.write(o.manifest, o.out);
    return kOk;
}

struct EvaluateOptions {
    std::string scores, out = "-", manifest;
    std::size_t bootstrap = 2000;
    std::uint64_t seed = 1;
};

int run_evaluate(const EvaluateOptions& o, const std::vector<std::string>& argv) {
    Manifest man("evaluate", argv);
    man.input("scores", o.scores);
    man.output("benchmark", o.out);
    man.seed(o.seed);
    man.param("bootstrap", o.bootstrap);
    const auto reps = man.phase("read", [&] { return read_scores(o.scores); });
    const auto rows = man.phase("evaluate", [&] { return hmminf::evaluate_replicates(reps, o.bootstrap, o.seed); });
    Output out(o.out);
    hmminf::write_benchmark_tsv(out.stream(), rows);
    man.write(o.manifest, o.out);
    return kOk;
}

// ---------------------------------------------------------------------------

struct SampleOptions {
    std::string model, out = "-", states_out, manifest;
    std::size_t n = 106;
    long long first_label = 1;
    std::uint64_t seed = 1;
};

int run_sample(const SampleOptions& o, const std::vector<std::string>& argv) {
    Manifest man("sample", argv);
    man.input("model", o.model);
    man.output("data", o.out);
    man.output("states", o.states_out);
    man.seed(o.seed);
    man.param("n", o.n);
    man.param("first_label", o.first_label);
    if (o.n == 0) throw UsageError("--n must be positive");
    const auto model = hmminf::read_model_file(o.model);
    auto draw = hmminf::sample(model, o.n, o.seed);
    for (std::size_t i = 0; i < o.n; ++i)
        draw.observations.labels[i] = std::to_string(o.first_label + static_cast<long long>(i));
    Output out(o.out);
    hmminf::write_observations(out.stream(), draw.observations);
    if (!o.states_out.empty()) {
        Output st(o.states_out);
        fmt::print(st.stream(), "label\tstate\n");
        for (std::size_t i = 0; i < o.n; ++i)
            fmt::print(st.stream(), "{}\t{}\n", draw.observations.labels[i], draw.states[i] + 1);
    }
    man.write(o.manifest, o.out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    CLI::App app{"Influence diagnostics and outlier detection for hidden Markov models"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    TrainOptions train;
    auto* ct = app.add_subcommand("train", "Fit an HMM to a series with EM");
    ct->add_option("--data", train.data, "Observation CSV")->required()->check(CLI::ExistingFile);
    ct->add_option("--states,-m", train.states, "Number of hidden states")->capture_default_str();
    ct->add_flag("--tie-transitions", train.tie, "Single switching rate for all states");
    ct->add_flag("--heteroscedastic", train.heteroscedastic, "One sigma per state");
    ct->add_flag("--uniform-initial", train.uniform_initial, "Keep the initial distribution uniform");
    ct->add_option("--restarts", train.restarts, "EM restarts")->capture_default_str();
    ct->add_option("--seed", train.seed)->capture_default_str();
    ct->add_option("--max-iters", train.max_iters)->capture_default_str();
    ct->add_option("--tol", train.tol, "Relative log-likelihood tolerance")->capture_default_str();
    ct->add_option("--init", train.init)->check(CLI::IsMember({"kmeans", "quantiles"}))->capture_default_str();
    ct->add_option("--threads", train.threads)->capture_default_str();
    ct->add_option("--out,-o", train.out, "Model document (- for stdout)")->capture_default_str();
    ct->add_option("--report", train.report, "Per-restart TSV report");
    ct->add_option("--trace", train.trace, "Log-likelihood trace TSV of the selected restart");
    ct->add_option("--manifest", train.manifest);

    InfluenceOptions infl;
    auto* ci = app.add_subcommand("influence", "Influence K_j of each observation (or window) under a model");
    ci->add_option("--model", infl.model)->required()->check(CLI::ExistingFile);
    ci->add_option("--data", infl.data)->required()->check(CLI::ExistingFile);
    ci->add_option("--window,-w", infl.window, "Window length h")->capture_default_str();
    ci->add_option("--engine", infl.engine)->check(CLI::IsMember({"fast", "naive"}))->capture_default_str();
    ci->add_option("--out,-o", infl.out)->capture_default_str();
    ci->add_option("--posterior", infl.posterior, "Posterior marginals TSV");
    ci->add_option("--manifest", infl.manifest);

    DetectOptions det;
    auto* cd = app.add_subcommand("detect", "Score and flag outliers");
    cd->add_option("--data", det.data)->required()->check(CLI::ExistingFile);
    cd->add_option("--method", det.method)->check(CLI::IsMember({"kld", "z", "lof"}))->capture_default_str();
    cd->add_option("--model", det.model, "Use this model instead of fitting one (kld)")->check(CLI::ExistingFile);
    auto* thr = cd->add_option("--threshold", det.threshold, "Flag scores >= threshold");
    auto* topk = cd->add_option("--top-k", det.top_k, "Flag the k largest scores (default 5)");
    thr->excludes(topk);
    cd->add_option("--states,-m", det.states, "HMM states (kld) or clusters (z)")->capture_default_str();
    cd->add_option("--restarts", det.restarts)->capture_default_str();
    cd->add_option("--seed", det.seed)->capture_default_str();
    cd->add_flag("--free-transitions", det.free_transitions, "Do not tie the transition matrix");
    cd->add_flag("--heteroscedastic", det.heteroscedastic);
    cd->add_flag("--uniform-initial", det.uniform_initial, "Keep the initial distribution uniform");
    cd->add_option("--out,-o", det.out)->capture_default_str();
    cd->add_option("--manifest", det.manifest);

    SimulateOptions sim;
    auto* cs = app.add_subcommand("simulate", "Semi-parametric outlier benchmark");
    cs->add_option("--data", sim.data, "Source series")->required()->check(CLI::ExistingFile);
    cs->add_option("--deltas", sim.deltas, "Noise scales")->delimiter(',')->capture_default_str();
    cs->add_option("--replicates", sim.replicates, "Replicates per hypothesis")->capture_default_str();
    cs->add_option("--n", sim.n, "Subsample size")->capture_default_str();
    cs->add_option("--contamination", sim.contamination)->capture_default_str();
    cs->add_option("--states,-m", sim.states)->capture_default_str();
    cs->add_option("--restarts", sim.restarts, "EM restarts per replicate")->capture_default_str();
    cs->add_option("--bootstrap", sim.bootstrap)->capture_default_str();
    cs->add_option("--seed", sim.seed)->capture_default_str();
    cs->add_option("--threads", sim.threads)->capture_default_str();
    cs->add_option("--scores", sim.scores, "Per-replicate JSON-lines");
    cs->add_flag("--resume", sim.resume, "Reuse replicates already present in --scores");
    cs->add_option("--out,-o", sim.out)->capture_default_str();
    cs->add_option("--manifest", sim.manifest);

    EvaluateOptions ev;
    auto* ce = app.add_subcommand("evaluate", "AUC table from per-replicate scores");
    ce->add_option("--scores", ev.scores)->required()->check(CLI::ExistingFile);
    ce->add_option("--bootstrap", ev.bootstrap)->capture_default_str();
    ce->add_option("--seed", ev.seed)->capture_default_str();
    ce->add_option("--out,-o", ev.out)->capture_default_str();
    ce->add_option("--manifest", ev.manifest);

    SampleOptions smp;
    auto* cm = app.add_subcommand("sample", "Draw a series from a model");
    cm->add_option("--model", smp.model)->required()->check(CLI::ExistingFile);
    cm->add_option("--n", smp.n)->capture_default_str();
    cm->add_option("--first-label", smp.first_label, "Label of the first point; later labels count up")
        ->capture_default_str();
    cm->add_option("--seed", smp.seed)->capture_default_str();
    cm->add_option("--states-out", smp.states_out, "Hidden path TSV");
    cm->add_option("--out,-o", smp.out)->capture_default_str();
    cm->add_option("--manifest", smp.manifest);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*ct) return run_train(train, args);
        if (*ci) return run_influence(infl, args);
        if (*cd) return run_detect(det, args);
        if (*cs) return run_simulate(sim, args);
        if (*ce) return run_evaluate(ev, args);
        if (*cm) return run_sample(smp, args);
    } catch (const UsageError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kUsage;
    } catch (const hmminf::ParseError& e) {
        if (e.line() > 0) fmt::print(stderr, "error: line {}: {}\n", e.line(), e.what());
        else fmt::print(stderr, "error: {}\n", e.what());
        return kData;
    } catch (const hmminf::InvalidArgument& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kUsage;
    } catch (const hmminf::NumericError& e) {
        fmt::print(stderr, "numeric failure: {}\n", e.what());
        return kNumeric;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kData;
    }
    return kUsage;
}
