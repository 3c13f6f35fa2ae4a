#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "hmminf/error.hpp"
#include "hmminf/influence.hpp"
#include "hmminf/outliers.hpp"
#include "hmminf/rng.hpp"

namespace hmminf {

namespace {

// Stream tags.
constexpr std::uint64_t kTagDraw = 0x44524157;   // "DRAW"
constexpr std::uint64_t kTagEm = 0x454D;         // "EM"
constexpr std::uint64_t kTagKmeans = 0x4B4D;     // "KM"
constexpr std::uint64_t kTagBoot = 0x424F4F54;   // "BOOT"

std::uint64_t hyp_tag(Hypothesis h) { return h == Hypothesis::H0 ? 0 : 1; }

}  // namespace

const char* to_string(Hypothesis h) { return h == Hypothesis::H0 ? "H0" : "H1"; }

Hypothesis parse_hypothesis(const std::string& s) {
    if (s == "H0") return Hypothesis::H0;
    if (s == "H1") return Hypothesis::H1;
    throw ParseError("unknown hypothesis '" + s + "'", 0);
}

void validate(const SimulationConfig& cfg) {
    if (cfg.n < 1 || cfg.n > cfg.source.size()) throw InvalidArgument("subsample size must lie in [1, source length]");
    if (!(cfg.contamination >= 0.0 && cfg.contamination <= 1.0))
        throw InvalidArgument("contamination probability must lie in [0, 1]");
    if (!(cfg.delta >= 0.0)) throw InvalidArgument("noise standard deviation must be >= 0");
    if (cfg.replicates < 1) throw InvalidArgument("at least one replicate is required");
    if (cfg.num_states < 1 || cfg.n <= cfg.num_states) throw InvalidArgument("subsample too small for the model");
}

ObservationSequence draw_replicate(const SimulationConfig& cfg, Hypothesis hypothesis, std::size_t replicate,
                                   std::size_t attempt, std::vector<std::size_t>* outliers) {
    Rng rng = make_rng(cfg.seed, {kTagDraw, hyp_tag(hypothesis), replicate, attempt});
    std::vector<std::size_t> all(cfg.source.size());
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::size_t> picked;
    picked.reserve(cfg.n);
    std::sample(all.begin(), all.end(), std::back_inserter(picked), cfg.n, rng);
    std::sort(picked.begin(), picked.end());

    std::vector<double> values(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) values[i] = cfg.source[picked[i]];

    if (hypothesis == Hypothesis::H1) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::normal_distribution<double> noise(0.0, 1.0);
        for (std::size_t i = 0; i < cfg.n; ++i) {
            const double u = unif(rng);
            const double z = noise(rng);
            if (u < cfg.contamination) {
                values[i] += cfg.delta * z;
                if (outliers) outliers->push_back(i);
            }
        }
    }
    return ObservationSequence::from_values(std::move(values));
}

ScoredReplicate simulate(const SimulationConfig& cfg, Hypothesis hypothesis, std::size_t replicate) {
    validate(cfg);
    ScoredReplicate out;
    out.label = hypothesis;
    out.replicate = replicate;
    out.delta = hypothesis == Hypothesis::H1 ? cfg.delta : 0.0;

    for (std::size_t attempt = 0; attempt <= cfg.max_resamples; ++attempt) {
        std::vector<std::size_t> outliers;
        const ObservationSequence obs = draw_replicate(cfg, hypothesis, replicate, attempt, &outliers);

        EmConfig em;
        em.num_states = cfg.num_states;
        em.num_restarts = cfg.em_restarts;
        em.tie_transitions = true;
        em.homoscedastic = true;
        em.seed = derive_seed(cfg.seed, {kTagEm, hyp_tag(hypothesis), replicate, attempt});
        EmResult fit;
        try {
            fit = em_fit(obs, em);
        } catch (const EmDegenerate&) {
            continue;
        }

        const InfluenceProfile infl = kld_influence(fit.model, obs);
        out.t_kld = *std::max_element(infl.k.begin(), infl.k.end());

        const ZScores z = z_value_scores(obs.values, cfg.num_states,
                                         derive_seed(cfg.seed, {kTagKmeans, hyp_tag(hypothesis), replicate, attempt}));
        out.s_z = z.statistic();
        out.z_degenerate = z.degenerate;

        const LofStatistic lof = lof_statistic(obs.values);
        out.l_lof = lof.statistic();
        out.lof_clipped = lof.clipped;

        out.outliers = std::move(outliers);
        out.resamples = attempt;
        return out;
    }
    throw EmDegenerate("replicate " + std::to_string(replicate) + ": EM degenerate after " +
                       std::to_string(cfg.max_resamples + 1) + " draws");
}

std::vector<BenchmarkRow> evaluate_replicates(std::span<const ScoredReplicate> replicates, std::size_t bootstrap,
                                              std::uint64_t seed) {
    std::vector<const ScoredReplicate*> h0;
    std::map<double, std::vector<const ScoredReplicate*>> h1;
    for (const auto& r : replicates) {
        if (r.label == Hypothesis::H0) h0.push_back(&r);
        else h1[r.delta].push_back(&r);
    }
    if (h0.empty()) throw InvalidArgument("evaluation needs H0 replicates");
    if (h1.empty()) throw InvalidArgument("evaluation needs H1 replicates");

    struct Method {
        const char* name;
        double ScoredReplicate::*field;
    };
    const Method methods[] = {{"kld", &ScoredReplicate::t_kld}, {"z", &ScoredReplicate::s_z}, {"lof", &ScoredReplicate::l_lof}};

    std::vector<BenchmarkRow> rows;
    for (std::size_t mi = 0; mi < std::size(methods); ++mi) {
        std::vector<double> s0;
        for (const auto* r : h0) s0.push_back(r->*methods[mi].field);
        for (const auto& [delta, reps] : h1) {
            std::vector<double> s1;
            for (const auto* r : reps) s1.push_back(r->*methods[mi].field);
            BenchmarkRow row;
            row.method = methods[mi].name;
            row.delta = delta;
            row.replicates = reps.size();
            row.seed = seed;
            row.roc = empirical_auc(s1, s0, bootstrap,
                                    derive_seed(seed, {kTagBoot, mi, std::bit_cast<std::uint64_t>(delta)}));
            row.roc.ranked.clear();
            row.roc.ranked.shrink_to_fit();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, std::span<const ScoredReplicate> done) {
    validate(cfg.simulation);
    if (cfg.deltas.empty()) throw InvalidArgument("benchmark needs at least one delta");

    struct Task {
        Hypothesis hyp;
        double delta;
        std::size_t replicate;
    };
    std::vector<Task> tasks;
    const std::size_t reps = cfg.simulation.replicates;
    for (std::size_t q = 0; q < reps; ++q) tasks.push_back({Hypothesis::H0, 0.0, q});
    for (double delta : cfg.deltas)
        for (std::size_t q = 0; q < reps; ++q) tasks.push_back({Hypothesis::H1, delta, q});

    std::map<std::tuple<int, double, std::size_t>, const ScoredReplicate*> cached;
    for (const auto& r : done) cached[{static_cast<int>(r.label), r.delta, r.replicate}] = &r;

    std::vector<ScoredReplicate> results(tasks.size());
    std::vector<char> ok(tasks.size(), 0);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](std::size_t t) {
        const Task& task = tasks[t];
        if (auto it = cached.find({static_cast<int>(task.hyp), task.delta, task.replicate}); it != cached.end()) {
            results[t] = *it->second;
            ok[t] = 1;
            return;
        }
        SimulationConfig sc = cfg.simulation;
        sc.delta = task.delta;
        try {
            results[t] = simulate(sc, task.hyp, task.replicate);
            ok[t] = 1;
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, tasks.size());
    if (workers == 1) {
        for (std::size_t t = 0; t < tasks.size() && !failure; ++t) work(t);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t t = w; t < tasks.size(); t += workers) work(t);
            });
    }
    if (failure) std::rethrow_exception(failure);

    BenchmarkResult out;
    out.replicates = std::move(results);
    out.rows = evaluate_replicates(out.replicates, cfg.bootstrap, cfg.simulation.seed);
    return out;
}

void write_benchmark_tsv(std::ostream& os, std::span<const BenchmarkRow> rows) {
    fmt::print(os, "method\tdelta\tauc\tci_lo\tci_hi\treplicates\tseed\n");
    for (const auto& r : rows)
        fmt::print(os, "{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\t{}\t{}\n", r.method, r.delta, r.roc.auc, r.roc.ci_lo, r.roc.ci_hi,
                   r.replicates, r.seed);
}

std::string to_json_line(const ScoredReplicate& r) {
    nlohmann::json j;
    j["hypothesis"] = to_string(r.label);
    j["delta"] = r.delta;
    j["replicate"] = r.replicate;
    j["t_kld"] = r.t_kld;
    j["s_z"] = r.s_z;
    j["l_lof"] = r.l_lof;
    j["outliers"] = r.outliers;
    j["resamples"] = r.resamples;
    j["z_degenerate"] = r.z_degenerate;
    j["lof_clipped"] = r.lof_clipped;
    return j.dump();
}

ScoredReplicate replicate_from_json(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        ScoredReplicate r;
        r.label = parse_hypothesis(j.at("hypothesis").get<std::string>());
        r.delta = j.at("delta").get<double>();
        r.replicate = j.at("replicate").get<std::size_t>();
        r.t_kld = j.at("t_kld").get<double>();
        r.s_z = j.at("s_z").get<double>();
        r.l_lof = j.at("l_lof").get<double>();
        r.outliers = j.value("outliers", std::vector<std::size_t>{});
        r.resamples = j.value("resamples", std::size_t{0});
        r.z_degenerate = j.value("z_degenerate", false);
        r.lof_clipped = j.value("lof_clipped", false);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid replicate record: ") + e.what(), 0);
    }
}

}  // namespace hmminf
