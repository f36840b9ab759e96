// Acceptance harness: ten go/no-go checks, one line of output each.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "activehne/dhne.hpp"
#include "activehne/graph.hpp"
#include "activehne/loop.hpp"
#include "activehne/query.hpp"
#include "activehne/runner.hpp"
#include "gradcheck.hpp"

using namespace ahne;

namespace {

int g_failures = 0;

void report(int criterion, const char* what, bool ok, const std::string& detail = "") {
    std::printf("%s %2d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, what,
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

SynthParams bench_params(std::uint64_t seed = 1) {
    SynthParams p;
    p.types = 3;
    p.classes = 3;
    p.nodes_per_class = 200;
    p.p_in = 0.05;
    p.p_out = 0.005;
    p.feature_noise = 0.3;
    p.seed = seed;
    return p;
}

// 10 nodes, 2 types, 3 classes, every node on at least one edge.
HinGraph tiny_graph() {
    HinGraph g;
    g.num_nodes = 10;
    g.num_types = 2;
    g.num_classes = 3;
    for (std::uint32_t v = 0; v < 10; ++v) {
        g.node_type.push_back(v < 5 ? 0 : 1);
        g.label.push_back(static_cast<int>(v % 3));
    }
    auto edge = [&](std::uint32_t u, std::uint32_t v) {
        g.edges.push_back({u, v});
        g.edge_weight.push_back(1.0);
    };
    for (std::uint32_t v = 0; v + 1 < 10; ++v) edge(v, v + 1);
    edge(0, 9);
    edge(2, 7);
    edge(1, 4);
    edge(6, 8);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    g.features = DenseMatrix(10, 4);
    for (double& x : g.features.data) x = dist(rng);
    g.finalize();
    return g;
}

DenseMatrix dense_propagate(const DenseMatrix& p, const DenseMatrix& z, std::size_t k) {
    DenseMatrix acc(z.rows, z.cols);
    DenseMatrix cur = z;
    for (std::size_t step = 0; step < k; ++step) {
        cur = dense_matmul(p, cur);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += cur.data[i];
    }
    return acc;
}

void criterion_1() {
    auto started = std::chrono::steady_clock::now();
    HinGraph g = tiny_graph();
    auto subnets = decompose(g);
    DhneConfig cfg;
    cfg.dropout = 0.0;
    cfg.hidden = 5;
    cfg.seed = 17;
    DhneModel m = init_model(cfg, subnets, g.feature_dim(), g.num_classes);
    std::vector<std::uint32_t> labeled;
    for (std::uint32_t v = 0; v < 10; ++v) labeled.push_back(v);

    ForwardCache cache;
    forward(m, g, subnets, true, 1, &cache);
    Gradients grads = backward(cache, g.label, labeled, m, subnets);
    auto loss_fn = [&] {
        ForwardResult out = forward(m, g, subnets, false, 0);
        return loss(out.probs, g.label, labeled, m, cfg.l2);
    };
    double worst = 0.0;
    for (std::size_t t = 0; t < subnets.size(); ++t) {
        worst = std::max(worst, testing::max_relative_error(
                                    grads.theta0[t],
                                    testing::finite_difference_gradient(m.theta0[t], loss_fn)));
        worst = std::max(worst, testing::max_relative_error(
                                    grads.theta1[t],
                                    testing::finite_difference_gradient(m.theta1[t], loss_fn)));
    }
    worst = std::max(worst, testing::max_relative_error(
                                grads.theta_pre,
                                testing::finite_difference_gradient(m.theta_pre, loss_fn)));
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    char detail[128];
    std::snprintf(detail, sizeof detail, "max relative error %.3g in %.1f s", worst, secs);
    report(1, "gradient check against central finite differences", worst < 1e-4 && secs < 60.0,
           detail);
}

void criterion_2() {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; checked < 50; ++seed) {
        SynthParams p;
        p.types = 1 + seed % 3;
        p.classes = 2;
        p.nodes_per_class = 5 + seed % 8;
        p.p_in = 0.5;
        p.p_out = 0.2;
        p.seed = seed;
        HinGraph g = synth_hin(p);
        for (const auto& s : decompose(g)) {
            if (s.size() > 30 || checked >= 50) continue;
            DenseMatrix z(s.size(), 3), theta(3, 4);
            for (double& x : z.data) x = dist(rng);
            for (double& x : theta.data) x = dist(rng);
            for (std::size_t k = 1; k <= 3; ++k) {
                DenseMatrix got = conv_layer_forward(s, z, theta, k);
                DenseMatrix want =
                    relu(dense_matmul(dense_propagate(s.transition.to_dense(), z, k), theta));
                for (std::size_t i = 0; i < want.data.size(); ++i)
                    worst = std::max(worst, std::abs(got.data[i] - want.data[i]));
            }
            ++checked;
        }
    }
    char detail[96];
    std::snprintf(detail, sizeof detail, "%zu sub-networks, max abs deviation %.3g", checked,
                  worst);
    report(2, "convolution matches densified oracle for K in {1,2,3}", worst < 1e-10, detail);
}

void criterion_3() {
    bool ok = true;
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100 && ok; ++trial) {
        SynthParams p;
        p.types = 1 + rng() % 4;
        p.classes = 2 + rng() % 2;
        p.nodes_per_class = 8 + rng() % 12;
        p.p_in = 0.2 + 0.3 * std::uniform_real_distribution<double>(0, 1)(rng);
        p.p_out = 0.05;
        p.seed = rng();
        HinGraph g = synth_hin(p);
        std::multiset<std::pair<std::uint32_t, std::uint32_t>> original(g.edges.begin(),
                                                                        g.edges.end());
        std::multiset<std::pair<std::uint32_t, std::uint32_t>> recovered;
        for (const auto& s : decompose(g)) {
            for (std::size_t li = 0; li < s.size(); ++li) {
                std::size_t deg = s.adjacency.row_ptr[li + 1] - s.adjacency.row_ptr[li];
                if (deg < 1) ok = false;
                for (std::size_t ptr = s.adjacency.row_ptr[li];
                     ptr < s.adjacency.row_ptr[li + 1]; ++ptr) {
                    std::uint32_t u = s.members[li];
                    std::uint32_t v = s.members[s.adjacency.col_idx[ptr]];
                    if (u < v) recovered.insert({u, v});
                }
            }
        }
        if (recovered != original) ok = false;
    }
    report(3, "decomposition partitions the edge set on 100 random graphs", ok);
}

void criterion_4() {
    SynthParams p;
    p.types = 3;
    p.classes = 3;
    p.nodes_per_class = 120;
    p.p_in = 0.05;
    p.p_out = 0.01;
    p.feature_noise = 0.3;
    p.seed = 2;
    HinGraph g = synth_hin(p);
    LoopConfig cfg;
    cfg.batch = 2;
    cfg.iterations = 40;
    cfg.strategy = Strategy::Full;
    cfg.model.epochs = 50;
    cfg.seed = 3;
    LoopResult res = run_active_loop(g, cfg);
    bool ok = res.records.size() == 40;
    std::size_t checked = 0;
    for (const auto& audit : res.audit) {
        if (!audit.contains("empirical_reward")) continue;
        double delta_union = audit.at("delta_union").get<double>();
        if (delta_union <= 0.0) continue;
        double sum = 0.0;
        for (double r : audit.at("empirical_reward").get<std::vector<double>>()) sum += r;
        if (sum < 1.0 - 1e-9) ok = false;
        ++checked;
    }
    if (checked == 0) ok = false;
    char detail[96];
    std::snprintf(detail, sizeof detail, "%zu reward iterations checked", checked);
    report(4, "empirical rewards sum to at least one across a 40-iteration run", ok, detail);
}

void criterion_5() {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> mu_dist(0.0, 2.0);
    bool ok = true;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        std::size_t b = 1 + rng() % 8;
        std::vector<CandidateSet> cands(kNumArms);
        std::vector<double> mu(kNumArms);
        for (std::size_t arm = 0; arm < kNumArms; ++arm) {
            cands[arm].arm = static_cast<int>(arm);
            mu[arm] = mu_dist(rng);
            std::vector<std::uint32_t> ids(16);
            for (std::uint32_t v = 0; v < 16; ++v) ids[v] = v;
            std::shuffle(ids.begin(), ids.end(), rng);
            std::size_t take = std::min<std::size_t>(b, 1 + rng() % 10);
            for (std::size_t i = 0; i < take; ++i)
                cands[arm].ranked.push_back({ids[i], 20.0 - static_cast<double>(i)});
        }
        // reference scorer: mu * (b - rank) with rank starting at 1
        std::map<std::uint32_t, double> score;
        for (std::size_t arm = 0; arm < kNumArms; ++arm)
            for (std::size_t i = 0; i < cands[arm].ranked.size(); ++i)
                score[cands[arm].ranked[i].node] +=
                    mu[arm] * (static_cast<double>(b) - static_cast<double>(i + 1));
        std::vector<std::pair<std::uint32_t, double>> items(score.begin(), score.end());
        std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
            if (x.second != y.second) return x.second > y.second;
            return x.first < y.first;
        });
        std::vector<std::uint32_t> want;
        for (std::size_t i = 0; i < std::min(b, items.size()); ++i)
            want.push_back(items[i].first);
        BordaResult got = borda_select(cands, mu, b);
        if (got.batch != want) ok = false;
    }
    report(5, "weighted Borda selection matches the exhaustive scorer (1000 instances)", ok);
}

void criterion_6() {
    HinGraph g = synth_hin(bench_params());
    auto subnets = decompose(g);
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Split split = split_dataset(g, seed);
        DhneConfig cfg;
        cfg.seed = seed;
        DhneModel m = init_model(cfg, subnets, g.feature_dim(), g.num_classes);
        TrainResult tr = train(m, g, subnets, split.pool, split.validation);
        total += evaluate_accuracy(tr.output.probs, split.test, g.label);
    }
    double mean = total / 10.0;
    char detail[64];
    std::snprintf(detail, sizeof detail, "mean test accuracy %.4f", mean);
    report(6, "training on the full pool reaches 0.85 mean accuracy over 10 seeds",
           mean >= 0.85, detail);
}

double final_mean_accuracy(const HinGraph& g, Strategy strategy, std::size_t b, std::size_t r) {
    LoopConfig cfg;
    cfg.batch = b;
    cfg.iterations = r;
    cfg.strategy = strategy;
    cfg.seed = 1;
    RepeatedResult rep = run_repeated(g, cfg, 10, 8);
    return rep.mean_accuracy.back();
}

void criterion_7() {
    HinGraph g = synth_hin(bench_params());
    double full = final_mean_accuracy(g, Strategy::Full, 10, 10);
    double random = final_mean_accuracy(g, Strategy::Random, 10, 10);
    char detail[96];
    std::snprintf(detail, sizeof detail, "full %.4f vs random %.4f", full, random);
    report(7, "full strategy beats random at the final iteration over 10 paired seeds",
           full > random, detail);
}

void criterion_8() {
    SynthParams p = bench_params();
    p.nodes_per_class = 100;
    HinGraph g = synth_hin(p);
    double cie = final_mean_accuracy(g, Strategy::CieOnly, 10, 5);
    double ie = final_mean_accuracy(g, Strategy::IeOnly, 10, 5);
    double cid = final_mean_accuracy(g, Strategy::CidOnly, 10, 5);
    double id = final_mean_accuracy(g, Strategy::IdOnly, 10, 5);
    char detail[128];
    std::snprintf(detail, sizeof detail, "cie %.4f vs ie %.4f, cid %.4f vs id %.4f", cie, ie,
                  cid, id);
    report(8, "convolutional variants are not inferior to their plain forms",
           cie >= ie - 0.01 && cid >= id - 0.01, detail);
}

// results.csv with the wall-clock column dropped.
std::string strip_seconds(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
        auto cut = line.rfind(',');
        out += line.substr(0, cut);
        out += '\n';
    }
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_9() {
    namespace fs = std::filesystem;
    SynthParams p = bench_params();
    p.nodes_per_class = 60;
    HinGraph g = synth_hin(p);
    ExperimentConfig cfg;
    cfg.loop.batch = 5;
    cfg.loop.iterations = 4;
    cfg.loop.model.epochs = 50;
    cfg.loop.model.seed = cfg.loop.seed = 11;
    cfg.runs = 2;

    fs::path base = fs::temp_directory_path() / "ahne_accept_det";
    fs::remove_all(base);
    std::vector<std::string> results, aggregates, audits;
    for (int rep = 0; rep < 2; ++rep) {
        fs::path dir = base / std::to_string(rep);
        fs::create_directories(dir);
        RepeatedResult res = run_experiment(g, cfg);
        write_results_csv(res, (dir / "results.csv").string());
        write_aggregate_csv(res, (dir / "aggregate.csv").string());
        write_audit_jsonl(res, (dir / "audit.jsonl").string());
        results.push_back(slurp(dir / "results.csv"));
        aggregates.push_back(slurp(dir / "aggregate.csv"));
        audits.push_back(slurp(dir / "audit.jsonl"));
    }
    fs::remove_all(base);
    // The seconds column is wall-clock and is excluded from the comparison;
    // everything else must match byte for byte.
    bool ok = strip_seconds(results[0]) == strip_seconds(results[1]) &&
              aggregates[0] == aggregates[1] && audits[0] == audits[1] &&
              !aggregates[0].empty();
    report(9, "repeated execution is bit-identical apart from wall-clock timings", ok);
}

void criterion_10() {
    namespace fs = std::filesystem;
    bool ok = true;
    std::string failed;
    try {
        // isolated node: zero importance, zero embedding row, zero scores
        HinGraph g;
        g.num_nodes = 4;
        g.num_types = 1;
        g.num_classes = 2;
        g.node_type.assign(4, 0);
        g.label = {0, 1, 0, 1};
        g.edges = {{0, 1}, {1, 2}};
        g.edge_weight = {1.0, 1.0};
        g.features = DenseMatrix(4, 2, 0.5);
        g.finalize();
        auto subnets = decompose(g);
        DhneConfig mc;
        mc.seed = 1;
        DhneModel m = init_model(mc, subnets, g.feature_dim(), g.num_classes);
        ForwardResult out = forward(m, g, subnets, false, 0);
        for (std::size_t j = 0; j < out.embedding.cols; ++j)
            if (out.embedding(3, j) != 0.0) ok = false;
        NodeImportance imp = node_importance(g);
        if (score_cie(g, imp, out.probs, {3})[0] != 0.0) ok = false;
        Clustering cl = kmeans(out.embedding, 2, 1);
        if (score_cid(g, imp, out.embedding, cl, {3})[0] != 0.0) ok = false;
        if (!ok) failed = "isolated node";

        // empty feature file falls back to identity
        fs::path dir = fs::temp_directory_path() / "ahne_accept_degenerate";
        fs::remove_all(dir);
        fs::create_directories(dir);
        {
            std::ofstream(dir / "n.tsv") << "0\ta\tx\n1\ta\ty\n2\ta\tx\n3\ta\ty\n";
            std::ofstream(dir / "e.tsv") << "0\t1\n1\t2\n2\t3\n";
            std::ofstream(dir / "f.tsv") << "";
        }
        HinGraph loaded = load_graph((dir / "n.tsv").string(), (dir / "e.tsv").string(),
                                     (dir / "f.tsv").string());
        if (loaded.feature_dim() != loaded.num_nodes) {
            ok = false;
            failed = "identity fallback";
        }
        fs::remove_all(dir);

        // pool exhaustion mid-batch
        SynthParams p;
        p.types = 2;
        p.classes = 2;
        p.nodes_per_class = 16;
        p.p_in = 0.3;
        p.p_out = 0.05;
        p.seed = 4;
        HinGraph small = synth_hin(p);
        LoopConfig lc;
        lc.batch = 3;
        lc.iterations = 10;
        lc.model.epochs = 20;
        lc.seed = 2;
        LoopResult res = run_active_loop(small, lc);
        std::size_t queried = 0;
        for (const auto& rec : res.records) queried += rec.queried.size();
        if (queried != split_dataset(small, lc.seed).pool.size()) {
            ok = false;
            failed = "pool exhaustion";
        }

        // vanishing union change falls back to the uniform reward
        std::vector<double> u = empirical_rewards({0.0, 0.0, 0.0}, 0.0);
        for (double x : u)
            if (std::abs(x - 1.0 / 3.0) > 1e-15) ok = false;
        if (!ok && failed.empty()) failed = "uniform fallback";
    } catch (const std::exception& e) {
        ok = false;
        failed = std::string("exception: ") + e.what();
    }
    report(10, "degenerate inputs are handled without error", ok, failed);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
