// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Pass criterion numbers as arguments to
// run a subset, e.g. `acceptance 1 2 3`.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "serlfd/serlfd.hpp"
#include "temp_dir.hpp"

using namespace serlfd;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kMlpGradTol = 1e-4;
constexpr double kGradTol = 1e-3;
constexpr double kGradSeconds = 60;
constexpr double kTelescopeTol = 1e-9;
constexpr double kInvarianceAlpha = 1e-3;
constexpr double kInvarianceSeconds = 60;
constexpr double kIdentityTol = 1e-9;
constexpr double kTabularTol = 1e-2;
constexpr double kTabularSeconds = 120;
constexpr double kPacmanMargin = 0.2;
constexpr double kPacmanFloor = 0.8;
constexpr int kPacmanMaxEpisodes = 5000;
constexpr double kRunMinutes = 30;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, x);
    return buf;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

// True when no relu pre-activation lies within eps of the kink.
bool off_kink(const MlpSpec& spec, const MlpParams& p, const std::vector<double>& x, double eps) {
    if (spec.hidden_activation != Activation::relu) return true;
    const auto t = trace_forward(spec, p, x);
    for (std::size_t l = 0; l + 1 < t.pre.size(); ++l)
        for (double v : t.pre[l])
            if (std::abs(v) < eps) return false;
    return true;
}

Experience random_experience(std::size_t dim, std::size_t k, std::size_t actions, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    Experience e;
    e.state = random_vector(dim, rng);
    e.next_state = random_vector(dim, rng);
    for (std::size_t i = 0; i < k; ++i) {
        e.predicates.values.push_back(coin(rng) ? 1 : -1);
        e.next_predicates.values.push_back(coin(rng) ? 1 : -1);
    }
    e.reward = std::uniform_real_distribution<double>(-1, 1)(rng);
    e.done = std::bernoulli_distribution(0.3)(rng);
    e.action = std::uniform_int_distribution<ActionId>(0, static_cast<ActionId>(actions) - 1)(rng);
    return e;
}

Outcome gradient_suite() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    double mlp = 0, se_net = 0, q_net = 0, l_se = 0, td = 0;
    auto pick_act = [&] { return std::bernoulli_distribution(0.5)(rng) ? Activation::relu : Activation::tanh; };

    // Bare MLP, including the input gradient.
    for (int n = 0; n < 50;) {
        MlpSpec spec;
        spec.layer_sizes = {std::size_t(2 + rng() % 4), std::size_t(2 + rng() % 6), std::size_t(1 + rng() % 3)};
        spec.hidden_activation = pick_act();
        auto p = init_params(spec, rng);
        const auto x = random_vector(spec.input_dim(), rng);
        const auto up = random_vector(spec.output_dim(), rng);
        if (!off_kink(spec, p, x, 1e-3)) continue;
        const auto r = backward(spec, p, x, up);
        auto dot = [&](const std::vector<double>& in) {
            const auto y = oracle::forward(spec, p, in);
            double v = 0;
            for (std::size_t i = 0; i < y.size(); ++i) v += y[i] * up[i];
            return v;
        };
        mlp = std::max(mlp, oracle::max_relative_error(oracle::flatten(r.grads.layers),
                                                       oracle::finite_difference(p, [&] { return dot(x); })));
        std::vector<double> fd_in;
        for (std::size_t i = 0; i < x.size(); ++i) {
            auto a = x, b = x;
            a[i] += 1e-5;
            b[i] -= 1e-5;
            fd_in.push_back((dot(a) - dot(b)) / 2e-5);
        }
        mlp = std::max(mlp, oracle::max_relative_error(r.input_grad, fd_in));
        ++n;
    }

    // SE-Net utilities and Q-net values under a random upstream vector.
    for (int n = 0; n < 50;) {
        const std::size_t dim = 3 + rng() % 4, k = 2 + rng() % 3, actions = 2 + rng() % 4;
        auto se = SENet::create(dim, k, {6}, pick_act(), rng);
        auto q = QNet::create(dim + k, actions, {7}, pick_act(), rng);
        const auto x = random_vector(dim, rng), xq = random_vector(dim + k, rng);
        if (!off_kink(se.spec, se.params, x, 1e-3) || !off_kink(q.spec, q.params, xq, 1e-3)) continue;
        for (auto* net : {&se.spec, &q.spec}) {
            const bool is_se = net == &se.spec;
            auto& spec = is_se ? se.spec : q.spec;
            auto& params = is_se ? se.params : q.params;
            const auto& in = is_se ? x : xq;
            const auto up = random_vector(spec.output_dim(), rng);
            const auto r = backward(spec, params, in, up);
            const auto fd = oracle::finite_difference(params, [&] {
                const auto y = oracle::forward(spec, params, in);
                double v = 0;
                for (std::size_t i = 0; i < y.size(); ++i) v += y[i] * up[i];
                return v;
            });
            double& worst = is_se ? se_net : q_net;
            worst = std::max(worst, oracle::max_relative_error(oracle::flatten(r.grads.layers), fd));
        }
        ++n;
    }

    // L_SE end to end, with log q from a real agent whose input includes the
    // utilities. q is held at the pre-perturbation snapshot.
    for (int n = 0; n < 50;) {
        const std::size_t dim = 3 + rng() % 3, k = 2 + rng() % 2, actions = 3;
        auto se = SENet::create(dim, k, {5}, Activation::tanh, rng);
        SoftQConfig qc;
        qc.hidden = {6};
        qc.temperature = 0.5;
        const auto agent = SoftQAgent::create(qc, AugmentationMode::se_full, dim, k, actions, rng);
        const SENet snapshot = se;
        const auto inner = policy_log_density(agent, &snapshot);
        const PolicyLogDensity frozen = [&](const Experience& e, std::span<const double>) {
            return inner(e, utilities(snapshot, e.state).values);
        };
        std::vector<Experience> good, bad;
        for (int i = 0; i < 2; ++i) {
            good.push_back(random_experience(dim, k, actions, rng));
            bad.push_back(random_experience(dim, k, actions, rng));
        }
        Batch gb, bb;
        for (const auto& e : good) gb.push_back({&e, true, 0});
        for (const auto& e : bad) bb.push_back({&e, false, 1});
        const auto r = se_loss_and_gradient(gb, bb, se, frozen);
        const auto fd = oracle::finite_difference(se.params, [&] {
            auto D = [&](const Experience& e) {
                auto h = [&](const std::vector<double>& s, const PredicateVector& p) {
                    const auto u = oracle::forward(se.spec, se.params, s);
                    double v = 0;
                    for (std::size_t i = 0; i < u.size(); ++i) v += u[i] * p[i];
                    return v;
                };
                const double r_hat =
                    e.reward + (e.done ? 0.0 : h(e.next_state, e.next_predicates)) - h(e.state, e.predicates);
                const double q = std::exp(frozen(e, {}));
                return std::exp(r_hat) / (std::exp(r_hat) + q);
            };
            double g = 0, b = 0;
            for (const auto& e : good) g -= std::log(D(e)) / good.size();
            for (const auto& e : bad) b -= std::log(1 - D(e)) / bad.size();
            return g + b;
        });
        l_se = std::max(l_se, oracle::max_relative_error(oracle::flatten(r.grads.layers), fd));
        ++n;
    }

    // Semi-gradient TD loss against fixed soft targets.
    for (int n = 0; n < 50;) {
        const std::size_t dim = 2 + rng() % 4, actions = 2 + rng() % 4;
        SoftQConfig qc;
        qc.margin_weight = 0;
        qc.l2_weight = 0;
        auto q = QNet::create(dim, actions, {6}, pick_act(), rng);
        const auto target = QNet::create(dim, actions, {6}, Activation::tanh, rng);
        std::vector<Transition> batch;
        bool ok = true;
        for (int i = 0; i < 3; ++i) {
            Transition t{random_vector(dim, rng), static_cast<ActionId>(rng() % actions), random_vector(1, rng)[0],
                         random_vector(dim, rng), i == 2, false};
            ok = ok && off_kink(q.spec, q.params, t.state, 1e-3);
            batch.push_back(std::move(t));
        }
        if (!ok) continue;
        const auto y = soft_td_target(batch, target, 0.9, 0.2);
        const auto loss = agent_loss(q, batch, y, qc);
        const auto fd = oracle::finite_difference(q.params, [&] {
            double v = 0;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const double err = oracle::forward(q.spec, q.params, batch[i].state)[batch[i].action] - y[i];
                v += 0.5 * err * err / batch.size();
            }
            return v;
        });
        td = std::max(td, oracle::max_relative_error(oracle::flatten(loss.grads.layers), fd));
        ++n;
    }
    const double secs = seconds_since(start);
    const double worst = std::max({se_net, q_net, l_se, td});
    Outcome o;
    o.pass = mlp <= kMlpGradTol && worst <= kGradTol && secs < kGradSeconds;
    o.detail = "max rel err mlp " + fmt("%.2e", mlp) + " (tol 1e-4), se-net " + fmt("%.2e", se_net) + ", q-net " +
               fmt("%.2e", q_net) + ", L_SE " + fmt("%.2e", l_se) + ", TD " + fmt("%.2e", td) + " (tol 1e-3); " +
               fmt("%.1f", secs) + " s (limit 60 s)";
    return o;
}

Outcome telescoping() {
    std::mt19937_64 rng(7);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        auto env = make_environment(EnvConfig::defaults_for(i % 2 ? "gridpush" : "pacman"));
        const auto se = SENet::create(env->state_dim(), env->predicate_count(), {16},
                                      i % 3 ? Activation::tanh : Activation::relu, rng);
        std::uniform_int_distribution<ActionId> pick(0, static_cast<ActionId>(env->action_count()) - 1);
        StateVec s = env->reset(rng());
        const double h0 = potential(utilities(se, s), env->ground_predicates(s));
        double sum = 0;
        while (!env->finished()) {
            const auto r = env->step(pick(rng));
            const ShapedRewardInputs in{s, utilities(se, s), env->ground_predicates(s), 0, r.next_state,
                                        utilities(se, r.next_state), env->ground_predicates(r.next_state),
                                        r.reward, r.done};
            sum += shaped_reward(in) - r.reward;
            s = r.next_state;
        }
        worst = std::max(worst, std::abs(sum + h0));
    }
    return {worst <= kTelescopeTol, "max |sum(r_hat - r) + h(s0)| = " + fmt("%.2e", worst) + " over 100 episodes (tol 1e-9)"};
}

Outcome policy_invariance() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0, 1);
    const double gamma = 0.9;
    int differing = 0;
    for (int m = 0; m < 20; ++m) {
        TabularMdp mdp(10, 3);
        for (std::size_t s = 0; s < 10; ++s)
            for (std::size_t a = 0; a < 3; ++a) {
                const double split = u(rng);
                mdp.at(s, a) = {{split, rng() % 10, 2 * u(rng) - 1, u(rng) < 0.1},
                                {1 - split, rng() % 10, 2 * u(rng) - 1, false}};
            }
        std::vector<double> phi(10);
        for (auto& x : phi) x = 4 * u(rng) - 2;
        const auto plain = soft_value_iteration(mdp, kInvarianceAlpha, gamma, 1e-12);
        const auto shaped = soft_value_iteration(potential_shaped(mdp, phi, gamma), kInvarianceAlpha, gamma, 1e-12);
        for (std::size_t s = 0; s < 10; ++s) differing += plain.greedy[s] != shaped.greedy[s];
    }
    const double secs = seconds_since(start);
    return {differing == 0 && secs < kInvarianceSeconds,
            std::to_string(differing) + " differing greedy actions over 20 MDPs x 10 states; " + fmt("%.2f", secs) +
                " s (limit 60 s)"};
}

Outcome discriminator_identities() {
    double worst_d = 0;
    for (double q : {0.1, 0.5, 1.0}) worst_d = std::max(worst_d, std::abs(discriminator_prob(std::log(q), q) - 0.5));
    // Zero SE-Net gives h = 0, so r_hat = r; rewards equal to log q give D = 0.5.
    std::mt19937_64 rng(3);
    SENet se = SENet::create(3, 2, {4}, Activation::relu, rng);
    se.params = MlpParams::zeros(se.spec);
    std::vector<Experience> good, bad;
    const std::vector<double> qs{0.1, 0.5, 1.0, 0.25};
    for (std::size_t i = 0; i < qs.size(); ++i) {
        auto e = random_experience(3, 2, 4, rng);
        e.reward = std::log(qs[i]);
        e.action = static_cast<ActionId>(i);
        (i % 2 ? bad : good).push_back(e);
    }
    const PolicyLogDensity log_q = [&](const Experience& e, std::span<const double>) {
        return std::log(qs[static_cast<std::size_t>(e.action)]);
    };
    Batch gb, bb;
    for (const auto& e : good) gb.push_back({&e, true, 0});
    for (const auto& e : bad) bb.push_back({&e, false, 1});
    const double loss_err = std::abs(se_loss(gb, bb, se, log_q) - 2 * std::log(2.0));
    return {worst_d == 0.0 && loss_err <= kIdentityTol,
            "max |D(ln q, q) - 0.5| = " + fmt("%.1e", worst_d) + " (exact), |L_SE - 2 ln 2| = " + fmt("%.1e", loss_err) +
                " (tol 1e-9)"};
}

Outcome tabular_agent() {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t rows = 5, cols = 5, goal = 24, S = rows * cols, A = 4;
    const double alpha = 0.1, gamma = 0.9;
    const auto mdp = grid_world(rows, cols, goal);
    const auto oracle_values = soft_value_iteration(mdp, alpha, gamma, 1e-12);

    SoftQConfig config;
    config.temperature = alpha;
    config.discount = gamma;
    config.hidden = {};
    config.margin_weight = 0;
    config.l2_weight = 0;
    config.target_sync_interval = 50;
    config.adam.learning_rate = 0.05;
    std::mt19937_64 rng(1);
    auto agent = SoftQAgent::create(config, AugmentationMode::none, S, 0, A, rng);
    agent.online.params = MlpParams::zeros(agent.online.spec);
    agent.target = agent.online;

    std::vector<Transition> batch;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const auto& o = mdp.at(s, a).front();
            std::vector<double> x(S, 0.0), x2(S, 0.0);
            x[s] = 1;
            x2[o.next_state] = 1;
            batch.push_back({x, static_cast<ActionId>(a), o.reward, x2, o.terminal, false});
        }
    auto max_error = [&] {
        double worst = 0;
        for (std::size_t s = 0; s < S; ++s) {
            std::vector<double> x(S, 0.0);
            x[s] = 1;
            const auto q = agent.online.values(x);
            for (std::size_t a = 0; a < A; ++a) worst = std::max(worst, std::abs(q[a] - oracle_values.q[s * A + a]));
        }
        return worst;
    };
    double err = max_error();
    int updates = 0;
    while (err > kTabularTol / 10 && seconds_since(start) < kTabularSeconds) {
        for (int i = 0; i < 1000; ++i) agent_update(agent, batch);
        updates += 1000;
        // Anneal once close so Adam's step size does not dominate the error.
        if (updates % 20000 == 0) agent.optimizer.config.learning_rate *= 0.5;
        err = max_error();
    }
    const double secs = seconds_since(start);
    return {err <= kTabularTol && secs < kTabularSeconds,
            "max |Q - Q*| = " + fmt("%.2e", err) + " after " + std::to_string(updates) + " updates (tol 1e-2); " +
                fmt("%.1f", secs) + " s (limit 120 s)"};
}

// Experiment runs shared by criteria 6 to 9.
struct Runs {
    std::map<std::string, std::vector<RunResult>> by_variant;
    std::map<std::string, double> minutes_per_run;
};

ExperimentConfig load_config(const std::string& name, const std::string& out_dir) {
    auto c = load_experiment_config(std::string(SERLFD_SOURCE_DIR) + "/configs/" + name);
    if (!c.demos.empty() && fs::path(c.demos).is_relative()) c.demos = std::string(SERLFD_SOURCE_DIR) + "/" + c.demos;
    c.output_dir = out_dir;
    return c;
}

Runs run_variants(const std::string& config_name, const std::vector<std::string>& modes, const std::string& out_dir) {
    Runs runs;
    for (const auto& mode : modes) {
        auto c = load_config(config_name, out_dir);
        c.mode = mode;
        c.variant.clear();
        const auto start = std::chrono::steady_clock::now();
        runs.by_variant[mode] = run_experiment(c);
        runs.minutes_per_run[mode] = seconds_since(start) / 60 / static_cast<double>(c.seeds.size());
        std::printf("  ran %s/%s: %zu seeds, %.1f min per run\n", config_name.c_str(), mode.c_str(), c.seeds.size(),
                    runs.minutes_per_run[mode]);
        std::fflush(stdout);
    }
    return runs;
}

double median_final(const std::vector<RunResult>& results) {
    std::vector<double> v;
    for (const auto& r : results) v.push_back(r.final_score());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string finals(const std::vector<RunResult>& results) {
    std::string s = "[";
    for (std::size_t i = 0; i < results.size(); ++i) s += (i ? " " : "") + fmt("%.2f", results[i].final_score());
    return s + "]";
}

Outcome pacman_curve(const Runs& runs) {
    const auto& full = runs.by_variant.at("se_full");
    const auto& none = runs.by_variant.at("none");
    const double m_full = median_final(full), m_none = median_final(none);
    const int episodes = full.empty() ? 0 : static_cast<int>(full.front().rows.size());
    double slowest = 0;
    for (const auto& [mode, minutes] : runs.minutes_per_run) slowest = std::max(slowest, minutes);
    Outcome o;
    o.pass = full.size() == 3 && none.size() == 3 && episodes <= kPacmanMaxEpisodes &&
             m_full - m_none >= kPacmanMargin && m_full >= kPacmanFloor;
    o.detail = "median final score se_full " + fmt("%.2f", m_full) + " " + finals(full) + " vs none " +
               fmt("%.2f", m_none) + " " + finals(none) + "; need gap >= 0.2 and se_full >= 0.8; " +
               std::to_string(episodes) + " episodes (max 5000), slowest run " + fmt("%.1f", slowest) +
               " min (target " + fmt("%.0f", kRunMinutes) + ")";
    return o;
}

Outcome gridpush_ablation(const Runs& runs) {
    const double full = median_final(runs.by_variant.at("se_full"));
    const double nu = median_final(runs.by_variant.at("se_nu"));
    const double none = median_final(runs.by_variant.at("none"));
    const double ntr = median_final(runs.by_variant.at("se_ntr"));
    return {full >= nu && full >= none,
            "median final score se_full " + fmt("%.2f", full) + " >= se_nu " + fmt("%.2f", nu) + " and >= none " +
                fmt("%.2f", none) + "; se_ntr " + fmt("%.2f", ntr) + " (reported only)"};
}

Outcome imitation_cap(const Runs& runs) {
    const double full = median_final(runs.by_variant.at("se_full"));
    const double gan = median_final(runs.by_variant.at("sa_gan_gcl"));
    return {gan <= full, "median final score sa_gan_gcl " + fmt("%.2f", gan) + " " +
                             finals(runs.by_variant.at("sa_gan_gcl")) + " <= se_full " + fmt("%.2f", full)};
}

Outcome reproducibility(const std::vector<std::pair<std::string, std::vector<std::string>>>& plan,
                        const std::string& first_dir, const std::string& second_dir) {
    int compared = 0, differing = 0;
    for (const auto& [config, modes] : plan) {
        const auto runs = run_variants(config, modes, second_dir + "/" + fs::path(config).stem().string());
        for (const auto& [mode, results] : runs.by_variant)
            for (const auto& r : results) {
                const auto name = fs::path(r.metrics_path).filename().string();
                const auto original = first_dir + "/" + fs::path(config).stem().string() + "/" + name;
                ++compared;
                if (!fs::exists(original) || read_file(original) != read_file(r.metrics_path)) ++differing;
            }
    }
    return {compared > 0 && differing == 0,
            std::to_string(compared - differing) + "/" + std::to_string(compared) +
                " repeated metrics CSVs bit-identical"};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    auto want = [&](int c) { return wanted.empty() || wanted.count(c) > 0; };

    const std::string root = "acceptance_runs";
    const std::vector<std::pair<std::string, std::vector<std::string>>> plan{
        {"pacman.json", {"none", "se_full"}},
        {"gridpush.json", {"se_full", "se_nu", "none", "se_ntr", "sa_gan_gcl"}},
    };

    int failures = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    };
    auto guarded = [&](int id, const char* name, const std::function<Outcome()>& f) {
        if (!want(id)) return;
        try {
            report(id, name, f());
        } catch (const std::exception& e) {
            report(id, name, {false, std::string("error: ") + e.what()});
        }
    };

    guarded(1, "gradient suite", gradient_suite);
    guarded(2, "shaping telescoping", telescoping);
    guarded(3, "policy invariance", policy_invariance);
    guarded(4, "discriminator identities", discriminator_identities);
    guarded(5, "tabular agent vs oracle", tabular_agent);

    Runs pacman, gridpush;
    guarded(6, "pacman learning curve", [&] {
        pacman = run_variants("pacman.json", plan[0].second, root + "/first/pacman");
        return pacman_curve(pacman);
    });
    if (want(7) || want(8))
        try {
            gridpush = run_variants("gridpush.json", plan[1].second, root + "/first/gridpush");
        } catch (const std::exception& e) {
            std::printf("  gridpush runs failed: %s\n", e.what());
        }
    guarded(7, "gridpush ablation ordering", [&] { return gridpush_ablation(gridpush); });
    guarded(8, "imitation baseline cap", [&] { return imitation_cap(gridpush); });
    guarded(9, "reproducibility", [&] {
        std::vector<std::pair<std::string, std::vector<std::string>>> done;
        if (want(6)) done.push_back(plan[0]);
        if (want(7) || want(8)) done.push_back(plan[1]);
        if (done.empty()) throw Error("needs the runs of criteria 6 to 8 in the same invocation");
        return reproducibility(done, root + "/first", root + "/second");
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
