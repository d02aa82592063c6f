// Command-line front end: record, train, eval, explain, aggregate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "serlfd/serlfd.hpp"

using namespace serlfd;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const auto v = std::stoull(item, &used);
        if (used != item.size()) throw Error("bad seed '" + item + "'");
        seeds.push_back(v);
    }
    if (seeds.empty()) throw Error("empty seed list");
    return seeds;
}

ExperimentConfig load_or_default(const std::string& path) {
    return path.empty() ? ExperimentConfig{} : load_experiment_config(path);
}

struct Common {
    std::string config;
    std::string mode;
    std::string seeds;
    std::string out;
    std::string demos;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment config (JSON)");
    cmd->add_option("--mode", c.mode, "none|se_full|se_nu|se_nrs|se_ntr|sa_gan_gcl");
    cmd->add_option("--seed", c.seeds, "comma-separated seed list");
    cmd->add_option("--out", c.out, "output path");
    cmd->add_option("--demos", c.demos, "demonstration file (JSONL)");
}

ExperimentConfig resolve(const Common& c) {
    ExperimentConfig cfg = load_or_default(c.config);
    if (!c.mode.empty()) {
        cfg.mode = c.mode;
        if (!c.config.empty()) cfg.variant.clear();
    }
    if (!c.seeds.empty()) cfg.seeds = parse_seeds(c.seeds);
    if (!c.demos.empty()) cfg.demos = c.demos;
    cfg.validate();
    return cfg;
}

void write_explanation(std::ostream& out, const Environment& env, const Trajectory& t, const SENet& se) {
    out << "step,action,reward";
    for (const auto& n : env.predicate_names()) out << ",p_" << n;
    for (const auto& n : env.predicate_names()) out << ",u_" << n;
    out << ",h\n";
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const auto& e = t.steps[i];
        const auto u = utilities(se, e.state);
        out << i << ',' << e.action << ',' << detail::fmt_number(e.reward);
        for (double p : e.predicates.values) out << ',' << p;
        for (double x : u.values) out << ',' << detail::fmt_number(x);
        out << ',' << detail::fmt_number(potential(u, e.predicates)) << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serlfd: record demos, train, evaluate and explain agents"};
    app.require_subcommand(1);

    Common rec;
    std::string rec_env;
    int scripted = 0;
    std::uint64_t rec_seed = 0;
    auto* record = app.add_subcommand("record", "record keyboard demonstrations");
    record->add_option("--env", rec_env, "pacman|gridpush")->required();
    record->add_option("--config", rec.config, "experiment config; its env section is used");
    record->add_option("--out", rec.out, "trajectory file to append to")->required();
    record->add_option("--first-seed", rec_seed, "episode seed of the first episode");
    record->add_option("--scripted", scripted, "write N scripted successful demonstrations instead");

    Common tr;
    bool parallel = false;
    int episodes = 0;
    auto* train = app.add_subcommand("train", "run an experiment");
    add_common(train, tr);
    train->add_flag("--parallel-seeds", parallel, "run seeds on parallel threads");
    train->add_option("--episodes", episodes, "override the episode budget");

    Common ev;
    std::string qnet, senet;
    int eval_episodes = 100;
    auto* eval = app.add_subcommand("eval", "greedy evaluation of a Q-network checkpoint");
    add_common(eval, ev);
    eval->add_option("--qnet", qnet, "Q-network checkpoint")->required();
    eval->add_option("--senet", senet, "SE-Net checkpoint (SE modes)");
    eval->add_option("--episodes", eval_episodes, "number of episodes");

    Common ex;
    std::string ex_senet;
    int trajectory_index = 0;
    auto* explain = app.add_subcommand("explain", "dump predicates, utilities and potential per step");
    add_common(explain, ex);
    explain->add_option("--senet", ex_senet, "SE-Net checkpoint")->required();
    explain->add_option("--trajectory", trajectory_index, "index of the trajectory in the demo file");

    std::vector<std::string> files;
    std::string agg_out = ".";
    auto* aggregate = app.add_subcommand("aggregate", "mean and std of score across seeds");
    aggregate->add_option("files", files, "metrics CSV files")->required();
    aggregate->add_option("--out", agg_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*record) {
            ExperimentConfig cfg = load_or_default(rec.config);
            if (rec.config.empty()) cfg.env = EnvConfig::defaults_for(rec_env);
            if (cfg.env.name != rec_env)
                throw Error("--env " + rec_env + " does not match config env " + cfg.env.name);
            auto env = make_environment(cfg.env);
            if (scripted > 0) {
                auto demos = scripted_demonstrations(cfg.env, scripted, rec_seed == 0 ? 1 : rec_seed);
                save_trajectories(demos, rec.out);
                double steps = 0;
                for (const auto& t : demos) steps += static_cast<double>(t.steps.size());
                std::cout << "wrote " << demos.size() << " demonstrations (mean " << steps / demos.size()
                          << " steps) to " << rec.out << '\n';
                return 0;
            }
            TerminalKeys keys;
            RecordOptions opts{rec.out, rec_seed, 0};
            const auto kept = record_session(*env, KeyBindings::for_environment(*env), keys, std::cout, opts);
            std::cout << "kept " << kept.size() << " episodes\n";
        } else if (*train) {
            ExperimentConfig cfg = resolve(tr);
            if (!tr.out.empty()) cfg.output_dir = tr.out;
            if (episodes > 0) cfg.episodes = episodes;
            const auto results = run_experiment(cfg, parallel);
            for (const auto& r : results)
                std::cout << cfg.label() << " seed " << r.seed << ": final score " << r.final_score() << " -> "
                          << r.metrics_path << '\n';
        } else if (*eval) {
            ExperimentConfig cfg = resolve(ev);
            auto env = make_environment(cfg.env);
            const auto q = load_checkpoint(qnet);
            SoftQAgent agent;
            agent.mode = cfg.augmentation();
            agent.config = cfg.agent;
            agent.online = QNet{q.spec, q.params};
            require(agent.input_dim() == effective_state_dim(agent.mode, env->state_dim(), env->predicate_count()),
                    "Q-network input size does not match --mode");
            std::optional<SENet> se;
            if (input_has_utilities(agent.mode)) {
                if (senet.empty()) throw Error("mode " + cfg.mode + " needs --senet");
                const auto c = load_checkpoint(senet);
                se = SENet{c.spec, c.params};
            }
            const std::uint64_t base = cfg.seeds.front();
            std::mt19937_64 rng(base);
            int wins = 0;
            for (int i = 0; i < eval_episodes; ++i) {
                const auto t = rollout(*env, derive_seed(base, kEvalEpisodeStream, static_cast<std::uint64_t>(i)),
                                       [&](const Environment& e, const StateVec& s) {
                                           const auto in = agent.input_for(s, e.ground_predicates(s), se ? &*se : nullptr);
                                           return act(agent.online, in, rng, cfg.agent.temperature, true);
                                       });
                wins += t.success ? 1 : 0;
            }
            std::cout << "mean score " << static_cast<double>(wins) / eval_episodes << " over " << eval_episodes
                      << " episodes\n";
        } else if (*explain) {
            ExperimentConfig cfg = resolve(ex);
            auto env = make_environment(cfg.env);
            if (cfg.demos.empty()) throw Error("explain needs --demos");
            const auto trajectories = load_trajectories(cfg.demos, *env);
            if (trajectory_index < 0 || static_cast<std::size_t>(trajectory_index) >= trajectories.size())
                throw Error("trajectory index out of range");
            const auto c = load_checkpoint(ex_senet);
            const SENet se{c.spec, c.params};
            require(se.spec.input_dim() == env->state_dim() && se.spec.output_dim() == env->predicate_count(),
                    "SE-Net checkpoint does not match the environment");
            const auto& t = trajectories[static_cast<std::size_t>(trajectory_index)];
            if (ex.out.empty()) {
                write_explanation(std::cout, *env, t, se);
            } else {
                std::ofstream out(ex.out);
                if (!out) throw Error("cannot write " + ex.out);
                write_explanation(out, *env, t, se);
            }
        } else if (*aggregate) {
            std::vector<std::string> warnings;
            const auto written = plot_export(files, agg_out, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
            for (const auto& p : written) std::cout << p << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
