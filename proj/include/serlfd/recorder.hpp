#pragma once

// Keyboard demonstration recorder. Keys come from a KeySource so the same
// session logic drives a raw terminal or a scripted key string.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <termios.h>
#include <unistd.h>

#include "serlfd/demos.hpp"
#include "serlfd/envs/environment.hpp"

namespace serlfd {

class KeySource {
public:
    virtual ~KeySource() = default;
    /// nullopt when the source is exhausted.
    virtual std::optional<char> next_key() = 0;
};

class ScriptedKeys final : public KeySource {
public:
    explicit ScriptedKeys(std::string keys) : keys_(std::move(keys)) {}
    std::optional<char> next_key() override {
        if (pos_ >= keys_.size()) return std::nullopt;
        return keys_[pos_++];
    }

private:
    std::string keys_;
    std::size_t pos_ = 0;
};

/// Puts stdin into non-canonical, no-echo mode for its lifetime.
class TerminalKeys final : public KeySource {
public:
    TerminalKeys() {
        if (!isatty(STDIN_FILENO)) throw Error("record: stdin is not an interactive terminal");
        if (tcgetattr(STDIN_FILENO, &saved_) != 0) throw Error("record: cannot read terminal attributes");
        termios raw = saved_;
        raw.c_lflag &= ~static_cast<tcflag_t>(ICANON | ECHO);
        raw.c_cc[VMIN] = 1;
        raw.c_cc[VTIME] = 0;
        if (tcsetattr(STDIN_FILENO, TCSANOW, &raw) != 0) throw Error("record: cannot enter raw mode");
    }
    ~TerminalKeys() override { tcsetattr(STDIN_FILENO, TCSANOW, &saved_); }
    TerminalKeys(const TerminalKeys&) = delete;
    TerminalKeys& operator=(const TerminalKeys&) = delete;

    std::optional<char> next_key() override {
        char c = 0;
        if (read(STDIN_FILENO, &c, 1) != 1) return std::nullopt;
        return c;
    }

private:
    termios saved_{};
};

struct KeyBindings {
    std::map<char, ActionId> actions;
    char quit = 'q';
    char keep = 'y';
    char discard = 'n';

    /// w/a/s/d for the four moves, space or '.' to stay when the
    /// environment has a stay action.
    static KeyBindings for_environment(const Environment& env) {
        KeyBindings b;
        b.actions = {{'w', 0}, {'s', 1}, {'a', 2}, {'d', 3}};
        if (env.action_count() > 4) {
            b.actions[' '] = 4;
            b.actions['.'] = 4;
        }
        return b;
    }

    std::string describe(const Environment& env) const {
        std::string out = "keys:";
        for (const auto& [key, action] : actions)
            out += std::string(" [") + (key == ' ' ? std::string("space") : std::string(1, key)) + "]=" +
                   env.action_names()[static_cast<std::size_t>(action)];
        out += std::string("  [") + quit + "]=quit\n";
        return out;
    }
};

struct RecordOptions {
    std::string output_path;
    std::uint64_t first_seed = 0;
    /// 0 means unlimited.
    std::size_t max_episodes = 0;
};

/// Interactive recording loop. Every kept episode is appended to the output
/// file immediately (atomic rewrite); quitting mid-episode drops it.
/// Returns the trajectories kept during this session.
inline std::vector<Trajectory> record_session(Environment& env, const KeyBindings& bindings,
                                              KeySource& keys, std::ostream& screen,
                                              const RecordOptions& options) {
    std::vector<Trajectory> existing;
    if (std::filesystem::exists(options.output_path))
        existing = load_trajectories(options.output_path, env);

    std::vector<Trajectory> kept;
    screen << bindings.describe(env);
    for (std::size_t episode = 0; options.max_episodes == 0 || episode < options.max_episodes; ++episode) {
        Trajectory t;
        t.env_name = env.name();
        t.episode_seed = options.first_seed + episode;
        StateVec s = env.reset(t.episode_seed);
        screen << "episode " << episode << " (seed " << t.episode_seed << ")\n" << env.render();

        bool quit = false;
        while (!env.finished()) {
            auto key = keys.next_key();
            if (!key || *key == bindings.quit) {
                quit = true;
                break;
            }
            auto it = bindings.actions.find(*key);
            if (it == bindings.actions.end()) {
                screen << "unmapped key '" << *key << "' ignored; " << bindings.describe(env);
                continue;
            }
            StepResult r = env.step(it->second);
            t.success = t.success || r.success;
            t.steps.push_back(make_experience(env, s, it->second, r));
            s = r.next_state;
            screen << "reward " << r.reward << '\n' << env.render();
        }
        if (quit) {
            screen << "quit; episode discarded\n";
            break;
        }

        screen << (t.success ? "task completed" : "task failed") << ". keep? [" << bindings.keep << "/"
               << bindings.discard << "]\n";
        std::optional<char> answer;
        while ((answer = keys.next_key()) && *answer != bindings.keep && *answer != bindings.discard &&
               *answer != bindings.quit) {
        }
        if (answer && *answer == bindings.keep) {
            existing.push_back(t);
            save_trajectories(existing, options.output_path);
            kept.push_back(std::move(t));
            screen << "saved (" << existing.size() << " in file)\n";
        } else {
            screen << "discarded\n";
        }
        if (!answer || *answer == bindings.quit) break;
    }
    return kept;
}

}  // namespace serlfd
