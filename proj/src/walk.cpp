#include "malflows/walk.hpp"

#include "malflows/error.hpp"
#include "malflows/rng.hpp"
#include "malflows/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace malflows {

namespace {

// Neighbors of `node` reachable by `step` whose kind is `kind`.
std::vector<std::uint32_t> step_neighbors(const Hin& h, std::uint32_t node, const MetaPathStep& step,
                                          EntityKind kind) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t v : h.neighbors(node, step.rel, step.dir)) {
        if (h.node(v).kind == kind) out.push_back(v);
    }
    return out;
}

struct FirstStep {
    MetaPathStep step;
    EntityKind kind;
    std::vector<std::size_t> paths;  // meta-paths of the group that start this way (mu of them)
    std::vector<std::uint32_t> neighbors;
};

std::vector<FirstStep> first_steps(const Hin& h, const MetaPathGroup& g, std::uint32_t node) {
    std::vector<FirstStep> out;
    for (std::size_t k = 0; k < g.paths.size(); ++k) {
        const auto& mp = g.paths[k];
        if (mp.steps.empty()) continue;
        auto it = std::find_if(out.begin(), out.end(), [&](const FirstStep& f) {
            return f.step == mp.steps[0] && f.kind == mp.kinds[1];
        });
        if (it == out.end()) {
            out.push_back({mp.steps[0], mp.kinds[1], {k}, step_neighbors(h, node, mp.steps[0], mp.kinds[1])});
        } else {
            it->paths.push_back(k);
        }
    }
    return out;
}

// Position after arriving at `next` via step index `pos` of path `k`.
std::size_t advance(const Hin& h, const MetaPathGroup& g, std::size_t k, std::size_t pos,
                    std::uint32_t next) {
    const std::size_t p = pos + 1;
    if (p >= g.paths[k].steps.size() || h.node(next).kind == EntityKind::App) return 0;
    return p;
}

}  // namespace

std::vector<Transition> transition_distribution(const Hin& h, const MetaPathGroup& g,
                                                const WalkState& s) {
    std::map<std::uint32_t, double> dist;
    if (h.node(s.node).kind == EntityKind::App || s.position == 0) {
        // mu/|MPG| * 1/|N| per first-step kind, renormalized over the kinds that
        // actually have neighbors here.
        const auto steps = first_steps(h, g, s.node);
        double total = 0.0;
        for (const auto& f : steps) {
            if (!f.neighbors.empty()) total += static_cast<double>(f.paths.size()) / g.paths.size();
        }
        for (const auto& f : steps) {
            if (f.neighbors.empty()) continue;
            const double w = static_cast<double>(f.paths.size()) / g.paths.size() / total /
                             static_cast<double>(f.neighbors.size());
            for (std::uint32_t v : f.neighbors) dist[v] += w;
        }
    } else {
        const auto& mp = g.paths.at(s.path);
        const auto next = step_neighbors(h, s.node, mp.steps.at(s.position), mp.kinds.at(s.position + 1));
        for (std::uint32_t v : next) dist[v] += 1.0 / static_cast<double>(next.size());
    }
    std::vector<Transition> out;
    out.reserve(dist.size());
    for (const auto& [v, p] : dist) out.push_back({v, p});
    return out;
}

namespace {

Walk one_walk(const Hin& h, const MetaPathGroup& g, std::uint32_t start, std::size_t length, Rng& rng) {
    Walk walk{start};
    WalkState s{start, 0, 0};
    while (walk.size() < length) {
        std::uint32_t next = 0;
        if (s.position == 0) {
            auto steps = first_steps(h, g, s.node);
            std::erase_if(steps, [](const FirstStep& f) { return f.neighbors.empty(); });
            if (steps.empty()) break;
            std::size_t chosen = 0;
            if (steps.size() > 1) {
                double total = 0.0;
                for (const auto& f : steps) total += static_cast<double>(f.paths.size());
                double u = uniform_unit(rng) * total;
                chosen = steps.size() - 1;
                for (std::size_t i = 0; i < steps.size(); ++i) {
                    u -= static_cast<double>(steps[i].paths.size());
                    if (u < 0) {
                        chosen = i;
                        break;
                    }
                }
            }
            const auto& f = steps[chosen];
            next = f.neighbors[uniform_index(rng, f.neighbors.size())];
            s.path = f.paths.size() == 1 ? f.paths[0] : f.paths[uniform_index(rng, f.paths.size())];
        } else {
            const auto& mp = g.paths[s.path];
            const auto cand = step_neighbors(h, s.node, mp.steps[s.position], mp.kinds[s.position + 1]);
            if (cand.empty()) break;
            next = cand[uniform_index(rng, cand.size())];
        }
        s.position = advance(h, g, s.path, s.position, next);
        s.node = next;
        walk.push_back(next);
    }
    return walk;
}

}  // namespace

std::vector<Walk> sample_walks(const Hin& h, const MetaPathGroup& g, const WalkParams& p) {
    if (p.walk_length < 2) throw Error("walk_length must be at least 2");
    if (p.walks_per_app == 0) throw Error("walks_per_app must be positive");
    const auto apps = h.nodes_of_kind(EntityKind::App);
    const std::size_t total = apps.size() * p.walks_per_app;
    std::vector<Walk> walks(total);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t app = apps[i / p.walks_per_app];
            Rng rng(derive_seed(p.seed, app, i % p.walks_per_app));
            walks[i] = one_walk(h, g, app, p.walk_length, rng);
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(p.threads, static_cast<unsigned>(std::max<std::size_t>(total, 1))));
    if (threads == 1) {
        work(0, total);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (total + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = std::min(total, t * chunk);
            const std::size_t e = std::min(total, b + chunk);
            pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return walks;
}

ConformResult walk_conforms(std::span<const std::uint32_t> walk, const MetaPathGroup& g, const Hin& h) {
    if (walk.empty() || walk[0] >= h.size() || h.node(walk[0]).kind != EntityKind::App) return {false, 0};

    // (path, position); position 0 is the shared "at App" state.
    std::set<std::pair<std::size_t, std::size_t>> states{{0, 0}};
    auto step_ok = [&](std::size_t k, std::size_t pos, std::uint32_t u, std::uint32_t v) {
        const auto& mp = g.paths[k];
        if (pos >= mp.steps.size() || h.node(v).kind != mp.kinds[pos + 1]) return false;
        const auto& st = mp.steps[pos];
        return st.dir == Direction::Forward ? h.has_edge(u, v, st.rel) : h.has_edge(v, u, st.rel);
    };

    for (std::size_t i = 1; i < walk.size(); ++i) {
        const std::uint32_t u = walk[i - 1];
        const std::uint32_t v = walk[i];
        if (v >= h.size()) return {false, i};
        std::set<std::pair<std::size_t, std::size_t>> next;
        for (const auto& [k, pos] : states) {
            if (pos == 0) {
                for (std::size_t j = 0; j < g.paths.size(); ++j) {
                    if (step_ok(j, 0, u, v)) {
                        const auto np = advance(h, g, j, 0, v);
                        next.emplace(np == 0 ? 0 : j, np);
                    }
                }
            } else if (step_ok(k, pos, u, v)) {
                const auto np = advance(h, g, k, pos, v);
                next.emplace(np == 0 ? 0 : k, np);
            }
        }
        if (next.empty()) return {false, i};
        states = std::move(next);
    }
    return {true, 0};
}

std::vector<TokenWalk> walks_to_tokens(const Hin& h, const std::vector<Walk>& walks) {
    std::vector<TokenWalk> out;
    out.reserve(walks.size());
    for (const auto& w : walks) {
        TokenWalk t;
        t.reserve(w.size());
        for (std::uint32_t v : w) t.push_back(h.node(v).token);
        out.push_back(std::move(t));
    }
    return out;
}

std::string walks_to_text(const std::vector<TokenWalk>& walks) {
    std::string out;
    for (const auto& w : walks) {
        if (w.size() < 2) continue;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (i) out.push_back(' ');
            out += escape_token(w[i]);
        }
        out.push_back('\n');
    }
    return out;
}

void write_walks(const std::filesystem::path& path, const std::vector<TokenWalk>& walks) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << walks_to_text(walks);
}

std::vector<TokenWalk> read_walks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open walks file " + path.string());
    std::vector<TokenWalk> out;
    std::string line;
    while (std::getline(in, line)) {
        auto raw = split_whitespace(line);
        if (raw.empty()) continue;
        TokenWalk w;
        for (const auto& t : raw) w.push_back(unescape_token(t));
        out.push_back(std::move(w));
    }
    return out;
}

unsigned default_threads() {
    if (const char* env = std::getenv("MALFLOWS_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace malflows
