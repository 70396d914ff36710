#include "malflows/synth.hpp"

#include "malflows/error.hpp"
#include "malflows/rng.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>

namespace malflows {

namespace {

enum Pool { Shared = 0, Benign = 1, Malware = 2 };

struct Pools {
    std::array<std::vector<std::string>, 3> tokens;
};

// Named tokens come first so they hold the top Zipf ranks; the rest of each
// pool is padded with generated names.
Pools make_pools(const std::string& prefix, std::size_t size, std::array<std::vector<std::string>, 3> named) {
    Pools p;
    static const char* kPoolTag[] = {"s", "b", "m"};
    for (int k = 0; k < 3; ++k) {
        const std::size_t want = k == Shared ? 2 * size : size;
        auto& out = p.tokens[k];
        for (const auto& t : named[k]) {
            if (out.size() == want) break;
            out.push_back(t);
        }
        for (std::size_t i = 0; out.size() < want; ++i) {
            out.push_back(prefix + "_" + kPoolTag[k] + std::to_string(i));
        }
    }
    return p;
}

struct Vocabulary {
    Pools conditions;
    Pools guarded;
    Pools sources;
    Pools sinks;
    Pools components;
    Pools actions;
};

Vocabulary make_vocabulary(const SynthSpec& s) {
    Vocabulary v;
    v.conditions = make_pools("CATEGORY", s.condition_vocab,
                              {{{"NO_CATEGORY", "DATABASE_INFORMATION", "LOCATION_INFORMATION"},
                                {"BLUETOOTH_INFORMATION", "CALENDAR_INFORMATION", "FILE_INFORMATION", "NFC"},
                                {"NETWORK_INFORMATION", "UNIQUE_IDENTIFIER", "ACCOUNT_INFORMATION"}}});
    v.guarded = make_pools("Guarded.call", s.api_vocab,
                           {{{"res.AssetManager.open", "res.Resources.getAssets", "FileOutputStream.write",
                              "File.getParentFile", "File.getAbsolutePath"},
                             {"HashMap.put", "String.startsWith", "File.getPath", "Activity.getIntent",
                              "Class.getName"},
                             {"File.getCanonicalPath", "URLConnection.setRequestProperty",
                              "URLConnection.getInputStream", "HttpURLConnection.setRequestMethod",
                              "Camera.setFlashMode"}}});
    v.sources = make_pools("Source.call", s.api_vocab,
                           {{{"Class.getName", "HashMap.get", "reflect.Field.get", "ArrayList.get",
                              "System.getProperty"},
                             {"Hashtable.get", "Class.getSimpleName", "Array.newInstance", "ThreadLocal.get",
                              "Class.getMethod"},
                             {"Class.getDeclaredMethod", "GregorianCalendar.get", "SQLiteDatabase.query",
                              "reflect.Array.get", "File.getPath"}}});
    v.sinks = make_pools("Sink.call", s.api_vocab,
                         {{{"HashMap.put", "String.substring", "String.startsWith", "JSONObject.put",
                            "URL.openConnection"},
                           {"Log.d", "Log.v", "ThreadLocal.set", "StringBuffer.setLength", "reflect.Field.set"},
                           {"Camera.setPreviewSize", "Log.w", "FileOutputStream.write", "Log.i",
                            "URLConnection.connect"}}});
    v.components = make_pools("com.synth.Component", s.component_vocab, {});
    v.actions = make_pools("ACTION", s.action_vocab,
                           {{{"VIEW", "MAIN", "BOOT_COMPLETED", "CONNECTIVITY_CHANGE"},
                             {"MESSAGING_EVENT", "RECEIVE", "CHOOSER", "INSTANCE_ID_EVENT", "REGISTER",
                              "INSTALL_REFERRER"},
                             {"USER_PRESENT", "PACKAGE_REMOVED", "PACKAGE_ADDED",
                              "com.taobao.accs.intent.action.RECEIVE", "ACTION_POWER_CONNECTED",
                              "ACTION_POWER_DISCONNECTED"}}});
    // A token that is both a source and a sink would make the data-flow
    // anchors chain into each other; keep the two roles apart.
    std::set<std::string> sources;
    for (const auto& pool : v.sources.tokens) sources.insert(pool.begin(), pool.end());
    for (auto& pool : v.sinks.tokens) {
        for (auto& t : pool) {
            if (sources.count(t)) t = "Sink." + t;
        }
    }
    return v;
}

std::size_t draw_count(Rng& rng, const Range& r) {
    return r.first + static_cast<std::size_t>(uniform_index(rng, r.second - r.first + 1));
}

// Rank r of a pool of n is drawn with probability proportional to 1/(r+1).
const std::string& draw_zipf(Rng& rng, const std::vector<std::string>& pool) {
    double total = 0.0;
    for (std::size_t r = 0; r < pool.size(); ++r) total += 1.0 / static_cast<double>(r + 1);
    double u = uniform_unit(rng) * total;
    for (std::size_t r = 0; r < pool.size(); ++r) {
        u -= 1.0 / static_cast<double>(r + 1);
        if (u < 0) return pool[r];
    }
    return pool.back();
}

const std::string& draw(Rng& rng, const Pools& p, int label, double sep) {
    const bool exclusive = uniform_unit(rng) < sep;
    return draw_zipf(rng, p.tokens[exclusive ? (label == 1 ? Malware : Benign) : Shared]);
}

ComponentKind component_kind_of(const std::string& name) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : name) h = (h ^ c) * 1099511628211ULL;
    return static_cast<ComponentKind>(h % 4);
}

std::string period_name(const std::string& first, std::size_t offset) {
    const int year = std::stoi(first.substr(0, 4));
    const int month = std::stoi(first.substr(5, 2)) - 1 + static_cast<int>(offset);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year + month / 12, month % 12 + 1);
    return buf;
}

template <class T>
bool contains(const std::vector<T>& v, const T& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

void validate_synth_spec(const SynthSpec& s) {
    if (s.n_apps == 0) throw Error("synthetic corpus needs at least one app");
    if (!(s.malware_fraction >= 0.0 && s.malware_fraction <= 1.0)) throw Error("malware_fraction must be in [0, 1]");
    if (!(s.sep >= 0.0 && s.sep <= 1.0)) throw Error("sep must be in [0, 1]");
    for (std::size_t v : {s.condition_vocab, s.api_vocab, s.component_vocab, s.action_vocab}) {
        if (v < 2) throw Error("every vocabulary size must be at least 2");
    }
    for (const Range* r : {&s.conditions_per_app, &s.apis_per_condition, &s.dataflows_per_app,
                           &s.components_per_app, &s.actions_per_component, &s.extra_actions_per_app}) {
        if (r->first > r->second) throw Error("record range has min > max");
    }
    if (s.conditions_per_app.second == 0 && s.dataflows_per_app.second == 0 && s.components_per_app.second == 0 &&
        s.extra_actions_per_app.second == 0) {
        throw Error("record ranges leave every app empty");
    }
    if (!is_valid_period(s.first_period)) throw Error("first_period must be YYYY-MM");
    if (s.periods == 0) throw Error("need at least one period");
}

Corpus generate_corpus(const SynthSpec& s) {
    validate_synth_spec(s);
    const Vocabulary vocab = make_vocabulary(s);

    const auto n_malware = static_cast<std::size_t>(s.malware_fraction * static_cast<double>(s.n_apps) + 0.5);
    std::vector<int> labels(s.n_apps, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_malware), 1);
    Rng master(derive_seed(s.seed, 0x1abe1));
    for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[uniform_index(master, i)]);

    const int width = static_cast<int>(std::to_string(s.n_apps).size());
    Corpus corpus;
    corpus.reserve(s.n_apps);
    for (std::size_t i = 0; i < s.n_apps; ++i) {
        Rng rng(derive_seed(s.seed, i, 0x5e));
        const int label = labels[i];
        AppFlowRecord r;
        char id[32];
        std::snprintf(id, sizeof id, "app%0*zu", width, i);
        r.app_id = id;
        r.label = label;
        r.period = period_name(s.first_period, static_cast<std::size_t>(uniform_index(rng, s.periods)));

        for (std::size_t c = draw_count(rng, s.conditions_per_app); c > 0; --c) {
            Condition cond{draw(rng, vocab.conditions, label, s.sep), {}};
            for (std::size_t a = draw_count(rng, s.apis_per_condition); a > 0; --a) {
                const auto& api = draw(rng, vocab.guarded, label, s.sep);
                if (!contains(cond.guarded_apis, api)) cond.guarded_apis.push_back(api);
            }
            auto it = std::find_if(r.conditions.begin(), r.conditions.end(),
                                   [&](const Condition& x) { return x.semantic == cond.semantic; });
            if (it == r.conditions.end()) {
                r.conditions.push_back(std::move(cond));
            } else {
                for (auto& api : cond.guarded_apis) {
                    if (!contains(it->guarded_apis, api)) it->guarded_apis.push_back(api);
                }
            }
        }
        for (std::size_t f = draw_count(rng, s.dataflows_per_app); f > 0; --f) {
            DataFlow df{draw(rng, vocab.sources, label, s.sep), draw(rng, vocab.sinks, label, s.sep)};
            const bool dup = std::any_of(r.dataflows.begin(), r.dataflows.end(), [&](const DataFlow& x) {
                return x.source == df.source && x.sink == df.sink;
            });
            if (!dup) r.dataflows.push_back(std::move(df));
        }
        for (std::size_t c = draw_count(rng, s.components_per_app); c > 0; --c) {
            const auto& name = draw(rng, vocab.components, label, s.sep);
            auto it = std::find_if(r.icc.begin(), r.icc.end(), [&](const IccComponent& x) { return x.name == name; });
            if (it == r.icc.end()) {
                r.icc.push_back({name, component_kind_of(name), {}});
                it = std::prev(r.icc.end());
            }
            for (std::size_t a = draw_count(rng, s.actions_per_component); a > 0; --a) {
                const auto& action = draw(rng, vocab.actions, label, s.sep);
                if (!contains(it->actions, action)) it->actions.push_back(action);
            }
        }
        for (std::size_t a = draw_count(rng, s.extra_actions_per_app); a > 0; --a) {
            const auto& action = draw(rng, vocab.actions, label, s.sep);
            if (!contains(r.extra_actions, action)) r.extra_actions.push_back(action);
        }
        if (r.conditions.empty() && r.dataflows.empty() && r.icc.empty() && r.extra_actions.empty()) {
            r.conditions.push_back({draw(rng, vocab.conditions, label, s.sep), {}});
        }
        corpus.push_back(std::move(r));
    }
    return corpus;
}

}  // namespace malflows
