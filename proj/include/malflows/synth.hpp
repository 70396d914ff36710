#pragma once

#include "malflows/corpus.hpp"

#include <cstdint>
#include <string>
#include <utility>

namespace malflows {

using Range = std::pair<std::size_t, std::size_t>;  // inclusive

struct SynthSpec {
    std::size_t n_apps = 400;
    double malware_fraction = 0.5;
    // 0: both classes draw every element from the shared pools.
    // 1: every element comes from the class-exclusive pools.
    double sep = 0.5;

    Range conditions_per_app{1, 4};
    Range apis_per_condition{1, 3};
    Range dataflows_per_app{1, 5};
    Range components_per_app{1, 3};
    Range actions_per_component{1, 3};
    Range extra_actions_per_app{0, 2};

    // Size of each class-exclusive pool; shared pools are twice as large.
    std::size_t condition_vocab = 4;
    std::size_t api_vocab = 8;  // per pool of guarded APIs, sources and sinks alike
    std::size_t component_vocab = 10;
    std::size_t action_vocab = 6;

    std::string first_period = "2018-01";
    std::size_t periods = 6;
    std::uint64_t seed = 1;
};

void validate_synth_spec(const SynthSpec& spec);

// Records carry label and period inline. Deterministic per spec.
Corpus generate_corpus(const SynthSpec& spec);

}  // namespace malflows
