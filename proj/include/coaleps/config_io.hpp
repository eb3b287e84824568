#pragma once

#include <string>

#include <json.hpp>

#include "coaleps/model.hpp"

namespace coaleps {

/// Fully resolved inputs of a run: the population structure plus the
/// environment law. Matrices travel as row-major flat lists in config files.
struct RunInputs {
    IslandStructure structure;
    EnvironmentSpec env;

    RunInputs(IslandStructure s, EnvironmentSpec e)
        : structure(std::move(s)), env(std::move(e)) {}
};

/// Parse the documented config schema:
///   islands.a        list of island proportions
///   islands.N        total population size
///   env.kind         "constant" | "iid" | "markov"
///   env.matrices     K row-major lists of L*L probabilities
///   env.weights      K probabilities (iid only)
///   env.markov       row-major K*K transition matrix (markov only)
///   env.perturbations optional K row-major L*L zero-row-sum matrices
/// Throws ConfigError with a descriptive message on any violation.
RunInputs parse_config_json(const nlohmann::json& j);

RunInputs load_config_file(const std::string& path);

/// Serialize resolved inputs back to the same schema (embedded into every
/// output file so reruns are reproducible).
nlohmann::json config_to_json(const EnvironmentSpec& env, const IslandStructure& structure);

}  // namespace coaleps
