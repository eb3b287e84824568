#include "coaleps/config_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "coaleps/errors.hpp"

namespace coaleps {

namespace {

using nlohmann::json;

Matrix matrix_from_flat(const json& arr, std::size_t rows, std::size_t cols,
                        const char* what) {
    if (!arr.is_array() || arr.size() != rows * cols)
        throw ConfigError(std::string(what) + ": expected a row-major list of " +
                          std::to_string(rows * cols) + " numbers");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = arr.at(i * cols + j).get<double>();
    return m;
}

json matrix_to_flat(const Matrix& m) {
    json arr = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    return arr;
}

}  // namespace

RunInputs parse_config_json(const nlohmann::json& j) {
    try {
        const auto& isl = j.at("islands");
        std::vector<double> a = isl.at("a").get<std::vector<double>>();
        const long long N = isl.at("N").get<long long>();
        IslandStructure structure = islands(a, N);
        const std::size_t L = a.size();

        const auto& env = j.at("env");
        const std::string kind = env.at("kind").get<std::string>();

        EnvironmentSpec spec;
        const auto& mats = env.at("matrices");
        if (!mats.is_array() || mats.empty())
            throw ConfigError("env.matrices: need at least one matrix");
        spec.K = static_cast<int>(mats.size());
        for (const auto& m : mats)
            spec.matrices.emplace_back(matrix_from_flat(m, L, L, "env.matrices entry"));

        if (kind == "constant") {
            spec.kind = DriverKind::Constant;
            if (spec.K != 1) throw ConfigError("constant driver requires exactly one matrix");
        } else if (kind == "iid") {
            spec.kind = DriverKind::IIDWeights;
            spec.weights = env.at("weights").get<std::vector<double>>();
        } else if (kind == "markov") {
            spec.kind = DriverKind::MarkovChain;
            spec.markov = matrix_from_flat(env.at("markov"), static_cast<std::size_t>(spec.K),
                                           static_cast<std::size_t>(spec.K), "env.markov");
        } else {
            throw ConfigError("env.kind must be one of constant|iid|markov");
        }

        if (env.contains("perturbations")) {
            for (const auto& d : env.at("perturbations"))
                spec.perturbations.push_back(matrix_from_flat(d, L, L, "env.perturbations entry"));
            for (const auto& d : spec.perturbations)
                for (std::size_t i = 0; i < d.rows(); ++i)
                    for (std::size_t jj = 0; jj < d.cols(); ++jj)
                        spec.perturbation_bound =
                            std::max(spec.perturbation_bound, std::abs(d(i, jj)));
        }

        const auto problems = validate(spec, structure);
        if (!problems.empty()) {
            std::string msg = "invalid config:";
            for (const auto& p : problems) msg += "\n  - " + p;
            throw ConfigError(msg);
        }
        return RunInputs(std::move(structure), std::move(spec));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

RunInputs load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config_json(j);
}

nlohmann::json config_to_json(const EnvironmentSpec& env, const IslandStructure& structure) {
    json j;
    j["islands"]["a"] = structure.a;
    j["islands"]["N"] = structure.N;
    switch (env.kind) {
        case DriverKind::Constant: j["env"]["kind"] = "constant"; break;
        case DriverKind::IIDWeights: j["env"]["kind"] = "iid"; break;
        case DriverKind::MarkovChain: j["env"]["kind"] = "markov"; break;
    }
    json mats = json::array();
    for (const auto& m : env.matrices) mats.push_back(matrix_to_flat(m.matrix()));
    j["env"]["matrices"] = mats;
    if (env.kind == DriverKind::IIDWeights) j["env"]["weights"] = env.weights;
    if (env.kind == DriverKind::MarkovChain) j["env"]["markov"] = matrix_to_flat(env.markov);
    if (!env.perturbations.empty()) {
        json ds = json::array();
        for (const auto& d : env.perturbations) ds.push_back(matrix_to_flat(d));
        j["env"]["perturbations"] = ds;
    }
    return j;
}

}  // namespace coaleps
