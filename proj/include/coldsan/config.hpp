#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "coldsan/synthetic.hpp"
#include "coldsan/trainer.hpp"

namespace coldsan {

enum class Protocol { general, event_aware };
enum class TrainMode { san, vanilla };

std::string_view to_string(Protocol p);
std::string_view to_string(TrainMode m);
Protocol parse_protocol(std::string_view s);
TrainMode parse_train_mode(std::string_view s);

/// Everything a command needs besides paths. Defaults: d_h 64, five seeds,
/// lambda grid {0.1, 1, 1.5, 2, 5, 10}, train ratio 0.75.
struct RunConfig {
    TrainingConfig training;
    SyntheticConfig synthetic;
    TrainMode mode = TrainMode::san;
    Protocol protocol = Protocol::general;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::vector<double> lambda_grid{kLambdaGrid.begin(), kLambdaGrid.end()};
    double train_ratio = 0.75;
    bool stratified = false;
};

nlohmann::json to_json(const TrainingConfig& c);
nlohmann::json to_json(const SyntheticConfig& c);
nlohmann::json to_json(const RunConfig& c);

/// Overlay `j` onto `c`. Unknown keys raise ConfigError.
void apply_json(TrainingConfig& c, const nlohmann::json& j);
void apply_json(SyntheticConfig& c, const nlohmann::json& j);
void apply_json(RunConfig& c, const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);

/// Short hex digest of the canonical JSON form.
std::string fingerprint(const nlohmann::json& j);

}  // namespace coldsan
