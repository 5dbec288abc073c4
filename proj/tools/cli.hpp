#pragma once

#include "evtraj/estimator.hpp"
#include "evtraj/io.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace evtraj::cli {

enum ExitCode
{
    ok = 0,
    usage = 1,
    data = 2
};

/// Parses `args` (without the program name) and runs the command. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Estimator settings as `key = value` text; `preset = dsec|multiflow` seeds the defaults.
EstimatorConfig estimator_config_from(const KeyValues& kv);
KeyValues to_key_values(const EstimatorConfig& config);

/// File name used by `estimate` for the flow sampled at τ, e.g. flow_t0250.flo32.
std::string prediction_file_name(double tau);

} // namespace evtraj::cli
