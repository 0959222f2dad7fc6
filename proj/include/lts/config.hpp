#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lts/fieldsim.hpp"
#include "lts/harness.hpp"
#include "lts/oracle.hpp"
#include "lts/resampler.hpp"

namespace lts {

/// Flat key=value settings. '#' starts a comment; keys are case-sensitive.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);

struct ConfigKey {
  std::string name;
  std::string help;
};

/// Every recognized key, grouped by the config it feeds.
const std::vector<ConfigKey>& design_keys();
const std::vector<ConfigKey>& resample_keys();
const std::vector<ConfigKey>& study_keys();
const std::vector<ConfigKey>& population_keys();

/// Throws ConfigError naming the first key not in any group.
void check_known_keys(const KeyValues& kv);

// Each apply_* reads only its own keys and leaves absent fields untouched.
void apply_design(const KeyValues& kv, DesignConfig& cfg);
/// `mode` selects per-mode defaults before the other keys are applied.
ResampleConfig resample_config_from(const KeyValues& kv);
void apply_study(const KeyValues& kv, StudyConfig& cfg);
SyntheticPopSpec population_spec_from(const KeyValues& kv);

/// "name:prevalence:homophily;..." attribute lists.
std::vector<AttributeSpec> parse_attribute_specs(const std::string& s);

std::vector<std::string> split_list(const std::string& s, char delim = ',');

}  // namespace lts
